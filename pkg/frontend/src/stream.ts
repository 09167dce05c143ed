// Streaming client over the /stream websocket: one subscription message,
// then a flow of reading/assessment/notification events. Drops reconnect
// with exponential backoff and re-send the same subscription.

import type { StreamEvent } from "./types.js";
import type { SocketLike, Transport } from "./transport.js";

export type StreamStatus = "idle" | "connecting" | "live" | "reconnecting" | "stopped";

const BACKOFF_BASE_MS = 500;
const BACKOFF_CAP_MS = 10_000;

export class StreamClient {
  status: StreamStatus = "idle";
  onEvent: ((event: StreamEvent) => void) | null = null;
  onStatus: ((status: StreamStatus) => void) | null = null;

  private socket: SocketLike | null = null;
  private token = "";
  private deviceIds: string[] = [];
  private attempts = 0;
  private stopped = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private transport: Transport) {}

  subscribe(token: string, deviceIds: string[]): void {
    this.token = token;
    this.deviceIds = [...deviceIds];
    this.stopped = false;
    this.attempts = 0;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.retryTimer = null;
    this.socket?.close();
    this.socket = null;
    this.setStatus("stopped");
  }

  backoffDelayMs(attempt: number): number {
    return Math.min(BACKOFF_CAP_MS, BACKOFF_BASE_MS * 2 ** attempt);
  }

  private setStatus(status: StreamStatus): void {
    this.status = status;
    this.onStatus?.(status);
  }

  private connect(): void {
    if (this.stopped || this.deviceIds.length === 0) return;
    this.setStatus(this.attempts === 0 ? "connecting" : "reconnecting");
    const socket = this.transport.openSocket("/stream");
    this.socket = socket;
    socket.onopen = () => {
      socket.send(JSON.stringify({ token: this.token, device_ids: this.deviceIds }));
    };
    socket.onmessage = (data) => {
      let event: StreamEvent;
      try {
        event = JSON.parse(data);
      } catch {
        return;
      }
      if (event.type === "subscribed") {
        this.attempts = 0;
        this.setStatus("live");
      }
      this.onEvent?.(event);
    };
    socket.onclose = () => {
      if (this.socket !== socket) return; // superseded
      this.socket = null;
      if (this.stopped) return;
      const delay = this.backoffDelayMs(this.attempts);
      this.attempts += 1;
      this.setStatus("reconnecting");
      this.retryTimer = setTimeout(() => this.connect(), delay);
    };
  }
}
