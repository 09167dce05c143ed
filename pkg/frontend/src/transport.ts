// Thin seam between the app and the network so tests can script both
// directions without a server.

export interface JsonResponse {
  status: number;
  body: any;
}

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((data: string) => void) | null;
  onclose: (() => void) | null;
}

export interface Transport {
  fetchJson(path: string, init?: { method?: string; body?: unknown; token?: string }): Promise<JsonResponse>;
  openSocket(path: string): SocketLike;
}

class BrowserSocket implements SocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((data: string) => void) | null = null;
  onclose: (() => void) | null = null;
  private ws: WebSocket;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => this.onopen?.();
    this.ws.onmessage = (ev) => this.onmessage?.(String(ev.data));
    this.ws.onclose = () => this.onclose?.();
    this.ws.onerror = () => {};
  }

  send(data: string): void {
    this.ws.send(data);
  }

  close(): void {
    this.ws.close();
  }
}

export class HttpTransport implements Transport {
  constructor(private origin: string = "") {}

  async fetchJson(
    path: string,
    init: { method?: string; body?: unknown; token?: string } = {},
  ): Promise<JsonResponse> {
    const headers: Record<string, string> = {};
    if (init.body !== undefined) headers["Content-Type"] = "application/json";
    if (init.token) headers["Authorization"] = `Bearer ${init.token}`;
    const response = await fetch(this.origin + path, {
      method: init.method ?? "GET",
      headers,
      body: init.body === undefined ? undefined : JSON.stringify(init.body),
    });
    let body: any = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    return { status: response.status, body };
  }

  openSocket(path: string): SocketLike {
    const base = this.origin || window.location.origin;
    const url = base.replace(/^http/, "ws") + path;
    return new BrowserSocket(url);
  }
}
