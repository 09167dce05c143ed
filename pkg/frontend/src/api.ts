import type {
  AccelSample,
  DeviceRecord,
  FarmOverview,
  FarmRecord,
  HealthAssessment,
  LoginResponse,
  NotificationRecord,
  PacketReport,
} from "./types.js";
import type { Transport } from "./transport.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  token: string | null = null;

  constructor(private transport: Transport) {}

  private async call(path: string, init: { method?: string; body?: unknown } = {}): Promise<any> {
    const response = await this.transport.fetchJson(path, {
      ...init,
      token: this.token ?? undefined,
    });
    if (response.status >= 400) {
      const detail = response.body?.detail ?? `request failed (${response.status})`;
      throw new ApiError(response.status, String(detail));
    }
    return response.body;
  }

  async login(userId: string, password: string): Promise<LoginResponse> {
    const body = await this.call("/auth/login", {
      method: "POST",
      body: { user_id: userId, password },
    });
    this.token = body.token;
    return body;
  }

  async farms(): Promise<FarmRecord[]> {
    return (await this.call("/farms")).farms;
  }

  async overview(farmId: string): Promise<FarmOverview> {
    return this.call(`/farms/${encodeURIComponent(farmId)}/overview`);
  }

  async devices(farmId: string): Promise<DeviceRecord[]> {
    return (await this.call(`/devices?farm_id=${encodeURIComponent(farmId)}`)).devices;
  }

  async device(deviceId: string): Promise<DeviceRecord> {
    return this.call(`/devices/${encodeURIComponent(deviceId)}`);
  }

  async createDevice(payload: Partial<DeviceRecord>): Promise<DeviceRecord> {
    return this.call("/devices", { method: "POST", body: payload });
  }

  async updateDevice(deviceId: string, payload: Partial<DeviceRecord>): Promise<DeviceRecord> {
    return this.call(`/devices/${encodeURIComponent(deviceId)}`, {
      method: "PUT",
      body: payload,
    });
  }

  async readings(
    deviceId: string,
    opts: { from?: string; to?: string; maxPoints?: number } = {},
  ): Promise<{ total: number; points: AccelSample[] }> {
    const params = new URLSearchParams();
    if (opts.from) params.set("from", opts.from);
    if (opts.to) params.set("to", opts.to);
    params.set("max_points", String(opts.maxPoints ?? 500));
    return this.call(`/devices/${encodeURIComponent(deviceId)}/readings?${params}`);
  }

  async assessments(deviceId: string): Promise<HealthAssessment[]> {
    return (await this.call(`/devices/${encodeURIComponent(deviceId)}/assessments`)).assessments;
  }

  async packets(deviceId: string, from?: string, to?: string): Promise<PacketReport> {
    const params = new URLSearchParams();
    if (from) params.set("from", from);
    if (to) params.set("to", to);
    const suffix = params.size ? `?${params}` : "";
    return this.call(`/devices/${encodeURIComponent(deviceId)}/packets${suffix}`);
  }

  async notifications(): Promise<{ notifications: NotificationRecord[]; unread: number }> {
    return this.call("/notifications");
  }

  async markNotificationsRead(ids: number[]): Promise<number> {
    return (await this.call("/notifications", { method: "POST", body: { mark_read: ids } })).updated;
  }
}
