// App-wide view state. Pages that show farm data require both a session and
// a selected farm; navigation enforces that invariant centrally.

import type {
  DeviceRecord,
  FarmRecord,
  HealthAssessment,
  SessionUser,
} from "./types.js";

export type Page =
  | "signin"
  | "farms"
  | "dashboard"
  | "table"
  | "device"
  | "packets"
  | "map"
  | "add-device"
  | "notifications";

const FARM_SCOPED: ReadonlySet<Page> = new Set([
  "dashboard", "table", "device", "packets", "map", "add-device", "notifications",
]);

export interface ViewState {
  token: string | null;
  user: SessionUser | null;
  farm: FarmRecord | null;
  page: Page;
  pageParam: string | null;
  subscribedDevices: string[];
  unread: number;
}

export class Store {
  state: ViewState = {
    token: null,
    user: null,
    farm: null,
    page: "signin",
    pageParam: null,
    subscribedDevices: [],
    unread: 0,
  };

  devices = new Map<string, DeviceRecord>();
  latestAssessments = new Map<string, HealthAssessment>();

  private listeners = new Set<() => void>();

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  notify(): void {
    for (const listener of this.listeners) listener();
  }

  update(patch: Partial<ViewState>): void {
    Object.assign(this.state, patch);
    this.notify();
  }

  setDevices(records: DeviceRecord[]): void {
    this.devices.clear();
    for (const record of records) this.devices.set(record.device_id, record);
    this.notify();
  }

  applyAssessment(assessment: HealthAssessment): void {
    this.latestAssessments.set(assessment.device_id, assessment);
    const device = this.devices.get(assessment.device_id);
    if (device) {
      const level =
        assessment.likelihood === "Low" ? "Healthy"
        : assessment.likelihood === "Medium" ? "Suspect" : "Infested";
      device.status = {
        level,
        likelihood: assessment.likelihood,
        updated_at: assessment.window_start,
      };
    }
    this.notify();
  }

  /** Where navigation must land instead, or null when `page` is allowed. */
  guard(page: Page): Page | null {
    if (page === "signin") return null;
    if (!this.state.token) return "signin";
    if (FARM_SCOPED.has(page) && !this.state.farm) return "farms";
    return null;
  }

  reset(): void {
    this.state = {
      token: null, user: null, farm: null, page: "signin",
      pageParam: null, subscribedDevices: [], unread: 0,
    };
    this.devices.clear();
    this.latestAssessments.clear();
    this.notify();
  }
}
