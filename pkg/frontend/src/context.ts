import type { ApiClient } from "./api.js";
import type { Page, Store } from "./state.js";
import type { StreamClient } from "./stream.js";

export interface AppContext {
  api: ApiClient;
  store: Store;
  stream: StreamClient;
  navigate(page: Page, param?: string | null): void;
  /** Rolling magnitude series per device, fed by the stream. */
  series(deviceId: string): { xs: number[]; ys: number[] };
}
