// Shell: side navigation, routing with auth/farm guards, one streaming
// connection feeding live updates into whichever page is open.

import { ApiClient } from "./api.js";
import type { AppContext } from "./context.js";
import { RollingSeries } from "./charts.js";
import { Store, type Page } from "./state.js";
import { StreamClient } from "./stream.js";
import type { Transport } from "./transport.js";
import type { StreamEvent } from "./types.js";
import { renderAddDevice } from "./views/add_device.js";
import { renderDeviceDetail, updateDetailChart, updateDetailStatus } from "./views/detail.js";
import { renderFarms } from "./views/farms.js";
import { renderMap } from "./views/map.js";
import { renderNotifications } from "./views/notifications.js";
import { renderOverview } from "./views/overview.js";
import { renderPackets } from "./views/packets.js";
import { renderSignin } from "./views/signin.js";
import { renderTable, renderTableRows } from "./views/table.js";

const NAV_ITEMS: { page: Page; label: string }[] = [
  { page: "farms", label: "Farms" },
  { page: "dashboard", label: "Dashboard" },
  { page: "table", label: "Devices" },
  { page: "map", label: "Map" },
  { page: "add-device", label: "Add device" },
  { page: "notifications", label: "Notifications" },
];

const CHART_REFRESH_MS = 100;

export class App implements AppContext {
  api: ApiClient;
  store = new Store();
  stream: StreamClient;

  private content!: HTMLElement;
  private seriesByDevice = new Map<string, RollingSeries>();
  private chartTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private root: HTMLElement, transport: Transport) {
    this.api = new ApiClient(transport);
    this.stream = new StreamClient(transport);
    this.stream.onEvent = (event) => this.handleStreamEvent(event);
    this.stream.onStatus = () => this.updateStreamIndicator();
    this.renderShell();
    this.navigate("signin");
  }

  series(deviceId: string): RollingSeries {
    let series = this.seriesByDevice.get(deviceId);
    if (!series) {
      series = new RollingSeries();
      this.seriesByDevice.set(deviceId, series);
    }
    return series;
  }

  navigate(page: Page, param: string | null = null): void {
    const redirect = this.store.guard(page);
    if (redirect !== null) {
      page = redirect;
      param = null;
    }
    this.store.update({ page, pageParam: param });
    try {
      window.location.hash = param ? `#/${page}/${param}` : `#/${page}`;
    } catch {
      // no browser history available (tests); state is authoritative anyway
    }
    this.renderNav();
    void this.renderContent();
  }

  // -- shell -------------------------------------------------------------

  private renderShell(): void {
    this.root.innerHTML = `
      <div class="layout">
        <nav id="sidenav" class="sidenav"></nav>
        <main id="content"></main>
      </div>`;
    this.content = this.root.querySelector<HTMLElement>("#content")!;
    this.renderNav();
  }

  private renderNav(): void {
    const nav = this.root.querySelector<HTMLElement>("#sidenav")!;
    const { token, user, farm, page, unread } = this.store.state;
    if (!token) {
      nav.innerHTML = `<div class="brand">palmwatch</div>`;
      return;
    }
    nav.innerHTML = `
      <div class="brand">palmwatch</div>
      <div class="nav-user">${user?.display_name ?? ""}${farm ? ` - ${farm.name}` : ""}</div>
      ${NAV_ITEMS.map((item) => `
        <button class="nav-item ${item.page === page ? "active" : ""}"
                data-page="${item.page}">
          ${item.label}${item.page === "notifications" && unread > 0
            ? ` <span id="nav-badge" class="badge">${unread}</span>` : ""}
        </button>`).join("")}
      <div id="stream-indicator" class="stream-indicator"></div>
      <button id="nav-signout" class="nav-item">Sign out</button>`;
    nav.querySelectorAll<HTMLButtonElement>(".nav-item[data-page]").forEach((button) => {
      button.addEventListener("click", () => this.navigate(button.dataset.page as Page));
    });
    nav.querySelector<HTMLElement>("#nav-signout")!.addEventListener("click", () => {
      this.stream.stop();
      this.api.token = null;
      this.store.reset();
      this.navigate("signin");
    });
    this.updateStreamIndicator();
  }

  private updateStreamIndicator(): void {
    const el = this.root.querySelector<HTMLElement>("#stream-indicator");
    if (!el) return;
    const status = this.stream.status;
    if (status === "live") {
      el.textContent = "live";
      el.className = "stream-indicator live";
    } else if (status === "connecting" || status === "reconnecting") {
      el.textContent = "reconnecting...";
      el.className = "stream-indicator reconnecting";
    } else {
      el.textContent = "";
      el.className = "stream-indicator";
    }
  }

  private async renderContent(): Promise<void> {
    const { page, pageParam } = this.store.state;
    const target = this.content;
    try {
      switch (page) {
        case "signin":
          renderSignin(target, this);
          break;
        case "farms":
          await renderFarms(target, this);
          break;
        case "dashboard":
          await this.ensureSubscription();
          await renderOverview(target, this);
          break;
        case "table":
          await this.ensureSubscription();
          await renderTable(target, this);
          break;
        case "map":
          await this.ensureSubscription();
          await renderMap(target, this);
          break;
        case "device":
          await this.ensureSubscription();
          await renderDeviceDetail(target, this, pageParam!);
          break;
        case "packets":
          await renderPackets(target, this, pageParam!);
          break;
        case "add-device":
          renderAddDevice(target, this);
          break;
        case "notifications":
          await renderNotifications(target, this);
          this.renderNav(); // unread count may have changed
          break;
      }
    } catch (err) {
      target.innerHTML = `<div class="error">The service said no: ${
        err instanceof Error ? err.message : String(err)
      }</div>`;
    }
  }

  /** Subscribe the one stream connection to every device of the farm. */
  private async ensureSubscription(): Promise<void> {
    const { farm, token, subscribedDevices } = this.store.state;
    if (!farm || !token) return;
    if (this.store.devices.size === 0) {
      this.store.setDevices(await this.api.devices(farm.farm_id));
    }
    const wanted = [...this.store.devices.keys()].sort();
    if (JSON.stringify(wanted) !== JSON.stringify(subscribedDevices) && wanted.length > 0) {
      this.store.update({ subscribedDevices: wanted });
      this.stream.subscribe(token, wanted);
    }
  }

  // -- live events ---------------------------------------------------------

  private handleStreamEvent(event: StreamEvent): void {
    switch (event.type) {
      case "reading": {
        const sample = event.sample;
        this.series(event.device_id).push(Date.parse(sample.timestamp) / 1000, sample.magnitude);
        if (this.store.state.page === "device" && this.store.state.pageParam === event.device_id) {
          this.scheduleChartRefresh(event.device_id);
        }
        break;
      }
      case "assessment": {
        this.store.applyAssessment(event.assessment);
        const { page, pageParam } = this.store.state;
        if (page === "table") {
          renderTableRows(this.content, this);
        } else if (page === "device" && pageParam === event.device_id) {
          updateDetailStatus(this.content, this, event.device_id);
        }
        break;
      }
      case "notification": {
        this.store.update({ unread: this.store.state.unread + 1 });
        this.renderNav();
        break;
      }
      default:
        break;
    }
  }

  private scheduleChartRefresh(deviceId: string): void {
    if (this.chartTimer !== null) return;
    this.chartTimer = setTimeout(() => {
      this.chartTimer = null;
      updateDetailChart(this.content, this, deviceId);
    }, CHART_REFRESH_MS);
  }
}

export function createApp(root: HTMLElement, transport: Transport): App {
  return new App(root, transport);
}
