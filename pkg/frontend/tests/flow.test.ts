// Scripted dashboard flow against a faked service: sign-in, pick a farm,
// watch the device table recolor live, see co-located palms cluster on the
// map, and read the packet tracer fixture.

import { beforeEach, describe, expect, it, vi } from "vitest";

import { createApp, App } from "../src/app.js";
import { FakeTransport, device, flush } from "./fakes.js";

function mount(): { root: HTMLElement; transport: FakeTransport; app: App } {
  document.body.innerHTML = `<div id="app"></div>`;
  const root = document.getElementById("app")!;
  const transport = new FakeTransport();
  transport.devices = [0, 1, 2, 3, 4].map((i) =>
    device(`palm-00${i + 1}`, {
      latitude: 24.71 + i * 1e-5,
      longitude: 46.62 + i * 1e-5,
    }),
  );
  // the {1,2,4,5} sequence fixture: 4 of 5 expected packets arrived
  transport.packets = {
    no_data: false, expected: 5, received: 4, received_pct: 80.0, lost_pct: 20.0,
  };
  const app = createApp(root, transport);
  return { root, transport, app };
}

async function signIn(root: HTMLElement): Promise<void> {
  root.querySelector<HTMLInputElement>("#signin-user")!.value = "amal";
  root.querySelector<HTMLInputElement>("#signin-password")!.value = "palm-pass";
  root.querySelector<HTMLFormElement>("#signin-form")!.dispatchEvent(
    new Event("submit", { bubbles: true, cancelable: true }),
  );
  await flush();
}

async function selectFarm(root: HTMLElement): Promise<void> {
  root.querySelector<HTMLButtonElement>(".farm-card")!.click();
  await flush();
}

describe("dashboard flow", () => {
  beforeEach(() => {
    vi.useRealTimers();
  });

  it("walks sign-in, farm selection, live table recolor, map cluster, packet tracer", async () => {
    const { root, transport, app } = mount();

    // unauthorized deep-link bounces to sign-in
    app.navigate("table");
    await flush();
    expect(root.querySelector("#signin-form")).not.toBeNull();

    await signIn(root);
    expect(root.textContent).toContain("North grove");

    await selectFarm(root);
    expect(root.querySelector("#ov-count")!.textContent).toBe("5");
    expect(root.textContent).toContain("sunny, 36 C"); // weather placeholder

    // device table: all five palms green
    app.navigate("table");
    await flush();
    const rows = root.querySelectorAll("#device-table tbody tr");
    expect(rows).toHaveLength(5);
    expect(root.querySelectorAll("tr.status-green")).toHaveLength(5);

    // the stream is subscribed to the whole farm
    const socket = transport.lastSocket();
    socket.open();
    expect(JSON.parse(socket.sent[0]!).device_ids).toEqual(
      ["palm-001", "palm-002", "palm-003", "palm-004", "palm-005"],
    );
    socket.push({ type: "subscribed", device_ids: ["palm-001"] });

    // a streamed status change must recolor the row within 2 s
    const started = Date.now();
    socket.push({
      type: "assessment",
      device_id: "palm-003",
      assessment: {
        device_id: "palm-003",
        window_start: "2024-03-01T03:00:00.000Z",
        indicators: {},
        fired_count: 4,
        likelihood: "High",
      },
    });
    await vi.waitFor(() => {
      const row = root.querySelector(`tr[data-device="palm-003"]`)!;
      expect(row.classList.contains("status-red")).toBe(true);
    }, { timeout: 2000 });
    expect(Date.now() - started).toBeLessThanOrEqual(2000);
    expect(root.querySelectorAll("tr.status-green")).toHaveLength(4);

    // search filters by id
    const search = root.querySelector<HTMLInputElement>("#table-search")!;
    search.value = "palm-003";
    search.dispatchEvent(new Event("input", { bubbles: true }));
    expect(root.querySelectorAll("#device-table tbody tr")).toHaveLength(1);

    // map: five co-located palms collapse into one grey cluster labelled 5
    app.navigate("map");
    await flush();
    const clusters = root.querySelectorAll(".map-cluster");
    expect(clusters).toHaveLength(1);
    expect(root.querySelectorAll(".map-marker")).toHaveLength(0);
    expect(clusters[0]!.querySelector("circle")!.getAttribute("fill")).toBe("#6b7280");
    expect(clusters[0]!.querySelector("text")!.textContent).toBe("5");

    // packet tracer shows the 80/20 fixture
    app.navigate("packets", "palm-001");
    await flush();
    expect(root.querySelector("#packet-received")!.textContent).toBe("80%");
    expect(root.querySelector("#packet-lost")!.textContent).toBe("20%");
  });

  it("increments the notifications badge on streamed events", async () => {
    const { root, transport, app } = mount();
    await signIn(root);
    await selectFarm(root);
    app.navigate("table");
    await flush();
    const socket = transport.lastSocket();
    socket.open();
    socket.push({ type: "subscribed", device_ids: [] });
    expect(root.querySelector("#nav-badge")).toBeNull();
    socket.push({
      type: "notification",
      device_id: "palm-002",
      notification: {
        id: 1, farm_id: "farm-1", kind: "StatusChange",
        payload: { device_id: "palm-002", from: "Low", to: "High" },
        created_at: "2024-03-01T03:00:00.000Z", read: false,
      },
    });
    await flush();
    expect(root.querySelector("#nav-badge")!.textContent).toBe("1");
  });

  it("shows a reconnect indicator and resubscribes after a stream drop", async () => {
    vi.useFakeTimers();
    const { root, transport, app } = mount();
    // fake timers stall fetch-based flushes; drive promises manually
    const tick = async (n = 8) => {
      for (let i = 0; i < n; i++) await Promise.resolve();
    };
    root.querySelector<HTMLInputElement>("#signin-user")!.value = "amal";
    root.querySelector<HTMLInputElement>("#signin-password")!.value = "palm-pass";
    root.querySelector<HTMLFormElement>("#signin-form")!.dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }),
    );
    await tick();
    root.querySelector<HTMLButtonElement>(".farm-card")!.click();
    await tick();
    app.navigate("table");
    await tick();

    const first = transport.lastSocket();
    first.open();
    first.push({ type: "subscribed", device_ids: [] });
    expect(root.querySelector("#stream-indicator")!.textContent).toBe("live");

    first.dropFromServer();
    expect(root.querySelector("#stream-indicator")!.textContent).toContain("reconnecting");
    vi.advanceTimersByTime(500);
    const second = transport.lastSocket();
    expect(second).not.toBe(first);
    second.open();
    expect(JSON.parse(second.sent[0]!).device_ids).toHaveLength(5);
    second.push({ type: "subscribed", device_ids: [] });
    expect(root.querySelector("#stream-indicator")!.textContent).toBe("live");
    vi.useRealTimers();
  });

  it("manual device add lands on the new device page", async () => {
    const { root, app } = mount();
    await signIn(root);
    await selectFarm(root);
    app.navigate("add-device");
    await flush();
    root.querySelector<HTMLInputElement>(`input[name="device_id"]`)!.value = "palm-777";
    root.querySelector<HTMLInputElement>(`input[name="latitude"]`)!.value = "24.8";
    root.querySelector<HTMLInputElement>(`input[name="longitude"]`)!.value = "46.7";
    root.querySelector<HTMLFormElement>("#add-form")!.dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }),
    );
    await flush();
    expect(root.textContent).toContain("palm-777");
    expect(root.querySelector("#detail-chart")).not.toBeNull();
  });
});
