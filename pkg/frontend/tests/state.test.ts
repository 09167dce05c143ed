import { describe, expect, it } from "vitest";

import { Store } from "../src/state.js";
import { FARM } from "./fakes.js";

describe("Store.guard", () => {
  it("sends anonymous users to sign-in for any page", () => {
    const store = new Store();
    for (const page of ["farms", "dashboard", "table", "map", "notifications"] as const) {
      expect(store.guard(page)).toBe("signin");
    }
    expect(store.guard("signin")).toBeNull();
  });

  it("requires a selected farm for farm-scoped pages", () => {
    const store = new Store();
    store.update({ token: "tok-1" });
    expect(store.guard("farms")).toBeNull();
    expect(store.guard("dashboard")).toBe("farms");
    expect(store.guard("table")).toBe("farms");
    store.update({ farm: FARM });
    expect(store.guard("dashboard")).toBeNull();
  });

  it("applyAssessment recolors the cached device", () => {
    const store = new Store();
    store.setDevices([
      {
        device_id: "palm-001", farm_id: "farm-1", cluster_id: "cl-1",
        latitude: null, longitude: null, sensor_placement: "Inside",
        sensors: [], created_by: "Manual",
        status: { level: "Healthy", likelihood: "Low", updated_at: "t" },
      },
    ]);
    store.applyAssessment({
      device_id: "palm-001", window_start: "t2", indicators: {},
      fired_count: 4, likelihood: "High",
    });
    const device = store.devices.get("palm-001")!;
    expect(device.status.level).toBe("Infested");
    expect(device.status.likelihood).toBe("High");
  });

  it("reset clears everything", () => {
    const store = new Store();
    store.update({ token: "tok-1", farm: FARM, unread: 5 });
    store.reset();
    expect(store.state.token).toBeNull();
    expect(store.state.farm).toBeNull();
    expect(store.state.unread).toBe(0);
  });
});
