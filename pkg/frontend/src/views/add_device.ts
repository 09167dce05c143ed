import type { AppContext } from "../context.js";

export function renderAddDevice(root: HTMLElement, ctx: AppContext): void {
  const farm = ctx.store.state.farm!;
  root.innerHTML = `
    <h1>Add device</h1>
    <p class="muted">Manual registration. Prefer letting gateways auto-detect
       devices in their cluster; use this for pre-provisioning or sensors the
       radio cannot see yet.</p>
    <form id="add-form" class="device-form">
      <label>Device id <input name="device_id" required /></label>
      <label>Cluster
        <select name="cluster_id">
          ${farm.cluster_ids.map((c) => `<option>${c}</option>`).join("")}
        </select>
      </label>
      <label>Latitude <input name="latitude" /></label>
      <label>Longitude <input name="longitude" /></label>
      <label>Placement
        <select name="sensor_placement"><option>Inside</option><option>Outside</option></select>
      </label>
      <label>Sensors <input name="sensors" value="accelerometer" /></label>
      <button type="submit">Create</button>
      <div class="error" id="add-error" role="alert"></div>
    </form>`;
  root.querySelector<HTMLFormElement>("#add-form")!.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(event.target as HTMLFormElement);
    const lat = String(data.get("latitude") ?? "").trim();
    const lon = String(data.get("longitude") ?? "").trim();
    try {
      const created = await ctx.api.createDevice({
        device_id: String(data.get("device_id")),
        farm_id: farm.farm_id,
        cluster_id: String(data.get("cluster_id")),
        latitude: lat === "" ? null : Number(lat),
        longitude: lon === "" ? null : Number(lon),
        sensor_placement: data.get("sensor_placement") as "Inside" | "Outside",
        sensors: String(data.get("sensors") ?? "").split(",").map((s) => s.trim()).filter(Boolean),
      });
      ctx.store.devices.set(created.device_id, created);
      ctx.navigate("device", created.device_id);
    } catch (err) {
      root.querySelector<HTMLElement>("#add-error")!.textContent = String(
        err instanceof Error ? err.message : err,
      );
    }
  });
}
