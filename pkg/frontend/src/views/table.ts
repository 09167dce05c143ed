import type { AppContext } from "../context.js";
import type { DeviceRecord } from "../types.js";
import { colorForLikelihood } from "../types.js";

function rowHtml(device: DeviceRecord): string {
  const color = colorForLikelihood(device.status.likelihood);
  return `
    <tr data-device="${device.device_id}" class="status-${color}">
      <td><a href="#" class="device-link" data-device="${device.device_id}">${device.device_id}</a></td>
      <td><span class="dot dot-${color}"></span>
          <span class="likelihood">${device.status.likelihood}</span></td>
      <td>${device.status.level}</td>
      <td>${device.cluster_id}</td>
      <td>${device.sensor_placement}</td>
      <td>${device.sensors.join(", ")}</td>
      <td>${device.created_by}</td>
    </tr>`;
}

export function renderTableRows(root: HTMLElement, ctx: AppContext): void {
  const query = root.querySelector<HTMLInputElement>("#table-search")?.value.trim().toLowerCase() ?? "";
  const body = root.querySelector<HTMLElement>("#device-table tbody");
  if (!body) return;
  const devices = [...ctx.store.devices.values()].filter((device) => {
    if (!query) return true;
    const haystack = [
      device.device_id, device.cluster_id, device.sensor_placement,
      device.status.likelihood, device.status.level, device.sensors.join(" "),
    ].join(" ").toLowerCase();
    return haystack.includes(query);
  });
  body.innerHTML = devices.length
    ? devices.map(rowHtml).join("")
    : `<tr><td colspan="7" class="muted">no matching devices</td></tr>`;
  body.querySelectorAll<HTMLAnchorElement>(".device-link").forEach((link) => {
    link.addEventListener("click", (event) => {
      event.preventDefault();
      ctx.navigate("device", link.dataset.device);
    });
  });
}

export async function renderTable(root: HTMLElement, ctx: AppContext): Promise<void> {
  const farm = ctx.store.state.farm!;
  root.innerHTML = `
    <h1>Devices</h1>
    <input id="table-search" type="search" placeholder="search by id, cluster, status..." />
    <table class="data-grid" id="device-table">
      <thead><tr>
        <th>device</th><th>likelihood</th><th>level</th><th>cluster</th>
        <th>placement</th><th>sensors</th><th>origin</th>
      </tr></thead>
      <tbody></tbody>
    </table>`;
  ctx.store.setDevices(await ctx.api.devices(farm.farm_id));
  renderTableRows(root, ctx);
  root.querySelector<HTMLInputElement>("#table-search")!.addEventListener("input", () => {
    renderTableRows(root, ctx);
  });
}
