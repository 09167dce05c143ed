import type { AppContext } from "../context.js";
import { renderLineChart } from "../charts.js";
import { colorForLikelihood } from "../types.js";

const INDICATOR_LABELS: Record<string, string> = {
  fft_level: "FFT level (fraction of loud bins)",
  psd_pad: "PSD peaks-average difference",
  whisker_ratio: "whisker span vs baseline",
  mean_shift: "mean shift (m/s^2)",
};

export function updateDetailChart(root: HTMLElement, ctx: AppContext, deviceId: string): void {
  const target = root.querySelector<HTMLElement>("#detail-chart");
  if (!target) return;
  const series = ctx.series(deviceId);
  renderLineChart(target, series.xs, series.ys, { yLabel: "magnitude m/s^2" });
}

export function updateDetailStatus(root: HTMLElement, ctx: AppContext, deviceId: string): void {
  const device = ctx.store.devices.get(deviceId);
  const badge = root.querySelector<HTMLElement>("#detail-status");
  if (device && badge) {
    const color = colorForLikelihood(device.status.likelihood);
    badge.innerHTML = `<span class="dot dot-${color}"></span> ${device.status.likelihood}
      likelihood (${device.status.level})`;
  }
  const assessment = ctx.store.latestAssessments.get(deviceId);
  const evidence = root.querySelector<HTMLElement>("#detail-evidence tbody");
  if (assessment && evidence) {
    evidence.innerHTML = Object.entries(assessment.indicators)
      .map(([name, r]) => `
        <tr class="${r.fired ? "fired" : ""}">
          <td>${INDICATOR_LABELS[name] ?? name}</td>
          <td>${r.evaluable ? (r.value === null ? "-" : r.value.toPrecision(4)) : "not evaluable"}</td>
          <td>${r.threshold.toPrecision(4)}</td>
          <td>${r.fired ? "fired" : "quiet"}</td>
        </tr>`)
      .join("");
  }
}

export async function renderDeviceDetail(
  root: HTMLElement, ctx: AppContext, deviceId: string,
): Promise<void> {
  const device = await ctx.api.device(deviceId);
  ctx.store.devices.set(device.device_id, device);
  root.innerHTML = `
    <h1>${device.device_id} <span id="detail-status" class="status-badge"></span></h1>
    <p class="muted">
      cluster ${device.cluster_id} - ${device.sensor_placement} placement -
      ${device.latitude === null ? "no coordinates" : `${device.latitude}, ${device.longitude}`}
      - added by ${device.created_by}
    </p>
    <div class="detail-actions">
      <button id="detail-packets">packet tracer</button>
      <button id="detail-edit">edit device</button>
    </div>
    <h2>Live magnitude</h2>
    <div id="detail-chart"></div>
    <h2>Latest assessment evidence</h2>
    <table class="data-grid" id="detail-evidence">
      <thead><tr><th>indicator</th><th>value</th><th>threshold</th><th>state</th></tr></thead>
      <tbody><tr><td colspan="4" class="muted">no assessment yet</td></tr></tbody>
    </table>
    <h2>Recent digest</h2>
    <div id="detail-digest" class="muted">loading...</div>
    <div id="detail-edit-form"></div>`;

  root.querySelector<HTMLElement>("#detail-packets")!
    .addEventListener("click", () => ctx.navigate("packets", deviceId));
  root.querySelector<HTMLElement>("#detail-edit")!
    .addEventListener("click", () => renderEditForm(root, ctx, deviceId));

  // seed the rolling chart with recent history, then let the stream append
  const series = ctx.series(deviceId);
  if (series.xs.length === 0) {
    const history = await ctx.api.readings(deviceId, { maxPoints: 300 });
    for (const point of history.points) {
      series.xs.push(Date.parse(point.timestamp) / 1000);
      series.ys.push(point.magnitude);
    }
  }
  updateDetailChart(root, ctx, deviceId);

  const assessments = await ctx.api.assessments(deviceId);
  const last = assessments[assessments.length - 1];
  if (last) ctx.store.latestAssessments.set(deviceId, last);
  updateDetailStatus(root, ctx, deviceId);

  const overview = await ctx.api.overview(device.farm_id);
  const digest = overview.latest_digests[deviceId];
  root.querySelector<HTMLElement>("#detail-digest")!.innerHTML = digest
    ? `window ${digest.window_start}: ${digest.count} samples,
       min ${digest.min.toFixed(3)} / mean ${digest.mean.toFixed(3)} / max ${digest.max.toFixed(3)}`
    : "no digest received yet";
}

function renderEditForm(root: HTMLElement, ctx: AppContext, deviceId: string): void {
  const device = ctx.store.devices.get(deviceId)!;
  const host = root.querySelector<HTMLElement>("#detail-edit-form")!;
  host.innerHTML = `
    <h2>Edit device</h2>
    <form id="edit-form" class="device-form">
      <label>Latitude <input name="latitude" value="${device.latitude ?? ""}" /></label>
      <label>Longitude <input name="longitude" value="${device.longitude ?? ""}" /></label>
      <label>Placement
        <select name="sensor_placement">
          <option ${device.sensor_placement === "Inside" ? "selected" : ""}>Inside</option>
          <option ${device.sensor_placement === "Outside" ? "selected" : ""}>Outside</option>
        </select>
      </label>
      <label>Sensors <input name="sensors" value="${device.sensors.join(",")}" /></label>
      <button type="submit">Save</button>
      <div class="error" id="edit-error"></div>
    </form>`;
  host.querySelector<HTMLFormElement>("#edit-form")!.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(event.target as HTMLFormElement);
    const lat = String(data.get("latitude") ?? "").trim();
    const lon = String(data.get("longitude") ?? "").trim();
    try {
      const updated = await ctx.api.updateDevice(deviceId, {
        latitude: lat === "" ? null : Number(lat),
        longitude: lon === "" ? null : Number(lon),
        sensor_placement: data.get("sensor_placement") as "Inside" | "Outside",
        sensors: String(data.get("sensors") ?? "").split(",").map((s) => s.trim()).filter(Boolean),
      });
      ctx.store.devices.set(updated.device_id, updated);
      ctx.navigate("device", deviceId);
    } catch (err) {
      host.querySelector<HTMLElement>("#edit-error")!.textContent = String(
        err instanceof Error ? err.message : err,
      );
    }
  });
}
