import { renderBars } from "../charts.js";
import type { AppContext } from "../context.js";

export async function renderOverview(root: HTMLElement, ctx: AppContext): Promise<void> {
  const farm = ctx.store.state.farm!;
  root.innerHTML = `
    <h1>${farm.name}</h1>
    <div class="stat-grid">
      <div class="stat-card"><span id="ov-count">-</span><label>palms</label></div>
      <div class="stat-card"><span id="ov-healthy">-</span><label>healthy</label></div>
      <div class="stat-card"><span id="ov-clusters">${farm.cluster_ids.length}</span><label>clusters</label></div>
      <div class="stat-card weather"><span id="ov-weather">-</span><label>weather</label></div>
    </div>
    <h2>Status breakdown</h2>
    <div id="ov-bars"></div>
    <h2>Latest edge digests</h2>
    <table class="data-grid" id="ov-digests">
      <thead><tr><th>device</th><th>window</th><th>count</th><th>min</th><th>mean</th><th>max</th></tr></thead>
      <tbody></tbody>
    </table>`;
  const overview = await ctx.api.overview(farm.farm_id);
  root.querySelector<HTMLElement>("#ov-count")!.textContent = String(overview.palm_count);
  root.querySelector<HTMLElement>("#ov-healthy")!.textContent =
    `${overview.healthy_pct.toFixed(0)}%`;
  // the service has no weather source; it relays an operator-configured note
  root.querySelector<HTMLElement>("#ov-weather")!.textContent =
    overview.weather_note ?? "not configured";
  renderBars(
    root.querySelector<HTMLElement>("#ov-bars")!,
    ["Healthy", "Suspect", "Infested"],
    [
      overview.status_counts.Healthy ?? 0,
      overview.status_counts.Suspect ?? 0,
      overview.status_counts.Infested ?? 0,
    ],
    ["#16a34a", "#eab308", "#dc2626"],
  );
  const body = root.querySelector<HTMLElement>("#ov-digests tbody")!;
  const rows = Object.values(overview.latest_digests);
  body.innerHTML = rows.length
    ? rows
        .map(
          (d) => `<tr>
            <td>${d.device_id}</td><td>${d.window_start}</td><td>${d.count}</td>
            <td>${d.min.toFixed(3)}</td><td>${d.mean.toFixed(3)}</td><td>${d.max.toFixed(3)}</td>
          </tr>`,
        )
        .join("")
    : `<tr><td colspan="6" class="muted">no digests yet</td></tr>`;
}
