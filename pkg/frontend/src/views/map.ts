import {
  boundsOf,
  cellSizeForZoom,
  clusterByGrid,
  project,
  type MapItem,
  type MapPoint,
} from "../clustering.js";
import type { AppContext } from "../context.js";
import { colorForLikelihood } from "../types.js";

const WIDTH = 640;
const HEIGHT = 400;
const COLOR_HEX: Record<string, string> = {
  green: "#16a34a",
  yellow: "#eab308",
  red: "#dc2626",
};

function itemSvg(item: MapItem, x: number, y: number, index: number): string {
  if (item.kind === "cluster") {
    return `
      <g class="map-cluster" data-item="${index}">
        <circle cx="${x}" cy="${y}" r="14" fill="#6b7280"></circle>
        <text x="${x}" y="${y + 4}" text-anchor="middle" fill="#fff"
              font-size="11">${item.members.length}</text>
      </g>`;
  }
  const point = item.members[0]!;
  return `
    <g class="map-marker" data-item="${index}" data-device="${point.id}">
      <circle cx="${x}" cy="${y}" r="7" fill="${COLOR_HEX[point.color] ?? "#6b7280"}"
              stroke="#1f2937" stroke-width="1"></circle>
    </g>`;
}

export async function renderMap(root: HTMLElement, ctx: AppContext): Promise<void> {
  const farm = ctx.store.state.farm!;
  ctx.store.setDevices(await ctx.api.devices(farm.farm_id));
  let zoom = 0;

  root.innerHTML = `
    <h1>Palm map</h1>
    <div class="map-toolbar">
      <button id="map-zoom-out">-</button>
      <span id="map-zoom-level">zoom 0</span>
      <button id="map-zoom-in">+</button>
      <span class="muted">grey icons are zoomed-out clusters; click a palm for detail</span>
    </div>
    <div class="map-layout">
      <div id="map-canvas"></div>
      <aside>
        <h2>Selected palm</h2>
        <div id="map-info" class="muted">hover a marker</div>
        <h2>Unpositioned devices</h2>
        <ul id="map-unpositioned"></ul>
      </aside>
    </div>`;

  const draw = () => {
    const devices = [...ctx.store.devices.values()];
    const positioned: MapPoint[] = devices
      .filter((d) => d.latitude !== null && d.longitude !== null)
      .map((d) => ({
        id: d.device_id,
        lat: d.latitude!,
        lon: d.longitude!,
        color: colorForLikelihood(d.status.likelihood),
      }));
    const missing = devices.filter((d) => d.latitude === null || d.longitude === null);
    root.querySelector<HTMLElement>("#map-zoom-level")!.textContent = `zoom ${zoom}`;
    root.querySelector<HTMLElement>("#map-unpositioned")!.innerHTML = missing.length
      ? missing.map((d) => `<li>${d.device_id}</li>`).join("")
      : `<li class="muted">none</li>`;

    const items = clusterByGrid(positioned, cellSizeForZoom(zoom));
    const bounds = boundsOf(positioned);
    const svgItems = items
      .map((item, index) => {
        const { x, y } = project(item.lat, item.lon, bounds, WIDTH, HEIGHT);
        return itemSvg(item, x, y, index);
      })
      .join("");
    root.querySelector<HTMLElement>("#map-canvas")!.innerHTML = `
      <svg viewBox="0 0 ${WIDTH} ${HEIGHT}" class="farm-map">
        <rect width="${WIDTH}" height="${HEIGHT}" fill="#ecfdf5"></rect>
        ${svgItems}
      </svg>`;

    const info = root.querySelector<HTMLElement>("#map-info")!;
    root.querySelectorAll<SVGGElement>(".map-marker").forEach((marker) => {
      const device = ctx.store.devices.get(marker.dataset.device!)!;
      marker.addEventListener("mouseenter", () => {
        info.innerHTML = `
          <strong>${device.device_id}</strong><br/>
          ${device.status.likelihood} likelihood (${device.status.level})<br/>
          ${device.latitude?.toFixed(5)}, ${device.longitude?.toFixed(5)}<br/>
          cluster ${device.cluster_id}`;
      });
      marker.addEventListener("click", () => ctx.navigate("device", device.device_id));
    });
    root.querySelectorAll<SVGGElement>(".map-cluster").forEach((clusterEl) => {
      const item = items[Number(clusterEl.dataset.item)]!;
      clusterEl.addEventListener("mouseenter", () => {
        info.innerHTML = `<strong>${item.members.length} palms</strong><br/>` +
          item.members.map((m) => m.id).join("<br/>");
      });
      clusterEl.addEventListener("click", () => {
        zoom += 1;
        draw();
      });
    });
  };

  root.querySelector<HTMLElement>("#map-zoom-in")!.addEventListener("click", () => {
    zoom += 1;
    draw();
  });
  root.querySelector<HTMLElement>("#map-zoom-out")!.addEventListener("click", () => {
    zoom = Math.max(0, zoom - 1);
    draw();
  });
  draw();
}
