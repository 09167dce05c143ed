import type { AppContext } from "../context.js";

export async function renderPackets(
  root: HTMLElement, ctx: AppContext, deviceId: string,
): Promise<void> {
  root.innerHTML = `
    <h1>Packet tracer - ${deviceId}</h1>
    <p class="muted">Received vs lost packets over a time range, inferred from
       sequence-number gaps.</p>
    <form id="packet-form" class="range-form">
      <label>From <input id="packet-from" placeholder="2024-03-01T00:00:00Z" /></label>
      <label>To <input id="packet-to" placeholder="2024-03-01T01:00:00Z" /></label>
      <button type="submit">Trace</button>
    </form>
    <div id="packet-result"></div>
    <button id="packet-back">back to device</button>`;

  root.querySelector<HTMLElement>("#packet-back")!
    .addEventListener("click", () => ctx.navigate("device", deviceId));

  const show = async () => {
    const from = root.querySelector<HTMLInputElement>("#packet-from")!.value.trim();
    const to = root.querySelector<HTMLInputElement>("#packet-to")!.value.trim();
    const target = root.querySelector<HTMLElement>("#packet-result")!;
    target.innerHTML = `<p class="muted">tracing...</p>`;
    const report = await ctx.api.packets(deviceId, from || undefined, to || undefined);
    if (report.no_data) {
      target.innerHTML = `<p class="packet-empty">No packets in this range
        (distinct from 0% received).</p>`;
      return;
    }
    target.innerHTML = `
      <div class="packet-figures">
        <div class="stat-card"><span id="packet-received">${report.received_pct!.toFixed(0)}%</span>
          <label>received (${report.received} of ${report.expected})</label></div>
        <div class="stat-card"><span id="packet-lost">${report.lost_pct!.toFixed(0)}%</span>
          <label>lost</label></div>
      </div>
      <div class="bar-track packet-bar">
        <div class="bar-fill" style="width:${report.received_pct!.toFixed(1)}%;background:#16a34a"></div>
      </div>`;
  };

  root.querySelector<HTMLFormElement>("#packet-form")!.addEventListener("submit", (event) => {
    event.preventDefault();
    void show();
  });
  await show();
}
