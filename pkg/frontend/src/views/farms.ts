import type { AppContext } from "../context.js";

export async function renderFarms(root: HTMLElement, ctx: AppContext): Promise<void> {
  root.innerHTML = `<h1>Your farms</h1><div id="farm-list" class="card-list">loading...</div>`;
  const farms = await ctx.api.farms();
  const list = root.querySelector<HTMLElement>("#farm-list")!;
  if (farms.length === 0) {
    list.innerHTML = `<p class="muted">No farms are assigned to this account.</p>`;
    return;
  }
  list.innerHTML = farms
    .map(
      (farm) => `
      <button class="farm-card" data-farm="${farm.farm_id}">
        <strong>${farm.name}</strong>
        <span class="muted">${farm.farm_id} - ${farm.cluster_ids.length} cluster(s)</span>
      </button>`,
    )
    .join("");
  list.querySelectorAll<HTMLButtonElement>(".farm-card").forEach((button) => {
    button.addEventListener("click", () => {
      const farm = farms.find((f) => f.farm_id === button.dataset.farm)!;
      ctx.store.update({ farm });
      ctx.navigate("dashboard");
    });
  });
}
