import type { AppContext } from "../context.js";
import type { NotificationRecord } from "../types.js";

function describe(notification: NotificationRecord): string {
  const payload = notification.payload as Record<string, string>;
  if (notification.kind === "StatusChange") {
    return `${payload.device_id}: likelihood ${payload.from} -> ${payload.to}`;
  }
  return `new device ${payload.device_id} auto-detected by ${payload.gateway_id}`;
}

export async function renderNotifications(root: HTMLElement, ctx: AppContext): Promise<void> {
  root.innerHTML = `
    <h1>Notifications</h1>
    <button id="notif-mark-read">mark all read</button>
    <ul id="notif-list" class="notification-list">loading...</ul>`;
  const refresh = async () => {
    const { notifications, unread } = await ctx.api.notifications();
    ctx.store.update({ unread });
    const list = root.querySelector<HTMLElement>("#notif-list")!;
    list.innerHTML = notifications.length
      ? notifications
          .map(
            (n) => `
          <li class="${n.read ? "read" : "unread"}">
            <span class="notif-kind">${n.kind}</span>
            <span>${describe(n)}</span>
            <span class="muted">${n.created_at}</span>
          </li>`,
          )
          .join("")
      : `<li class="muted">nothing yet</li>`;
  };
  root.querySelector<HTMLElement>("#notif-mark-read")!.addEventListener("click", async () => {
    const { notifications } = await ctx.api.notifications();
    await ctx.api.markNotificationsRead(notifications.filter((n) => !n.read).map((n) => n.id));
    await refresh();
  });
  await refresh();
}
