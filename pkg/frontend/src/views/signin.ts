import { ApiError } from "../api.js";
import type { AppContext } from "../context.js";

export function renderSignin(root: HTMLElement, ctx: AppContext): void {
  root.innerHTML = `
    <section class="signin-card">
      <h1>palmwatch</h1>
      <p class="muted">Sign in to monitor your farms</p>
      <form id="signin-form">
        <label>User id <input id="signin-user" autocomplete="username" required /></label>
        <label>Password <input id="signin-password" type="password"
               autocomplete="current-password" required /></label>
        <button type="submit">Sign in</button>
        <div id="signin-error" class="error" role="alert"></div>
      </form>
    </section>`;
  const form = root.querySelector<HTMLFormElement>("#signin-form")!;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const userId = root.querySelector<HTMLInputElement>("#signin-user")!.value.trim();
    const password = root.querySelector<HTMLInputElement>("#signin-password")!.value;
    const errorBox = root.querySelector<HTMLElement>("#signin-error")!;
    try {
      const session = await ctx.api.login(userId, password);
      ctx.store.update({ token: session.token, user: session.user });
      ctx.navigate("farms");
    } catch (err) {
      errorBox.textContent = err instanceof ApiError ? err.message : "sign-in failed";
    }
  });
}
