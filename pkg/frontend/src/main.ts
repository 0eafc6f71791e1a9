/** Entry point: wires the controller to the page.
 *
 * Query parameters:
 *   ?server=http://host:port   service base URL (default: same origin)
 *   ?session=<id>              re-attach to a live session after a reload
 *   ?seed=<n>&size=<k>         episode parameters for a new session
 */

import { ApiClient } from "./api.js";
import { PlayController } from "./controller.js";
import { mount } from "./ui.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("server") ?? "";
  const api = new ApiClient(base);
  const controller = new PlayController(api);
  mount(document.getElementById("app") as HTMLElement, controller);

  await controller.loadCatalog();
  const existing = params.get("session");
  if (existing) {
    await controller.attach(existing);
  } else {
    const seed = Number(params.get("seed") ?? Math.floor(Math.random() * 1e6));
    const size = Number(params.get("size") ?? 2);
    await controller.start({ seed, size });
    const sid = controller.state.sessionId;
    if (sid) {
      params.set("session", sid);
      history.replaceState(null, "", `?${params}`);
    }
  }
}

boot().catch((e) => {
  const el = document.getElementById("app");
  if (el) el.textContent = `failed to start: ${e}`;
});
