/** Browser bootstrap: mount the app on #app against the serving origin. */

import { ApiClient } from "./api.js";
import { initApp } from "./app.js";

function boot(): void {
  const root = document.getElementById("app");
  if (!(root instanceof HTMLElement)) {
    return;
  }
  initApp(root, new ApiClient()).catch((error: unknown) => {
    const banner = document.createElement("div");
    banner.className = "banner error";
    banner.textContent = error instanceof Error ? error.message : "failed to load model";
    root.replaceChildren(banner);
  });
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", boot);
} else {
  boot();
}
