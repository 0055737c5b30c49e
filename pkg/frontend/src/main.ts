import { ApiClient } from "./api.js";
import { App } from "./app.js";

function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error('missing element with id "app"');
  // served at /ui/ by the notifier itself, so the API is same-origin
  const app = new App(root, new ApiClient(""), 10_000);
  app.start();
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", boot);
} else {
  boot();
}
