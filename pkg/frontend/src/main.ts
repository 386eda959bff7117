import { ApiClient } from "./api.js";
import { App } from "./app.js";

function playerId(): string {
  const existing = window.localStorage.getItem("playerId");
  if (existing) {
    return existing;
  }
  const fresh = `p-${Math.random().toString(36).slice(2, 10)}`;
  window.localStorage.setItem("playerId", fresh);
  return fresh;
}

const root = document.getElementById("app");
if (root) {
  new App(root, new ApiClient("", playerId())).start();
}
