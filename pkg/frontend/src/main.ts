import { ApiClient } from "./api";
import { App } from "./app";

const DEFAULT_BASE = "http://127.0.0.1:8660";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? DEFAULT_BASE;

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

void new App(new ApiClient(base), root).start();
