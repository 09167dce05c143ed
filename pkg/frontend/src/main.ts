import { createApp } from "./app.js";
import { HttpTransport } from "./transport.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
createApp(root, new HttpTransport());
