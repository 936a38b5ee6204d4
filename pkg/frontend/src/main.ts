import { WorkspaceClient } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
const app = new App(new WorkspaceClient(""), root);
void app.boot();
