import { App } from "./app.js";

const mount = document.getElementById("app");
if (mount) {
  const app = new App();
  mount.append(app.root);
  void app.start();
}
