/**
 * Browser entry point.  The only configuration is the server base URL:
 * `?server=http://host:port` wins, then a `data-server` attribute on the
 * mount node, then the page's own origin.
 */

import { ApiClient } from "./api.js";
import { mountChatApp } from "./app.js";

function resolveBaseUrl(mount: HTMLElement): string {
  const param = new URLSearchParams(window.location.search).get("server");
  if (param) return param;
  const attr = mount.dataset["server"];
  if (attr) return attr;
  return window.location.origin;
}

const mount = document.getElementById("app");
if (mount === null) {
  throw new Error("missing #app mount node");
}
const app = mountChatApp(mount, { api: new ApiClient(resolveBaseUrl(mount)) });
void app.ready;
