import { SessionClient } from "./client.js";
import { mount } from "./ui.js";

const endpoint =
  new URLSearchParams(location.search).get("endpoint") ??
  `ws://${location.hostname}:8571/session`;

const client = new SessionClient(
  endpoint,
  (url) => new WebSocket(url) as unknown as import("./client.js").SessionSocket,
);

mount(document.getElementById("app")!, client);
