import { ServiceClient } from "./api.js";
import { SessionController } from "./session.js";
import {
  buildView,
  renderRanking,
  renderStatus,
  renderTyped,
  View,
} from "./view.js";

const KEY_PATTERN = /^[a-z ]$/;

export interface App {
  controller: SessionController;
  view: View;
  /** Number of ranking updates rendered so far. */
  updates: number;
  /** Exact response bodies rendered, oldest first. */
  rawLog: string[];
  lastRaw: string;
}

export function initApp(
  root: HTMLElement,
  client: ServiceClient = new ServiceClient()
): App {
  const view = buildView(root);
  const app: App = {
    controller: undefined as unknown as SessionController,
    view,
    updates: 0,
    rawLog: [],
    lastRaw: "",
  };
  const controller = new SessionController(client, {
    onUpdate: (payload, raw, typed) => {
      app.updates += 1;
      app.rawLog.push(raw);
      app.lastRaw = raw;
      renderTyped(view, typed);
      renderRanking(view, payload);
      renderStatus(view, "");
    },
    onError: (message) => {
      renderStatus(view, message);
    },
  });
  app.controller = controller;

  root.ownerDocument.addEventListener("keydown", (event) => {
    if (event.ctrlKey || event.metaKey || event.altKey) {
      return;
    }
    if (event.key === "Backspace") {
      event.preventDefault();
      void controller.backspace();
      return;
    }
    const key = event.key.toLowerCase();
    if (key.length === 1 && KEY_PATTERN.test(key)) {
      event.preventDefault();
      void controller.keystroke(key);
    }
  });

  void controller.start();
  return app;
}

const autoRoot =
  typeof document !== "undefined" ? document.getElementById("app") : null;
if (autoRoot) {
  initApp(autoRoot);
}
