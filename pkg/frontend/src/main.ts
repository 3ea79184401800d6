// Entry point: one store, one WebSocket subscription, one console. Fleet is
// seeded over REST, then every change arrives as a stream entry. Reconnects
// with a flat 2 s backoff; while disconnected all controls stay disabled.

import { connectStream, fetchFleet, sendCommand, streamUrl } from "./api";
import { FleetStore } from "./store";
import { OperatorConsole } from "./widgets";
import "./style.css";

const base = window.location.origin;
const store = new FleetStore();

const root = document.getElementById("app");
if (!root) throw new Error("missing #app");

const ui = new OperatorConsole({
  root,
  store,
  sendCommand: (vehicleId, command) => sendCommand({ base }, vehicleId, command),
});

async function seedFleet(): Promise<void> {
  try {
    const rows = await fetchFleet({ base });
    store.applyFleet(rows, Date.now());
    if (!ui.selected && rows.length) ui.select(rows[0].vehicle_id);
    ui.render();
  } catch {
    // server not up yet; the reconnect loop keeps trying
  }
}

function subscribe(): void {
  connectStream(streamUrl(base), {
    onOpen: () => {
      ui.setStreamLive(true);
      void seedFleet();
    },
    onClose: () => {
      ui.setStreamLive(false);
      setTimeout(subscribe, 2000);
    },
    onEntry: (entry) => {
      const touched = store.applyStream(entry, Date.now());
      if (touched && !ui.selected) ui.select(touched.vehicleId);
      ui.render();
    },
  });
}

subscribe();
setInterval(() => ui.render(), 1000); // keeps the staleness flag honest
