// Thin client over the control centre's HTTP and WebSocket endpoints.
// The WebSocket constructor and fetch are injectable so tests can drive the
// console against a real server from node.

import type { Command, CommandResponse, FleetRow, StreamEntry, VehicleDetail } from "./types";

export type Http = {
  base: string; // e.g. "http://127.0.0.1:7780"
  fetchFn?: typeof fetch;
};

async function getJson(http: Http, path: string): Promise<unknown> {
  const doFetch = http.fetchFn ?? fetch;
  const res = await doFetch(`${http.base}${path}`);
  if (!res.ok) throw new Error(`GET ${path}: HTTP ${res.status}`);
  return res.json();
}

export async function fetchFleet(http: Http): Promise<FleetRow[]> {
  const body = (await getJson(http, "/fleet")) as { vehicles: FleetRow[] };
  return body.vehicles;
}

export async function fetchVehicle(http: Http, vehicleId: string): Promise<VehicleDetail> {
  return (await getJson(http, `/vehicle/${encodeURIComponent(vehicleId)}`)) as VehicleDetail;
}

/** POST a command; resolves with the ack outcome (accepted, rejected with a
 * reason, or timeout). Throws only on transport/HTTP failure. */
export async function sendCommand(
  http: Http,
  vehicleId: string,
  command: Command,
): Promise<CommandResponse> {
  const doFetch = http.fetchFn ?? fetch;
  const res = await doFetch(`${http.base}/vehicle/${encodeURIComponent(vehicleId)}/command`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(command),
  });
  if (!res.ok) throw new Error(`command POST failed: HTTP ${res.status}`);
  return (await res.json()) as CommandResponse;
}

export type StreamHandlers = {
  onEntry: (entry: StreamEntry) => void;
  onOpen?: () => void;
  onClose?: () => void;
};

type WsLike = {
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  close(): void;
};

export type WsFactory = new (url: string) => WsLike;

/** Subscribe to GET /stream. Returns a close function. Keepalive pokes from
 * the server are swallowed here. */
export function connectStream(
  wsUrl: string,
  handlers: StreamHandlers,
  WsCtor?: WsFactory,
): () => void {
  const Ctor = WsCtor ?? (globalThis.WebSocket as unknown as WsFactory);
  const ws = new Ctor(wsUrl);
  ws.onopen = () => handlers.onOpen?.();
  ws.onclose = () => handlers.onClose?.();
  ws.onerror = () => {
    /* onclose follows; nothing extra to do */
  };
  ws.onmessage = (ev) => {
    let parsed: unknown;
    try {
      parsed = JSON.parse(String(ev.data));
    } catch {
      return;
    }
    const entry = parsed as Record<string, unknown>;
    if (entry.keepalive) return;
    if (typeof entry.global_seq === "number" && entry.message) {
      handlers.onEntry(parsed as StreamEntry);
    }
  };
  return () => ws.close();
}

export function streamUrl(httpBase: string): string {
  return httpBase.replace(/^http/, "ws") + "/stream";
}
