// Server connection: WebSocket stream + HTTP gestures with an
// offline queue. Transports are injectable so tests run without a
// browser or a network.

import { applyServerMessage, initialState, type ClientState } from "./state.js";
import type { Gesture, ServerMessage } from "./types.js";

export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  send(data: string): void;
  close(): void;
}

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<{ ok: boolean; status: number; json(): Promise<any>; arrayBuffer(): Promise<ArrayBuffer> }>;

export interface StudioClientOptions {
  baseUrl: string;                       // e.g. http://127.0.0.1:8080
  makeSocket?: (url: string) => SocketLike;
  fetchFn?: FetchLike;
  reconnectDelayMs?: number;
  onChange?: (state: ClientState) => void;
}

function gestureRoute(g: Gesture): { path: string; body: unknown } {
  switch (g.kind) {
    case "command":
      return { path: "/command", body: { text: g.text } };
    case "artist_stroke":
      return { path: "/artist/stroke", body: { color: g.color, width_mm: g.width_mm, path: g.path } };
    case "robot_move":
      return {
        path: "/robot/move",
        body: g.outside ? { outside: true } : { x_mm: g.x_mm, y_mm: g.y_mm },
      };
  }
}

export class StudioClient {
  state: ClientState = initialState();
  pending: Gesture[] = [];
  private socket: SocketLike | null = null;
  private readonly opts: Required<Pick<StudioClientOptions, "baseUrl">> & StudioClientOptions;
  private stopped = false;
  private flushPromise: Promise<number> | null = null;

  constructor(opts: StudioClientOptions) {
    this.opts = opts;
  }

  private emit(): void {
    this.opts.onChange?.(this.state);
  }

  private wsUrl(): string {
    return this.opts.baseUrl.replace(/^http/, "ws") + "/ws";
  }

  connect(): void {
    const make = this.opts.makeSocket ?? ((url: string) => new WebSocket(url) as unknown as SocketLike);
    this.stopped = false;
    this.state = { ...this.state, connection: "connecting" };
    this.emit();
    const socket = make(this.wsUrl());
    this.socket = socket;
    socket.onopen = () => {
      this.state = { ...this.state, connection: "open" };
      this.emit();
      void this.flush();
    };
    socket.onmessage = (ev) => {
      let msg: ServerMessage;
      try {
        msg = JSON.parse(ev.data) as ServerMessage;
      } catch {
        // schema mismatch: drop the socket and resnapshot on reconnect
        this.socket?.close();
        return;
      }
      this.state = applyServerMessage(this.state, msg);
      this.emit();
    };
    socket.onclose = () => {
      this.state = { ...this.state, connection: "closed", needsResync: true };
      this.emit();
      if (!this.stopped) {
        setTimeout(() => this.connect(), this.opts.reconnectDelayMs ?? 1000);
      }
    };
  }

  disconnect(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
  }

  get online(): boolean {
    return this.state.connection === "open";
  }

  /** Send a gesture now, or queue it with a visible pending marker. */
  async send(gesture: Gesture): Promise<boolean> {
    if (!this.online) {
      this.pending.push(gesture);
      this.emit();
      return false;
    }
    await this.post(gesture);
    return true;
  }

  /** Drain the offline queue; concurrent callers share one drain. */
  flush(): Promise<number> {
    if (!this.flushPromise) {
      this.flushPromise = this._flush().finally(() => {
        this.flushPromise = null;
      });
    }
    return this.flushPromise;
  }

  private async _flush(): Promise<number> {
    let sent = 0;
    while (this.pending.length && this.online) {
      const gesture = this.pending[0];
      await this.post(gesture);
      this.pending.shift();
      sent++;
    }
    this.emit();
    return sent;
  }

  private async post(gesture: Gesture): Promise<void> {
    const fetchFn = this.opts.fetchFn ?? (fetch as unknown as FetchLike);
    const { path, body } = gestureRoute(gesture);
    const res = await fetchFn(this.opts.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) {
      this.state = { ...this.state, lastError: `POST ${path} -> ${res.status}` };
      this.emit();
    }
  }

  async fetchCanvas(): Promise<Uint8Array> {
    const fetchFn = this.opts.fetchFn ?? (fetch as unknown as FetchLike);
    const res = await fetchFn(this.opts.baseUrl + "/canvas.ppm");
    if (!res.ok) throw new Error(`canvas fetch failed: ${res.status}`);
    return new Uint8Array(await res.arrayBuffer());
  }

  async fetchState(): Promise<any> {
    const fetchFn = this.opts.fetchFn ?? (fetch as unknown as FetchLike);
    const res = await fetchFn(this.opts.baseUrl + "/state");
    if (!res.ok) throw new Error(`state fetch failed: ${res.status}`);
    return res.json();
  }
}
