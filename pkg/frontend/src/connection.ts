// Reconnecting frame stream over a WebSocket-shaped transport. The
// socket constructor is injectable so tests can drive the same code
// with the `ws` package or a stub; the browser default is the global
// WebSocket. Connection loss flips `online` and schedules a retry, so
// the viewer shows a banner instead of dying.

import { parseServerFrame, type ServerFrame } from './protocol.js';

export interface SocketLike {
    onopen: ((ev?: unknown) => void) | null;
    onmessage: ((ev: { data: unknown }) => void) | null;
    onclose: ((ev?: unknown) => void) | null;
    onerror: ((ev?: unknown) => void) | null;
    send(data: string): void;
    close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ConnectionEvents {
    frame?: (frame: ServerFrame) => void;
    online?: (up: boolean) => void;
}

const defaultFactory: SocketFactory = (url) =>
    new (globalThis as { WebSocket: new (url: string) => SocketLike }).WebSocket(url);

export class Connection {
    online = false;
    private socket: SocketLike | null = null;
    private closed = false;
    private retry: ReturnType<typeof setTimeout> | null = null;
    private readonly pending: string[] = [];

    constructor(
        private readonly url: string,
        private readonly events: ConnectionEvents = {},
        private readonly factory: SocketFactory = defaultFactory,
        private readonly retryMs = 1000,
    ) {}

    connect(): void {
        if (this.closed) return;
        const socket = this.factory(this.url);
        this.socket = socket;
        socket.onopen = () => {
            this.online = true;
            this.events.online?.(true);
            while (this.pending.length) socket.send(this.pending.shift()!);
        };
        socket.onmessage = (ev) => {
            const frame = parseServerFrame(String(ev.data));
            if (frame) this.events.frame?.(frame);
        };
        socket.onerror = () => { /* close always follows */ };
        socket.onclose = () => {
            const wasOnline = this.online;
            this.online = false;
            this.socket = null;
            if (wasOnline) this.events.online?.(false);
            if (!this.closed) {
                this.retry = setTimeout(() => this.connect(), this.retryMs);
            }
        };
    }

    /** Send now if online, else queue for the next (re)connect. */
    send(text: string): void {
        if (this.online && this.socket) this.socket.send(text);
        else this.pending.push(text);
    }

    close(): void {
        this.closed = true;
        if (this.retry !== null) clearTimeout(this.retry);
        this.socket?.close();
    }
}
