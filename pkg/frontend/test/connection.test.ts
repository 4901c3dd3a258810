import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { Connection, type SocketLike } from '../src/connection.js';
import type { ServerFrame } from '../src/protocol.js';

class StubSocket implements SocketLike {
    onopen: ((ev?: unknown) => void) | null = null;
    onmessage: ((ev: { data: unknown }) => void) | null = null;
    onclose: ((ev?: unknown) => void) | null = null;
    onerror: ((ev?: unknown) => void) | null = null;
    sent: string[] = [];
    send(data: string): void { this.sent.push(data); }
    close(): void { this.onclose?.(); }
}

describe('Connection', () => {
    let sockets: StubSocket[];
    const factory = () => {
        const socket = new StubSocket();
        sockets.push(socket);
        return socket;
    };

    beforeEach(() => {
        sockets = [];
        vi.useFakeTimers();
    });
    afterEach(() => vi.useRealTimers());

    it('parses frames and drops garbage without dying', () => {
        const frames: ServerFrame[] = [];
        const conn = new Connection('ws://x', { frame: (f) => frames.push(f) }, factory);
        conn.connect();
        sockets[0]!.onopen?.();
        sockets[0]!.onmessage?.({ data: '{"type":"error","code":"c","detail":"d"}' });
        sockets[0]!.onmessage?.({ data: 'not json' });
        sockets[0]!.onmessage?.({ data: '{"type":"mystery"}' });
        expect(frames.length).toBe(1);
        conn.close();
    });

    it('reconnects after a drop and reports both transitions', () => {
        const transitions: boolean[] = [];
        const conn = new Connection('ws://x', { online: (up) => transitions.push(up) },
            factory, 500);
        conn.connect();
        sockets[0]!.onopen?.();
        sockets[0]!.onclose?.();
        expect(sockets.length).toBe(1);
        vi.advanceTimersByTime(500);
        expect(sockets.length).toBe(2);
        sockets[1]!.onopen?.();
        expect(transitions).toEqual([true, false, true]);
        conn.close();
    });

    it('queues sends while offline and flushes on open', () => {
        const conn = new Connection('ws://x', {}, factory);
        conn.send('{"type":"get_rig"}');
        conn.connect();
        expect(sockets[0]!.sent).toEqual([]);
        sockets[0]!.onopen?.();
        expect(sockets[0]!.sent).toEqual(['{"type":"get_rig"}']);
        conn.close();
    });

    it('close stops the retry loop', () => {
        const conn = new Connection('ws://x', {}, factory, 100);
        conn.connect();
        sockets[0]!.onopen?.();
        conn.close();
        vi.advanceTimersByTime(1000);
        expect(sockets.length).toBe(1);
    });
});
