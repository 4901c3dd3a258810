// Diagnostics model behind the readout panel: per-step inner iteration
// count, per-effector error norms, termination reason, measured tick
// rate, and a fixed-length history for the sparkline. Pure state, no
// DOM; the viewer renders it and the tests drive it directly.

import type { StateFrame } from './protocol.js';

export const SPARK_TICKS = 300;

export interface DiagnosticsSnapshot {
    tick: number;
    iters: number;
    errors: number[];
    reason: string;
    ratePerSec: number;
    stale: boolean;
    sparkline: readonly number[];
}

export class Diagnostics {
    private tick = -1;
    private iters = 0;
    private errors: number[] = [];
    private reason = '';
    private rate = 0;
    private stale = false;
    private lastStamp: number | null = null;
    private readonly iterHistory: number[] = [];

    constructor(private readonly now: () => number = () => performance.now()) {}

    record(frame: StateFrame): void {
        const stamp = this.now();
        if (this.lastStamp !== null) {
            const dt = (stamp - this.lastStamp) / 1000;
            if (dt > 0) {
                const instant = 1 / dt;
                this.rate = this.rate === 0 ? instant : 0.9 * this.rate + 0.1 * instant;
            }
        }
        this.lastStamp = stamp;
        this.tick = frame.tick;
        this.iters = frame.iters;
        this.errors = frame.effectors.map((e) => e.error);
        this.reason = frame.reason;
        this.stale = false;
        this.iterHistory.push(frame.iters);
        if (this.iterHistory.length > SPARK_TICKS) {
            this.iterHistory.splice(0, this.iterHistory.length - SPARK_TICKS);
        }
    }

    /** Disconnect: freeze the readouts and flag them stale. */
    markStale(): void {
        this.stale = true;
    }

    snapshot(): DiagnosticsSnapshot {
        return {
            tick: this.tick,
            iters: this.iters,
            errors: [...this.errors],
            reason: this.reason,
            ratePerSec: this.rate,
            stale: this.stale,
            sparkline: [...this.iterHistory],
        };
    }
}
