// Screen-drag to world-target mapping. Dragging moves the target in
// the camera-facing plane through its current location; holding the
// depth modifier slides it along the view direction instead. Outgoing
// set_target frames are throttled to at most one per solver period,
// always ending with the final pointer position.

import { Plane, Ray, Vector3 } from 'three';

import { setTargetFrame, type Vec3 } from './protocol.js';

/** Intersect a pointer ray with the camera-facing plane through `anchor`. */
export function dragPlanePoint(ray: Ray, anchor: Vector3, viewDir: Vector3): Vector3 | null {
    const plane = new Plane().setFromNormalAndCoplanarPoint(viewDir.clone().normalize(), anchor);
    const hit = new Vector3();
    return ray.intersectPlane(plane, hit) ? hit : null;
}

/** Depth mode: slide the anchor along the view direction by pointer dy. */
export function dragDepthPoint(anchor: Vector3, viewDir: Vector3, dy: number, scale = 0.002): Vector3 {
    return anchor.clone().addScaledVector(viewDir.clone().normalize(), dy * scale);
}

export interface TargetSink {
    send(text: string): void;
}

export class DragEmitter {
    private lastSent: Vec3 | null = null;
    private lastTime = -Infinity;
    private queued: Vec3 | null = null;
    private timer: ReturnType<typeof setTimeout> | null = null;

    constructor(
        private readonly sink: TargetSink,
        private readonly effector: number,
        private readonly minIntervalMs: number,
        private readonly now: () => number = () => performance.now(),
    ) {}

    /** Emit a throttled set_target; identical positions emit nothing. */
    update(position: Vec3): void {
        if (this.lastSent && samePoint(this.lastSent, position)) return;
        const wait = this.lastTime + this.minIntervalMs - this.now();
        if (wait <= 0) {
            this.emit(position);
            return;
        }
        this.queued = position;
        if (this.timer === null) {
            this.timer = setTimeout(() => {
                this.timer = null;
                if (this.queued) this.emit(this.queued);
            }, wait);
        }
    }

    /** Release: flush any queued position immediately; target persists. */
    finish(): void {
        if (this.timer !== null) {
            clearTimeout(this.timer);
            this.timer = null;
        }
        if (this.queued) this.emit(this.queued);
    }

    get sentCount(): number {
        return this.count;
    }

    private count = 0;

    private emit(position: Vec3): void {
        this.sink.send(setTargetFrame(this.effector, position, { rotWeight: 0 }));
        this.lastSent = position;
        this.queued = null;
        this.lastTime = this.now();
        this.count += 1;
    }
}

const samePoint = (a: Vec3, b: Vec3): boolean =>
    a[0] === b[0] && a[1] === b[1] && a[2] === b[2];
