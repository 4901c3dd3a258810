// Client scene state: the rig description, the newest state frame, and
// the in-flight drag. Rendering always reads the most recent accepted
// frame; anything at or behind the last rendered tick is dropped so the
// displayed tick never goes backwards, even if the transport reorders.

import type { RigFrame, StateFrame, Vec3 } from './protocol.js';

export interface DragState {
    effector: number;
    target: Vec3;
}

export class ClientScene {
    rig: RigFrame | null = null;
    state: StateFrame | null = null;
    drag: DragState | null = null;
    private listeners: Array<(scene: ClientScene) => void> = [];

    applyRig(frame: RigFrame): void {
        this.rig = frame;
        this.emit();
    }

    /** Accept a state frame; false when stale (tick <= last rendered). */
    applyState(frame: StateFrame): boolean {
        if (this.state && frame.tick <= this.state.tick) return false;
        this.state = frame;
        this.emit();
        return true;
    }

    onChange(listener: (scene: ClientScene) => void): () => void {
        this.listeners.push(listener);
        return () => {
            this.listeners = this.listeners.filter((l) => l !== listener);
        };
    }

    private emit(): void {
        for (const listener of this.listeners) listener(this);
    }
}
