// Wire protocol shared with the solver service: one JSON object per
// frame. Everything the viewer knows about the rig and the solve
// arrives through these frames; there are no other channels.

export type Vec3 = [number, number, number];
export type QuatWXYZ = [number, number, number, number];

export interface JointSpec {
    id: number;
    parent: number;
    name: string;
    offset: Vec3;
    axis: 'x' | 'y' | 'z' | Vec3;
    lower: number;
    upper: number;
}

export interface EffectorSpec {
    joint: number;
    offset: Vec3;
}

export interface RigFrame {
    type: 'rig';
    joints: JointSpec[];
    end_effectors: EffectorSpec[];
    base?: { rotation: QuatWXYZ; translation: Vec3 };
    dof: number;
}

export interface EffectorState {
    current: { position: Vec3; orientation: QuatWXYZ };
    target: { position: Vec3; orientation: QuatWXYZ } | null;
    error: number;
}

export interface StateFrame {
    type: 'state';
    tick: number;
    pose: number[];
    effectors: EffectorState[];
    iters: number;
    reason: string;
}

export interface ErrorFrame {
    type: 'error';
    code: string;
    detail: string;
}

export type ServerFrame = RigFrame | StateFrame | ErrorFrame;

export interface SetTargetFrame {
    type: 'set_target';
    effector: number;
    position: Vec3;
    orientation?: QuatWXYZ;
    pos_weight?: number;
    rot_weight?: number;
}

const isNum = (v: unknown): v is number => typeof v === 'number' && Number.isFinite(v);

const isVec3 = (v: unknown): v is Vec3 =>
    Array.isArray(v) && v.length === 3 && v.every(isNum);

const isQuat = (v: unknown): v is QuatWXYZ =>
    Array.isArray(v) && v.length === 4 && v.every(isNum);

function isEffectorState(v: unknown): v is EffectorState {
    if (typeof v !== 'object' || v === null) return false;
    const e = v as Record<string, unknown>;
    const cur = e.current as Record<string, unknown> | undefined;
    if (!cur || !isVec3(cur.position) || !isQuat(cur.orientation)) return false;
    if (e.target !== null) {
        const tgt = e.target as Record<string, unknown> | undefined;
        if (!tgt || !isVec3(tgt.position) || !isQuat(tgt.orientation)) return false;
    }
    return isNum(e.error);
}

/** Parse one server frame; null for anything malformed or unknown. */
export function parseServerFrame(raw: string): ServerFrame | null {
    let data: unknown;
    try {
        data = JSON.parse(raw);
    } catch {
        return null;
    }
    if (typeof data !== 'object' || data === null || Array.isArray(data)) return null;
    const frame = data as Record<string, unknown>;
    switch (frame.type) {
        case 'rig': {
            if (!Array.isArray(frame.joints) || !Array.isArray(frame.end_effectors)) return null;
            if (!isNum(frame.dof)) return null;
            return frame as unknown as RigFrame;
        }
        case 'state': {
            if (!isNum(frame.tick) || !isNum(frame.iters)) return null;
            if (!Array.isArray(frame.pose) || !frame.pose.every(isNum)) return null;
            if (!Array.isArray(frame.effectors) || !frame.effectors.every(isEffectorState)) return null;
            if (typeof frame.reason !== 'string') return null;
            return frame as unknown as StateFrame;
        }
        case 'error': {
            if (typeof frame.code !== 'string' || typeof frame.detail !== 'string') return null;
            return frame as unknown as ErrorFrame;
        }
        default:
            return null;
    }
}

export function setTargetFrame(
    effector: number,
    position: Vec3,
    opts: { orientation?: QuatWXYZ; posWeight?: number; rotWeight?: number } = {},
): string {
    const frame: SetTargetFrame = { type: 'set_target', effector, position };
    if (opts.orientation) frame.orientation = opts.orientation;
    if (opts.posWeight !== undefined) frame.pos_weight = opts.posWeight;
    if (opts.rotWeight !== undefined) frame.rot_weight = opts.rotWeight;
    return JSON.stringify(frame);
}

export function clearTargetFrame(effector: number, position: Vec3): string {
    return JSON.stringify({
        type: 'set_target', effector, position, pos_weight: 0, rot_weight: 0,
    });
}

export const getRigFrame = (): string => JSON.stringify({ type: 'get_rig' });
