// Client-side forward kinematics over the rig description frame, used
// only for drawing bones between joints. Effector positions shown to
// the user always come from the server's state frames; the end-to-end
// tests cross-check this chain against those frames.

import { Quaternion, Vector3 } from 'three';

import type { QuatWXYZ, RigFrame, Vec3 } from './protocol.js';

export interface JointWorld {
    position: Vector3;
    orientation: Quaternion;
}

function axisVector(axis: 'x' | 'y' | 'z' | Vec3): Vector3 {
    if (axis === 'x') return new Vector3(1, 0, 0);
    if (axis === 'y') return new Vector3(0, 1, 0);
    if (axis === 'z') return new Vector3(0, 0, 1);
    return new Vector3(axis[0], axis[1], axis[2]).normalize();
}

// Wire quaternions are scalar-first (s, x, y, z); three is (x, y, z, w).
export function quatFromWire(q: QuatWXYZ): Quaternion {
    return new Quaternion(q[1], q[2], q[3], q[0]);
}

/**
 * World position and orientation of every joint: each joint offsets in
 * its parent's frame, then rotates by pose[i] about its local axis.
 */
export function jointWorlds(rig: RigFrame, pose: number[]): JointWorld[] {
    if (pose.length !== rig.joints.length) {
        throw new Error(`pose has ${pose.length} angles for ${rig.joints.length} joints`);
    }
    const basePos = rig.base ? new Vector3(...rig.base.translation) : new Vector3();
    const baseRot = rig.base ? quatFromWire(rig.base.rotation) : new Quaternion();
    const worlds: JointWorld[] = [];
    for (let i = 0; i < rig.joints.length; i++) {
        const joint = rig.joints[i]!;
        const parent = joint.parent >= 0
            ? worlds[joint.parent]!
            : { position: basePos, orientation: baseRot };
        const position = new Vector3(...joint.offset)
            .applyQuaternion(parent.orientation)
            .add(parent.position);
        const local = new Quaternion()
            .setFromAxisAngle(axisVector(joint.axis), pose[i] ?? 0);
        const orientation = parent.orientation.clone().multiply(local);
        worlds.push({ position, orientation });
    }
    return worlds;
}

/** World position of each end effector (its offset in its joint's frame). */
export function effectorPositions(rig: RigFrame, worlds: JointWorld[]): Vector3[] {
    return rig.end_effectors.map((eff) => {
        const joint = worlds[eff.joint];
        if (!joint) throw new Error(`effector joint ${eff.joint} out of range`);
        return new Vector3(...eff.offset)
            .applyQuaternion(joint.orientation)
            .add(joint.position);
    });
}
