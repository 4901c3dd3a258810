// Stick-figure rig view: one line segment per bone (parent to child
// joint, root hung off the base), small dots at joints, and sphere
// markers per end effector — current in green, target in red. Pure
// scene-graph objects; the renderer lives in the viewer.

import {
    BufferAttribute,
    BufferGeometry,
    Group,
    LineBasicMaterial,
    LineSegments,
    Mesh,
    MeshBasicMaterial,
    Points,
    PointsMaterial,
    SphereGeometry,
} from 'three';

import { effectorPositions, jointWorlds } from './kinematics.js';
import type { RigFrame, StateFrame } from './protocol.js';

const CURRENT_COLOR = 0x2ecc40;
const TARGET_COLOR = 0xff4136;
const BONE_COLOR = 0xd0d8e0;
const MARKER_RADIUS = 0.006;

export class SkeletonView {
    readonly group = new Group();
    private readonly bonePositions: Float32Array;
    private readonly boneGeometry: BufferGeometry;
    private readonly jointPositions: Float32Array;
    private readonly jointGeometry: BufferGeometry;
    private readonly currentMarkers: Mesh[] = [];
    private readonly targetMarkers: Mesh[] = [];

    constructor(private readonly rig: RigFrame) {
        this.bonePositions = new Float32Array(rig.joints.length * 6);
        this.boneGeometry = new BufferGeometry();
        this.boneGeometry.setAttribute('position', new BufferAttribute(this.bonePositions, 3));
        this.group.add(new LineSegments(
            this.boneGeometry, new LineBasicMaterial({ color: BONE_COLOR })));

        this.jointPositions = new Float32Array(rig.joints.length * 3);
        this.jointGeometry = new BufferGeometry();
        this.jointGeometry.setAttribute('position', new BufferAttribute(this.jointPositions, 3));
        this.group.add(new Points(
            this.jointGeometry, new PointsMaterial({ color: BONE_COLOR, size: 0.004 })));

        const sphere = new SphereGeometry(MARKER_RADIUS, 12, 8);
        for (let i = 0; i < rig.end_effectors.length; i++) {
            const current = new Mesh(sphere, new MeshBasicMaterial({ color: CURRENT_COLOR }));
            const target = new Mesh(sphere, new MeshBasicMaterial({ color: TARGET_COLOR }));
            target.visible = false;
            this.currentMarkers.push(current);
            this.targetMarkers.push(target);
            this.group.add(current, target);
        }
    }

    /** Re-pose every bone, joint dot, and marker from a state frame. */
    update(frame: StateFrame): void {
        const worlds = jointWorlds(this.rig, frame.pose);
        const basePos = this.rig.base ? this.rig.base.translation : [0, 0, 0];
        for (let i = 0; i < this.rig.joints.length; i++) {
            const joint = this.rig.joints[i]!;
            const head = joint.parent >= 0 ? worlds[joint.parent]!.position : {
                x: basePos[0]!, y: basePos[1]!, z: basePos[2]!,
            };
            const tail = worlds[i]!.position;
            this.bonePositions.set([head.x, head.y, head.z, tail.x, tail.y, tail.z], i * 6);
            this.jointPositions.set([tail.x, tail.y, tail.z], i * 3);
        }
        this.boneGeometry.getAttribute('position').needsUpdate = true;
        this.jointGeometry.getAttribute('position').needsUpdate = true;
        this.boneGeometry.computeBoundingSphere();

        // Markers follow the server's own effector state, not client FK.
        for (let i = 0; i < frame.effectors.length; i++) {
            const effector = frame.effectors[i]!;
            this.currentMarkers[i]?.position.set(...effector.current.position);
            const target = this.targetMarkers[i];
            if (target) {
                target.visible = effector.target !== null;
                if (effector.target) target.position.set(...effector.target.position);
            }
        }
    }

    /** Client FK of the latest pose, for picking and debug overlays. */
    effectorWorlds(frame: StateFrame) {
        return effectorPositions(this.rig, jointWorlds(this.rig, frame.pose));
    }

    currentMarkerAt(index: number): Mesh | undefined {
        return this.currentMarkers[index];
    }
}
