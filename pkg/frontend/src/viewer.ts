// Browser shell: renderer, orbit camera, pointer-driven target drags,
// reconnect banner, and the diagnostics panel. All solving is server
// side; this file only turns frames into pixels and drags into
// set_target frames.

import {
    AmbientLight,
    AxesHelper,
    Color,
    PerspectiveCamera,
    Raycaster,
    Scene,
    Vector2,
    Vector3,
    WebGLRenderer,
} from 'three';
import { OrbitControls } from 'three/examples/jsm/controls/OrbitControls.js';

import { Connection } from './connection.js';
import { Diagnostics } from './diagnostics.js';
import { DragEmitter, dragDepthPoint, dragPlanePoint } from './drag.js';
import type { RigFrame, StateFrame, Vec3 } from './protocol.js';
import { SkeletonView } from './skeleton.js';
import { ClientScene } from './state.js';

const DEFAULT_RATE_HZ = 120;

export class Viewer {
    private readonly scene = new ClientScene();
    private readonly three = new Scene();
    private readonly camera: PerspectiveCamera;
    private readonly renderer: WebGLRenderer;
    private readonly controls: OrbitControls;
    private readonly raycaster = new Raycaster();
    private readonly diagnostics = new Diagnostics();
    private readonly connection: Connection;
    private skeleton: SkeletonView | null = null;
    private drag: { emitter: DragEmitter; effector: number; anchor: Vector3; depth: boolean } | null = null;
    private readonly banner: HTMLElement;
    private readonly panel: HTMLElement;
    private readonly spark: HTMLCanvasElement;

    constructor(private readonly root: HTMLElement, url: string) {
        this.three.background = new Color(0x101418);
        this.three.add(new AmbientLight(0xffffff, 1.0));
        this.three.add(new AxesHelper(0.05));
        this.camera = new PerspectiveCamera(
            40, root.clientWidth / root.clientHeight, 0.001, 10);
        this.camera.position.set(0.25, 0.2, 0.3);
        this.renderer = new WebGLRenderer({ antialias: true });
        this.renderer.setSize(root.clientWidth, root.clientHeight);
        root.appendChild(this.renderer.domElement);
        this.controls = new OrbitControls(this.camera, this.renderer.domElement);
        this.controls.target.set(0, 0.08, 0);

        this.banner = document.createElement('div');
        this.banner.className = 'banner';
        this.banner.textContent = 'connecting…';
        root.appendChild(this.banner);
        this.panel = document.createElement('pre');
        this.panel.className = 'panel';
        root.appendChild(this.panel);
        this.spark = document.createElement('canvas');
        this.spark.className = 'spark';
        this.spark.width = 300;
        this.spark.height = 40;
        root.appendChild(this.spark);

        this.connection = new Connection(url, {
            frame: (frame) => {
                if (frame.type === 'rig') this.applyRig(frame);
                else if (frame.type === 'state') this.applyState(frame);
                else console.warn('service rejected a frame:', frame.detail);
            },
            online: (up) => {
                this.banner.style.display = up ? 'none' : 'block';
                this.banner.textContent = 'connection lost, retrying…';
                if (!up) this.diagnostics.markStale();
            },
        });
        this.connection.connect();

        const canvas = this.renderer.domElement;
        canvas.addEventListener('pointerdown', (ev) => this.onPointerDown(ev));
        canvas.addEventListener('pointermove', (ev) => this.onPointerMove(ev));
        canvas.addEventListener('pointerup', () => this.onPointerUp());
        window.addEventListener('resize', () => this.onResize());
        this.renderer.setAnimationLoop(() => {
            this.controls.update();
            this.renderer.render(this.three, this.camera);
        });
    }

    private applyRig(frame: RigFrame): void {
        this.scene.applyRig(frame);
        if (this.skeleton) this.three.remove(this.skeleton.group);
        this.skeleton = new SkeletonView(frame);
        this.three.add(this.skeleton.group);
    }

    private applyState(frame: StateFrame): void {
        if (!this.scene.applyState(frame)) return;
        this.diagnostics.record(frame);
        this.skeleton?.update(frame);
        this.renderPanel();
    }

    private pointerNdc(ev: PointerEvent): Vector2 {
        const rect = this.renderer.domElement.getBoundingClientRect();
        return new Vector2(
            ((ev.clientX - rect.left) / rect.width) * 2 - 1,
            -((ev.clientY - rect.top) / rect.height) * 2 + 1,
        );
    }

    private onPointerDown(ev: PointerEvent): void {
        const state = this.scene.state;
        if (!this.skeleton || !state) return;
        this.raycaster.setFromCamera(this.pointerNdc(ev), this.camera);
        for (let i = 0; i < state.effectors.length; i++) {
            const marker = this.skeleton.currentMarkerAt(i);
            if (!marker || this.raycaster.intersectObject(marker).length === 0) continue;
            const effector = state.effectors[i]!;
            const anchorRaw = effector.target?.position ?? effector.current.position;
            this.drag = {
                emitter: new DragEmitter(this.connection, i, 1000 / DEFAULT_RATE_HZ),
                effector: i,
                anchor: new Vector3(...anchorRaw),
                depth: ev.shiftKey,
            };
            this.controls.enabled = false;
            return;
        }
    }

    private onPointerMove(ev: PointerEvent): void {
        if (!this.drag) return;
        let point: Vector3 | null;
        if (this.drag.depth) {
            point = dragDepthPoint(this.drag.anchor, this.viewDir(), ev.movementY);
            this.drag.anchor.copy(point);
        } else {
            this.raycaster.setFromCamera(this.pointerNdc(ev), this.camera);
            point = dragPlanePoint(this.raycaster.ray, this.drag.anchor, this.viewDir());
        }
        if (point) {
            this.drag.emitter.update([point.x, point.y, point.z] as Vec3);
        }
    }

    private onPointerUp(): void {
        this.drag?.emitter.finish();
        this.drag = null;
        this.controls.enabled = true;
    }

    private viewDir(): Vector3 {
        return this.camera.getWorldDirection(new Vector3());
    }

    private onResize(): void {
        this.camera.aspect = this.root.clientWidth / this.root.clientHeight;
        this.camera.updateProjectionMatrix();
        this.renderer.setSize(this.root.clientWidth, this.root.clientHeight);
    }

    private renderPanel(): void {
        const snap = this.diagnostics.snapshot();
        const errors = snap.errors
            .map((e, i) => `e${i} ${e.toExponential(2)}`)
            .join('  ');
        this.panel.textContent = [
            `tick ${snap.tick}   ${snap.ratePerSec.toFixed(0)} steps/s${snap.stale ? '   STALE' : ''}`,
            `iters ${snap.iters}   reason ${snap.reason}`,
            errors,
        ].join('\n');
        const ctx = this.spark.getContext('2d');
        if (!ctx) return;
        ctx.clearRect(0, 0, this.spark.width, this.spark.height);
        ctx.strokeStyle = snap.stale ? '#777' : '#2ecc40';
        ctx.beginPath();
        const peak = Math.max(1, ...snap.sparkline);
        snap.sparkline.forEach((v, i) => {
            const x = (i / (snap.sparkline.length - 1 || 1)) * this.spark.width;
            const y = this.spark.height - (v / peak) * (this.spark.height - 2) - 1;
            if (i === 0) ctx.moveTo(x, y);
            else ctx.lineTo(x, y);
        });
        ctx.stroke();
    }
}
