/** Browser entry: connect, render, and steer the analysis session. */
import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { Connection, defaultWireUrl } from "./connection";
import { RequestDispatcher, routeClick, routeDragEnd, debounce } from "./picking";
import { SceneRenderer } from "./render";
import { SceneStore } from "./sceneStore";
import { TransitionDetector, viewAngleDeg } from "./transition";
import type {
  HandshakeFrame,
  Quat,
  ServerFrame,
  Vec3,
  WireRequest,
} from "./protocol";

const store = new SceneStore();
const sceneRenderer = new SceneRenderer(store);

const renderer = new THREE.WebGLRenderer({ antialias: true });
renderer.setSize(window.innerWidth, window.innerHeight);
renderer.setPixelRatio(window.devicePixelRatio);
document.body.appendChild(renderer.domElement);

const three = new THREE.Scene();
three.background = new THREE.Color(0xf2f2f0);
three.add(new THREE.AmbientLight(0xffffff, 1.6));
const sun = new THREE.DirectionalLight(0xffffff, 1.8);
sun.position.set(2, 4, 3);
three.add(sun);
three.add(sceneRenderer.root);

const camera = new THREE.PerspectiveCamera(
  60,
  window.innerWidth / window.innerHeight,
  0.01,
  100,
);
camera.position.set(0.8, 1.6, 1.2);
const controls = new OrbitControls(camera, renderer.domElement);
controls.target.set(0, 1.2, -0.9);

window.addEventListener("resize", () => {
  camera.aspect = window.innerWidth / window.innerHeight;
  camera.updateProjectionMatrix();
  renderer.setSize(window.innerWidth, window.innerHeight);
});

let handshake: HandshakeFrame | null = null;
let detector: TransitionDetector | null = null;
let connection: Connection | null = null;

const dispatcher = new RequestDispatcher(
  (request: WireRequest) => connection?.send(request),
  () => store.version,
);

function chartPose(chartId: string): { position: Vec3; rotation: Quat } | null {
  const node = store.get(`chart/${chartId}`);
  if (!node) return null;
  const t = node.doc.transform ?? {};
  return {
    position: t.position ?? [0, 0, 0],
    rotation: t.rotation ?? [0, 0, 0, 1],
  };
}

function currentRepresentation(chartId: string): "MDD" | "TET" {
  for (const id of store.ids()) {
    if (id.startsWith(`chart/${chartId}/tet/`)) return "TET";
  }
  return "MDD";
}

function onFrame(frame: ServerFrame): void {
  switch (frame.type) {
    case "handshake":
      handshake = frame;
      detector = new TransitionDetector(frame.constants);
      connection?.send({ type: "open" });
      break;
    case "snapshot":
      store.loadSnapshot(frame.scene, frame.sceneVersion);
      if (detector && handshake) {
        detector.sync(currentRepresentation(handshake.constants.mddChartId));
      }
      break;
    case "patch":
      store.submitPatch(frame.patch, frame.sceneVersion);
      dispatcher.onPatchApplied();
      if (detector && handshake) {
        detector.sync(currentRepresentation(handshake.constants.mddChartId));
      }
      break;
    case "error":
      console.warn(`session error [${frame.code}]: ${frame.message}`);
      break;
  }
}

connection = new Connection(defaultWireUrl(), {
  onFrame,
  onClose: () => console.warn("connection closed"),
});

// -- picking ---------------------------------------------------------------

const raycaster = new THREE.Raycaster();
const pointer = new THREE.Vector2();
let dragging: { nodeId: string; chartId: string | null; start: THREE.Vector2 } | null =
  null;

function pickAt(event: PointerEvent): string | null {
  pointer.x = (event.clientX / window.innerWidth) * 2 - 1;
  pointer.y = -(event.clientY / window.innerHeight) * 2 + 1;
  raycaster.setFromCamera(pointer, camera);
  const hits = raycaster.intersectObjects(sceneRenderer.root.children, true);
  return sceneRenderer.pickableAt(hits);
}

const sendChartMove = debounce((chartId: string, position: Vec3) => {
  // local-only: chart transforms are a viewer concern; keep them local
  void chartId;
  void position;
}, 150);

renderer.domElement.addEventListener("pointerdown", (event) => {
  const nodeId = pickAt(event);
  if (!nodeId) return;
  const node = store.get(nodeId);
  const semantic = node?.doc.pick?.semantic;
  if (semantic === "chartHandle" || semantic === "attributeColumn") {
    dragging = {
      nodeId,
      chartId:
        semantic === "chartHandle"
          ? (node?.doc.pick?.payload.chartId as string)
          : null,
      start: new THREE.Vector2(event.clientX, event.clientY),
    };
    controls.enabled = false;
  }
});

renderer.domElement.addEventListener("pointerup", (event) => {
  controls.enabled = true;
  const nodeId = pickAt(event);
  if (dragging) {
    const moved = new THREE.Vector2(event.clientX, event.clientY).distanceTo(
      dragging.start,
    );
    const source = store.get(dragging.nodeId);
    if (moved > 24 && source?.doc.pick) {
      const mddId = handshake?.constants.mddChartId ?? "mdd0";
      const overMdd = nodeId !== null && store.rootOf(nodeId) === `chart/${mddId}`;
      const action = routeDragEnd({
        target: { nodeId: dragging.nodeId, pick: source.doc.pick },
        movedBy: [moved, 0, 0],
        leftChartBounds: moved > 24,
        droppedOnMddChart: overMdd,
      });
      if (action.kind === "request") {
        dispatcher.dispatch(action.request, store.version);
      } else if (action.kind === "moveChart" && dragging.chartId) {
        const pose = chartPose(dragging.chartId);
        if (pose) sendChartMove(dragging.chartId, pose.position);
      }
      dragging = null;
      return;
    }
    dragging = null;
  }
  if (!nodeId) return;
  const node = store.get(nodeId);
  if (!node?.doc.pick) return;
  const action = routeClick({ nodeId, pick: node.doc.pick });
  if (action.kind === "request") dispatcher.dispatch(action.request, store.version);
});

// -- frame loop --------------------------------------------------------------

function tick(): void {
  requestAnimationFrame(tick);
  controls.update();
  if (detector && handshake) {
    const pose = chartPose(handshake.constants.mddChartId);
    if (pose) {
      const angle = viewAngleDeg(
        [camera.position.x, camera.position.y, camera.position.z],
        pose.position,
        pose.rotation,
      );
      const intent = detector.step(angle);
      if (intent) {
        dispatcher.dispatch(
          {
            type: "set_representation",
            chartId: handshake.constants.mddChartId,
            repr: intent,
          },
          store.version,
        );
      }
    }
  }
  renderer.render(three, camera);
}

tick();
