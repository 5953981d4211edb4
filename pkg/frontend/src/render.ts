/**
 * three.js projection of the scene store.
 *
 * Top-level nodes (charts, grid cells) each own a THREE.Group; structural
 * patches rebuild only the groups they touch, while recolors hit meshes
 * (or fiber instance colors) directly. Fibers render as one InstancedMesh
 * per grid cell, which keeps 10^5-cylinder scenes interactive. Data
 * colors come verbatim from the scene document; nothing is themed.
 */
import * as THREE from "three";
import type { AppliedChange, SceneStore, StoredNode } from "./sceneStore";
import type { RGBA, SceneNodeDoc, Vec3 } from "./protocol";

const UNIT_BOX = new THREE.BoxGeometry(1, 1, 1);
const UNIT_CYLINDER = new THREE.CylinderGeometry(1, 1, 1, 10, 1);
const PLACEHOLDER = new THREE.OctahedronGeometry(0.03);

function applyTransform(object: THREE.Object3D, node: SceneNodeDoc): void {
  const t = node.transform ?? {};
  const [px, py, pz] = t.position ?? [0, 0, 0];
  const [rx, ry, rz, rw] = t.rotation ?? [0, 0, 0, 1];
  const [sx, sy, sz] = t.scale ?? [1, 1, 1];
  object.position.set(px, py, pz);
  object.quaternion.set(rx, ry, rz, rw);
  object.scale.set(sx, sy, sz);
}

function material(color: RGBA): THREE.MeshLambertMaterial {
  return new THREE.MeshLambertMaterial({
    color: new THREE.Color(color[0], color[1], color[2]),
    transparent: color[3] < 1,
    opacity: color[3],
    side: THREE.DoubleSide,
  });
}

function setMeshColor(mesh: THREE.Object3D, color: RGBA): void {
  const mat = (mesh as THREE.Mesh).material as
    | THREE.MeshLambertMaterial
    | THREE.SpriteMaterial
    | undefined;
  if (!mat || !("color" in mat)) return;
  mat.color.setRGB(color[0], color[1], color[2]);
  if ("opacity" in mat) {
    mat.transparent = color[3] < 1;
    mat.opacity = color[3];
  }
}

function cylinderBetween(
  start: Vec3,
  end: Vec3,
  radius: number,
): { position: THREE.Vector3; quaternion: THREE.Quaternion; scale: THREE.Vector3 } {
  const a = new THREE.Vector3(...start);
  const b = new THREE.Vector3(...end);
  const mid = a.clone().add(b).multiplyScalar(0.5);
  const dir = b.clone().sub(a);
  const length = dir.length();
  const quaternion = new THREE.Quaternion().setFromUnitVectors(
    new THREE.Vector3(0, 1, 0),
    dir.normalize(),
  );
  return {
    position: mid,
    quaternion,
    scale: new THREE.Vector3(radius, length, radius),
  };
}

function labelSprite(node: SceneNodeDoc): THREE.Sprite {
  const text = node.unit ? `${node.text} ${node.unit}` : (node.text ?? "");
  const canvas = document.createElement("canvas");
  const ctx = canvas.getContext("2d");
  let aspect = 4;
  if (ctx) {
    ctx.font = "32px sans-serif";
    const width = Math.max(2, Math.ceil(ctx.measureText(text).width));
    canvas.width = width + 8;
    canvas.height = 40;
    aspect = canvas.width / canvas.height;
    ctx.font = "32px sans-serif";
    ctx.fillStyle = `rgba(${node.color.map((c, i) => (i < 3 ? Math.round(c * 255) : c)).join(",")})`;
    ctx.textBaseline = "middle";
    ctx.fillText(text, 4, canvas.height / 2);
  }
  const texture = new THREE.CanvasTexture(canvas);
  const sprite = new THREE.Sprite(
    new THREE.SpriteMaterial({ map: texture, transparent: true }),
  );
  const height = 0.035;
  sprite.scale.set(height * aspect, height, 1);
  return sprite;
}

interface FiberBatch {
  mesh: THREE.InstancedMesh;
  indexOf: Map<string, number>;
}

export class SceneRenderer {
  readonly root = new THREE.Group();
  private groups = new Map<string, THREE.Group>();
  private objects = new Map<string, THREE.Object3D>();
  private batches = new Map<string, FiberBatch>();
  private warnedKinds = new Set<string>();

  constructor(private readonly store: SceneStore) {
    store.onChange((change) => this.sync(change));
  }

  sync(change: AppliedChange): void {
    const dirtyRoots = new Set<string>();
    for (const id of [...change.added, ...change.removed]) {
      dirtyRoots.add(this.store.has(id) ? this.store.rootOf(id) : id);
    }
    // a removed node may have been a root itself or live under one that
    // is gone; rebuild every group that no longer exists in the store
    for (const rootId of [...this.groups.keys()]) {
      if (!this.store.has(rootId)) dirtyRoots.add(rootId);
    }
    for (const rootId of dirtyRoots) this.rebuildRoot(rootId);
    for (const id of change.recolored) {
      if (dirtyRoots.has(this.store.rootOf(id))) continue;
      this.recolor(id);
    }
    for (const id of change.retransformed) {
      if (dirtyRoots.has(this.store.rootOf(id))) continue;
      const node = this.store.get(id);
      const object = this.objects.get(id);
      if (node && object) applyTransform(object, node.doc);
    }
  }

  pickableAt(intersections: THREE.Intersection[]): string | null {
    for (const hit of intersections) {
      let object: THREE.Object3D | null = hit.object;
      while (object) {
        const nodeId = object.userData.nodeId as string | undefined;
        if (nodeId) {
          const node = this.store.get(nodeId);
          if (node?.doc.pick) return nodeId;
        }
        object = object.parent;
      }
    }
    return null;
  }

  private rebuildRoot(rootId: string): void {
    const existing = this.groups.get(rootId);
    if (existing) {
      this.root.remove(existing);
      this.disposeRecursive(existing);
      this.groups.delete(rootId);
      this.batches.delete(rootId);
      for (const id of [...this.objects.keys()]) {
        if (id === rootId || id.startsWith(`${rootId}/`)) this.objects.delete(id);
      }
    }
    const node = this.store.get(rootId);
    if (!node) return;
    const group = this.buildGroup(node);
    this.groups.set(rootId, group);
    this.root.add(group);
  }

  private buildGroup(node: StoredNode): THREE.Group {
    const group = new THREE.Group();
    group.userData.nodeId = node.id;
    applyTransform(group, node.doc);
    this.objects.set(node.id, group);

    const childIds = this.store.childrenOf(node.id);
    const cylinderIds = childIds.filter(
      (id) => this.store.get(id)?.doc.kind === "cylinder",
    );
    if (cylinderIds.length > 32) {
      this.buildFiberBatch(node.id, cylinderIds, group);
    }
    const instanced = new Set(cylinderIds.length > 32 ? cylinderIds : []);
    // the node's own geometry (child transforms live on their subgroups)
    const own = this.buildMesh(node.doc);
    if (own) group.add(own);
    for (const childId of childIds) {
      if (instanced.has(childId)) continue;
      const child = this.store.get(childId);
      if (child) group.add(this.buildGroup(child));
    }
    return group;
  }

  private buildFiberBatch(
    rootId: string,
    ids: string[],
    group: THREE.Group,
  ): void {
    const mesh = new THREE.InstancedMesh(
      UNIT_CYLINDER,
      new THREE.MeshLambertMaterial(),
      ids.length,
    );
    const indexOf = new Map<string, number>();
    const matrix = new THREE.Matrix4();
    const color = new THREE.Color();
    ids.forEach((id, index) => {
      const doc = this.store.get(id)?.doc;
      if (!doc?.points || doc.points.length < 2) return;
      const placement = cylinderBetween(
        doc.points[0]!,
        doc.points[1]!,
        doc.radius ?? 1,
      );
      matrix.compose(placement.position, placement.quaternion, placement.scale);
      mesh.setMatrixAt(index, matrix);
      // instanced rendering carries rgb only; alpha-dimmed fibers fade
      // toward the background instead (off-palette by design)
      const [r, g, b, a] = doc.color;
      color.setRGB(
        r * a + (1 - a),
        g * a + (1 - a),
        b * a + (1 - a),
      );
      mesh.setColorAt(index, color);
      indexOf.set(id, index);
    });
    mesh.instanceMatrix.needsUpdate = true;
    if (mesh.instanceColor) mesh.instanceColor.needsUpdate = true;
    this.batches.set(rootId, { mesh, indexOf });
    group.add(mesh);
  }

  private buildMesh(doc: SceneNodeDoc): THREE.Object3D | null {
    let object: THREE.Object3D | null = null;
    switch (doc.kind) {
      case "box":
      case "cube":
      case "handle": {
        const mesh = new THREE.Mesh(UNIT_BOX, material(doc.color));
        if (doc.kind === "handle") {
          // grab cube size rides on width; the node transform moves the chart
          const size = doc.width ?? 0.05;
          mesh.scale.set(size, size, size);
        }
        object = mesh;
        break;
      }
      case "quad": {
        if (!doc.points || doc.points.length !== 4) return null;
        const geometry = new THREE.BufferGeometry();
        const positions = new Float32Array(doc.points.flat());
        geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
        geometry.setIndex([0, 1, 2, 0, 2, 3]);
        geometry.computeVertexNormals();
        object = new THREE.Mesh(geometry, material(doc.color));
        break;
      }
      case "line": {
        if (!doc.points || doc.points.length < 2) return null;
        const placement = cylinderBetween(
          doc.points[0]!,
          doc.points[1]!,
          (doc.width ?? 0.004) / 2,
        );
        const mesh = new THREE.Mesh(UNIT_CYLINDER, material(doc.color));
        mesh.position.copy(placement.position);
        mesh.quaternion.copy(placement.quaternion);
        mesh.scale.copy(placement.scale);
        object = mesh;
        break;
      }
      case "cylinder": {
        if (!doc.points || doc.points.length < 2) return null;
        const placement = cylinderBetween(
          doc.points[0]!,
          doc.points[1]!,
          doc.radius ?? 1,
        );
        const mesh = new THREE.Mesh(UNIT_CYLINDER, material(doc.color));
        mesh.position.copy(placement.position);
        mesh.quaternion.copy(placement.quaternion);
        mesh.scale.copy(placement.scale);
        object = mesh;
        break;
      }
      case "label":
        object = labelSprite(doc);
        break;
      default: {
        if (!this.warnedKinds.has(doc.kind)) {
          this.warnedKinds.add(doc.kind);
          console.warn(`unknown node kind ${doc.kind}; drawing placeholder`);
        }
        object = new THREE.Mesh(
          PLACEHOLDER,
          new THREE.MeshBasicMaterial({ color: 0xff00ff, wireframe: true }),
        );
      }
    }
    return object;
  }

  private recolor(id: string): void {
    const node = this.store.get(id);
    if (!node) return;
    const rootId = this.store.rootOf(id);
    const batch = this.batches.get(rootId);
    const index = batch?.indexOf.get(id);
    if (batch && index !== undefined) {
      const [r, g, b, a] = node.doc.color;
      const color = new THREE.Color(
        r * a + (1 - a),
        g * a + (1 - a),
        b * a + (1 - a),
      );
      batch.mesh.setColorAt(index, color);
      if (batch.mesh.instanceColor) batch.mesh.instanceColor.needsUpdate = true;
      return;
    }
    const group = this.objects.get(id);
    if (!group) return;
    // the mesh sits directly inside the node's group
    for (const child of group.children) {
      if (!child.userData.nodeId) setMeshColor(child, node.doc.color);
    }
  }

  private disposeRecursive(object: THREE.Object3D): void {
    for (const child of [...object.children]) this.disposeRecursive(child);
    const mesh = object as THREE.Mesh;
    if (mesh.geometry && mesh.geometry !== UNIT_BOX
        && mesh.geometry !== UNIT_CYLINDER && mesh.geometry !== PLACEHOLDER) {
      mesh.geometry.dispose();
    }
    const mat = mesh.material as THREE.Material | undefined;
    if (mat) mat.dispose();
  }
}
