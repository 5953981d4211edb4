/**
 * Client-side retained scene: a flat id-indexed mirror of the server's
 * scene, mutated only by snapshots and patches.
 *
 * Patches apply strictly in sceneVersion order: version v+1 applies to a
 * store at version v, later versions queue, and stale versions drop. Out
 * of order delivery therefore never corrupts the scene.
 */
import type {
  PatchDoc,
  RGBA,
  SceneDoc,
  SceneNodeDoc,
  TransformDoc,
} from "./protocol";

export interface StoredNode {
  id: string;
  parent: string | null;
  doc: SceneNodeDoc; // children stripped; structure lives in the index
}

export interface AppliedChange {
  version: number;
  added: string[];
  removed: string[];
  recolored: string[];
  retransformed: string[];
}

export class SceneStore {
  version = -1;
  private nodes = new Map<string, StoredNode>();
  private childIndex = new Map<string | null, Set<string>>();
  private pending = new Map<number, PatchDoc>();
  private listeners: ((change: AppliedChange) => void)[] = [];

  onChange(listener: (change: AppliedChange) => void): void {
    this.listeners.push(listener);
  }

  get(id: string): StoredNode | undefined {
    return this.nodes.get(id);
  }

  has(id: string): boolean {
    return this.nodes.has(id);
  }

  ids(): string[] {
    return [...this.nodes.keys()];
  }

  childrenOf(parent: string | null): string[] {
    return [...(this.childIndex.get(parent) ?? [])].sort();
  }

  /** Top-level node id owning this node (charts and grid cells). */
  rootOf(id: string): string {
    let current = this.nodes.get(id);
    while (current && current.parent !== null) {
      current = this.nodes.get(current.parent);
    }
    return current?.id ?? id;
  }

  loadSnapshot(scene: SceneDoc, version: number): void {
    this.nodes.clear();
    this.childIndex.clear();
    const insert = (doc: SceneNodeDoc, parent: string | null) => {
      const { children, ...rest } = doc;
      this.nodes.set(doc.id, { id: doc.id, parent, doc: rest });
      let siblings = this.childIndex.get(parent);
      if (!siblings) {
        siblings = new Set();
        this.childIndex.set(parent, siblings);
      }
      siblings.add(doc.id);
      for (const child of children ?? []) insert(child, doc.id);
    };
    for (const node of scene.nodes) insert(node, null);
    this.version = version;
    // stale queue entries can never apply after a newer snapshot
    for (const v of [...this.pending.keys()]) {
      if (v <= version) this.pending.delete(v);
    }
    this.emit({
      version,
      added: this.ids(),
      removed: [],
      recolored: [],
      retransformed: [],
    });
    this.drainQueue();
  }

  /**
   * Queue a patch; applies immediately when it is the next version,
   * then drains any directly following queued patches.
   */
  submitPatch(patch: PatchDoc, version: number): void {
    if (version <= this.version) return; // already applied
    this.pending.set(version, patch);
    this.drainQueue();
  }

  get queuedVersions(): number[] {
    return [...this.pending.keys()].sort((a, b) => a - b);
  }

  private drainQueue(): void {
    for (;;) {
      const next = this.pending.get(this.version + 1);
      if (!next) return;
      this.pending.delete(this.version + 1);
      this.applyPatch(next, this.version + 1);
    }
  }

  private applyPatch(patch: PatchDoc, version: number): void {
    const change: AppliedChange = {
      version,
      added: [],
      removed: [],
      recolored: [],
      retransformed: [],
    };
    for (const id of patch.removed) {
      const node = this.nodes.get(id);
      if (!node) throw new Error(`patch removes unknown node ${id}`);
      this.childIndex.get(node.parent)?.delete(id);
      this.childIndex.delete(id);
      this.nodes.delete(id);
      change.removed.push(id);
    }
    for (const entry of patch.added) {
      const { children, ...rest } = entry.node;
      this.nodes.set(entry.node.id, {
        id: entry.node.id,
        parent: entry.parent,
        doc: rest,
      });
      let siblings = this.childIndex.get(entry.parent);
      if (!siblings) {
        siblings = new Set();
        this.childIndex.set(entry.parent, siblings);
      }
      siblings.add(entry.node.id);
      change.added.push(entry.node.id);
    }
    for (const [id, color] of Object.entries(patch.recolored)) {
      const node = this.nodes.get(id);
      if (!node) throw new Error(`patch recolors unknown node ${id}`);
      node.doc = { ...node.doc, color: color as RGBA };
      change.recolored.push(id);
    }
    for (const [id, transform] of Object.entries(patch.retransformed)) {
      const node = this.nodes.get(id);
      if (!node) throw new Error(`patch retransforms unknown node ${id}`);
      node.doc = { ...node.doc, transform: transform as TransformDoc };
      change.retransformed.push(id);
    }
    this.version = version;
    this.emit(change);
  }

  private emit(change: AppliedChange): void {
    for (const listener of this.listeners) listener(change);
  }
}
