/** Types for `marv-wire/1` frames and `marv-scene/1` documents. */

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];
export type RGBA = [number, number, number, number];

export type NodeKind =
  | "box"
  | "cube"
  | "quad"
  | "line"
  | "label"
  | "handle"
  | "cylinder";

export type PickSemantic =
  | "attributeColumn"
  | "skCell"
  | "chronoQuad"
  | "chronoBin"
  | "tetCube"
  | "gridItem"
  | "chartHandle";

export interface PickInfo {
  semantic: PickSemantic;
  payload: Record<string, unknown>;
}

export interface TransformDoc {
  position?: Vec3;
  rotation?: Quat;
  scale?: Vec3;
}

export interface SceneNodeDoc {
  id: string;
  kind: NodeKind;
  transform?: TransformDoc;
  color: RGBA;
  pick?: PickInfo;
  text?: string;
  unit?: string;
  points?: Vec3[];
  radius?: number;
  width?: number;
  children?: SceneNodeDoc[];
}

export interface SceneDoc {
  schema: "marv-scene/1";
  nodes: SceneNodeDoc[];
}

export interface PatchDoc {
  schema: "marv-patch/1";
  added: { parent: string | null; node: SceneNodeDoc }[];
  removed: string[];
  recolored: Record<string, RGBA>;
  retransformed: Record<string, TransformDoc>;
}

export interface HandshakeConstants {
  tetEnterDeg: number;
  tetExitDeg: number;
  mddChartId: string;
}

export interface Palette {
  categorical: RGBA[][];
  detailed: RGBA[][];
  degenerateNeutral: RGBA;
  outOfFocus: RGBA;
  chronoIncrease: RGBA;
  chronoDecrease: RGBA;
  chronoUnchanged: RGBA;
  chronoBin: RGBA;
  tetRampLight: RGBA;
  tetRampDark: RGBA;
  tetCube: RGBA;
  fiberBase: RGBA;
  highlightEarlier: RGBA;
  highlightLater: RGBA;
  handleGray: RGBA;
  labelColor: RGBA;
  selectionBox: RGBA;
}

export interface HandshakeFrame {
  type: "handshake";
  protocol: "marv-wire/1";
  sceneVersion: number;
  constants: HandshakeConstants;
  palette: Palette;
}

export interface SnapshotFrame {
  type: "snapshot";
  sceneVersion: number;
  scene: SceneDoc;
}

export interface PatchFrame {
  type: "patch";
  sceneVersion: number;
  patch: PatchDoc;
  chartId?: string;
}

export interface ErrorFrame {
  type: "error";
  sceneVersion: number;
  code: string;
  message: string;
}

export type ServerFrame = HandshakeFrame | SnapshotFrame | PatchFrame | ErrorFrame;

export type WireRequest =
  | { type: "hello" }
  | { type: "open" }
  | { type: "set_representation"; chartId: string; repr: "MDD" | "TET" }
  | { type: "extract_chrono"; attribute: string }
  | { type: "dismiss_chrono"; chartId: string }
  | {
      type: "click_chrono_quad";
      chartId: string;
      binIndex: number;
      timePair: [number, number];
      dimOthers?: boolean;
    }
  | { type: "sk_select"; cell: [number, number] };
