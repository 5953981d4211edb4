/**
 * View-angle chart transition with the handshake's hysteresis contract.
 *
 * Looking at the glyph chart from the top (or bottom) switches it to the
 * temporal tracker; looking back from the side restores the glyphs. The
 * enter threshold is tighter than the exit threshold, so a camera
 * hovering near the boundary never flaps, and an intent is emitted only
 * when the desired representation actually changes.
 */
import type { HandshakeConstants, Quat, Vec3 } from "./protocol";

export type Representation = "MDD" | "TET";

export function rotateByQuat(v: Vec3, q: Quat): Vec3 {
  const [x, y, z] = v;
  const [qx, qy, qz, qw] = q;
  // t = 2 q x v; v' = v + qw t + q x t
  const tx = 2 * (qy * z - qz * y);
  const ty = 2 * (qz * x - qx * z);
  const tz = 2 * (qx * y - qy * x);
  return [
    x + qw * tx + qy * tz - qz * ty,
    y + qw * ty + qz * tx - qx * tz,
    z + qw * tz + qx * ty - qy * tx,
  ];
}

/** Angle in degrees between the camera->chart direction and the chart's
 *  nearest vertical axis (+y or -y), i.e. 0 when looking straight down. */
export function viewAngleDeg(
  cameraPosition: Vec3,
  chartPosition: Vec3,
  chartRotation: Quat = [0, 0, 0, 1],
): number {
  const view: Vec3 = [
    chartPosition[0] - cameraPosition[0],
    chartPosition[1] - cameraPosition[1],
    chartPosition[2] - cameraPosition[2],
  ];
  const length = Math.hypot(...view);
  if (length === 0) return 90;
  const up = rotateByQuat([0, 1, 0], chartRotation);
  const dot =
    (view[0] * up[0] + view[1] * up[1] + view[2] * up[2]) / length;
  const clamped = Math.min(1, Math.max(-1, dot));
  // fold bottom views onto top views: both trigger the tracker
  return (Math.acos(Math.abs(clamped)) * 180) / Math.PI;
}

export class TransitionDetector {
  private current: Representation = "MDD";

  constructor(private readonly constants: HandshakeConstants) {}

  /** The representation the server currently shows (mirrors patches). */
  sync(representation: Representation): void {
    this.current = representation;
  }

  get representation(): Representation {
    return this.current;
  }

  /**
   * Feed one camera sample; returns the representation to request, or
   * null while the state is stable. Never emits twice for one crossing.
   */
  step(angleDeg: number): Representation | null {
    if (this.current === "MDD" && angleDeg < this.constants.tetEnterDeg) {
      this.current = "TET";
      return "TET";
    }
    if (this.current === "TET" && angleDeg > this.constants.tetExitDeg) {
      this.current = "MDD";
      return "MDD";
    }
    return null;
  }
}
