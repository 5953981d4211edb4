import { describe, expect, it } from "vitest";
import { TransitionDetector, viewAngleDeg } from "../src/transition";
import { handshake } from "./fixtures";

const constants = handshake().constants;

describe("view angle", () => {
  it("is zero looking straight down onto the chart", () => {
    expect(viewAngleDeg([0, 2, 0], [0, 0, 0])).toBeCloseTo(0, 5);
  });

  it("folds bottom views onto top views", () => {
    expect(viewAngleDeg([0, -2, 0], [0, 0, 0])).toBeCloseTo(0, 5);
  });

  it("is ninety from the side", () => {
    expect(viewAngleDeg([2, 0, 0], [0, 0, 0])).toBeCloseTo(90, 5);
  });

  it("respects the chart's own rotation", () => {
    // chart pitched 90 deg about x: its +y now points along -z...
    const halfSqrt2 = Math.SQRT1_2;
    const angle = viewAngleDeg(
      [0, 0, -2],
      [0, 0, 0],
      [halfSqrt2, 0, 0, halfSqrt2],
    );
    expect(angle).toBeCloseTo(0, 4);
  });
});

describe("transition contract (hysteresis 30/35)", () => {
  it("scripted camera sweep toggles exactly twice with no flapping", () => {
    const detector = new TransitionDetector(constants);
    // orbit from the side (90 deg) down over the top (5 deg) and back,
    // lingering inside the 30..35 hysteresis band on both passes
    const path = [
      90, 70, 50, 40, 36, 34, 32, 31, 30.5, 29.9, // crosses 30: -> TET
      28, 25, 15, 5, 12, 31, 33, 34.5, 34.9,      // inside band: stable
      35.2, 40, 60, 90,                           // crosses 35: -> MDD
    ];
    const intents = path
      .map((angle) => detector.step(angle))
      .filter((intent) => intent !== null);
    expect(intents).toEqual(["TET", "MDD"]);
  });

  it("oscillation around 32 deg never flaps", () => {
    const detector = new TransitionDetector(constants);
    detector.step(20); // -> TET
    const intents: string[] = [];
    for (let i = 0; i < 100; i++) {
      const wobble = 32 + Math.sin(i) * 2; // 30..34, inside the band
      const intent = detector.step(wobble);
      if (intent) intents.push(intent);
    }
    expect(intents).toEqual([]);
  });

  it("emits nothing at oblique angles", () => {
    const detector = new TransitionDetector(constants);
    expect(detector.step(45)).toBeNull();
    expect(detector.step(89)).toBeNull();
  });

  it("server sync prevents repeated sends", () => {
    const detector = new TransitionDetector(constants);
    expect(detector.step(10)).toBe("TET");
    detector.sync("TET"); // patch confirmed the switch
    expect(detector.step(9)).toBeNull();
    expect(detector.step(36)).toBe("MDD");
    detector.sync("MDD");
    expect(detector.step(37)).toBeNull();
  });
});
