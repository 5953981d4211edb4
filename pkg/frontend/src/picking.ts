/**
 * Routes pick hits to wire requests or local chart moves.
 *
 * Clicks on pickable chart geometry become the matching request; handle
 * drags stay local (the chart root's transform) and are debounced so
 * orbiting a chart does not spam the session. Dragging an attribute
 * column out of the glyph chart extracts its stacked-bins chart, and
 * pushing a stacked-bins chart back onto the glyph chart dismisses it.
 */
import type { PickInfo, Vec3, WireRequest } from "./protocol";

export interface PickTarget {
  nodeId: string;
  pick: PickInfo;
}

export type PickAction =
  | { kind: "request"; request: WireRequest }
  | { kind: "moveChart"; chartId: string }
  | { kind: "none" };

export function routeClick(target: PickTarget | null): PickAction {
  if (!target) return { kind: "none" };
  const { semantic, payload } = target.pick;
  switch (semantic) {
    case "chronoQuad":
      return {
        kind: "request",
        request: {
          type: "click_chrono_quad",
          chartId: payload.chartId as string,
          binIndex: payload.binIndex as number,
          timePair: payload.timePair as [number, number],
        },
      };
    case "skCell":
      return {
        kind: "request",
        request: { type: "sk_select", cell: payload.cell as [number, number] },
      };
    case "chartHandle":
      return { kind: "moveChart", chartId: payload.chartId as string };
    default:
      return { kind: "none" };
  }
}

export interface DragEnd {
  target: PickTarget;
  /** Displacement of the drag in chart-local units. */
  movedBy: Vec3;
  /** True when the pointer ended outside the source chart's bounds. */
  leftChartBounds: boolean;
  /** True when a dragged chart ended overlapping the glyph chart. */
  droppedOnMddChart?: boolean;
}

export function routeDragEnd(drag: DragEnd): PickAction {
  const { semantic, payload } = drag.target.pick;
  if (semantic === "attributeColumn" && drag.leftChartBounds) {
    return {
      kind: "request",
      request: {
        type: "extract_chrono",
        attribute: payload.attribute as string,
      },
    };
  }
  if (semantic === "chartHandle") {
    if (drag.droppedOnMddChart) {
      const chartId = payload.chartId as string;
      if (chartId.startsWith("chrono")) {
        return {
          kind: "request",
          request: { type: "dismiss_chrono", chartId },
        };
      }
    }
    return { kind: "moveChart", chartId: payload.chartId as string };
  }
  return { kind: "none" };
}

/**
 * Sends requests tagged with the scene version they were computed from;
 * when the server races ahead, the request retries once after the next
 * patch lands instead of being dropped.
 */
export class RequestDispatcher {
  private stale: WireRequest[] = [];

  constructor(
    private readonly send: (request: WireRequest) => void,
    private readonly currentVersion: () => number,
  ) {}

  dispatch(request: WireRequest, basedOnVersion: number): void {
    if (basedOnVersion !== this.currentVersion()) {
      this.stale.push(request);
      return;
    }
    this.send(request);
  }

  /** Call after every applied patch. */
  onPatchApplied(): void {
    const queue = this.stale;
    this.stale = [];
    for (const request of queue) this.send(request);
  }

  get pendingRetries(): number {
    return this.stale.length;
  }
}

/** Trailing-edge debounce for local transform chatter. */
export function debounce<T extends unknown[]>(
  fn: (...args: T) => void,
  waitMs: number,
  timers: { set: typeof setTimeout; clear: typeof clearTimeout } = {
    set: setTimeout,
    clear: clearTimeout,
  },
): (...args: T) => void {
  let handle: ReturnType<typeof setTimeout> | undefined;
  return (...args: T) => {
    if (handle !== undefined) timers.clear(handle);
    handle = timers.set(() => fn(...args), waitMs);
  };
}
