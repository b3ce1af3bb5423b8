// Linked-view contracts: one aggregate request per lasso, a single brush
// window shared by every consumer, and category selection synchronized
// across views. Runs against a mock backend only.

import { beforeEach, describe, expect, it, vi } from "vitest";
import { Store } from "../src/state";
import { AggregationView } from "../src/views/aggregation";
import { DetailView } from "../src/views/detail";
import { MatrixView } from "../src/views/matrix";
import { ScatterView } from "../src/views/scatter";
import { TimelineView } from "../src/views/timeline";
import { MockApi } from "./mock";

function panel(): HTMLElement {
  const el = document.createElement("div");
  document.body.appendChild(el);
  return el;
}

async function flush(): Promise<void> {
  for (let i = 0; i < 6; i++) await new Promise((resolve) => setTimeout(resolve, 0));
}

describe("linked views", () => {
  let api: MockApi;
  let store: Store;

  beforeEach(() => {
    document.body.innerHTML = "";
    api = new MockApi();
    store = new Store(api);
  });

  it("lasso of k points triggers exactly one aggregate request with those k ids", async () => {
    const scatter = new ScatterView(panel(), store);
    await store.init();

    // polygon around the left column of the 2x2 embedding grid: s1 and s2
    const pts = scatter.screenPoints();
    expect(pts).toHaveLength(4);
    const xs = pts.map((p) => p.x).sort((a, b) => a - b);
    const midX = (xs[1] + xs[2]) / 2;
    const polygon = [
      { x: -10, y: -10 },
      { x: midX, y: -10 },
      { x: midX, y: 1000 },
      { x: -10, y: 1000 },
    ];
    const ids = scatter.applyLasso(polygon);
    expect(ids.sort()).toEqual(["s1", "s2"]);
    await flush();

    expect(api.calls.aggregate).toHaveLength(1);
    expect(api.calls.aggregate[0].ids.sort()).toEqual(["s1", "s2"]);
  });

  it("empty lasso leaves the selection unchanged", async () => {
    const scatter = new ScatterView(panel(), store);
    await store.init();
    await store.setSelection(["s3"]);
    const before = api.calls.aggregate.length;
    const ids = scatter.applyLasso([
      { x: -5, y: -5 },
      { x: -4, y: -5 },
      { x: -4, y: -4 },
    ]);
    await flush();
    expect(ids).toEqual([]);
    expect(store.state.selected).toEqual(["s3"]);
    expect(api.calls.aggregate).toHaveLength(before);
  });

  it("timeline brush updates matrix fading and detail slices with the identical window", async () => {
    new TimelineView(panel(), store);
    const matrixRoot = panel();
    new MatrixView(matrixRoot, store);
    new DetailView(panel(), store);
    await store.init();
    await store.setSelection(["s1", "s2"]);
    await flush();

    await store.setBrush(35, 65);
    await flush();

    // every brush consumer received exactly [35, 65]
    expect(api.calls.brush.length).toBe(2);
    for (const call of api.calls.brush) {
      expect(call.t0).toBe(35);
      expect(call.t1).toBe(65);
    }
    const seriesCall = api.calls.series.at(-1)!;
    expect(seriesCall.t0).toBe(35);
    expect(seriesCall.t1).toBe(65);

    // matrix fading: window [35,65] touches only procedure "b" (40-60)
    const cells = matrixRoot.querySelectorAll<HTMLElement>("tr[data-id='s1'] td.pie-cell");
    const opacity = new Map(
      [...cells].map((td) => [td.dataset.label, td.style.opacity]),
    );
    expect(opacity.get("b")).toBe("1");
    expect(opacity.get("a")).toBe("0.25");
    expect(opacity.get("c")).toBe("0.25");
  });

  it("brushing the detail plot propagates the same window back through the store", async () => {
    new DetailView(panel(), store);
    await store.init();
    await store.setSelection(["s1"]);
    await flush();
    await store.setBrush(10, 30);
    await flush();
    expect(store.state.brush).toEqual({ t0: 10, t1: 30 });
    const windows = api.calls.brush.map((c) => [c.t0, c.t1]);
    expect(windows).toEqual([[10, 30]]);
  });

  it("category click updates the matrix dropdown and fades other categories", async () => {
    const aggRoot = panel();
    const matrixRoot = panel();
    new AggregationView(aggRoot, store);
    new MatrixView(matrixRoot, store);
    await store.init();
    await store.setSelection(["s1"]);
    await flush();

    const label = [...aggRoot.querySelectorAll<HTMLElement>(".category-label")].find(
      (el) => el.textContent === "memory",
    )!;
    label.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await flush();

    expect(store.state.category).toBe("memory");
    const dropdown = matrixRoot.querySelector<HTMLSelectElement>("select.category-select")!;
    expect(dropdown.value).toBe("memory");

    const rows = aggRoot.querySelectorAll<HTMLElement>(".category-row");
    for (const row of rows) {
      const expected = row.dataset.category === "memory" ? "1" : "0.35";
      expect(row.style.opacity).toBe(expected);
    }
    // matrix endpoints refetched under the new category
    expect(api.calls.matrix.at(-1)!.category).toBe("memory");
    expect(api.calls.timeline.at(-1)!.category).toBe("memory");
  });

  it("stream toggle refetches the embedding with the same filter", async () => {
    new ScatterView(panel(), store);
    await store.init();
    expect(api.calls.embedding).toEqual([["imu"]]);
    await store.setStream("fnirs");
    expect(api.calls.embedding).toEqual([["imu"], ["fnirs"]]);
  });

  it("superseded selections do not clobber newer aggregates", async () => {
    // delay the first aggregate response beyond the second
    const slowFirst = vi.spyOn(api, "aggregate");
    let call = 0;
    slowFirst.mockImplementation(async (ids: string[], groupBy, signal?: AbortSignal) => {
      call += 1;
      const myCall = call;
      if (myCall === 1) await new Promise((resolve) => setTimeout(resolve, 30));
      if (signal?.aborted) throw Object.assign(new Error("aborted"), { name: "AbortError" });
      return [
        {
          key: `call-${myCall}`,
          group_by: groupBy,
          session_ids: ids,
          avg_duration_s: 1,
          proportions: {},
          error_contribution: { perception: {}, attention: {}, memory: {} } as never,
        },
      ];
    });
    await store.init();
    const first = store.setSelection(["s1"]);
    const second = store.setSelection(["s1", "s2"]);
    await Promise.all([first, second]);
    await new Promise((resolve) => setTimeout(resolve, 50));
    expect(store.data.aggregates[0].key).toBe("call-2");
  });
});
