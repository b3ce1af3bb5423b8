import * as d3 from "d3";
import { ERROR_COLOR, PHASE_COLORS, procedureColor, STATE_COLORS } from "../color";
import type { Store } from "../state";
import type { Timeline } from "../types";

const TRACK_H = 14;
const ROW_H = TRACK_H * 4 + 26;
const LEFT = 120;
const WIDTH = 860;

/**
 * Stacked per-session tracks (procedures / errors / workload / phases) on a
 * shared time axis starting at zero. One brush spans the axis; its window
 * is propagated verbatim to every linked view.
 */
export class TimelineView {
  private svg: d3.Selection<SVGSVGElement, unknown, null, undefined>;

  constructor(container: HTMLElement, private store: Store) {
    const header = document.createElement("div");
    header.className = "view-header";
    header.innerHTML = `<span class="view-title">Event timeline</span><span class="hint">drag to brush</span>`;
    container.appendChild(header);
    this.svg = d3.select(container).append("svg").attr("class", "timeline");
    store.subscribe(() => this.render());
  }

  private vocabulary(): string[] {
    const labels = new Set<string>();
    for (const t of this.store.data.timelines.values()) {
      for (const p of t.procedures) labels.add(p.label);
    }
    return [...labels].sort();
  }

  render(): void {
    const ids = this.store.state.selected;
    const timelines = ids
      .map((sid) => this.store.data.timelines.get(sid))
      .filter((t): t is Timeline => t !== undefined);
    const height = Math.max(1, timelines.length) * ROW_H + 30;
    this.svg.attr("viewBox", `0 0 ${WIDTH} ${height}`);
    this.svg.selectAll("*").remove();
    if (!timelines.length) return;

    const maxDuration = d3.max(timelines, (t) => t.duration_s)!;
    const x = d3.scaleLinear().domain([0, maxDuration]).range([LEFT, WIDTH - 12]);
    const vocab = this.vocabulary();

    timelines.forEach((timeline, row) => {
      const y0 = row * ROW_H + 8;
      const g = this.svg.append("g").attr("class", "session-row").attr("data-id", timeline.session_id);
      const meta = this.store.session(timeline.session_id);
      g.append("text")
        .attr("x", 4)
        .attr("y", y0 + 30)
        .attr("class", "session-label")
        .text(`${meta?.subject ?? "?"} / ${meta?.trial ?? "?"}`);

      const track = (idx: number) => y0 + idx * (TRACK_H + 2);
      for (const p of timeline.procedures) {
        g.append("rect")
          .attr("class", "proc-seg")
          .attr("x", x(p.start_s))
          .attr("width", Math.max(1, x(p.end_s) - x(p.start_s)))
          .attr("y", track(0))
          .attr("height", TRACK_H)
          .attr("fill", procedureColor(p.label, vocab))
          .append("title")
          .text(p.label);
      }
      for (const e of timeline.errors) {
        g.append("rect")
          .attr("class", "error-seg")
          .attr("x", x(e.start_s))
          .attr("width", Math.max(1, x(e.end_s) - x(e.start_s)))
          .attr("y", track(1))
          .attr("height", TRACK_H)
          .attr("fill", ERROR_COLOR);
      }
      // workload runs; sampling gaps stay as holes
      for (const run of timeline.workload_runs) {
        g.append("rect")
          .attr("class", "state-seg")
          .attr("data-state", run.state)
          .attr("x", x(run.start_s))
          .attr("width", Math.max(0.5, x(run.end_s) - x(run.start_s)))
          .attr("y", track(2))
          .attr("height", TRACK_H)
          .attr("fill", STATE_COLORS[run.state]);
      }
      if (timeline.confidence.length > 1) {
        const line = d3
          .line<{ t_s: number; value: number }>()
          .x((d) => x(d.t_s))
          .y((d) => track(2) + TRACK_H - d.value * TRACK_H);
        g.append("path")
          .attr("class", "confidence")
          .attr("d", line(timeline.confidence))
          .attr("fill", "none")
          .attr("stroke", "#333")
          .attr("stroke-width", 0.7);
      }
      for (const phase of timeline.phases) {
        g.append("rect")
          .attr("class", "phase-seg")
          .attr("x", x(phase.start_s))
          .attr("width", Math.max(1, x(phase.end_s) - x(phase.start_s)))
          .attr("y", track(3))
          .attr("height", TRACK_H)
          .attr("fill", PHASE_COLORS[phase.label] ?? "#ddd");
        g.append("text")
          .attr("class", "phase-label")
          .attr("x", (x(phase.start_s) + x(phase.end_s)) / 2)
          .attr("y", track(3) + TRACK_H - 3)
          .attr("text-anchor", "middle")
          .text(phase.label);
      }
    });

    this.svg
      .append("g")
      .attr("class", "time-axis")
      .attr("transform", `translate(0,${timelines.length * ROW_H + 8})`)
      .call(d3.axisBottom(x).ticks(10));

    const brush = d3
      .brushX()
      .extent([
        [LEFT, 0],
        [WIDTH - 12, timelines.length * ROW_H + 8],
      ])
      .on("end", (event: d3.D3BrushEvent<unknown>) => {
        if (!event.selection || !event.sourceEvent) return;
        const [a, b] = event.selection as [number, number];
        void this.store.setBrush(x.invert(a), x.invert(b));
      });
    const gb = this.svg.append("g").attr("class", "brush").call(brush);
    const window = this.store.state.brush;
    if (window) {
      gb.call(brush.move, [x(window.t0), x(window.t1)] as [number, number]);
    }
  }
}
