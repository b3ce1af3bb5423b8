import * as d3 from "d3";
import { STATE_COLORS } from "../color";
import type { Store } from "../state";
import { CATEGORIES, STATES, type Category } from "../types";

/**
 * Workload aggregation: stacked state-proportion bars per category and
 * group, error contributions as dots on a shared [-1, 1] axis (jittered on
 * collision), and the average session duration. Clicking a category label
 * makes it the active category everywhere and fades the others.
 */
export class AggregationView {
  private root: d3.Selection<HTMLDivElement, unknown, null, undefined>;

  constructor(container: HTMLElement, private store: Store) {
    const header = document.createElement("div");
    header.className = "view-header";
    header.innerHTML = `<span class="view-title">Workload aggregation</span>`;
    container.appendChild(header);
    this.root = d3.select(container).append("div").attr("class", "aggregation");
    store.subscribe(() => this.render());
  }

  render(): void {
    const groups = this.store.data.aggregates;
    const active = this.store.state.category;
    this.root.selectAll("*").remove();
    if (!groups.length) {
      this.root.append("p").attr("class", "placeholder").text("Lasso sessions in the scatter plot.");
      return;
    }
    for (const group of groups) {
      const panel = this.root.append("div").attr("class", "group-panel").attr("data-key", group.key);
      panel
        .append("div")
        .attr("class", "group-title")
        .text(`${group.group_by} ${group.key} — avg ${formatDuration(group.avg_duration_s)}`);
      for (const category of CATEGORIES) {
        const row = panel
          .append("div")
          .attr("class", "category-row")
          .attr("data-category", category)
          .style("opacity", category === active ? "1" : "0.35");
        row
          .append("span")
          .attr("class", "category-label")
          .text(category)
          .on("click", () => void this.store.setCategory(category));
        const dist = group.proportions[category];
        const bar = row.append("svg").attr("class", "state-bar").attr("viewBox", "0 0 200 14");
        if (dist) {
          let x = 0;
          for (const state of STATES) {
            const w = 200 * (dist[state] ?? 0);
            bar
              .append("rect")
              .attr("data-state", state)
              .attr("x", x)
              .attr("width", Math.max(0, w))
              .attr("height", 14)
              .attr("fill", STATE_COLORS[state]);
            x += w;
          }
        } else {
          bar.append("text").attr("x", 4).attr("y", 11).attr("class", "missing").text("no data");
        }
        row.node()!.appendChild(this.errorDots(group.error_contribution[category]));
      }
    }
  }

  /** Dot plot on a shared [-1, 1] axis; overlapping dots get vertical jitter. */
  private errorDots(stats: Record<string, { r: number | null; n: number }> | undefined): SVGSVGElement {
    const svg = d3.create("svg").attr("class", "error-dots").attr("viewBox", "0 0 220 18");
    const x = d3.scaleLinear().domain([-1, 1]).range([8, 212]);
    svg.append("line").attr("x1", x(-1)).attr("x2", x(1)).attr("y1", 9).attr("y2", 9).attr("class", "axis");
    svg.append("line").attr("x1", x(0)).attr("x2", x(0)).attr("y1", 4).attr("y2", 14).attr("class", "zero");
    if (stats) {
      const placed: number[] = [];
      for (const state of STATES) {
        const r = stats[state]?.r;
        if (r === null || r === undefined) continue;
        const cx = x(r);
        const collisions = placed.filter((p) => Math.abs(p - cx) < 6).length;
        placed.push(cx);
        svg
          .append("circle")
          .attr("data-state", state)
          .attr("cx", cx)
          .attr("cy", 9 + (collisions % 2 === 0 ? collisions * 3 : -collisions * 3))
          .attr("r", 4)
          .attr("fill", STATE_COLORS[state as keyof typeof STATE_COLORS]);
      }
    }
    return svg.node()!;
  }

  activeCategory(): Category {
    return this.store.state.category;
  }
}

export function formatDuration(seconds: number): string {
  const m = Math.floor(seconds / 60);
  const s = Math.round(seconds % 60);
  return `${m}:${String(s).padStart(2, "0")} min`;
}
