import * as d3 from "d3";
import { STATE_COLORS } from "../color";
import type { Store } from "../state";
import { CATEGORIES, STATES, type Category, type MatrixRow } from "../types";

const CELL = 56;
const MAX_R = 24;

/** Pie radius encodes prevalence area-true: area, not radius, is linear in
 * the prevalence fraction. */
export function pieRadius(prevalence: number, maxRadius: number = MAX_R): number {
  return maxRadius * Math.sqrt(Math.max(0, Math.min(1, prevalence)));
}

/**
 * Summary matrix: rows are sessions, columns procedure labels. Each cell is
 * a pie whose radius encodes prevalence and whose black slice encodes the
 * error fraction; hovering reveals the per-state partial correlations.
 * While a brush is active, procedures outside the brushed window fade.
 */
export class MatrixView {
  private root: d3.Selection<HTMLDivElement, unknown, null, undefined>;
  private showErrorColumn = true;
  private dropdown!: HTMLSelectElement;

  constructor(container: HTMLElement, private store: Store) {
    const header = document.createElement("div");
    header.className = "view-header";
    header.innerHTML = `<span class="view-title">Summary matrix</span>`;
    const controls = document.createElement("span");
    controls.className = "controls";
    this.dropdown = document.createElement("select");
    this.dropdown.className = "category-select";
    for (const category of CATEGORIES) {
      const opt = document.createElement("option");
      opt.value = category;
      opt.textContent = category;
      this.dropdown.appendChild(opt);
    }
    this.dropdown.onchange = () => void this.store.setCategory(this.dropdown.value as Category);
    controls.appendChild(this.dropdown);
    const toggle = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = this.showErrorColumn;
    box.className = "toggle-error-col";
    box.onchange = () => {
      this.showErrorColumn = box.checked;
      this.render();
    };
    toggle.append(box, "error contribution");
    controls.appendChild(toggle);
    header.appendChild(controls);
    container.appendChild(header);
    this.root = d3.select(container).append("div").attr("class", "matrix");
    store.subscribe(() => this.render());
  }

  private labels(rows: MatrixRow[]): string[] {
    const labels = new Set<string>();
    for (const row of rows) for (const label of Object.keys(row.procedures)) labels.add(label);
    return [...labels].sort();
  }

  /** Labels touched by the active brush for one session (null = no brush). */
  private touched(sid: string): Set<string> | null {
    if (!this.store.state.brush) return null;
    const reply = this.store.data.brushReplies.get(sid);
    return reply ? new Set(reply.labels_touched) : null;
  }

  render(): void {
    this.dropdown.value = this.store.state.category;
    const ids = this.store.state.selected;
    const rows = ids
      .map((sid) => this.store.data.matrices.get(sid))
      .filter((r): r is MatrixRow => r !== undefined);
    this.root.selectAll("*").remove();
    if (!rows.length) {
      this.root.append("p").attr("class", "placeholder").text("No selection.");
      return;
    }
    const labels = this.labels(rows);
    const table = this.root.append("table");
    const head = table.append("thead").append("tr");
    head.append("th").text("session");
    for (const label of labels) head.append("th").attr("class", "proc-col").text(label);
    head.append("th").attr("class", "dist-col").text("states");
    if (this.showErrorColumn) head.append("th").attr("class", "err-col").text("error corr");

    const body = table.append("tbody");
    for (const row of rows) {
      const tr = body.append("tr").attr("data-id", row.session_id);
      tr.append("td").attr("class", "session-label").text(row.session_id);
      const touched = this.touched(row.session_id);
      for (const label of labels) {
        const cell = row.procedures[label];
        const td = tr.append("td").attr("class", "pie-cell").attr("data-label", label);
        const faded = touched !== null && !touched.has(label);
        td.style("opacity", faded ? "0.25" : "1");
        if (cell && cell.prevalence > 0) {
          td.node()!.appendChild(this.pie(cell.prevalence, cell.error_fraction));
          td.attr("title", this.tooltip(label, row));
        }
      }
      tr.append("td").attr("class", "dist-cell").node()!.appendChild(this.stateBar(row));
      if (this.showErrorColumn) {
        tr.append("td").attr("class", "err-cell").node()!.appendChild(this.errorStats(row));
      }
    }
  }

  private pie(prevalence: number, errorFraction: number): SVGSVGElement {
    const svg = d3
      .create("svg")
      .attr("class", "pie")
      .attr("viewBox", `0 0 ${CELL} ${CELL}`)
      .attr("width", CELL)
      .attr("height", CELL);
    const r = pieRadius(prevalence);
    const g = svg.append("g").attr("transform", `translate(${CELL / 2},${CELL / 2})`);
    const arcs = d3.pie<number>().sort(null)([errorFraction, 1 - errorFraction]);
    const arc = d3.arc<d3.PieArcDatum<number>>().innerRadius(0).outerRadius(r);
    g.selectAll("path")
      .data(arcs)
      .join("path")
      .attr("d", (d) => arc(d)!)
      .attr("class", (_d, i) => (i === 0 ? "error-slice" : "ok-slice"))
      .attr("fill", (_d, i) => (i === 0 ? "#000" : "#bdbdbd"));
    svg.attr("data-radius", r.toFixed(3));
    return svg.node()!;
  }

  private tooltip(label: string, row: MatrixRow): string {
    const cell = row.procedures[label];
    const lines = [
      `procedure ${label}`,
      `prevalence ${(cell.prevalence * 100).toFixed(1)}%`,
      `errors ${(cell.error_fraction * 100).toFixed(1)}%`,
    ];
    if (cell.partial_r) {
      for (const state of STATES) {
        const value = cell.partial_r[state];
        lines.push(`partial r (${row.category}/${state}): ${value === null ? "n/a" : value.toFixed(3)}`);
      }
    }
    return lines.join("\n");
  }

  private stateBar(row: MatrixRow): SVGSVGElement {
    const svg = d3.create("svg").attr("class", "dist-bar").attr("viewBox", "0 0 120 12");
    if (row.proportions) {
      let x = 0;
      for (const state of STATES) {
        const w = 120 * (row.proportions[state] ?? 0);
        svg
          .append("rect")
          .attr("data-state", state)
          .attr("x", x)
          .attr("width", Math.max(0, w))
          .attr("height", 12)
          .attr("fill", STATE_COLORS[state]);
        x += w;
      }
    }
    return svg.node()!;
  }

  private errorStats(row: MatrixRow): HTMLSpanElement {
    const span = document.createElement("span");
    span.className = "err-stats";
    span.textContent = STATES.map((state) => {
      const stat = row.error_contribution[state];
      return `${state[0]}:${stat?.r == null ? "–" : stat.r.toFixed(2)}`;
    }).join(" ");
    return span;
  }
}
