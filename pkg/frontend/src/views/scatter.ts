import * as d3 from "d3";
import { pointInPolygon, type Point } from "../geometry";
import type { Store } from "../state";
import type { Stream } from "../types";

const GLYPHS = [d3.symbolCircle, d3.symbolSquare, d3.symbolTriangle, d3.symbolDiamond, d3.symbolCross, d3.symbolStar];

/**
 * Session overview: one glyph per embedded session (shape encodes the
 * grouping key), lasso selection, stream toggle, top-10 trial filter.
 */
export class ScatterView {
  private svg: d3.Selection<SVGSVGElement, unknown, null, undefined>;
  private lassoPath: Point[] = [];
  private width = 420;
  private height = 320;

  constructor(private container: HTMLElement, private store: Store) {
    const header = document.createElement("div");
    header.className = "view-header";
    header.innerHTML = `<span class="view-title">Sessions</span>`;
    const controls = document.createElement("span");
    controls.className = "controls";
    for (const stream of ["imu", "gaze", "fnirs"] as Stream[]) {
      const btn = document.createElement("button");
      btn.textContent = stream;
      btn.dataset.stream = stream;
      btn.onclick = () => void this.store.setStream(stream);
      controls.appendChild(btn);
    }
    const groupSel = document.createElement("select");
    groupSel.className = "group-by";
    groupSel.innerHTML = `<option value="subject">by subject</option><option value="trial">by trial</option>`;
    groupSel.onchange = () => void this.store.setGroupBy(groupSel.value as "subject" | "trial");
    controls.appendChild(groupSel);
    const topLabel = document.createElement("label");
    const topBox = document.createElement("input");
    topBox.type = "checkbox";
    topBox.className = "top-k";
    topBox.onchange = () => void this.store.setTopKTrials(topBox.checked ? 10 : null);
    topLabel.append(topBox, "top 10 trials");
    controls.appendChild(topLabel);
    header.appendChild(controls);
    container.appendChild(header);

    this.svg = d3
      .select(container)
      .append("svg")
      .attr("viewBox", `0 0 ${this.width} ${this.height}`)
      .attr("class", "scatter");
    this.attachLasso();
    store.subscribe(() => this.render());
  }

  /** Freehand lasso: accumulate a polygon while the pointer is down, then
   * select every glyph inside it. An empty lasso changes nothing. */
  private attachLasso(): void {
    const node = this.svg.node()!;
    let drawing = false;
    const toLocal = (event: PointerEvent): Point => {
      const [x, y] = d3.pointer(event, node);
      return { x, y };
    };
    node.addEventListener("pointerdown", (event) => {
      drawing = true;
      this.lassoPath = [toLocal(event)];
    });
    node.addEventListener("pointermove", (event) => {
      if (!drawing) return;
      this.lassoPath.push(toLocal(event));
      this.renderLasso();
    });
    node.addEventListener("pointerup", () => {
      drawing = false;
      this.applyLasso(this.lassoPath);
      this.lassoPath = [];
      this.renderLasso();
    });
  }

  /** Resolve a lasso polygon (view coordinates) into a selection. */
  applyLasso(polygon: Point[]): string[] {
    const hits = this.screenPoints().filter((p) => pointInPolygon(p, polygon));
    const ids = hits.map((p) => p.id);
    if (ids.length) void this.store.setSelection(ids);
    return ids;
  }

  private scales() {
    const pts = this.store.data.embedding?.points ?? [];
    const pad = 24;
    const x = d3
      .scaleLinear()
      .domain(d3.extent(pts, (p) => p.x) as [number, number])
      .nice()
      .range([pad, this.width - pad]);
    const y = d3
      .scaleLinear()
      .domain(d3.extent(pts, (p) => p.y) as [number, number])
      .nice()
      .range([this.height - pad, pad]);
    return { x, y };
  }

  screenPoints(): { id: string; x: number; y: number }[] {
    const embedding = this.store.data.embedding;
    if (!embedding || !embedding.points.length) return [];
    const { x, y } = this.scales();
    const visible = new Set(this.store.data.sessions.map((s) => s.id));
    return embedding.points
      .filter((p) => visible.has(p.session_id))
      .map((p) => ({ id: p.session_id, x: x(p.x), y: y(p.y) }));
  }

  private glyphFor(sid: string, keys: string[]): d3.SymbolType {
    const meta = this.store.session(sid);
    const key = this.store.state.groupBy === "subject" ? meta?.subject : meta?.trial;
    const idx = Math.max(0, keys.indexOf(key ?? ""));
    return GLYPHS[idx % GLYPHS.length];
  }

  render(): void {
    const pts = this.screenPoints();
    const groupBy = this.store.state.groupBy;
    const keys = [
      ...new Set(
        this.store.data.sessions.map((s) => (groupBy === "subject" ? s.subject : s.trial)),
      ),
    ].sort();
    const selected = new Set(this.store.state.selected);
    this.svg
      .selectAll<SVGPathElement, { id: string; x: number; y: number }>("path.glyph")
      .data(pts, (d) => d.id)
      .join("path")
      .attr("class", "glyph")
      .attr("data-id", (d) => d.id)
      .attr("transform", (d) => `translate(${d.x},${d.y})`)
      .attr("d", (d) => d3.symbol(this.glyphFor(d.id, keys), 48)()!)
      .attr("fill", (d) => (selected.has(d.id) ? "#2c5d92" : "#9aa7b4"))
      .attr("stroke", "#31414f")
      .attr("stroke-width", 0.6);
    this.svg.selectAll("button");
    this.container
      .querySelectorAll<HTMLButtonElement>("button[data-stream]")
      .forEach((b) => b.classList.toggle("active", b.dataset.stream === this.store.state.stream));
  }

  private renderLasso(): void {
    const line = d3.line<Point>(
      (p) => p.x,
      (p) => p.y,
    );
    this.svg
      .selectAll("path.lasso")
      .data(this.lassoPath.length > 1 ? [this.lassoPath] : [])
      .join("path")
      .attr("class", "lasso")
      .attr("d", (d) => line(d))
      .attr("fill", "rgba(44,93,146,0.08)")
      .attr("stroke", "#2c5d92")
      .attr("stroke-dasharray", "4 3");
  }
}
