import * as d3 from "d3";
import { STATE_COLORS } from "../color";
import type { Store } from "../state";

const IMU_CHANNELS = ["accel_mag", "gyro_mag", "mag_mag", "ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz"];
const GAZE_CHANNELS = ["gaze_angular_speed", "gaze_origin_speed", "ox", "oy", "oz", "dx", "dy", "dz"];
const W = 420;
const H = 140;

/**
 * Detail view for the active session: egocentric video, one sensor channel
 * as a line plot, and the session's workload bar. All three share the brush
 * window; brushing the plot re-brushes every linked view and seeks the
 * video to the window start.
 */
export class DetailView {
  private video: HTMLVideoElement;
  private plot: d3.Selection<SVGSVGElement, unknown, null, undefined>;
  private workloadBar: d3.Selection<SVGSVGElement, unknown, null, undefined>;
  private streamSel: HTMLSelectElement;
  private channelSel: HTMLSelectElement;

  constructor(container: HTMLElement, private store: Store) {
    const header = document.createElement("div");
    header.className = "view-header";
    header.innerHTML = `<span class="view-title">Detail</span>`;
    const controls = document.createElement("span");
    controls.className = "controls";
    this.streamSel = document.createElement("select");
    this.streamSel.className = "stream-select";
    this.streamSel.innerHTML = `<option value="imu">imu</option><option value="gaze">gaze</option>`;
    this.channelSel = document.createElement("select");
    this.channelSel.className = "channel-select";
    const onChange = () =>
      void this.store.setDetailChannel(this.streamSel.value as "imu" | "gaze", this.channelSel.value);
    this.streamSel.onchange = () => {
      this.fillChannels();
      onChange();
    };
    this.channelSel.onchange = onChange;
    controls.append(this.streamSel, this.channelSel);
    header.appendChild(controls);
    container.appendChild(header);

    this.video = document.createElement("video");
    this.video.className = "detail-video";
    this.video.controls = true;
    container.appendChild(this.video);

    this.plot = d3.select(container).append("svg").attr("class", "detail-plot").attr("viewBox", `0 0 ${W} ${H}`);
    this.workloadBar = d3
      .select(container)
      .append("svg")
      .attr("class", "detail-workload")
      .attr("viewBox", `0 0 ${W} 18`);
    this.fillChannels();
    this.attachPlotBrush();
    store.subscribe(() => this.render());
  }

  private fillChannels(): void {
    const names = this.streamSel.value === "imu" ? IMU_CHANNELS : GAZE_CHANNELS;
    this.channelSel.innerHTML = names.map((n) => `<option value="${n}">${n}</option>`).join("");
  }

  private attachPlotBrush(): void {
    const meta = () => this.store.session(this.store.state.detailSession ?? "");
    const brush = d3
      .brushX()
      .extent([
        [0, 0],
        [W, H],
      ])
      .on("end", (event: d3.D3BrushEvent<unknown>) => {
        const m = meta();
        if (!event.selection || !event.sourceEvent || !m) return;
        const window = this.store.state.brush ?? { t0: 0, t1: m.duration_s };
        const x = d3.scaleLinear().domain([window.t0, window.t1]).range([0, W]);
        const [a, b] = event.selection as [number, number];
        void this.store.setBrush(x.invert(a), x.invert(b));
      });
    this.plot.append("g").attr("class", "plot-brush").call(brush);
  }

  render(): void {
    const sid = this.store.state.detailSession;
    const meta = sid ? this.store.session(sid) : undefined;
    this.streamSel.value = this.store.state.detailStream;
    if ([...this.channelSel.options].some((o) => o.value === this.store.state.detailChannel)) {
      this.channelSel.value = this.store.state.detailChannel;
    }

    // video: show only when the session carries one; seek to the brushed window
    if (sid && meta?.streams["video"]) {
      this.video.style.display = "";
      const url = this.store.videoUrl(sid);
      if (this.video.dataset.sid !== sid) {
        this.video.src = url;
        this.video.dataset.sid = sid;
      }
      const reply = this.store.data.brushReplies.get(sid);
      if (reply?.video_window) {
        this.seek(reply.video_window[0]);
      }
    } else {
      this.video.style.display = "none";
      this.video.removeAttribute("src");
      delete this.video.dataset.sid;
    }

    this.renderSeries();
    this.renderWorkload(sid);
  }

  /** Seeking before metadata is loaded throws in some engines; retry then. */
  private seek(t: number): void {
    try {
      this.video.currentTime = t;
    } catch {
      this.video.addEventListener("loadedmetadata", () => (this.video.currentTime = t), { once: true });
    }
  }

  private renderSeries(): void {
    const slice = this.store.data.detailSeries;
    this.plot.selectAll("path.series, text.channel-name").remove();
    if (!slice || slice.points.length < 2) return;
    const x = d3
      .scaleLinear()
      .domain([slice.t0, slice.t1])
      .range([0, W]);
    const [lo, hi] = d3.extent(slice.points, (p) => p.value) as [number, number];
    const y = d3
      .scaleLinear()
      .domain(lo === hi ? [lo - 1, hi + 1] : [lo, hi])
      .nice()
      .range([H - 6, 6]);
    const line = d3
      .line<{ t_s: number; value: number }>()
      .x((p) => x(p.t_s))
      .y((p) => y(p.value));
    this.plot
      .insert("path", ".plot-brush")
      .attr("class", "series")
      .attr("d", line(slice.points))
      .attr("fill", "none")
      .attr("stroke", "#2c5d92")
      .attr("stroke-width", 1);
    this.plot
      .append("text")
      .attr("class", "channel-name")
      .attr("x", 6)
      .attr("y", 14)
      .text(`${slice.stream}/${slice.channel}`);
  }

  private renderWorkload(sid: string | null): void {
    this.workloadBar.selectAll("*").remove();
    const timeline = sid ? this.store.data.timelines.get(sid) : undefined;
    if (!timeline) return;
    const x = d3.scaleLinear().domain([0, timeline.duration_s]).range([0, W]);
    for (const run of timeline.workload_runs) {
      this.workloadBar
        .append("rect")
        .attr("data-state", run.state)
        .attr("x", x(run.start_s))
        .attr("width", Math.max(0.5, x(run.end_s) - x(run.start_s)))
        .attr("height", 18)
        .attr("fill", STATE_COLORS[run.state]);
    }
    const window = this.store.state.brush;
    if (window) {
      this.workloadBar
        .append("rect")
        .attr("class", "brush-highlight")
        .attr("x", x(window.t0))
        .attr("width", Math.max(1, x(window.t1) - x(window.t0)))
        .attr("height", 18)
        .attr("fill", "none")
        .attr("stroke", "#2c5d92")
        .attr("stroke-width", 2);
    }
  }
}
