import type { Api } from "./api";
import type {
  BrushReply,
  Category,
  Embedding,
  GroupAggregate,
  GroupBy,
  MatrixRow,
  SeriesSlice,
  SessionMeta,
  Stream,
  Timeline,
} from "./types";

export interface BrushWindow {
  t0: number;
  t1: number;
}

/** Single source of truth: every view renders purely from this state. */
export interface ViewState {
  groupBy: GroupBy;
  stream: Stream;
  category: Category;
  topKTrials: number | null;
  selected: string[];
  brush: BrushWindow | null;
  detailSession: string | null;
  detailStream: "imu" | "gaze";
  detailChannel: string;
}

export interface StoreData {
  sessions: SessionMeta[];
  embedding: Embedding | null;
  aggregates: GroupAggregate[];
  timelines: Map<string, Timeline>;
  matrices: Map<string, MatrixRow>;
  brushReplies: Map<string, BrushReply>;
  detailSeries: SeriesSlice | null;
}

type Listener = () => void;

/**
 * Owns the linked-view state and every backend fetch. Views call the
 * mutators; superseded in-flight fetches are aborted so stale responses
 * never overwrite newer ones. All state is client-side; the API stays
 * stateless.
 */
export class Store {
  readonly state: ViewState = {
    groupBy: "subject",
    stream: "imu",
    category: "attention",
    topKTrials: null,
    selected: [],
    brush: null,
    detailSession: null,
    detailStream: "imu",
    detailChannel: "accel_mag",
  };

  readonly data: StoreData = {
    sessions: [],
    embedding: null,
    aggregates: [],
    timelines: new Map(),
    matrices: new Map(),
    brushReplies: new Map(),
    detailSeries: null,
  };

  private listeners: Listener[] = [];
  private aborters = new Map<string, AbortController>();

  constructor(private api: Api) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  /** Abort any in-flight fetch of the same kind and hand out a new signal. */
  private supersede(kind: string): AbortSignal {
    this.aborters.get(kind)?.abort();
    const aborter = new AbortController();
    this.aborters.set(kind, aborter);
    return aborter.signal;
  }

  private swallowAbort(err: unknown): void {
    if ((err as Error)?.name !== "AbortError") console.error(err);
  }

  async init(): Promise<void> {
    this.data.sessions = await this.api.sessions(this.state.topKTrials);
    await this.refreshEmbedding();
    this.notify();
  }

  async refreshEmbedding(): Promise<void> {
    const signal = this.supersede("embedding");
    try {
      this.data.embedding = await this.api.embedding(this.state.stream, signal);
      this.notify();
    } catch (err) {
      this.swallowAbort(err);
    }
  }

  async setStream(stream: Stream): Promise<void> {
    if (stream === this.state.stream) return;
    this.state.stream = stream;
    this.notify();
    await this.refreshEmbedding();
  }

  async setTopKTrials(k: number | null): Promise<void> {
    this.state.topKTrials = k;
    this.data.sessions = await this.api.sessions(k);
    this.notify();
  }

  async setGroupBy(groupBy: GroupBy): Promise<void> {
    if (groupBy === this.state.groupBy) return;
    this.state.groupBy = groupBy;
    this.notify();
    if (this.state.selected.length) await this.fetchAggregates();
  }

  /**
   * Lasso handler: one selection change issues exactly one aggregate
   * request (plus per-session timelines/matrices). Empty selections leave
   * the previous selection untouched.
   */
  async setSelection(ids: string[]): Promise<void> {
    if (!ids.length) return;
    this.state.selected = [...ids];
    this.state.brush = null;
    this.state.detailSession = ids[0];
    this.data.brushReplies.clear();
    this.data.detailSeries = null;
    this.notify();
    await Promise.all([this.fetchAggregates(), this.fetchTimelines(), this.fetchMatrices()]);
  }

  async setCategory(category: Category): Promise<void> {
    if (category === this.state.category) return;
    this.state.category = category;
    this.notify();
    if (this.state.selected.length) {
      await Promise.all([this.fetchTimelines(), this.fetchMatrices()]);
    }
  }

  /** Synchronized brush: every consumer sees the identical [t0, t1]. */
  async setBrush(t0: number, t1: number): Promise<void> {
    if (!(t0 < t1) || !this.state.selected.length) return;
    this.state.brush = { t0, t1 };
    this.notify();
    const signal = this.supersede("brush");
    try {
      const replies = await Promise.all(
        this.state.selected.map((sid) =>
          this.api
            .brush(sid, t0, t1, this.state.category, signal)
            .then((reply): [string, BrushReply] => [sid, reply]),
        ),
      );
      this.data.brushReplies = new Map(replies);
      this.notify();
    } catch (err) {
      this.swallowAbort(err);
    }
    await this.fetchDetailSeries();
  }

  async setDetailSession(sid: string): Promise<void> {
    this.state.detailSession = sid;
    this.notify();
    await this.fetchDetailSeries();
  }

  async setDetailChannel(stream: "imu" | "gaze", channel: string): Promise<void> {
    this.state.detailStream = stream;
    this.state.detailChannel = channel;
    this.notify();
    await this.fetchDetailSeries();
  }

  videoUrl(sid: string): string {
    return this.api.videoUrl(sid);
  }

  session(sid: string): SessionMeta | undefined {
    return this.data.sessions.find((s) => s.id === sid);
  }

  private async fetchAggregates(): Promise<void> {
    const signal = this.supersede("aggregate");
    try {
      this.data.aggregates = await this.api.aggregate(this.state.selected, this.state.groupBy, signal);
      this.notify();
    } catch (err) {
      this.swallowAbort(err);
    }
  }

  private async fetchTimelines(): Promise<void> {
    const signal = this.supersede("timeline");
    try {
      const rows = await Promise.all(
        this.state.selected.map((sid) =>
          this.api.timeline(sid, this.state.category, signal).then((t): [string, Timeline] => [sid, t]),
        ),
      );
      this.data.timelines = new Map(rows);
      this.notify();
    } catch (err) {
      this.swallowAbort(err);
    }
  }

  private async fetchMatrices(): Promise<void> {
    const signal = this.supersede("matrix");
    try {
      const rows = await Promise.all(
        this.state.selected.map((sid) =>
          this.api.matrix(sid, this.state.category, signal).then((m): [string, MatrixRow] => [sid, m]),
        ),
      );
      this.data.matrices = new Map(rows);
      this.notify();
    } catch (err) {
      this.swallowAbort(err);
    }
  }

  private async fetchDetailSeries(): Promise<void> {
    const sid = this.state.detailSession;
    const meta = sid ? this.session(sid) : undefined;
    if (!sid) return;
    const window = this.state.brush ?? { t0: 0, t1: meta?.duration_s ?? 0 };
    if (!(window.t0 < window.t1)) return;
    const signal = this.supersede("series");
    try {
      this.data.detailSeries = await this.api.series(
        sid,
        this.state.detailStream,
        this.state.detailChannel,
        window.t0,
        window.t1,
        signal,
      );
      this.notify();
    } catch (err) {
      this.swallowAbort(err);
    }
  }
}
