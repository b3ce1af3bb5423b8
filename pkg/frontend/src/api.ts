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

/** Everything the views need from the backend; mockable in tests. */
export interface Api {
  sessions(topKTrials?: number | null): Promise<SessionMeta[]>;
  embedding(stream: Stream, signal?: AbortSignal): Promise<Embedding>;
  aggregate(sessionIds: string[], groupBy: GroupBy, signal?: AbortSignal): Promise<GroupAggregate[]>;
  timeline(sessionId: string, category: Category, signal?: AbortSignal): Promise<Timeline>;
  matrix(sessionId: string, category: Category, signal?: AbortSignal): Promise<MatrixRow>;
  brush(sessionId: string, t0: number, t1: number, category: Category, signal?: AbortSignal): Promise<BrushReply>;
  series(
    sessionId: string,
    stream: "imu" | "gaze",
    channel: string,
    t0: number,
    t1: number,
    signal?: AbortSignal,
  ): Promise<SeriesSlice>;
  videoUrl(sessionId: string): string;
}

async function getJson<T>(url: string, signal?: AbortSignal): Promise<T> {
  const resp = await fetch(url, { signal });
  if (!resp.ok) {
    const body = await resp.text();
    throw new Error(`${resp.status} ${url}: ${body}`);
  }
  return resp.json() as Promise<T>;
}

export class HttpApi implements Api {
  constructor(private base: string = "") {}

  sessions(topKTrials?: number | null): Promise<SessionMeta[]> {
    const q = topKTrials ? `?top_k_trials=${topKTrials}` : "";
    return getJson(`${this.base}/api/sessions${q}`);
  }

  embedding(stream: Stream, signal?: AbortSignal): Promise<Embedding> {
    return getJson(`${this.base}/api/embedding?stream=${stream}`, signal);
  }

  async aggregate(sessionIds: string[], groupBy: GroupBy, signal?: AbortSignal): Promise<GroupAggregate[]> {
    const resp = await fetch(`${this.base}/api/aggregate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ session_ids: sessionIds, group_by: groupBy }),
      signal,
    });
    if (!resp.ok) throw new Error(`${resp.status} aggregate: ${await resp.text()}`);
    return resp.json();
  }

  timeline(sessionId: string, category: Category, signal?: AbortSignal): Promise<Timeline> {
    return getJson(`${this.base}/api/sessions/${sessionId}/timeline?category=${category}`, signal);
  }

  matrix(sessionId: string, category: Category, signal?: AbortSignal): Promise<MatrixRow> {
    return getJson(`${this.base}/api/sessions/${sessionId}/matrix?category=${category}`, signal);
  }

  brush(sessionId: string, t0: number, t1: number, category: Category, signal?: AbortSignal): Promise<BrushReply> {
    return getJson(
      `${this.base}/api/sessions/${sessionId}/brush?t0=${t0}&t1=${t1}&category=${category}`,
      signal,
    );
  }

  series(
    sessionId: string,
    stream: "imu" | "gaze",
    channel: string,
    t0: number,
    t1: number,
    signal?: AbortSignal,
  ): Promise<SeriesSlice> {
    const q = `stream=${stream}&channel=${channel}&t0=${t0}&t1=${t1}&max_points=2000`;
    return getJson(`${this.base}/api/sessions/${sessionId}/series?${q}`, signal);
  }

  videoUrl(sessionId: string): string {
    return `${this.base}/api/sessions/${sessionId}/video`;
  }
}
