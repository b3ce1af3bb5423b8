// Wire types mirroring the service JSON schemas.

export type Category = "perception" | "attention" | "memory";
export type MentalState = "underload" | "optimal" | "overload";
export type GroupBy = "subject" | "trial";
export type Stream = "imu" | "gaze" | "fnirs";

export const CATEGORIES: Category[] = ["perception", "attention", "memory"];
export const STATES: MentalState[] = ["underload", "optimal", "overload"];

export interface SessionMeta {
  id: string;
  subject: string;
  trial: string;
  duration_s: number;
  streams: Record<string, boolean>;
}

export interface EmbeddingPoint {
  session_id: string;
  x: number;
  y: number;
}

export interface Embedding {
  stream: Stream;
  k: number;
  m: number;
  len: number;
  seed: number;
  points: EmbeddingPoint[];
  omitted: string[];
}

export interface CorrelationStat {
  r: number | null;
  n: number;
}

export interface GroupAggregate {
  key: string;
  group_by: GroupBy;
  session_ids: string[];
  avg_duration_s: number;
  proportions: Partial<Record<Category, Record<MentalState, number>>>;
  error_contribution: Record<Category, Record<MentalState, CorrelationStat>>;
}

export interface IntervalSeg {
  start_s: number;
  end_s: number;
  label: string;
}

export interface WorkloadRun {
  start_s: number;
  end_s: number;
  state: MentalState;
}

export interface Timeline {
  session_id: string;
  duration_s: number;
  category: Category;
  procedures: IntervalSeg[];
  errors: IntervalSeg[];
  phases: IntervalSeg[];
  workload_runs: WorkloadRun[];
  confidence: { t_s: number; value: number }[];
}

export interface ProcedureCell {
  prevalence: number;
  error_fraction: number;
  partial_r: Record<MentalState, number | null> | null;
}

export interface MatrixRow {
  session_id: string;
  category: Category;
  procedures: Record<string, ProcedureCell>;
  error_contribution: Record<MentalState, CorrelationStat>;
  proportions: Record<MentalState, number> | null;
}

export interface BrushReply {
  session_id: string;
  t0: number;
  t1: number;
  category: Category;
  timeline: Timeline;
  labels_touched: string[];
  video_window: [number, number] | null;
}

export interface SeriesSlice {
  session_id: string;
  stream: "imu" | "gaze";
  channel: string;
  t0: number;
  t1: number;
  decimated: boolean;
  points: { t_s: number; value: number }[];
}
