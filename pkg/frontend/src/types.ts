/** Payload shapes returned by the session service. */

export interface SessionRecord {
  session_id: string;
  subject_id: string;
  recorded_at: string;
  sample_rate_hz: number;
  n_channels: number;
  n_samples: number;
  volume_ml: number | null;
  health_index: number | null;
  model_version: string | null;
  resync_events: number;
}

export interface SessionPage {
  sessions: SessionRecord[];
  next_cursor: string | null;
}

export interface HealthStatus {
  status: string;
  sessions: number;
  model_version: string | null;
}

interface WaveformCommon {
  session_id: string;
  kind: "raw" | "envelope";
  sample_rate_hz: number;
  source_samples: number;
}

export interface WaveformSamples extends WaveformCommon {
  mode: "samples";
  times_s: number[];
  channels: number[][];
}

export interface WaveformMinmax extends WaveformCommon {
  mode: "minmax";
  bucket_times_s: number[];
  channels_min: number[][];
  channels_max: number[][];
}

export type WaveformResponse = WaveformSamples | WaveformMinmax;

export interface TrendPoint {
  session_id: string;
  recorded_at: string;
  health_index: number;
  volume_ml: number | null;
}

export interface TrendResponse {
  subject_id: string;
  points: TrendPoint[];
}

export interface LiveStatus {
  subject_id: string;
  profile: string;
  volume_ml: number;
  duration_s: number;
  sample_rate_hz: number;
  started_at: string;
}

export interface LiveWindow {
  elapsed_s: number;
  duration_s: number;
  done: boolean;
  times_s: number[];
  channels: number[][];
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
