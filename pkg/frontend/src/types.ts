// Canonical JSON shapes served by the monitoring service. Field names match
// the wire format exactly; the dashboard never derives its own analytics.

export type Likelihood = "Low" | "Medium" | "High";
export type HealthLevel = "Healthy" | "Suspect" | "Infested";

export interface HealthStatus {
  level: HealthLevel;
  likelihood: Likelihood;
  updated_at: string;
}

export interface DeviceRecord {
  device_id: string;
  farm_id: string;
  cluster_id: string;
  latitude: number | null;
  longitude: number | null;
  sensor_placement: "Inside" | "Outside";
  sensors: string[];
  status: HealthStatus;
  created_by: "Manual" | "GatewayAutoDetect";
}

export interface FarmRecord {
  farm_id: string;
  name: string;
  owner_user_ids: string[];
  cluster_ids: string[];
}

export interface AccelSample {
  device_id: string;
  seq: number;
  timestamp: string;
  ax: number;
  ay: number;
  az: number;
  magnitude: number;
}

export interface Digest {
  device_id: string;
  window_start: string;
  count: number;
  min: number;
  mean: number;
  max: number;
}

export interface IndicatorResult {
  fired: boolean;
  value: number | null;
  threshold: number;
  evaluable: boolean;
}

export interface HealthAssessment {
  device_id: string;
  window_start: string;
  indicators: Record<string, IndicatorResult>;
  fired_count: number;
  likelihood: Likelihood;
}

export interface NotificationRecord {
  id: number;
  farm_id: string;
  kind: "StatusChange" | "DeviceAutoDetected";
  payload: Record<string, unknown>;
  created_at: string;
  read: boolean;
}

export interface FarmOverview {
  farm_id: string;
  palm_count: number;
  healthy_pct: number;
  status_counts: Record<HealthLevel, number>;
  latest_digests: Record<string, Digest>;
  weather_note: string | null;
}

export interface PacketReport {
  device_id: string;
  no_data: boolean;
  expected?: number;
  received?: number;
  received_pct?: number;
  lost_pct?: number;
}

export interface SessionUser {
  user_id: string;
  display_name: string;
  role: "Viewer" | "Admin";
  farm_ids: string[];
}

export interface LoginResponse {
  token: string;
  expires_at: number;
  user: SessionUser;
}

export type StreamEvent =
  | { type: "subscribed"; device_ids: string[] }
  | { type: "error"; error: string; device_ids?: string[] }
  | { type: "reading"; device_id: string; sample: AccelSample }
  | { type: "assessment"; device_id: string; assessment: HealthAssessment }
  | { type: "notification"; device_id: string; notification: NotificationRecord };

export const LEVEL_FOR_LIKELIHOOD: Record<Likelihood, HealthLevel> = {
  Low: "Healthy",
  Medium: "Suspect",
  High: "Infested",
};

export const COLOR_FOR_LEVEL: Record<HealthLevel, string> = {
  Healthy: "green",
  Suspect: "yellow",
  Infested: "red",
};

export function colorForLikelihood(likelihood: Likelihood): string {
  return COLOR_FOR_LEVEL[LEVEL_FOR_LIKELIHOOD[likelihood]];
}
