/** Shared wire types mirroring the ground-station API payloads. */

export interface WaypointDoc {
  lat: number;
  lon: number;
  alt?: number;
}

export interface MissionDoc {
  home: WaypointDoc;
  waypoints: WaypointDoc[];
  cruise_speed: number;
  cruise_alt: number;
}

export interface Measurement {
  uav_id: string;
  timestamp: string;
  lat: number;
  lon: number;
  alt: number;
  parameter: string;
  value: number;
  valid: boolean;
}

export interface UavState {
  uav_id: string;
  mode: string | null;
  lat: number | null;
  lon: number | null;
  alt: number | null;
  heading: number | null;
  airspeed: number | null;
  battery_mah: number | null;
  throttle: number | null;
  warmup_s: number | null;
  link_ok: boolean | null;
  last_seen: string | null;
  video_latency_s: number | null;
}

export interface WhoLimit {
  parameter: string;
  window: string;
  limit_value: number;
  unit: string;
}

export interface AlertRecord {
  parameter: string;
  window: string;
  averaged_value: number;
  limit_value: number;
  lat: number;
  lon: number;
  timestamp: string;
}

export interface CommandResult {
  status: string; // "ack" | "not-connected" | "delivery-unknown" | "bad-command"
  ack?: string;
  detail?: string;
  seq?: number;
  uav_id?: string;
}

export interface LiveEvent {
  type: "data" | "state" | "alert" | "video";
  pushed_at: string;
  uav_id?: string;
  timestamp?: string;
  lat?: number;
  lon?: number;
  alt?: number;
  valid?: boolean;
  frame?: Record<string, number>;
  state?: UavState;
  alert?: AlertRecord;
  frame_id?: number;
  source_ts?: string;
  latency_s?: number;
}
