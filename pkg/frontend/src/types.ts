// Wire types for the /v1 JSON API. The client never derives scenario data
// itself; these shapes are exactly what the service sends.

export type Stage = "parsed" | "enumerated" | "selected" | "concretized" | "mutated";

export interface SpecPayload {
  num_cars: number;
  num_entries: number;
  entries: number[];
}

export interface FactorsPayload {
  description: string;
  targets: string[];
  intensity: number;
}

export interface CreatedSession {
  session_id: string;
  spec: SpecPayload;
  factors: FactorsPayload;
  unsupported: string[];
}

export interface CarMove {
  id: number;
  entry: number;
  direction: number;
  exit: number;
}

export interface RepresentativeScenario {
  n: number;
  cars: CarMove[];
  pattern: Record<string, number>;
}

export interface ConflictPair {
  car_a: number;
  car_b: number;
  kind: string;
}

export interface ClassPayload {
  index: number;
  pattern: string;
  counts: Record<string, number>;
  members: number;
  representative: RepresentativeScenario;
  conflicts: ConflictPair[];
}

export interface EnumerateResponse {
  reduction: string;
  raw_total: number;
  classes: ClassPayload[];
}

export interface RoadRow {
  road_id: number;
  road_len: number;
  angle: number;
  left_num: number;
  right_num: number;
}

export interface CarRow {
  name: string;
  type: string;
  init_pos: number;
  init_speed: number;
  init_road_id: number;
  init_lane_id: number;
  turning_pos: number;
  final_pos: number;
  final_road_id: number;
  final_lane_id: number;
}

export interface ChangeLaneRow {
  car_name: string;
  change_lane_pos: number;
  lane_id_after_change: number;
}

export interface ParamsPayload {
  roads: RoadRow[];
  cars: CarRow[];
  change_lanes: ChangeLaneRow[];
  seed: number;
}

export interface GeometryLeg {
  id: number;
  heading: number;
  length: number;
  left: number;
  right: number;
}

export interface GeometryPayload {
  legs: GeometryLeg[];
  radius: number;
}

export interface SelectResponse {
  params: ParamsPayload;
  geometry: GeometryPayload;
}

export interface MutateResponse {
  params: ParamsPayload;
  changed_fields: string[];
  rationale: string;
}

export interface ViolationPayload {
  path: string;
  rule: string;
  observed: unknown;
  bounds: unknown;
}

export interface EditResponse {
  accepted: boolean;
  violations: ViolationPayload[];
}

export interface SessionSnapshot {
  session_id: string;
  stage: Stage;
  spec: SpecPayload;
  factors: FactorsPayload;
  unsupported: string[];
  reduction: string | null;
  selection: {
    class_index: number;
    seed: number;
    angles: number[] | null;
    lane_pairs: number[][] | null;
    road_len: number;
    radius: number;
  } | null;
  mutation: { changed_fields: string[]; rationale: string } | null;
}

export interface ApiErrorEnvelope {
  code: string;
  message: string;
  details: unknown;
}
