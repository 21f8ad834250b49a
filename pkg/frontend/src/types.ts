// Wire types for the render service. These mirror the server JSON exactly;
// the UI performs no generation logic of its own.

export interface OptionRow {
  key: string;
  display: string;
  values: [string, string];
  tooltip: string;
  default: string;
}

export interface CompatRule {
  id: string;
  classification: 'not_implemented' | 'logically_inconsistent';
  when: Record<string, string>;
  reason: string;
}

export interface OptionsPayload {
  rows: OptionRow[];
  rules: CompatRule[];
}

export type Selection = Record<string, string>;

/** row key -> value -> ids of the rules that value would violate */
export type CrossOutMap = Record<string, Record<string, string[]>>;

export interface RenderOk {
  script: string;
  digest: string;
}

export interface FailedRule {
  id: string;
  classification: string;
  reason: string;
}

export interface RenderIncompatible {
  failed_rules: FailedRule[];
  cross_out_map: CrossOutMap;
}

export type RenderResult =
  | { kind: 'ok'; script: string; digest: string }
  | { kind: 'incompatible'; failedRules: FailedRule[]; crossOut: CrossOutMap };

export interface GridViewState {
  selection: Selection;
  crossOut: CrossOutMap;
  result: RenderResult | null;
  loading: boolean;
  error: string | null;
  /** rule explanation shown after clicking a crossed-out value; cleared once
   * a selection renders successfully */
  notice: string | null;
}
