// Thin fetch client for the render service. The base URL is injectable so
// tests can point at a live server on an arbitrary port.

import type {
  CrossOutMap,
  OptionsPayload,
  RenderIncompatible,
  RenderOk,
  RenderResult,
  Selection,
} from './types';

let baseUrl = '';

export function setBaseUrl(url: string): void {
  baseUrl = url.replace(/\/$/, '');
}

async function getJson<T>(path: string): Promise<T> {
  const res = await fetch(`${baseUrl}${path}`);
  if (!res.ok) throw new Error(`GET ${path}: ${res.status} ${res.statusText}`);
  return res.json() as Promise<T>;
}

export async function fetchOptions(): Promise<OptionsPayload> {
  return getJson<OptionsPayload>('/options');
}

export async function fetchCrossOut(selection: Selection): Promise<CrossOutMap> {
  const res = await fetch(`${baseUrl}/crossout`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({ selection }),
  });
  if (!res.ok) throw new Error(`POST /crossout: ${res.status} ${res.statusText}`);
  const data = (await res.json()) as { cross_out_map: CrossOutMap };
  return data.cross_out_map;
}

/**
 * Render a selection. A 422 is not a transport failure — it is the server
 * explaining which rules the selection violates — so it maps to the
 * `incompatible` variant rather than a thrown error.
 */
export async function renderSelection(selection: Selection): Promise<RenderResult> {
  const res = await fetch(`${baseUrl}/render`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({ selection }),
  });
  if (res.status === 422) {
    const body = (await res.json()) as RenderIncompatible;
    return {
      kind: 'incompatible',
      failedRules: body.failed_rules,
      crossOut: body.cross_out_map,
    };
  }
  if (!res.ok) throw new Error(`POST /render: ${res.status} ${res.statusText}`);
  const body = (await res.json()) as RenderOk;
  return { kind: 'ok', script: body.script, digest: body.digest };
}
