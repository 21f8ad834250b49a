// End-to-end tests against a live render service (spawned in global-setup):
// scripted click sequences on the real grid must leave the preview pane
// byte-identical to what POST /render returns for the final selection, and
// any sequence that violates a compatibility rule must show the rule's
// reason instead of a script at that step.

import { beforeEach, describe, expect, inject, it } from 'vitest';

import { setBaseUrl } from '../src/api';
import { GridStore } from '../src/store';
import { renderApp } from '../src/view';
import type { RenderIncompatible, RenderOk, Selection } from '../src/types';

const base = inject('apiBaseUrl');
setBaseUrl(base);

type Click = [row: string, value: string];

interface Violation {
  afterClick: number; // index into the sequence whose click triggers the rule
  ruleId: string;
}

interface Scenario {
  name: string;
  clicks: Click[];
  violation?: Violation;
}

// Ten scripted selection sequences. Three of them pass through each of the
// incompatible-rule states on the way to a valid selection.
const SCENARIOS: Scenario[] = [
  { name: 'defaults untouched', clicks: [] },
  { name: 'multi-objective', clicks: [['objective', 'multi']] },
  { name: 'fully bayesian surrogate', clicks: [['model', 'fully_bayesian']] },
  {
    name: 'categorical with batches',
    clicks: [
      ['categorical', 'on'],
      ['batch', 'batch'],
    ],
  },
  {
    name: 'warm start plus auxiliary task',
    clicks: [
      ['existing_data', 'on'],
      ['task', 'multi'],
    ],
  },
  {
    name: 'stacked inequality constraints',
    clicks: [
      ['sum_constraint', 'on'],
      ['order_constraint', 'on'],
      ['linear_constraint', 'on'],
    ],
  },
  {
    name: 'mixture design with plots',
    clicks: [
      ['composition_constraint', 'on'],
      ['visualize', 'on'],
    ],
  },
  {
    name: 'threshold needs a second objective',
    clicks: [
      ['custom_threshold', 'on'], // violates the single-objective threshold rule
      ['objective', 'multi'], // repaired
    ],
    violation: { afterClick: 0, ruleId: 'R1' },
  },
  {
    name: 'composition excludes the sum cap',
    clicks: [
      ['sum_constraint', 'on'],
      ['composition_constraint', 'on'], // violates the overlapping-budget rule
      ['sum_constraint', 'off'], // repaired
    ],
    violation: { afterClick: 1, ruleId: 'R2' },
  },
  {
    name: 'hyperposterior excludes multitask',
    clicks: [
      ['task', 'multi'],
      ['model', 'fully_bayesian'], // violates the sampler/multitask rule
      ['model', 'standard'], // repaired
    ],
    violation: { afterClick: 1, ruleId: 'R3' },
  },
];

async function postRender(selection: Selection): Promise<RenderOk> {
  const res = await fetch(`${base}/render`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({ selection }),
  });
  expect(res.status).toBe(200);
  return (await res.json()) as RenderOk;
}

function idle(store: GridStore): Promise<void> {
  if (!store.getState().loading) return Promise.resolve();
  return new Promise((resolve) => {
    const unsubscribe = store.subscribe((state) => {
      if (!state.loading) {
        unsubscribe();
        resolve();
      }
    });
  });
}

function click(root: HTMLElement, [row, value]: Click): void {
  const cell = root.querySelector<HTMLButtonElement>(
    `[data-row="${row}"] [data-value="${value}"]`,
  );
  expect(cell, `cell ${row}=${value} should exist`).not.toBeNull();
  cell!.click();
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById('app')!;
});

describe('scripted selection sequences', () => {
  for (const scenario of SCENARIOS) {
    it(scenario.name, async () => {
      const store = new GridStore();
      store.subscribe(() => renderApp(root, store));
      await store.init();
      await idle(store);

      for (const [i, step] of scenario.clicks.entries()) {
        click(root, step);
        await idle(store);
        if (scenario.violation?.afterClick === i) {
          // the rule's reason must be shown, and no script may be
          const panel = root.querySelector('.reasons-panel');
          expect(panel, 'reasons panel after an incompatible click').not.toBeNull();
          expect(panel!.textContent).toContain(scenario.violation.ruleId);
          const state = store.getState();
          expect(state.result?.kind).toBe('incompatible');
          if (state.result?.kind === 'incompatible') {
            const rule = state.result.failedRules.find(
              (r) => r.id === scenario.violation!.ruleId,
            );
            expect(rule).toBeDefined();
            expect(panel!.textContent).toContain(rule!.reason);
          }
          expect(root.querySelector('.script-pane')).toBeNull();
        }
      }

      const expected = await postRender(store.getState().selection);
      const pane = root.querySelector('.script-pane');
      expect(pane, 'script pane for a valid selection').not.toBeNull();
      expect(pane!.textContent).toBe(expected.script);
      expect(root.querySelector('.digest')!.textContent).toBe(expected.digest);
    });
  }
});

describe('live grid wiring', () => {
  it('renders all twelve rows in server order', async () => {
    const store = new GridStore();
    store.subscribe(() => renderApp(root, store));
    await store.init();
    const res = await fetch(`${base}/options`);
    const payload = (await res.json()) as { rows: Array<{ key: string }> };
    const shown = [...root.querySelectorAll<HTMLElement>('.grid-row')].map(
      (r) => r.dataset.row,
    );
    expect(shown).toEqual(payload.rows.map((r) => r.key));
    expect(shown).toHaveLength(12);
  });

  it('marks threshold=on as crossed out under the default selection', async () => {
    const store = new GridStore();
    store.subscribe(() => renderApp(root, store));
    await store.init();
    const cell = root.querySelector<HTMLButtonElement>(
      '[data-row="custom_threshold"] [data-value="on"]',
    )!;
    expect(cell.classList.contains('crossed-out')).toBe(true);
    // clicking it explains the rule and still applies the selection
    cell.click();
    const explanation = root.querySelector<HTMLElement>('.rule-explanation')!;
    expect(explanation.hidden).toBe(false);
    expect(explanation.textContent).toContain('R1');
    await idle(store);
    expect(store.getState().selection.custom_threshold).toBe('on');
    expect(root.querySelector('.reasons-panel')).not.toBeNull();
  });

  it('maps a 422 render to the structured incompatible variant', async () => {
    const store = new GridStore();
    await store.init();
    await store.select('custom_threshold', 'on');
    const state = store.getState();
    expect(state.result?.kind).toBe('incompatible');
    if (state.result?.kind === 'incompatible') {
      expect(state.result.failedRules.map((r) => r.id)).toContain('R1');
      expect(state.crossOut.objective?.single).toContain('R1');
    }

    const res = await fetch(`${base}/render`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ selection: state.selection }),
    });
    expect(res.status).toBe(422);
    const body = (await res.json()) as RenderIncompatible;
    if (state.result?.kind === 'incompatible') {
      expect(state.result.failedRules).toEqual(body.failed_rules);
    }
  });
});
