import { beforeEach, describe, expect, it, vi } from 'vitest';

import { renderApp, type GridController } from '../src/view';
import type { GridViewState, OptionsPayload } from '../src/types';

const OPTIONS: OptionsPayload = {
  rows: [
    {
      key: 'objective',
      display: 'Objective',
      values: ['single', 'multi'],
      tooltip: 'how many quantities to optimize',
      default: 'single',
    },
    {
      key: 'custom_threshold',
      display: 'Custom threshold',
      values: ['off', 'on'],
      tooltip: 'filter the reported front by minimum acceptable values',
      default: 'off',
    },
  ],
  rules: [
    {
      id: 'R1',
      classification: 'logically_inconsistent',
      when: { objective: 'single', custom_threshold: 'on' },
      reason: 'thresholds only apply to multi-objective campaigns',
    },
  ],
};

function baseState(): GridViewState {
  return {
    selection: { objective: 'single', custom_threshold: 'off' },
    crossOut: { custom_threshold: { on: ['R1'] } },
    result: { kind: 'ok', script: '[params]\nx1: range(0, 1)\n', digest: 'abc123' },
    loading: false,
    error: null,
    notice: null,
  };
}

function makeController(state: GridViewState): GridController & {
  selectCalls: Array<[string, string]>;
  retries: number;
} {
  return {
    options: OPTIONS,
    selectCalls: [],
    retries: 0,
    getState() {
      return state;
    },
    async select(rowKey: string, value: string) {
      this.selectCalls.push([rowKey, value]);
    },
    async retry() {
      this.retries += 1;
    },
    showNotice(text: string) {
      state.notice = text;
    },
  };
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById('app')!;
});

describe('grid pane', () => {
  it('renders every row in payload order with its label and tooltip', () => {
    renderApp(root, makeController(baseState()));
    const rows = [...root.querySelectorAll<HTMLElement>('.grid-row')];
    expect(rows.map((r) => r.dataset.row)).toEqual(['objective', 'custom_threshold']);
    const labels = rows.map((r) => r.querySelector('.row-label')!);
    expect(labels.map((l) => l.textContent)).toEqual(['Objective', 'Custom threshold']);
    expect(labels.map((l) => (l as HTMLElement).title)).toEqual([
      'how many quantities to optimize',
      'filter the reported front by minimum acceptable values',
    ]);
  });

  it('highlights exactly the currently selected values', () => {
    renderApp(root, makeController(baseState()));
    const selected = [...root.querySelectorAll<HTMLElement>('.value-cell.selected')];
    expect(selected.map((c) => c.textContent)).toEqual(['single', 'off']);
  });

  it('clicking a value forwards the row and value to the store', () => {
    const ctrl = makeController(baseState());
    renderApp(root, ctrl);
    root
      .querySelector<HTMLButtonElement>('[data-row="objective"] [data-value="multi"]')!
      .click();
    expect(ctrl.selectCalls).toEqual([['objective', 'multi']]);
  });

  it('strikes out values the cross-out map flags, leaving them clickable', () => {
    const ctrl = makeController(baseState());
    renderApp(root, ctrl);
    const struck = root.querySelector<HTMLButtonElement>(
      '[data-row="custom_threshold"] [data-value="on"]',
    )!;
    expect(struck.classList.contains('crossed-out')).toBe(true);
    expect(struck.disabled).toBe(false);
    struck.click();
    expect(ctrl.selectCalls).toEqual([['custom_threshold', 'on']]);
  });

  it('clicking a crossed-out value records the rule id and reason as a notice', () => {
    const ctrl = makeController(baseState());
    renderApp(root, ctrl);
    expect(root.querySelector<HTMLElement>('.rule-explanation')!.hidden).toBe(true);
    root
      .querySelector<HTMLButtonElement>('[data-row="custom_threshold"] [data-value="on"]')!
      .click();
    renderApp(root, ctrl); // the real store re-renders via its subscription
    const explanation = root.querySelector<HTMLElement>('.rule-explanation')!;
    expect(explanation.hidden).toBe(false);
    expect(explanation.textContent).toContain('R1');
    expect(explanation.textContent).toContain(
      'thresholds only apply to multi-objective campaigns',
    );
  });
});

describe('preview pane', () => {
  it('shows the rendered script byte-for-byte along with its digest', () => {
    renderApp(root, makeController(baseState()));
    expect(root.querySelector('.script-pane')!.textContent).toBe(
      '[params]\nx1: range(0, 1)\n',
    );
    expect(root.querySelector('.digest')!.textContent).toBe('abc123');
  });

  it('shows each failed rule reason and no script for an incompatible selection', () => {
    const state = baseState();
    state.result = {
      kind: 'incompatible',
      failedRules: [
        {
          id: 'R1',
          classification: 'logically_inconsistent',
          reason: 'thresholds only apply to multi-objective campaigns',
        },
      ],
      crossOut: {},
    };
    renderApp(root, makeController(state));
    expect(root.querySelector('.script-pane')).toBeNull();
    const panel = root.querySelector('.reasons-panel')!;
    expect(panel.textContent).toContain('R1');
    expect(panel.textContent).toContain(
      'thresholds only apply to multi-objective campaigns',
    );
  });

  it('copies the script to the clipboard', async () => {
    const writeText = vi.fn().mockResolvedValue(undefined);
    vi.stubGlobal('navigator', { clipboard: { writeText } });
    try {
      renderApp(root, makeController(baseState()));
      root.querySelector<HTMLButtonElement>('.copy-button')!.click();
      await Promise.resolve();
      expect(writeText).toHaveBeenCalledWith('[params]\nx1: range(0, 1)\n');
    } finally {
      vi.unstubAllGlobals();
    }
  });

  it('keeps the last good script visible under a stale banner after a failure', () => {
    const state = baseState();
    state.error = 'POST /render: network unreachable';
    const ctrl = makeController(state);
    renderApp(root, ctrl);
    const banner = root.querySelector('.stale-banner')!;
    expect(banner.textContent).toContain('network unreachable');
    expect(root.querySelector('.script-pane')!.textContent).toBe(
      '[params]\nx1: range(0, 1)\n',
    );
    banner.querySelector<HTMLButtonElement>('.retry-button')!.click();
    expect(ctrl.retries).toBe(1);
  });

  it('shows a loading indicator while a refresh is in flight', () => {
    const state = baseState();
    state.loading = true;
    renderApp(root, makeController(state));
    expect(root.querySelector('.loading')).not.toBeNull();
  });
});

describe('before options load', () => {
  it('shows a loading message with no grid', () => {
    const ctrl = makeController({
      selection: {},
      crossOut: {},
      result: null,
      loading: true,
      error: null,
      notice: null,
    });
    ctrl.options = null;
    renderApp(root, ctrl);
    expect(root.querySelector('.grid')).toBeNull();
    expect(root.querySelector('.error-pane')!.textContent).toContain('Loading');
  });

  it('offers a retry when the options fetch failed', () => {
    const ctrl = makeController({
      selection: {},
      crossOut: {},
      result: null,
      loading: false,
      error: 'failed to load options: Error: down',
      notice: null,
    });
    ctrl.options = null;
    renderApp(root, ctrl);
    expect(root.querySelector('.error-text')!.textContent).toContain('down');
    root.querySelector<HTMLButtonElement>('.retry-button')!.click();
    expect(ctrl.retries).toBe(1);
  });
});
