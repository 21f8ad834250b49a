// DOM rendering: the option grid on the left, the script/reasons pane on the
// right. Pure functions of GridViewState plus the options payload; the store
// owns all behavior.

import { copyToClipboard } from './copy';
import type { CompatRule, GridViewState, OptionRow, OptionsPayload } from './types';

/** The slice of the store the view needs; GridStore satisfies it. */
export interface GridController {
  options: OptionsPayload | null;
  getState(): GridViewState;
  select(rowKey: string, value: string): Promise<void>;
  retry(): Promise<void>;
  showNotice(text: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function ruleById(rules: CompatRule[], id: string): CompatRule | undefined {
  return rules.find((r) => r.id === id);
}

function renderRow(
  row: OptionRow,
  state: GridViewState,
  rules: CompatRule[],
  store: GridController,
): HTMLElement {
  const tr = el('div', 'grid-row');
  tr.dataset.row = row.key;

  const label = el('span', 'row-label', row.display);
  label.title = row.tooltip;
  label.tabIndex = 0;
  label.setAttribute('aria-label', `${row.display}: ${row.tooltip}`);
  tr.appendChild(label);

  for (const value of row.values) {
    const struckBy = state.crossOut[row.key]?.[value] ?? [];
    const cell = el('button', 'value-cell', value);
    cell.dataset.value = value;
    if (value === state.selection[row.key]) cell.classList.add('selected');
    if (struckBy.length > 0) cell.classList.add('crossed-out');
    cell.addEventListener('click', () => {
      if (struckBy.length > 0) {
        // crossed-out values explain rather than block
        const reasons = struckBy
          .map((id) => {
            const rule = ruleById(rules, id);
            return rule ? `${rule.id} (${rule.classification}): ${rule.reason}` : id;
          })
          .join('\n');
        store.showNotice(reasons);
      }
      void store.select(row.key, value);
    });
    tr.appendChild(cell);
  }
  return tr;
}

export function renderApp(root: HTMLElement, store: GridController): void {
  const state = store.getState();
  const options = store.options;
  root.replaceChildren();

  if (options === null) {
    const pane = el('div', 'error-pane');
    pane.appendChild(el('p', 'error-text', state.error ?? 'Loading grid…'));
    if (state.error !== null) {
      const retry = el('button', 'retry-button', 'Retry');
      retry.addEventListener('click', () => void store.retry());
      pane.appendChild(retry);
    }
    root.appendChild(pane);
    return;
  }

  const layout = el('div', 'layout');
  const grid = el('div', 'grid');
  const preview = el('aside', 'preview');
  layout.append(grid, preview);
  root.appendChild(layout);

  for (const row of options.rows) {
    grid.appendChild(renderRow(row, state, options.rules, store));
  }

  const explanation = el('div', 'rule-explanation');
  explanation.hidden = state.notice === null;
  explanation.textContent = state.notice ?? '';
  grid.appendChild(explanation);

  if (state.error !== null) {
    const banner = el('div', 'stale-banner');
    banner.append(
      el('span', undefined, `Preview may be stale: ${state.error} `),
    );
    const retry = el('button', 'retry-button', 'Retry');
    retry.addEventListener('click', () => void store.retry());
    banner.appendChild(retry);
    preview.appendChild(banner);
  }
  if (state.loading) preview.appendChild(el('div', 'loading', 'Rendering…'));

  const result = state.result;
  if (result === null) return;
  if (result.kind === 'incompatible') {
    const reasons = el('div', 'reasons-panel');
    reasons.appendChild(el('h2', undefined, 'Incompatible selection'));
    for (const rule of result.failedRules) {
      const item = el('div', 'reason');
      item.appendChild(el('strong', undefined, `${rule.id} (${rule.classification})`));
      item.appendChild(el('p', undefined, rule.reason));
      reasons.appendChild(item);
    }
    preview.appendChild(reasons);
    return;
  }

  const toolbar = el('div', 'toolbar');
  const digest = el('code', 'digest', result.digest);
  const copy = el('button', 'copy-button', 'Copy');
  copy.addEventListener('click', () => {
    void copyToClipboard(result.script).then((ok) => {
      copy.textContent = ok ? 'Copied!' : 'Copy failed';
      setTimeout(() => {
        copy.textContent = 'Copy';
      }, 1500);
    });
  });
  toolbar.append(digest, copy);
  preview.appendChild(toolbar);

  const script = el('pre', 'script-pane');
  script.textContent = result.script;
  preview.appendChild(script);
}
