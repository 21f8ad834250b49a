// Grid view state and the single refresh cycle.
//
// Every selection change bumps a monotone sequence number and kicks off one
// render + crossout round trip; responses carrying a stale sequence number
// are discarded, so rapid flips resolve last-write-wins and the displayed
// script is never stale relative to the displayed selection.

import { fetchCrossOut, fetchOptions, renderSelection } from './api';
import type { GridViewState, OptionsPayload, Selection } from './types';

export type Listener = (state: GridViewState) => void;

export class GridStore {
  private state: GridViewState = {
    selection: {},
    crossOut: {},
    result: null,
    loading: false,
    error: null,
    notice: null,
  };

  private listeners: Listener[] = [];
  private sequence = 0;
  options: OptionsPayload | null = null;

  getState(): GridViewState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(patch: Partial<GridViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Load the grid definition and render the default selection. */
  async init(): Promise<void> {
    this.emit({ loading: true, error: null });
    try {
      this.options = await fetchOptions();
    } catch (err) {
      this.emit({ loading: false, error: `failed to load options: ${String(err)}` });
      return;
    }
    const selection: Selection = {};
    for (const row of this.options.rows) selection[row.key] = row.default;
    await this.applySelection(selection);
  }

  /** Optimistically highlight the new value, then refresh from the server. */
  async select(rowKey: string, value: string): Promise<void> {
    await this.applySelection({ ...this.state.selection, [rowKey]: value });
  }

  /** Show a rule explanation; it persists until a selection renders cleanly. */
  showNotice(text: string): void {
    this.emit({ notice: text });
  }

  async retry(): Promise<void> {
    if (this.options === null) {
      await this.init();
    } else {
      await this.applySelection(this.state.selection);
    }
  }

  private async applySelection(selection: Selection): Promise<void> {
    const seq = ++this.sequence;
    this.emit({ selection, loading: true, error: null });
    try {
      const [result, crossOut] = await Promise.all([
        renderSelection(selection),
        fetchCrossOut(selection),
      ]);
      if (seq !== this.sequence) return; // a newer selection superseded us
      // a 422 carries its own (identical) cross-out map; prefer the render's
      const map = result.kind === 'incompatible' ? result.crossOut : crossOut;
      const notice = result.kind === 'ok' ? null : this.state.notice;
      this.emit({ result, crossOut: map, loading: false, error: null, notice });
    } catch (err) {
      if (seq !== this.sequence) return;
      // keep the previous script visible; the view shows a stale banner
      this.emit({ loading: false, error: String(err) });
    }
  }
}
