// DOM wiring: start form -> session screen, one server round-trip per
// outcome (no optimistic updates), resume by URL token (#/session/{id}).

import { ApiClient, ServiceError } from './api.js';
import { controlsState, esc, renderSessionView } from './render.js';
import { SessionView } from './types.js';

const api = new ApiClient('');

function startFormHtml(error = ''): string {
  return `
    <section class="start">
      <h2>start a session</h2>
      <form id="start-form">
        <label>samples <input name="n" type="number" min="1" step="1" value="7"></label>
        <label>q <input name="q" type="number" min="0" max="0.999999" step="any" value="0.9999"></label>
        <label>mode
          <select name="mode">
            <option value="fixed">fixed</option>
            <option value="restructuring">restructuring</option>
          </select>
        </label>
        <button type="submit">create</button>
      </form>
      ${error ? `<div class="form-error">${esc(error)}</div>` : ''}
    </section>`;
}

export function validateStart(n: number, q: number): string | null {
  if (!Number.isInteger(n) || n < 1) return 'n must be a whole number >= 1';
  if (!(q >= 0 && q < 1)) return 'q must lie in [0, 1)';
  return null;
}

class App {
  root: HTMLElement;
  view: SessionView | null = null;
  inFlight = false;

  constructor(root: HTMLElement) {
    this.root = root;
  }

  async route(): Promise<void> {
    const match = location.hash.match(/^#\/session\/([0-9a-f]+)$/);
    if (!match) {
      this.renderStart();
      return;
    }
    try {
      this.view = await api.getState(match[1]);
      this.renderSession();
    } catch (err) {
      this.renderStart(err instanceof ServiceError ? err.message : String(err));
    }
  }

  renderStart(error = ''): void {
    this.root.innerHTML = startFormHtml(error);
    const form = this.root.querySelector<HTMLFormElement>('#start-form')!;
    form.addEventListener('submit', async (ev) => {
      ev.preventDefault();
      const data = new FormData(form);
      const n = Number(data.get('n'));
      const q = Number(data.get('q'));
      const mode = String(data.get('mode'));
      const problem = validateStart(n, q);
      if (problem) {
        this.renderStart(problem); // inline validation, no request
        return;
      }
      try {
        this.view = await api.createSession(n, q, mode);
        location.hash = `#/session/${this.view.id}`;
        this.renderSession();
      } catch (err) {
        this.renderStart(err instanceof ServiceError ? err.message : String(err));
      }
    });
  }

  renderSession(): void {
    if (!this.view) return;
    this.root.innerHTML = renderSessionView(this.view, this.inFlight);
    for (const [selector, positive] of [
      ['#btn-positive', true],
      ['#btn-negative', false],
    ] as const) {
      const button = this.root.querySelector<HTMLButtonElement>(selector);
      button?.addEventListener('click', () => void this.submit(positive));
    }
  }

  async submit(positive: boolean): Promise<void> {
    if (!this.view || controlsState(this.view, this.inFlight).disabled) return;
    this.inFlight = true;
    this.renderSession();
    try {
      // the server hands out the pending test, then takes its outcome
      await api.getNext(this.view.id);
      this.view = await api.postResult(this.view.id, positive);
    } catch (err) {
      console.error(err);
    } finally {
      this.inFlight = false;
      this.renderSession();
    }
  }
}

export function mount(root: HTMLElement): App {
  const app = new App(root);
  window.addEventListener('hashchange', () => void app.route());
  void app.route();
  return app;
}

if (typeof document !== 'undefined') {
  const root = document.getElementById('app');
  if (root) mount(root);
}
