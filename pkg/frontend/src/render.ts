// Pure view rendering: SessionView in, HTML string out. Every dynamic
// value is wrapped by bind(), which stamps the payload path it came from
// as a data-src attribute; the test suite resolves each path against the
// recorded fixture to prove no rendered field lacks a server source.

import { parsePlan, PlanNode } from './plan.js';
import { SessionView, TestState } from './types.js';

export function esc(raw: string): string {
  return raw
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function bind(path: string, text: string, cls = ''): string {
  const klass = cls ? ` class="${cls}"` : '';
  return `<span${klass} data-src="${esc(path)}">${esc(text)}</span>`;
}

function spanLabel(start: number, end: number): string {
  return end - start === 1 ? `sample ${start}` : `samples [${start},${end})`;
}

export interface Controls {
  disabled: boolean;
  reason: 'ready' | 'done' | 'awaiting-server';
}

/** Outcome buttons are usable only when a pool is highlighted and no
 * request is in flight. */
export function controlsState(view: SessionView, inFlight: boolean): Controls {
  if (view.status === 'done' || view.next === null) {
    return { disabled: true, reason: 'done' };
  }
  if (inFlight) {
    return { disabled: true, reason: 'awaiting-server' };
  }
  return { disabled: false, reason: 'ready' };
}

function testIndex(view: SessionView): Map<string, [number, TestState]> {
  const map = new Map<string, [number, TestState]>();
  view.tests.forEach((t, i) => map.set(`${t.start}:${t.end}`, [i, t]));
  return map;
}

export function renderPlanTree(view: SessionView): string {
  const roots = parsePlan(view.current_plan);
  const index = testIndex(view);
  const nextKey = view.next ? `${view.next.start}:${view.next.end}` : '';

  function renderNode(node: PlanNode): string {
    const key = `${node.start}:${node.end}`;
    const entry = index.get(key);
    const status = entry ? entry[1].status : 'unknown-state';
    const statusSrc = entry ? `tests.${entry[0]}.status` : 'tests';
    const classes = ['node', status === 'unknown-state' ? status : `st-${status}`];
    if (key === nextKey) classes.push('next');
    const label =
      `<span class="label">${esc(spanLabel(node.start, node.end))} ` +
      `${bind(statusSrc, status, 'status')}</span>`;
    if (node.children.length === 0) {
      return `<li class="${classes.join(' ')}">${label}</li>`;
    }
    const inner = node.children.map(renderNode).join('');
    return `<li class="${classes.join(' ')}">${label}<ul>${inner}</ul></li>`;
  }

  return `<ul class="plan-tree" data-src="current_plan">${roots
    .map(renderNode)
    .join('')}</ul>`;
}

export function renderSampleChips(view: SessionView): string {
  const index = testIndex(view);
  const chips = view.samples.map((status, i) => {
    let label: string = status;
    const leaf = index.get(`${i}:${i + 1}`);
    if (status === 'positive' && leaf && leaf[1].status === 'deduced_positive') {
      label = 'positive (deduced, untested)';
    }
    return (
      `<li class="chip ${status}">#${i} ` + bind(`samples.${i}`, label) + `</li>`
    );
  });
  return `<ul class="chips">${chips.join('')}</ul>`;
}

export function renderReplanBanners(view: SessionView): string {
  if (!view.replans.length) return '';
  const banners = view.replans.map(
    (r, i) =>
      `<div class="replan-banner">replanned from sample ` +
      bind(`replans.${i}.from`, String(r.from)) +
      `: fresh plan ` +
      bind(`replans.${i}.plan`, r.plan, 'notation') +
      `</div>`
  );
  return banners.join('');
}

export function renderEventFeed(view: SessionView): string {
  const rows = view.events.map((ev, i) => {
    const outcome = ev.positive ? 'POS' : 'NEG';
    const deduced = ev.deduced.length
      ? `<ul class="deduced">${ev.deduced
          .map((d, j) => `<li>${bind(`events.${i}.deduced.${j}`, d)}</li>`)
          .join('')}</ul>`
      : '';
    const replan = ev.replan
      ? `<div class="mini-replan">replan: ${bind(
          `events.${i}.replan.plan`,
          ev.replan.plan,
          'notation'
        )}</div>`
      : '';
    return (
      `<li class="event">${bind(
        `events.${i}.span`,
        spanLabel(ev.span.start, ev.span.end)
      )} &rarr; ${bind(`events.${i}.positive`, outcome, `outcome ${outcome}`)}` +
      deduced +
      replan +
      `</li>`
    );
  });
  return `<ol class="events">${rows.join('')}</ol>`;
}

export function renderCounters(view: SessionView): string {
  return (
    `<dl class="counters">` +
    `<dt>tests performed</dt><dd>${bind(
      'tests_performed',
      String(view.tests_performed)
    )}</dd>` +
    `<dt>samples resolved</dt><dd>${bind(
      'samples_resolved',
      String(view.samples_resolved)
    )} / ${bind('n', String(view.n))}</dd>` +
    `<dt>expected total</dt><dd>${bind(
      'expected_total',
      view.expected_total.toFixed(3)
    )}</dd>` +
    `<dt>expected remaining</dt><dd>${bind(
      'expected_remaining',
      view.expected_remaining.toFixed(3)
    )}</dd>` +
    `</dl>`
  );
}

export function renderNextPrompt(view: SessionView): string {
  if (view.next === null) {
    return (
      `<div class="prompt done">finished &mdash; positives: ` +
      bind('positives', JSON.stringify(view.positives)) +
      `</div>`
    );
  }
  return (
    `<div class="prompt">test ` +
    bind('next', spanLabel(view.next.start, view.next.end), 'highlight') +
    ` and report the outcome</div>`
  );
}

export function renderSessionView(view: SessionView, inFlight = false): string {
  const controls = controlsState(view, inFlight);
  const disabled = controls.disabled ? ' disabled' : '';
  return (
    `<section class="session" data-session="${esc(view.id)}">` +
    `<header>` +
    `<h2>session ${bind('id', view.id)}</h2>` +
    `<p>n=${bind('n', String(view.n))} q=${bind('q', String(view.q))} ` +
    `mode=${bind('mode', view.mode)} status=${bind('status', view.status, view.status)}</p>` +
    `</header>` +
    renderReplanBanners(view) +
    renderNextPrompt(view) +
    `<div class="controls" data-reason="${controls.reason}">` +
    `<button id="btn-positive"${disabled}>positive</button>` +
    `<button id="btn-negative"${disabled}>negative</button>` +
    `</div>` +
    renderCounters(view) +
    renderPlanTree(view) +
    renderSampleChips(view) +
    renderEventFeed(view) +
    `</section>`
  );
}
