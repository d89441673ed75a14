// Fixture-driven rendering tests. Fixtures are genuine server payloads
// recorded by scripts/record_fixtures.py; rendering must surface exactly
// what they contain and nothing else.

import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import {
  controlsState,
  renderPlanTree,
  renderReplanBanners,
  renderSampleChips,
  renderSessionView,
} from '../src/render.js';
import { parsePlan } from '../src/plan.js';
import { SessionView } from '../src/types.js';

function fixture(name: string): SessionView {
  const raw = readFileSync(join(__dirname, 'fixtures', `${name}.json`), 'utf-8');
  return JSON.parse(raw) as SessionView;
}

function resolvePath(payload: unknown, path: string): unknown {
  let value: any = payload;
  for (const part of path.split('.')) {
    if (value === null || value === undefined) return undefined;
    value = value[part];
  }
  return value;
}

const FIXTURES = ['fresh_pair', 'deduced_positive_done', 'replanned', 'mid_session'];

describe('plan notation parsing', () => {
  it('lays out nested pools with sample spans', () => {
    const roots = parsePlan('x[x[xx]]');
    expect(roots.length).toBe(2);
    expect(roots[0]).toEqual({ start: 0, end: 1, children: [] });
    expect(roots[1].start).toBe(1);
    expect(roots[1].end).toBe(4);
    expect(roots[1].children[1].children.length).toBe(2);
  });

  it('rejects malformed notation', () => {
    for (const bad of ['', '[x]', '[xx', 'xx]', 'y']) {
      expect(() => parsePlan(bad)).toThrow();
    }
  });
});

describe('session rendering', () => {
  it('renders the deduced-positive-untested sample from the server payload', () => {
    const view = fixture('deduced_positive_done');
    const chips = renderSampleChips(view);
    expect(chips).toContain('positive (deduced, untested)');
    expect(chips).toContain('data-src="samples.1"');
    const tree = renderPlanTree(view);
    expect(tree).toContain('st-deduced_positive');
    expect(controlsState(view, false).disabled).toBe(true);
  });

  it('shows the replan banner with the fresh suffix plan', () => {
    const view = fixture('replanned');
    const banners = renderReplanBanners(view);
    expect(banners).toContain('replan-banner');
    expect(banners).toContain(view.replans[0].plan);
    // the tree now reflects the replaced suffix
    const tree = renderPlanTree(view);
    expect(tree).toContain('data-src="current_plan"');
    expect(view.current_plan).not.toBe(view.plan);
  });

  it('highlights the pending pool and enables the buttons', () => {
    const view = fixture('mid_session');
    expect(view.next).not.toBeNull();
    const html = renderSessionView(view, false);
    expect(html).toContain('class="node');
    expect(html).toContain('next');
    expect(html).not.toContain('disabled>');
    expect(controlsState(view, false).disabled).toBe(false);
  });

  it('disables outcome buttons while awaiting the server or when done', () => {
    const active = fixture('fresh_pair');
    expect(controlsState(active, true)).toEqual({
      disabled: true,
      reason: 'awaiting-server',
    });
    const done = fixture('deduced_positive_done');
    expect(controlsState(done, false).reason).toBe('done');
    const html = renderSessionView(done, false);
    expect(html).toContain('<button id="btn-positive" disabled>');
    expect(html).toContain('<button id="btn-negative" disabled>');
  });

  it('never renders an unknown test state on real payloads', () => {
    for (const name of FIXTURES) {
      expect(renderPlanTree(fixture(name))).not.toContain('unknown-state');
    }
  });
});

describe('no rendered field lacks a server-payload source', () => {
  for (const name of FIXTURES) {
    it(`every data-src path in ${name} resolves in the fixture`, () => {
      const view = fixture(name);
      const html = renderSessionView(view, false);
      const paths = [...html.matchAll(/data-src="([^"]+)"/g)].map((m) => m[1]);
      expect(paths.length).toBeGreaterThan(5);
      for (const path of paths) {
        expect(resolvePath(view, path), path).not.toBeUndefined();
      }
    });

    it(`rendered view of ${name} matches its recorded snapshot`, () => {
      expect(renderSessionView(fixture(name), false)).toMatchSnapshot();
    });
  }
});
