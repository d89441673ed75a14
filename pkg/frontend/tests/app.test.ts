// Client-side form validation: bad inputs never reach the server.

import { describe, expect, it } from 'vitest';

import { validateStart } from '../src/app.js';

describe('start-form validation', () => {
  it('accepts sane inputs', () => {
    expect(validateStart(7, 0.9999)).toBeNull();
    expect(validateStart(1, 0)).toBeNull();
  });

  it('rejects q outside [0, 1)', () => {
    expect(validateStart(5, 1.5)).toMatch(/q must/);
    expect(validateStart(5, 1.0)).toMatch(/q must/);
    expect(validateStart(5, -0.1)).toMatch(/q must/);
  });

  it('rejects non-positive or fractional n', () => {
    expect(validateStart(0, 0.9)).toMatch(/n must/);
    expect(validateStart(2.5, 0.9)).toMatch(/n must/);
  });
});
