// Thin fetch client for the session service. Errors carry the server's
// {code, message} payload.

import { NextAction, SessionView } from './types.js';

export class ServiceError extends Error {
  code: string;

  constructor(code: string, message: string) {
    super(message);
    this.code = code;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { 'content-type': 'application/json' },
    ...init,
  });
  const body = await resp.json();
  if (!resp.ok) {
    throw new ServiceError(body.code ?? `http_${resp.status}`, body.message ?? resp.statusText);
  }
  return body as T;
}

export class ApiClient {
  base: string;

  constructor(base = '') {
    this.base = base.replace(/\/$/, '');
  }

  createSession(n: number, q: number, mode: string): Promise<SessionView> {
    return request(`${this.base}/sessions`, {
      method: 'POST',
      body: JSON.stringify({ n, q, mode }),
    });
  }

  getState(id: string): Promise<SessionView> {
    return request(`${this.base}/sessions/${id}`);
  }

  getNext(id: string): Promise<NextAction> {
    return request(`${this.base}/sessions/${id}/next`);
  }

  postResult(id: string, positive: boolean): Promise<SessionView> {
    return request(`${this.base}/sessions/${id}/result`, {
      method: 'POST',
      body: JSON.stringify({ positive }),
    });
  }
}
