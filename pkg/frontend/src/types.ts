// Server payload shapes. The console renders these and nothing else: all
// deduction logic lives on the server, the client never speculates about
// outcomes or statuses.

export type SampleStatus = 'unknown' | 'negative' | 'positive';

export type TestStatus =
  | 'pending'
  | 'performed_positive'
  | 'performed_negative'
  | 'deduced_positive'
  | 'deduced_negative';

export interface Span {
  start: number;
  end: number;
}

export interface TestState extends Span {
  status: TestStatus;
}

export interface ReplanNotice {
  from: number;
  plan: string;
}

export interface SessionEvent {
  ts: number;
  span: Span;
  positive: boolean;
  deduced: string[];
  replan: ReplanNotice | null;
}

export interface SessionView {
  id: string;
  n: number;
  q: number;
  mode: 'fixed' | 'restructuring';
  status: 'active' | 'done';
  plan: string;
  current_plan: string;
  replans: ReplanNotice[];
  next: Span | null;
  samples: SampleStatus[];
  tests: TestState[];
  positives: number[];
  tests_performed: number;
  samples_resolved: number;
  expected_total: number;
  expected_remaining: number;
  events: SessionEvent[];
  /** set on POST /result responses when that outcome caused a replan */
  replan?: ReplanNotice | null;
}

export type NextAction =
  | { test: Span }
  | { done: { positives: number[] } };

export interface ApiError {
  code: string;
  message: string;
}
