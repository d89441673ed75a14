// Parser for the compact plan notation: "x" is one sample, "[...]" pools
// everything inside under a single test. Mirrors the server grammar so a
// payload's notation can be laid out as a tree; spans index samples.

export interface PlanNode {
  start: number;
  end: number;
  children: PlanNode[];
}

export function parsePlan(text: string): PlanNode[] {
  let i = 0;
  let offset = 0;

  function skipWs(): void {
    while (i < text.length && /\s/.test(text[i])) i += 1;
  }

  function unit(): PlanNode {
    const ch = text[i];
    if (ch === 'x') {
      i += 1;
      const node = { start: offset, end: offset + 1, children: [] };
      offset += 1;
      return node;
    }
    if (ch === '[') {
      i += 1;
      const start = offset;
      const children: PlanNode[] = [];
      for (;;) {
        skipWs();
        if (i >= text.length) throw new Error("unbalanced bracket: missing ']'");
        if (text[i] === ']') {
          i += 1;
          break;
        }
        children.push(unit());
      }
      if (children.length < 2) throw new Error('a pool needs at least two units');
      return { start, end: offset, children };
    }
    throw new Error(`unexpected character ${JSON.stringify(ch)} at ${i}`);
  }

  const roots: PlanNode[] = [];
  skipWs();
  while (i < text.length) {
    if (text[i] === ']') throw new Error(`unbalanced bracket: stray ']' at ${i}`);
    roots.push(unit());
    skipWs();
  }
  if (roots.length === 0) throw new Error('empty plan');
  return roots;
}
