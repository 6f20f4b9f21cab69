import type { ComparisonDoc, DiffHunk } from "./types.js";

/**
 * Side-by-side alignment derived purely from the server's hunks; the
 * client never re-diffs. Walking the rows reconstructs both files: every
 * original line appears exactly once on the left, every revised line
 * exactly once on the right.
 */

export interface AlignedCell {
  num: number; // 1-based line number in its own file
  text: string;
}

export type RowKind = "same" | "insert" | "delete" | "replace";

export interface AlignedRow {
  left: AlignedCell | null;
  right: AlignedCell | null;
  kind: RowKind;
  hunkIndex: number | null; // null on unchanged rows
  flagged: boolean;
}

/** Split file text into lines; a trailing newline does not add a line. */
export function splitLines(text: string): string[] {
  if (text === "") return [];
  const lines = text.split("\n");
  if (lines[lines.length - 1] === "") lines.pop();
  return lines;
}

function hunkKey(hunk: DiffHunk): string {
  return `${hunk.kind}:${hunk.original_range.join(",")}:${hunk.revised_range.join(",")}`;
}

function spanLength(range: [number, number]): number {
  return Math.max(0, range[1] - range[0] + 1);
}

export function buildAlignment(doc: ComparisonDoc): AlignedRow[] {
  const original = splitLines(doc.original_text);
  const revised = splitLines(doc.revised_text);
  const flaggedKeys = new Set(doc.flags.map((flag) => hunkKey(flag.hunk)));

  const rows: AlignedRow[] = [];
  let nextOriginal = 1;
  let nextRevised = 1;

  const emitSame = (count: number): void => {
    for (let i = 0; i < count; i += 1) {
      rows.push({
        left: { num: nextOriginal, text: original[nextOriginal - 1] ?? "" },
        right: { num: nextRevised, text: revised[nextRevised - 1] ?? "" },
        kind: "same",
        hunkIndex: null,
        flagged: false,
      });
      nextOriginal += 1;
      nextRevised += 1;
    }
  };

  doc.hunks.forEach((hunk, hunkIndex) => {
    emitSame(hunk.original_range[0] - nextOriginal);
    const kind = hunk.kind.toLowerCase() as RowKind;
    const flagged = flaggedKeys.has(hunkKey(hunk));
    const leftCount = spanLength(hunk.original_range);
    const rightCount = spanLength(hunk.revised_range);
    const height = Math.max(leftCount, rightCount);
    for (let i = 0; i < height; i += 1) {
      const left =
        i < leftCount ? { num: nextOriginal, text: original[nextOriginal - 1] ?? "" } : null;
      const right =
        i < rightCount ? { num: nextRevised, text: revised[nextRevised - 1] ?? "" } : null;
      if (left) nextOriginal += 1;
      if (right) nextRevised += 1;
      rows.push({ left, right, kind, hunkIndex, flagged });
    }
  });

  emitSame(original.length - nextOriginal + 1);
  // A pure insertion at end of file leaves revised lines unemitted.
  while (nextRevised <= revised.length) {
    rows.push({
      left: null,
      right: { num: nextRevised, text: revised[nextRevised - 1] ?? "" },
      kind: "insert",
      hunkIndex: doc.hunks.length > 0 ? doc.hunks.length - 1 : null,
      flagged: false,
    });
    nextRevised += 1;
  }
  return rows;
}

/** Left column of the alignment, in order: must equal the original file. */
export function leftLines(rows: AlignedRow[]): string[] {
  return rows.filter((r) => r.left !== null).map((r) => (r.left as AlignedCell).text);
}

/** Right column of the alignment, in order: must equal the revised file. */
export function rightLines(rows: AlignedRow[]): string[] {
  return rows.filter((r) => r.right !== null).map((r) => (r.right as AlignedCell).text);
}
