import type { FileEntry, RunFilesResponse } from "./types.js";

/**
 * Review queue order: pending flagged files first, then pending clean
 * files, then everything already decided; path order within each band.
 */
export function orderQueue(files: FileEntry[]): FileEntry[] {
  const band = (file: FileEntry): number => {
    if (file.status === "PENDING") return file.flag_count > 0 ? 0 : 1;
    return 2;
  };
  return [...files].sort((a, b) => {
    const delta = band(a) - band(b);
    if (delta !== 0) return delta;
    return a.path < b.path ? -1 : a.path > b.path ? 1 : 0;
  });
}

export interface Progress {
  decided: number;
  total: number;
}

export function progress(files: FileEntry[]): Progress {
  return {
    decided: files.filter((f) => f.status !== "PENDING").length,
    total: files.length,
  };
}

/** The apply affordance is enabled once the gate is clear and the run has
 * not already been applied. */
export function readyToApply(run: Pick<RunFilesResponse, "applied" | "pending_required">): boolean {
  return !run.applied && run.pending_required.length === 0;
}

/** Next file needing attention after `currentPath`, walking queue order. */
export function nextPending(files: FileEntry[], currentPath: string | null): FileEntry | null {
  const queue = orderQueue(files).filter((f) => f.status === "PENDING" && f.path !== currentPath);
  return queue.length > 0 ? (queue[0] ?? null) : null;
}
