import { ApiError } from "./api.js";

/**
 * Decision-control state machine. No optimistic UI: controls lock when a
 * request starts and unlock only on the service's answer. A conflict
 * (run already applied) disables the controls for good; a validation
 * error surfaces inline and unlocks.
 */

export type ControlPhase = "ready" | "busy" | "disabled";

export interface ControlState {
  phase: ControlPhase;
  error: string | null;
}

export const initialControls: ControlState = { phase: "ready", error: null };

export function lock(state: ControlState): ControlState {
  return { phase: "busy", error: null };
}

export function settled(state: ControlState): ControlState {
  return { phase: "ready", error: null };
}

export function failed(state: ControlState, error: unknown): ControlState {
  if (error instanceof ApiError && error.isConflict) {
    return { phase: "disabled", error: error.message };
  }
  const message = error instanceof Error ? error.message : String(error);
  return { phase: "ready", error: message };
}

export function canSubmit(state: ControlState): boolean {
  return state.phase === "ready";
}

/**
 * Run a service call under the lock. Returns the new control state plus
 * the call's result (when it succeeded).
 */
export async function withLock<T>(
  state: ControlState,
  call: () => Promise<T>,
  onTransition: (state: ControlState) => void,
): Promise<{ state: ControlState; result: T | null }> {
  if (!canSubmit(state)) {
    return { state, result: null };
  }
  let current = lock(state);
  onTransition(current);
  try {
    const result = await call();
    current = settled(current);
    onTransition(current);
    return { state: current, result };
  } catch (error) {
    current = failed(current, error);
    onTransition(current);
    return { state: current, result: null };
  }
}
