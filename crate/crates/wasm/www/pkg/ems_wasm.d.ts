/* tslint:disable */
/* eslint-disable */

/**
 * Efficiency map of `"engine"`, `"motor"` (PHEV) or `"fcev_motor"` on an `n × n` grid.
 */
export function efficiency_map(component: string, n: number): string;

/**
 * Drives the reference PHEV over WLTC with a constant engine torque share `split` in [0, 1].
 */
export function simulate_fixed_split(split: number, start_soc: number): string;

/**
 * Q-learning on the reference PHEV with the instantaneous equivalent-consumption reward.
 */
export function train_qlearning(equivalence_factor: number, episodes: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly efficiency_map: (a: number, b: number, c: number) => [number, number];
    readonly simulate_fixed_split: (a: number, b: number) => [number, number];
    readonly train_qlearning: (a: number, b: number, c: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
