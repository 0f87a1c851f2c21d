/* tslint:disable */
/* eslint-disable */

export function constantCurves(psi_a: number, phi_amp: number, alpha: number, t_max: number, points: number): string;

export function fieldPath(psi_a: number, phi_amp: number, alpha: number, n: number, u0_amp: number, t_end: number, frames: number, seed: bigint, points: number): string;

export function ouConvergence(n_max: number, paths: number, t: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly constantCurves: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly fieldPath: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: bigint, i: number) => [number, number, number, number];
    readonly ouConvergence: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
