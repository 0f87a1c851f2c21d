/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const constantCurves: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const fieldPath: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: bigint, i: number) => [number, number, number, number];
export const ouConvergence: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
