/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_jcldemo_free: (a: number, b: number) => void;
export const jcldemo_exploration: (a: number) => [number, number];
export const jcldemo_new: (a: number, b: number, c: bigint) => [number, number, number];
export const jcldemo_observations: (a: number) => [number, number];
export const jcldemo_step: (a: number) => [number, number];
export const jcldemo_surface: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
