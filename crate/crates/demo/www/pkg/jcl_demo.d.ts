/* tslint:disable */
/* eslint-disable */

/**
 * A jCL run on a two-dimensional benchmark, advanced one evaluation at a time.
 */
export class JclDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Triangulation, candidate set and Pareto front an exploration step draws from.
     */
    exploration(): string;
    constructor(problem: string, seed: bigint);
    /**
     * All observations so far with the mode that produced each.
     */
    observations(): string;
    /**
     * Evaluates the next suggested point and returns what happened as JSON.
     */
    step(): string;
    /**
     * Joint probability of hitting every target within the current
     * tolerance, on a `grid x grid` lattice, with the true responses.
     */
    surface(grid: number): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_jcldemo_free: (a: number, b: number) => void;
    readonly jcldemo_exploration: (a: number) => [number, number];
    readonly jcldemo_new: (a: number, b: number, c: bigint) => [number, number, number];
    readonly jcldemo_observations: (a: number) => [number, number];
    readonly jcldemo_step: (a: number) => [number, number];
    readonly jcldemo_surface: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
