/* tslint:disable */
/* eslint-disable */

/**
 * A kitchen played by scripted agents, one tick per [`Simulation::step`].
 */
export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    done(): boolean;
    frame(): string;
    /**
     * `policies` is a comma-separated list of scripted policy names; the
     * last one fills any remaining seats.
     */
    constructor(layout_text: string, policies: string, seed: number);
    score(): number;
    /**
     * Advances one tick and returns the new frame.
     */
    step(): string;
    tick(): number;
}

/**
 * Text of a builtin layout, or an empty string.
 */
export function builtin_layout(name: string): string;

/**
 * CSV report of a scripted ego against the three scripted kinds, for the
 * comma-separated `x_values`.
 */
export function scripted_sweep(layout_text: string, ego: string, x_values: string, episodes: number, seed: number): string;

/**
 * One line per finding, or a summary when the layout is playable.
 */
export function validate_layout(text: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly builtin_layout: (a: number, b: number) => [number, number];
    readonly scripted_sweep: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly simulation_done: (a: number) => number;
    readonly simulation_frame: (a: number) => [number, number];
    readonly simulation_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly simulation_score: (a: number) => number;
    readonly simulation_step: (a: number) => [number, number];
    readonly simulation_tick: (a: number) => number;
    readonly validate_layout: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
