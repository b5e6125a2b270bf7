/* tslint:disable */
/* eslint-disable */

/**
 * Result of one correlation run. Images are RGBA, `size` x `size`.
 */
export class Correlation {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    moved(): Uint8Array;
    reference(): Uint8Array;
    /**
     * Correlation surface with zero shift at the centre, scaled to 0..255.
     */
    surface(): Uint8Array;
    readonly dx: number;
    readonly dy: number;
    readonly peak: number;
    readonly size: number;
}

/**
 * Frame-by-frame run of the full pipeline over a rendered scene.
 */
export class Session {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `spec_json` is a scene description; `eta` and `alpha` override the
     * pipeline defaults.
     */
    constructor(spec_json: string, eta: number, alpha: number);
    /**
     * Tracks and running scores of the last processed frame, as JSON.
     */
    status(): string;
    /**
     * Process the next frame. Returns false once the scene is exhausted.
     */
    step(): boolean;
    /**
     * RGBA pixels of one view of the last processed frame: `annotated`,
     * `background`, `dissimilarity`, `weight`, `difference`, `mask` or
     * `blobs`. Views other than `annotated` are black before the history
     * fills.
     */
    view(kind: string): Uint8Array;
    readonly frame_count: number;
    readonly height: number;
    readonly width: number;
}

/**
 * Shift a textured frame by `(dx, dy)`, add uniform noise of the given
 * amplitude, and estimate the shift back.
 */
export function correlate(size: number, dx: number, dy: number, noise: number, seed: bigint): Correlation;

/**
 * JSON for the default demo scene, as a starting point for editing.
 */
export function default_scene(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_correlation_free: (a: number, b: number) => void;
    readonly __wbg_session_free: (a: number, b: number) => void;
    readonly correlate: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly correlation_dx: (a: number) => number;
    readonly correlation_dy: (a: number) => number;
    readonly correlation_moved: (a: number) => [number, number];
    readonly correlation_peak: (a: number) => number;
    readonly correlation_reference: (a: number) => [number, number];
    readonly correlation_size: (a: number) => number;
    readonly correlation_surface: (a: number) => [number, number];
    readonly default_scene: () => [number, number];
    readonly session_frame_count: (a: number) => number;
    readonly session_height: (a: number) => number;
    readonly session_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly session_status: (a: number) => [number, number];
    readonly session_step: (a: number) => [number, number, number];
    readonly session_view: (a: number, b: number, c: number) => [number, number];
    readonly session_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
