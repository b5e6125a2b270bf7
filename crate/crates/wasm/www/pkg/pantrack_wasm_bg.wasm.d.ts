/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_correlation_free: (a: number, b: number) => void;
export const __wbg_session_free: (a: number, b: number) => void;
export const correlate: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const correlation_dx: (a: number) => number;
export const correlation_dy: (a: number) => number;
export const correlation_moved: (a: number) => [number, number];
export const correlation_peak: (a: number) => number;
export const correlation_reference: (a: number) => [number, number];
export const correlation_size: (a: number) => number;
export const correlation_surface: (a: number) => [number, number];
export const default_scene: () => [number, number];
export const session_frame_count: (a: number) => number;
export const session_height: (a: number) => number;
export const session_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const session_status: (a: number) => [number, number];
export const session_step: (a: number) => [number, number, number];
export const session_view: (a: number, b: number, c: number) => [number, number];
export const session_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
