#ifndef HVSIM_H
#define HVSIM_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HvsimFormat {
  HVSIM_FORMAT_TABLE = 0,
  HVSIM_FORMAT_JSON = 1,
  HVSIM_FORMAT_CSV = 2,
} HvsimFormat;

typedef enum HvsimStatus {
  HVSIM_STATUS_OK = 0,
  HVSIM_STATUS_NULL_POINTER = 1,
  HVSIM_STATUS_INVALID_UTF8 = 2,
  HVSIM_STATUS_CONFIG = 3,
  HVSIM_STATUS_PROGRAM = 4,
  HVSIM_STATUS_LIMIT_EXHAUSTED = 5,
  HVSIM_STATUS_PARSE = 6,
  HVSIM_STATUS_IO = 7,
  HVSIM_STATUS_BUFFER_TOO_SMALL = 8,
  HVSIM_STATUS_PANIC = 9,
} HvsimStatus;

/**
 * Simulator configuration.
 */
typedef struct HvsimConfig HvsimConfig;

/**
 * Result of one completed run.
 */
typedef struct HvsimRun HvsimRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *hvsim_last_error_message(void);

/**
 * Default configuration.
 */
struct HvsimConfig *hvsim_config_new(void);

/**
 * Loads a `key = value` configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HvsimStatus hvsim_config_load(const char *path, struct HvsimConfig **out);

/**
 * Sets one configuration key and revalidates.
 *
 * # Safety
 * `cfg` must come from this library; `key` and `value` must be
 * NUL-terminated strings.
 */
enum HvsimStatus hvsim_config_set(struct HvsimConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must come from this library or be NULL.
 */
void hvsim_config_free(struct HvsimConfig *cfg);

/**
 * Runs a bundled fixture (`"search"` or `"sort"`) with its default inputs.
 * A NULL `cfg` means the default configuration.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HvsimStatus hvsim_run_fixture(const struct HvsimConfig *cfg,
                                   const char *name,
                                   bool virtualized,
                                   struct HvsimRun **out);

/**
 * Runs a user program: an ELF file, a `.s` source or a `.layout` manifest.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HvsimStatus hvsim_run_program(const struct HvsimConfig *cfg,
                                   const char *path,
                                   bool virtualized,
                                   struct HvsimRun **out);

/**
 * # Safety
 * `run` must come from this library or be NULL.
 */
void hvsim_run_free(struct HvsimRun *run);

/**
 * # Safety
 * `run` must be a live handle.
 */
uint64_t hvsim_run_cycles(const struct HvsimRun *run);

/**
 * # Safety
 * `run` must be a live handle.
 */
uint64_t hvsim_run_instret(const struct HvsimRun *run);

/**
 * # Safety
 * `run` must be a live handle.
 */
double hvsim_run_cpi(const struct HvsimRun *run);

/**
 * # Safety
 * `run` must be a live handle.
 */
double hvsim_run_ipc(const struct HvsimRun *run);

/**
 * Number of trace records the run produced.
 *
 * # Safety
 * `run` must be a live handle.
 */
size_t hvsim_run_trace_len(const struct HvsimRun *run);

/**
 * Reads a counter row by key, e.g. `"icache_miss_if"` or
 * `"total_dcache_misses"`.
 *
 * # Safety
 * `run` must be a live handle, `key` a NUL-terminated string and `out` a
 * valid pointer.
 */
enum HvsimStatus hvsim_run_counter(const struct HvsimRun *run, const char *key, uint64_t *out);

/**
 * Console bytes written by the guest. The buffer lives as long as `run`.
 *
 * # Safety
 * `run` must be a live handle and `len` a valid pointer.
 */
const uint8_t *hvsim_run_console(const struct HvsimRun *run, size_t *len);

/**
 * Renders the statistics block. Free the result with
 * [`hvsim_string_free`].
 *
 * # Safety
 * `run` must be a live handle.
 */
char *hvsim_run_render(const struct HvsimRun *run, enum HvsimFormat format);

/**
 * Runs a fixture in both modes and renders the overhead report into
 * `*out`. Free it with [`hvsim_string_free`].
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HvsimStatus hvsim_compare_fixture(const struct HvsimConfig *cfg,
                                       const char *name,
                                       enum HvsimFormat format,
                                       bool with_alt,
                                       char **out);

/**
 * Parses one trace line and writes its canonical form into `*out`.
 *
 * # Safety
 * `line` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HvsimStatus hvsim_trace_normalize(const char *line, char **out);

/**
 * Assembles `source` at `origin` into `words`. `*len` receives the word
 * count; if it exceeds `capacity` nothing is copied and the call returns
 * `BufferTooSmall`.
 *
 * # Safety
 * `source` must be a NUL-terminated string, `len` a valid pointer and
 * `words` valid for `capacity` writes (or NULL when `capacity` is 0).
 */
enum HvsimStatus hvsim_assemble(const char *source,
                                uint32_t origin,
                                uint32_t *words,
                                size_t capacity,
                                size_t *len);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library or be NULL.
 */
void hvsim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HVSIM_H */
