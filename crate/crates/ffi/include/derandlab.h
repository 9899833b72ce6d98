/* C interface to the derandlab workbench. */

#ifndef DERANDLAB_H
#define DERANDLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of one call. Anything but `Ok` leaves a message in
 * [`dl_last_error`].
 */
typedef enum DlStatus {
  DL_STATUS_OK = 0,
  DL_STATUS_NULL_ARGUMENT,
  DL_STATUS_DIMENSION,
  DL_STATUS_SPEC,
  DL_STATUS_CAP,
  DL_STATUS_PARAM,
  DL_STATUS_CONSTRUCTION,
  DL_STATUS_WIDTH,
  DL_STATUS_PARSE,
  DL_STATUS_IO,
  DL_STATUS_JSON,
  DL_STATUS_UTF8,
  DL_STATUS_PANIC,
} DlStatus;

/**
 * Two-layer circuit: a sym, threshold, or table top over small gates.
 */
typedef struct DlCircuit DlCircuit;

/**
 * Family of same-size blocks with bounded pairwise overlap.
 */
typedef struct DlDesign DlDesign;

/**
 * Seed-stretching generator: one hard-function value per design block.
 */
typedef struct DlGenerator DlGenerator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dl_last_error(void);

/**
 * Library version as a static string.
 */
const char *dl_version(void);

/**
 * Releases a string returned through a `char **` out-parameter.
 *
 * # Safety
 * `s` must be null or a pointer produced by this library.
 */
void dl_string_free(char *s);

/**
 * Builds a design with `s` blocks of size `r` overlapping in at most `l`
 * points.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DlStatus dl_design_build(uintptr_t s, uintptr_t r, uintptr_t l, struct DlDesign **out);

/**
 * Parses the text form: header `m r l s`, then one block per line.
 *
 * # Safety
 * `text` must be a valid C string and `out` a valid pointer.
 */
enum DlStatus dl_design_parse(const char *text, struct DlDesign **out);

/**
 * Writes the design's text form to `*out`.
 *
 * # Safety
 * `design` must be a live handle and `out` a valid pointer.
 */
enum DlStatus dl_design_to_text(const struct DlDesign *design, char **out);

/**
 * Re-checks the overlap bound; reports the worst pairwise overlap seen.
 *
 * # Safety
 * All pointers must be valid; `design` must be a live handle.
 */
enum DlStatus dl_design_verify(const struct DlDesign *design, bool *ok, uintptr_t *max_overlap);

/**
 * Number of blocks, or 0 for a null handle.
 *
 * # Safety
 * `design` must be null or a live handle.
 */
uintptr_t dl_design_num_blocks(const struct DlDesign *design);

/**
 * Block size, or 0 for a null handle.
 *
 * # Safety
 * `design` must be null or a live handle.
 */
uintptr_t dl_design_block_size(const struct DlDesign *design);

/**
 * Universe size (seed length of a generator over this design), or 0 for
 * a null handle.
 *
 * # Safety
 * `design` must be null or a live handle.
 */
uintptr_t dl_design_universe(const struct DlDesign *design);

/**
 * # Safety
 * `design` must be null or a handle not freed before.
 */
void dl_design_free(struct DlDesign *design);

/**
 * Creates a generator over a copy of `design`. `hard_spec` is one of
 * `rw:m,k,r`, `gip:m,j`, or `parity:r`; the function's arity must equal
 * the design's block size. `output_len` of 0 means one output per block.
 *
 * # Safety
 * `design` must be a live handle, `hard_spec` a valid C string, `out` a
 * valid pointer.
 */
enum DlStatus dl_generator_new(const struct DlDesign *design,
                               const char *hard_spec,
                               uintptr_t output_len,
                               struct DlGenerator **out);

/**
 * Seed length in bits, or 0 for a null handle.
 *
 * # Safety
 * `generator` must be null or a live handle.
 */
uintptr_t dl_generator_seed_len(const struct DlGenerator *generator);

/**
 * Output length in bits, or 0 for a null handle.
 *
 * # Safety
 * `generator` must be null or a live handle.
 */
uintptr_t dl_generator_output_len(const struct DlGenerator *generator);

/**
 * Expands `seed` (bytes holding 0 or 1) into `out`, one byte per output
 * bit. `seed_len` must equal the seed length and `out_len` the output
 * length.
 *
 * # Safety
 * `generator` must be a live handle; `seed` and `out` must point to
 * `seed_len` and `out_len` readable/writable bytes.
 */
enum DlStatus dl_generator_expand(const struct DlGenerator *generator,
                                  const uint8_t *seed,
                                  uintptr_t seed_len,
                                  uint8_t *out,
                                  uintptr_t out_len);

/**
 * # Safety
 * `generator` must be null or a handle not freed before.
 */
void dl_generator_free(struct DlGenerator *generator);

/**
 * Parses and validates a circuit from its JSON form.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum DlStatus dl_circuit_parse(const char *json, struct DlCircuit **out);

/**
 * Input arity, or 0 for a null handle.
 *
 * # Safety
 * `circuit` must be null or a live handle.
 */
uintptr_t dl_circuit_arity(const struct DlCircuit *circuit);

/**
 * Evaluates the circuit on the input whose bit i is variable i.
 *
 * # Safety
 * `circuit` must be a live handle and `out` a valid pointer.
 */
enum DlStatus dl_circuit_eval(const struct DlCircuit *circuit, uint64_t x, bool *out);

/**
 * Exact agreement of the circuit with a hard function of the same arity,
 * and that agreement minus one half.
 *
 * # Safety
 * `circuit` must be a live handle; `hard_spec` a valid C string;
 * `agreement` and `correlation` valid pointers.
 */
enum DlStatus dl_circuit_correlation(const struct DlCircuit *circuit,
                                     const char *hard_spec,
                                     double *agreement,
                                     double *correlation);

/**
 * # Safety
 * `circuit` must be null or a handle not freed before.
 */
void dl_circuit_free(struct DlCircuit *circuit);

/**
 * Runs the parameter calculator and writes its JSON report to `*out`.
 * `profile` is `viola`, `ls11_sym`, `ls11_thr`, `main`, or `many_gates`;
 * `r_cap` of 0 leaves the block size uncapped.
 *
 * # Safety
 * `profile` must be a valid C string and `out` a valid pointer.
 */
enum DlStatus dl_params_json(const char *profile,
                             uint64_t s,
                             double eps,
                             double tau,
                             double c_d,
                             uint64_t r_cap,
                             char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DERANDLAB_H */
