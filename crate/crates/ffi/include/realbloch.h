#ifndef REALBLOCH_H
#define REALBLOCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  RB_STATUS_OK = 0,
  RB_STATUS_NULL_POINTER = 1,
  RB_STATUS_INVALID_ARGUMENT = 2,
  RB_STATUS_CONFIG = 3,
  RB_STATUS_GAP_CLOSURE = 4,
  RB_STATUS_SYMMETRY_VIOLATION = 5,
  RB_STATUS_REFINEMENT = 6,
  RB_STATUS_UNSUPPORTED = 7,
  RB_STATUS_MODEL = 8,
  RB_STATUS_IO = 9,
  RB_STATUS_PANIC = 10,
  RB_STATUS_INTERNAL = 11,
} RbStatus;

typedef enum {
  RB_TOPOLOGY_CIRCLE = 0,
  RB_TOPOLOGY_TORUS2 = 1,
  RB_TOPOLOGY_SPHERE2 = 2,
} RbTopology;

typedef enum {
  RB_INVOLUTION_TRIVIAL = 0,
  RB_INVOLUTION_REFLECTION = 1,
  RB_INVOLUTION_ANTIPODAL = 2,
  RB_INVOLUTION_ETA = 3,
  RB_INVOLUTION_ETA_FIRST = 4,
  RB_INVOLUTION_XI = 5,
  RB_INVOLUTION_KAPPA = 6,
} RbInvolution;

/**
 * Opaque classification result.
 */
typedef struct RbClassification RbClassification;

/**
 * Opaque lattice with its involution.
 */
typedef struct RbLattice RbLattice;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a successful call.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *rb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rb_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void rb_string_free(char *s);

/**
 * Builds a lattice. `sizes` holds 1 entry for the circle and 2 otherwise.
 *
 * # Safety
 * `sizes` must point to `n_sizes` values and `out` must be writable.
 */
RbStatus rb_lattice_new(RbTopology topology,
                        const size_t *sizes,
                        size_t n_sizes,
                        RbInvolution involution,
                        RbLattice **out);

/**
 * # Safety
 * `lattice` must come from `rb_lattice_new` or be null.
 */
void rb_lattice_free(RbLattice *lattice);

/**
 * # Safety
 * `lattice` must be a live handle and `out` writable.
 */
RbStatus rb_lattice_num_sites(const RbLattice *lattice, size_t *out);

/**
 * # Safety
 * `lattice` must be a live handle and `out` writable.
 */
RbStatus rb_lattice_num_fixed_loops(const RbLattice *lattice, size_t *out);

/**
 * Classifies the Real bundle of a named model on `lattice`.
 *
 * `params_json` is a JSON object of model parameters or null. `bands` selects
 * 0-based band indices for Hamiltonian models and is ignored by product models.
 *
 * # Safety
 * Pointers must be valid; `bands` must hold `n_bands` values; `out` must be writable.
 */
RbStatus rb_classify_model(const RbLattice *lattice,
                           const char *model,
                           const char *params_json,
                           const size_t *bands,
                           size_t n_bands,
                           RbClassification **out);

/**
 * # Safety
 * `result` must come from `rb_classify_model` or be null.
 */
void rb_classification_free(RbClassification *result);

/**
 * Chern number of the class. Fails with `InvalidArgument` on bases without a free part.
 *
 * # Safety
 * `result` must be a live handle and `out` writable.
 */
RbStatus rb_classification_chern(const RbClassification *result, int64_t *out);

/**
 * Number of fixed-loop holonomy signs.
 *
 * # Safety
 * `result` must be a live handle and `out` writable.
 */
RbStatus rb_classification_torsion_len(const RbClassification *result, size_t *out);

/**
 * Fixed-loop holonomy sign `index`, +1 or -1.
 *
 * # Safety
 * `result` must be a live handle and `out` writable.
 */
RbStatus rb_classification_torsion_at(const RbClassification *result, size_t index, int8_t *out);

/**
 * Full result as JSON. Release with `rb_string_free`.
 *
 * # Safety
 * `result` must be a live handle and `out` writable.
 */
RbStatus rb_classification_to_json(const RbClassification *result, char **out);

/**
 * Holonomy e^{-2πia} of the flat moduli family.
 *
 * # Safety
 * `re` and `im` must be writable.
 */
RbStatus rb_flat_moduli_holonomy(double a, double *re, double *im);

/**
 * Runs a CLI config (same JSON schema as `realbloch run`) in memory and returns
 * the report JSON. No files are written.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out_report` writable.
 */
RbStatus rb_run_config_json(const char *config_json, double resolution_scale, char **out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REALBLOCH_H */
