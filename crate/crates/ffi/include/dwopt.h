#ifndef DWOPT_H
#define DWOPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DWOPT_FIELD_GRADIENT 0

#define DWOPT_FIELD_EXACT_DIFFERENCE 1

/**
 * Opaque batch of spin configurations.
 */
typedef struct DwoptBatch DwoptBatch;

/**
 * Opaque chain handle.
 */
typedef struct DwoptChain DwoptChain;

typedef int32_t DwoptStatus;

typedef struct {
  double e0;
  double e1;
  size_t n_enc;
  size_t degeneracy;
} DwoptSpectrum;

typedef struct {
  double t_a;
  double rho;
  double p_const;
  double e_res;
  double p_gs;
  double truncation_error;
} DwoptTebdPoint;

#define DWOPT_OK 0

#define DWOPT_NULL_POINTER 1

#define DWOPT_INVALID_ARGUMENT 2

#define DWOPT_CONSTRAINT_VIOLATED 3

#define DWOPT_PARSE_ERROR 4

#define DWOPT_PANIC 5

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *dwopt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dwopt_version(void);

/**
 * Build the washboard chain (`k = 0.5`, `w0 = 0.2`, box `[-3, 3]`, `J = 1`, `h = 2`).
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
DwoptStatus dwopt_chain_new(double h0,
                            size_t n_spins,
                            double lambda,
                            int32_t field_mode,
                            DwoptChain **out);

/**
 * Parse a chain from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid handle slot.
 */
DwoptStatus dwopt_chain_from_json(const char *json, DwoptChain **out);

/**
 * Serialize a chain to JSON; release the string with `dwopt_string_free`.
 *
 * # Safety
 * `chain` must be a live handle and `out` a valid pointer.
 */
DwoptStatus dwopt_chain_to_json(const DwoptChain *chain, char **out);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void dwopt_string_free(char *s);

/**
 * # Safety
 * `chain` must come from `dwopt_chain_new`/`dwopt_chain_from_json` or be null.
 */
void dwopt_chain_free(DwoptChain *chain);

/**
 * # Safety
 * `chain` must be a live handle or null.
 */
size_t dwopt_chain_n_spins(const DwoptChain *chain);

/**
 * Classical energy of `spins[0..len]` (entries ±1).
 *
 * # Safety
 * `spins` must point to `len` readable bytes and `out` to a writable double.
 */
DwoptStatus dwopt_chain_energy(const DwoptChain *chain,
                               const int8_t *spins,
                               size_t len,
                               double *out);

/**
 * Decoded value of a single-wall configuration; `DWOPT_CONSTRAINT_VIOLATED` otherwise.
 *
 * # Safety
 * As for `dwopt_chain_energy`.
 */
DwoptStatus dwopt_chain_decode(const DwoptChain *chain,
                               const int8_t *spins,
                               size_t len,
                               double *out_x);

/**
 * Write the single-wall configuration nearest to `x` into `out[0..len]`.
 *
 * # Safety
 * `out` must point to `len` writable bytes.
 */
DwoptStatus dwopt_chain_encode(const DwoptChain *chain, double x, int8_t *out, size_t len);

/**
 * Ground energy, first excited level, `n_enc` and ground degeneracy.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
DwoptStatus dwopt_exact_spectrum(const DwoptChain *chain, DwoptSpectrum *out);

/**
 * Simulated annealing with a linear temperature ramp from `t0` to `t1`.
 *
 * # Safety
 * `chain` must be a live handle and `out` a valid handle slot.
 */
DwoptStatus dwopt_sa_run(const DwoptChain *chain,
                         size_t t_mcs,
                         double t0,
                         double t1,
                         size_t n_reads,
                         uint64_t seed,
                         DwoptBatch **out);

/**
 * # Safety
 * `batch` must be a live handle or null.
 */
size_t dwopt_batch_len(const DwoptBatch *batch);

/**
 * Copy sample `index` into `out[0..len]`.
 *
 * # Safety
 * `batch` must be a live handle and `out` point to `len` writable bytes.
 */
DwoptStatus dwopt_batch_sample(const DwoptBatch *batch, size_t index, int8_t *out, size_t len);

/**
 * # Safety
 * `batch` must come from this library or be null.
 */
void dwopt_batch_free(DwoptBatch *batch);

/**
 * One TEBD anneal of duration `t_a` from the uniform superposition.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
DwoptStatus dwopt_tebd_point(const DwoptChain *chain,
                             double t_a,
                             double dt,
                             size_t chi_max,
                             DwoptTebdPoint *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DWOPT_H */
