#ifndef PLA_H
#define PLA_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PlaStatus {
  PLA_STATUS_OK = 0,
  PLA_STATUS_NULL_POINTER = 1,
  PLA_STATUS_KEY = 2,
  PLA_STATUS_LENGTH = 3,
  PLA_STATUS_PARAMETER = 4,
  PLA_STATUS_DEGENERATE = 5,
  PLA_STATUS_TRACE = 6,
  PLA_STATUS_CONFIG = 7,
  PLA_STATUS_IO = 8,
  // The enumerator has no more candidates.
  PLA_STATUS_EXHAUSTED = 9,
  // Output buffer too small.
  PLA_STATUS_BUFFER_TOO_SMALL = 10,
  PLA_STATUS_PANIC = 11,
} PlaStatus;

typedef enum PlaChannelModel {
  PLA_CHANNEL_MODEL_BERNOULLI_DIFFERENTIAL = 0,
  PLA_CHANNEL_MODEL_AR1_COMPLEX_GAUSSIAN = 1,
  PLA_CHANNEL_MODEL_FLAT_FADING = 2,
} PlaChannelModel;

// Seeded channel generator.
typedef struct PlaChannel PlaChannel;

// Lazily enumerated key candidates for one observation.
typedef struct PlaEnumerator PlaEnumerator;

typedef struct PlaAttackReport {
  bool success;
  uint64_t candidates_tried;
  uint64_t n_reached;
} PlaAttackReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *pla_last_error_message(void);

// Binary-mapping attack success probability.
//
// # Safety
// Output pointers must be valid for writes.
enum PlaStatus pla_p_mdlg(size_t l,
                          double rho,
                          uint64_t budget,
                          double *out_value,
                          double *out_log10);

// m-ary attack success probability for an `s`-bit key.
//
// # Safety
// Output pointers must be valid for writes.
enum PlaStatus pla_p_m_mdlg(size_t s,
                            uint32_t m,
                            double rho,
                            uint64_t budget,
                            double *out_value,
                            double *out_log10);

// Largest complete flip-weight level within `budget`, -1 if none.
//
// # Safety
// `out` must be valid for a write.
enum PlaStatus pla_n_max(size_t s, uint32_t m, uint64_t budget, int64_t *out);

// # Safety
// Output pointers must be valid for writes.
enum PlaStatus pla_random_guess(size_t s, uint64_t budget, double *out_value, double *out_log10);

// Regularized incomplete beta function I_x(a, b).
//
// # Safety
// `out` must be valid for a write.
enum PlaStatus pla_incomplete_beta(double x, double a, double b, double *out);

// Frequency test on `len` bits (each 0 or non-zero).
//
// # Safety
// `bits` must be valid for `len` reads; output pointers for writes.
enum PlaStatus pla_frequency_test(const uint8_t *bits,
                                  size_t len,
                                  double alpha,
                                  double *out_p_value,
                                  bool *out_accepted);

// Runs the attack on Eve's phases `z` against a known key (`key_len` bits).
//
// # Safety
// `z` valid for `z_len` reads, `key` for `key_len` reads, `out` for a write.
enum PlaStatus pla_attack(const double *z,
                          size_t z_len,
                          const uint8_t *key,
                          size_t key_len,
                          uint32_t bits_per_subkey,
                          uint64_t budget,
                          struct PlaAttackReport *out);

// Creates a candidate enumerator for Eve's phases `z`.
//
// # Safety
// `z` valid for `len` reads; `out` valid for a write. Free the handle with
// [`pla_enumerator_free`].
enum PlaStatus pla_enumerator_new(const double *z,
                                  size_t len,
                                  uint32_t bits_per_subkey,
                                  uint64_t budget,
                                  struct PlaEnumerator **out);

// Key length in bits of every candidate.
//
// # Safety
// `h` must be a live handle or null (returns 0).
size_t pla_enumerator_key_bits(const struct PlaEnumerator *h);

// Writes the next candidate's bits into `key_out` (capacity `cap`) and its
// flip-weight level into `out_level`. Returns `Exhausted` when done.
//
// # Safety
// `h` must be a live handle; `key_out` valid for `cap` writes; `out_level`
// null or valid for a write.
enum PlaStatus pla_enumerator_next(struct PlaEnumerator *h,
                                   uint8_t *key_out,
                                   size_t cap,
                                   uint64_t *out_level);

// # Safety
// `h` must come from [`pla_enumerator_new`] and not be used afterwards.
void pla_enumerator_free(struct PlaEnumerator *h);

// # Safety
// `out` valid for a write. Free the handle with [`pla_channel_free`].
enum PlaStatus pla_channel_new(enum PlaChannelModel model,
                               double rho,
                               size_t num_subcarriers,
                               uint64_t seed,
                               struct PlaChannel **out);

// Snapshot `index`: amplitudes and phases, `cap` entries each.
//
// # Safety
// `h` must be a live handle; both buffers valid for `cap` writes.
enum PlaStatus pla_channel_sample(const struct PlaChannel *h,
                                  uint64_t index,
                                  double *amplitudes,
                                  double *phases,
                                  size_t cap);

// # Safety
// `h` must come from [`pla_channel_new`] and not be used afterwards.
void pla_channel_free(struct PlaChannel *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLA_H */
