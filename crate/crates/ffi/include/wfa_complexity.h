#ifndef WFA_COMPLEXITY_H
#define WFA_COMPLEXITY_H

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

// Result of every fallible call.
typedef enum WfaStatus {
  WFA_STATUS_OK = 0,
  WFA_STATUS_NULL_POINTER = 1,
  WFA_STATUS_DOMAIN = 2,
  WFA_STATUS_RESOURCE = 3,
  WFA_STATUS_NUMERIC = 4,
  WFA_STATUS_PARSE = 5,
  WFA_STATUS_IO = 6,
  WFA_STATUS_UTF8 = 7,
  WFA_STATUS_BUFFER_TOO_SMALL = 8,
  WFA_STATUS_PANIC = 9,
} WfaStatus;

typedef enum WfaMode {
  WFA_MODE_EXACT = 0,
  WFA_MODE_ENUMERATE = 1,
  WFA_MODE_MONTE_CARLO = 2,
} WfaMode;

typedef enum WfaBoundClass {
  WFA_BOUND_CLASS_AN1 = 0,
  WFA_BOUND_CLASS_R_ANR = 1,
  WFA_BOUND_CLASS_R1R = 2,
  WFA_BOUND_CLASS_R2R = 3,
  WFA_BOUND_CLASS_H1R = 4,
  WFA_BOUND_CLASS_H2R = 5,
  // R1r from D_max and kappa.
  WFA_BOUND_CLASS_R1R_DISTRIBUTION = 6,
  // H1r from D_vee and kappa.
  WFA_BOUND_CLASS_H1R_DISTRIBUTION = 7,
} WfaBoundClass;

// Opaque automaton handle.
typedef struct WfaAutomaton WfaAutomaton;

// Opaque sample handle.
typedef struct WfaSample WfaSample;

typedef struct WfaSampleStats {
  size_t m;
  size_t l_s;
  size_t c_s;
  size_t w_s;
  // False when W_S came from local search (an upper bound).
  bool w_s_exact;
} WfaSampleStats;

typedef struct WfaEstimate {
  double value;
  double standard_error;
  uint64_t draws;
  // -1 lower bound, 0 equals, 1 upper bound.
  int32_t direction;
} WfaEstimate;

// Inputs to the closed-form bounds; fields a bound does not use are ignored.
typedef struct WfaBoundInputs {
  size_t m;
  size_t n;
  size_t k;
  double r;
  double l;
  size_t c;
  size_t w;
  double d_max;
  double d_vee;
  double kappa;
} WfaBoundInputs;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into this library from the same thread.
const char *wfa_last_error(void);

// Parses an automaton from JSON text.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum WfaStatus wfa_automaton_from_json(const char *json, struct WfaAutomaton **out);

// Reads an automaton from a JSON file.
//
// # Safety
// `path` must be a nul-terminated string; `out` must be writable.
enum WfaStatus wfa_automaton_load(const char *path, struct WfaAutomaton **out);

// # Safety
// `a` must be NULL or a handle from this library, not yet freed.
void wfa_automaton_free(struct WfaAutomaton *a);

// Number of states, 0 for NULL.
//
// # Safety
// `a` must be NULL or a live handle.
size_t wfa_automaton_states(const struct WfaAutomaton *a);

// Alphabet size, 0 for NULL.
//
// # Safety
// `a` must be NULL or a live handle.
size_t wfa_automaton_alphabet_size(const struct WfaAutomaton *a);

// f(x) for a word given as symbol indices.
//
// # Safety
// `symbols` must point to `len` readable values (or be NULL with `len` 0).
enum WfaStatus wfa_automaton_evaluate(const struct WfaAutomaton *a,
                                      const size_t *symbols,
                                      size_t len,
                                      double *out);

// f(x) for a word given as whitespace-separated tokens.
//
// # Safety
// `text` must be a nul-terminated string.
enum WfaStatus wfa_automaton_evaluate_text(const struct WfaAutomaton *a,
                                           const char *text,
                                           double *out);

// Weight norm ‖A‖ for `p` in {1, 2, inf} and its Hölder conjugate.
//
// # Safety
// Pointers must be valid.
enum WfaStatus wfa_automaton_weight_norm(const struct WfaAutomaton *a, double p, double *out);

// Squared ℓ2 norm of the function; `exact` is set false when only a
// truncated lower bound was available.
//
// # Safety
// Pointers must be valid.
enum WfaStatus wfa_automaton_l2_norm_squared(const struct WfaAutomaton *a,
                                             double *out,
                                             bool *exact);

// Hankel singular values, descending. Writes up to `capacity` values and
// sets `len` to the full count; returns `BUFFER_TOO_SMALL` if truncated.
//
// # Safety
// `values` must hold `capacity` writable doubles (may be NULL when 0).
enum WfaStatus wfa_automaton_hankel_spectrum(const struct WfaAutomaton *a,
                                             double *values,
                                             size_t capacity,
                                             size_t *len);

// Parses a sample, one string per line. With `alphabet_of` NULL the
// alphabet is inferred from the text.
//
// # Safety
// `text` must be a nul-terminated string; `alphabet_of` NULL or live.
enum WfaStatus wfa_sample_from_text(const char *text,
                                    const struct WfaAutomaton *alphabet_of,
                                    struct WfaSample **out);

// Draws `m` strings from a probabilistic automaton.
//
// # Safety
// Pointers must be valid.
enum WfaStatus wfa_sample_from_pfa(const struct WfaAutomaton *a,
                                   size_t m,
                                   uint64_t seed,
                                   size_t max_len,
                                   struct WfaSample **out);

// # Safety
// `s` must be NULL or a handle from this library, not yet freed.
void wfa_sample_free(struct WfaSample *s);

// Sample size, 0 for NULL.
//
// # Safety
// `s` must be NULL or a live handle.
size_t wfa_sample_len(const struct WfaSample *s);

// L_S, C_S and W_S. `seed` is used only if the split search falls back
// to local search.
//
// # Safety
// Pointers must be valid.
enum WfaStatus wfa_sample_stats(const struct WfaSample *s,
                                uint64_t seed,
                                struct WfaSampleStats *out);

// Empirical Rademacher complexity of the ℓp ball of radius `r`.
//
// # Safety
// Pointers must be valid.
enum WfaStatus wfa_rademacher_rpr(const struct WfaSample *s,
                                  double r,
                                  double p,
                                  enum WfaMode mode,
                                  size_t draws,
                                  uint64_t seed,
                                  struct WfaEstimate *out);

// Evaluates a Rademacher bound. `lower` receives the lower end for bounds
// that come as a sandwich and NaN otherwise; it may be NULL.
//
// # Safety
// `inputs` and `value` must be valid; `lower` NULL or writable.
enum WfaStatus wfa_bound(enum WfaBoundClass class_,
                         const struct WfaBoundInputs *inputs,
                         double *value,
                         double *lower);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WFA_COMPLEXITY_H */
