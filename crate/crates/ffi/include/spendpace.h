#ifndef SPENDPACE_H
#define SPENDPACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum SpStatus {
  SP_STATUS_OK = 0,
  SP_STATUS_NULL_POINTER = 1,
  SP_STATUS_INVALID_ARGUMENT = 2,
  SP_STATUS_INVALID_CONFIG = 3,
  SP_STATUS_PROTOCOL_VIOLATION = 4,
  SP_STATUS_OVERCHARGE = 5,
  SP_STATUS_ESTIMATION_FAILED = 6,
  SP_STATUS_ALL_ZERO_PLAN = 7,
  SP_STATUS_IO = 8,
  SP_STATUS_PANIC = 9,
} SpStatus;

/**
 * Opaque pacer handle.
 */
typedef struct SpPacer SpPacer;

/**
 * Opaque spend-plan handle.
 */
typedef struct SpPlan SpPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len - 1` bytes) and returns the full message
 * length in bytes.
 */
size_t sp_last_error_message(char *buf, size_t len);

/**
 * Creates a pacer with explicit step size, shading cap and initial shading.
 * `plan` holds `episodes` per-round target rates.
 */
enum SpStatus sp_pacer_new(double budget,
                           size_t horizon,
                           const double *plan,
                           size_t episodes,
                           double eta,
                           double mu_bar,
                           double mu_init,
                           struct SpPacer **out);

/**
 * Creates a pacer with the default step size, shading cap and zero initial
 * shading. `value_bound` is an upper bound on values.
 */
enum SpStatus sp_pacer_new_default(double budget,
                                   size_t horizon,
                                   const double *plan,
                                   size_t episodes,
                                   double value_bound,
                                   struct SpPacer **out);

/**
 * Bid for a round with value `value`.
 */
enum SpStatus sp_pacer_bid(struct SpPacer *pacer, double value, double *bid);

/**
 * Reports the expenditure of the round just bid on (0 if lost).
 */
enum SpStatus sp_pacer_observe(struct SpPacer *pacer, double expenditure);

enum SpStatus sp_pacer_mu(const struct SpPacer *pacer, double *mu);

enum SpStatus sp_pacer_remaining_budget(const struct SpPacer *pacer, double *budget);

enum SpStatus sp_pacer_episode_budget(const struct SpPacer *pacer, double *budget);

/**
 * 1-based round and episode about to be played.
 */
enum SpStatus sp_pacer_position(const struct SpPacer *pacer, size_t *round, size_t *episode);

void sp_pacer_free(struct SpPacer *pacer);

/**
 * Estimates a raw plan from `episodes * n` value and price samples laid out
 * episode by episode, using the default estimator settings.
 */
enum SpStatus sp_plan_estimate(double budget,
                               size_t horizon,
                               size_t episodes,
                               size_t n,
                               const double *values,
                               const double *prices,
                               struct SpPlan **out);

/**
 * Adds `delta` to every rate and rescales so the plan spends the budget
 * exactly. Returns a new handle.
 */
enum SpStatus sp_plan_normalize(const struct SpPlan *plan, double delta, struct SpPlan **out);

enum SpStatus sp_plan_episodes(const struct SpPlan *plan, size_t *episodes);

/**
 * Copies the per-round rates into `rates`, which must hold `len >= episodes`
 * entries.
 */
enum SpStatus sp_plan_rates(const struct SpPlan *plan, double *rates, size_t len);

enum SpStatus sp_plan_mu_hat(const struct SpPlan *plan, double *mu_hat);

/**
 * Writes the plan as JSON to the NUL-terminated UTF-8 `path`.
 */
enum SpStatus sp_plan_save(const struct SpPlan *plan, const char *path);

/**
 * Reads a plan written by `sp_plan_save` or the CLI.
 */
enum SpStatus sp_plan_load(const char *path, struct SpPlan **out);

void sp_plan_free(struct SpPlan *plan);

/**
 * Best fractional allocation in hindsight on `len` rounds.
 */
enum SpStatus sp_hindsight_value(const double *values,
                                 const double *prices,
                                 size_t len,
                                 double budget,
                                 double *out);

/**
 * `sqrt(ln(2 / delta) / (2 n))`.
 */
enum SpStatus sp_dkw_bound(size_t n, double delta, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SPENDPACE_H */
