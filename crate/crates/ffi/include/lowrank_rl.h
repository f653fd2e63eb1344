#ifndef LOWRANK_RL_H
#define LOWRANK_RL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>

/**
 * Result code of every fallible call.
 */
typedef enum LrlStatus {
  LRL_STATUS_OK = 0,
  LRL_STATUS_NULL_POINTER = 1,
  LRL_STATUS_INVALID_ARGUMENT = 2,
  LRL_STATUS_SHAPE = 3,
  LRL_STATUS_SINGULAR = 4,
  LRL_STATUS_NO_CONVERGENCE = 5,
  LRL_STATUS_NON_FINITE = 6,
  LRL_STATUS_DIVERGENCE = 7,
  LRL_STATUS_PARSE = 8,
  LRL_STATUS_CONFIG = 9,
  LRL_STATUS_IO = 10,
  LRL_STATUS_BUFFER_TOO_SMALL = 11,
  LRL_STATUS_PANIC = 12,
} LrlStatus;

/**
 * Q-table, matrix or tensor learner handle.
 */
typedef struct LrlLearner LrlLearner;

/**
 * Tabular MDP handle.
 */
typedef struct LrlMdp LrlMdp;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *lrl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lrl_version(void);

/**
 * Builds a gridworld MDP from a text layout (`S` start, `F` free, `H` hole,
 * `G` goal; one row per line, `#` lines ignored). `slip` is the probability
 * of moving perpendicular to the intended direction.
 *
 * # Safety
 * `layout` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LrlStatus lrl_gridworld_new(const char *layout,
                                 double slip,
                                 double discount,
                                 struct LrlMdp **out);

/**
 * # Safety
 * `mdp` must come from [`lrl_gridworld_new`] and not be used afterwards.
 */
void lrl_mdp_free(struct LrlMdp *mdp);

/**
 * # Safety
 * All pointers must be valid.
 */
enum LrlStatus lrl_mdp_dims(const struct LrlMdp *mdp, size_t *num_states, size_t *num_actions);

/**
 * Solves the MDP exactly. Writes one greedy action per state into `policy`
 * and the row-major `num_states x num_actions` optimal values into `q`.
 *
 * # Safety
 * `policy` must hold `policy_len` and `q` must hold `q_len` elements.
 */
enum LrlStatus lrl_mdp_policy_iteration(const struct LrlMdp *mdp,
                                        size_t *policy,
                                        size_t policy_len,
                                        double *q,
                                        size_t q_len);

/**
 * Creates a learner. `kind` is `qtable`, `mlr` or `tlr`; `config_json` holds
 * learner settings (discount, step_size, epsilon, rank, frobenius_weight,
 * rescale_gradient, init_scale, init_seed, stale_target) and may be null for
 * defaults.
 *
 * # Safety
 * Size arrays must hold the given counts; strings must be NUL-terminated.
 */
enum LrlStatus lrl_learner_new(const char *kind,
                               const size_t *state_sizes,
                               size_t num_state_dims,
                               const size_t *action_sizes,
                               size_t num_action_dims,
                               const char *config_json,
                               struct LrlLearner **out);

/**
 * # Safety
 * `learner` must come from [`lrl_learner_new`] and not be used afterwards.
 */
void lrl_learner_free(struct LrlLearner *learner);

/**
 * One TD update from `(state, action, reward, next_state)`. A null
 * `next_state` marks a terminal transition.
 *
 * # Safety
 * Index arrays must hold one entry per state or action dimension.
 */
enum LrlStatus lrl_learner_update(struct LrlLearner *learner,
                                  const size_t *state,
                                  const size_t *action,
                                  double reward,
                                  const size_t *next_state);

/**
 * # Safety
 * Index arrays must hold one entry per state or action dimension.
 */
enum LrlStatus lrl_learner_value(const struct LrlLearner *learner,
                                 const size_t *state,
                                 const size_t *action,
                                 double *out);

/**
 * Greedy action (lowest index among ties) and its value.
 *
 * # Safety
 * `action` must hold `action_len` elements; `value` may be null.
 */
enum LrlStatus lrl_learner_best_action(const struct LrlLearner *learner,
                                       const size_t *state,
                                       size_t *action,
                                       size_t action_len,
                                       double *value);

/**
 * # Safety
 * Both pointers must be valid.
 */
enum LrlStatus lrl_learner_num_parameters(const struct LrlLearner *learner, size_t *out);

/**
 * Text serialization of the model. Release the string with
 * [`lrl_string_free`].
 *
 * # Safety
 * Both pointers must be valid.
 */
enum LrlStatus lrl_learner_to_text(const struct LrlLearner *learner, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void lrl_string_free(char *s);

/**
 * Singular values of a row-major `rows x cols` matrix in descending order;
 * `out` receives `min(rows, cols)` values.
 *
 * # Safety
 * `data` must hold `rows * cols` and `out` must hold `out_len` elements.
 */
enum LrlStatus lrl_singular_values(const double *data,
                                   size_t rows,
                                   size_t cols,
                                   double *out,
                                   size_t out_len);

/**
 * Smallest `k` whose leading `k` squared singular values hold `energy` of the
 * total.
 *
 * # Safety
 * `singular_values` must hold `len` elements.
 */
enum LrlStatus lrl_effective_rank(const double *singular_values,
                                  size_t len,
                                  double energy,
                                  size_t *out);

/**
 * Normalized Frobenius error `||x - x_hat|| / ||x||`.
 *
 * # Safety
 * Both arrays must hold `len` elements.
 */
enum LrlStatus lrl_nfe(const double *x, const double *x_hat, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOWRANK_RL_H */
