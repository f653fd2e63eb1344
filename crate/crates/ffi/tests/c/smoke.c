#include <stdio.h>
#include <string.h>

#include "lowrank_rl.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        LrlStatus st_ = (expr);                                            \
        if (st_ != LRL_STATUS_OK) {                                        \
            fprintf(stderr, "%s -> %d: %s\n", #expr, (int)st_,             \
                    lrl_last_error_message());                             \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    LrlMdp *mdp = NULL;
    CHECK(lrl_gridworld_new("SFFF\nFHFH\nFFFH\nHFFG", 0.0, 0.9, &mdp));
    size_t ns = 0, na = 0;
    CHECK(lrl_mdp_dims(mdp, &ns, &na));
    size_t policy[16];
    double q[64];
    CHECK(lrl_mdp_policy_iteration(mdp, policy, 16, q, 64));
    lrl_mdp_free(mdp);

    size_t state_sizes[2] = {20, 20};
    size_t action_sizes[1] = {20};
    LrlLearner *learner = NULL;
    CHECK(lrl_learner_new("tlr", state_sizes, 2, action_sizes, 1, "{\"rank\": 2}", &learner));
    size_t params = 0;
    CHECK(lrl_learner_num_parameters(learner, &params));
    size_t s[2] = {3, 4}, a[1] = {5}, next[2] = {3, 5};
    CHECK(lrl_learner_update(learner, s, a, 1.0, next));
    size_t best[1];
    double value = 0.0;
    CHECK(lrl_learner_best_action(learner, s, best, 1, &value));
    lrl_learner_free(learner);

    if (lrl_learner_new("nope", state_sizes, 2, action_sizes, 1, NULL, &learner) != LRL_STATUS_INVALID_ARGUMENT) {
        return 2;
    }
    printf("states=%zu actions=%zu params=%zu version=%s\n", ns, na, params, lrl_version());
    return 0;
}
