/* Copyright (c) 2026, The replaylab Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Built as C to keep the public header valid C.
 */

#include <stdio.h>

#include "replaylab/replaylab.h"

int main(void) {
    double g[2] = {1.0, 0.0};
    double gi[2] = {-3.0, 0.0};
    double score = 0.0;
    int defined = 0;
    double pct = 0.0;
    rl_experiment* exp = NULL;

    if (rl_interference_score(g, gi, 2, &score, &defined) != RL_OK || !defined || score != 1.0) {
        fprintf(stderr, "interference score: %s\n", rl_last_error());
        return 1;
    }
    if (rl_time_reduction(16.0, 8.6, &pct) != RL_OK || pct < 46.2499 || pct > 46.2501) return 1;
    if (rl_experiment_load("/nonexistent/config.json", &exp) != RL_ERR_IO) return 1;
    if (rl_last_error()[0] == '\0') return 1;
    printf("replaylab %s: C interface ok\n", rl_version());
    return 0;
}
