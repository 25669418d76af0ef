#include <math.h>
#include <stdio.h>
#include <string.h>

#include "rankloop.h"

static const char *FAMILY =
    "{\"n\":2,\"terms\":["
    "{\"jx\":0,\"ky\":0,\"matrix\":[[[1,0],[1,0]],[[0,0],[0,0]]]},"
    "{\"jx\":1,\"ky\":0,\"matrix\":[[[0,0],[0,0]],[[0,0],[1,0]]]},"
    "{\"jx\":0,\"ky\":1,\"matrix\":[[[0,0],[0,0]],[[0,0],[0,-1]]]}]}";

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            const char *m = rl_last_error_message();                  \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,   \
                    m ? m : "no message");                            \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    RlFamily *f = NULL;
    CHECK(rl_family_from_json(FAMILY, &f) == RL_STATUS_OK);
    size_t n = 0;
    CHECK(rl_family_dim(f, &n) == RL_STATUS_OK && n == 2);

    double sigma[2];
    CHECK(rl_singular_values(f, 0.5, 0.0, sigma, 2) == RL_STATUS_OK);
    CHECK(sigma[0] > sigma[1] && fabs(sigma[0] * sigma[1] - 0.5) < 1e-12);

    RlPhaseReport *r = NULL;
    const char *loop = "{\"kind\":\"circle\",\"center\":[0,0],\"radius\":1,\"samples\":512}";
    CHECK(rl_loop_phases(f, loop, RL_GAUGE_JOINT, &r) == RL_STATUS_OK);
    CHECK(rl_phase_report_len(r) == 2);
    CHECK(fabs(rl_phase_report_sum(r) - M_PI) < 1e-4);
    CHECK(rl_phase_report_classification(r) == RL_CLASSIFICATION_RANK_LOSS_INSIDE);
    rl_phase_report_free(r);

    CHECK(rl_loop_phases(f, "{", RL_GAUGE_JOINT, &r) == RL_STATUS_PARSE_ERROR);
    CHECK(rl_last_error_message() != NULL);

    RlDetection *d = NULL;
    CHECK(rl_detect(f, -1, 1, -1, 1, 0, &d) == RL_STATUS_OK);
    CHECK(rl_detection_len(d) == 1);
    double x, y;
    bool generic;
    CHECK(rl_detection_point(d, 0, &x, &y, &generic) == RL_STATUS_OK);
    CHECK(fabs(x) < 1e-8 && fabs(y) < 1e-8 && generic);
    rl_detection_free(d);
    rl_family_free(f);
    puts("ok");
    return 0;
}
