#include <math.h>
#include <stdio.h>
#include "riscap.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        RiscapStatus s_ = (expr);                                          \
        if (s_ != RISCAP_STATUS_OK) {                                      \
            fprintf(stderr, "%s -> %d: %s\n", #expr, s_, riscap_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    RiscapConfig *cfg = NULL;
    RiscapChannel *ch = NULL;
    RiscapResult *res = NULL;
    double snr = 0.0, ub = 0.0;
    size_t iters = 0;
    bool converged = false;

    CHECK(riscap_config_default(&cfg));
    CHECK(riscap_config_set_dims(cfg, 4, 16));
    CHECK(riscap_config_set_rician_factor(cfg, INFINITY));
    CHECK(riscap_config_set_direct_link(cfg, false, 0.0));
    CHECK(riscap_channel_los(cfg, &ch));
    CHECK(riscap_beamform(ch, RISCAP_ARCH_FA, 1.0, &res));
    CHECK(riscap_result_summary(res, &snr, &iters, &converged));
    CHECK(riscap_snr_upper_bound(ch, 1.0, &ub));
    if (fabs(snr / 1024.0 - 1.0) > 1e-9 || fabs(ub / 1024.0 - 1.0) > 1e-9) {
        fprintf(stderr, "unexpected snr %g bound %g\n", snr, ub);
        return 1;
    }
    if (riscap_beamform(ch, 7, 1.0, &res) != RISCAP_STATUS_INVALID_ARGUMENT) {
        return 1;
    }
    printf("snr=%.6f\n", snr);
    riscap_result_free(res);
    riscap_channel_free(ch);
    riscap_config_free(cfg);
    return 0;
}
