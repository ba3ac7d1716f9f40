#ifndef RISCAP_H
#define RISCAP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define RISCAP_ARCH_FD 0

#define RISCAP_ARCH_FA 1

#define RISCAP_ARCH_MRT 2

#define RISCAP_SCALING_PER_ANTENNA 0

#define RISCAP_SCALING_UNNORMALIZED 1

typedef enum RiscapStatus {
  RISCAP_STATUS_OK = 0,
  RISCAP_STATUS_NULL_POINTER = 1,
  RISCAP_STATUS_INVALID_ARGUMENT = 2,
  RISCAP_STATUS_NUMERICAL = 3,
  RISCAP_STATUS_BUFFER_TOO_SMALL = 4,
  RISCAP_STATUS_PANIC = 5,
} RiscapStatus;

// Opaque channel realization.
typedef struct RiscapChannel RiscapChannel;

// Opaque system configuration.
typedef struct RiscapConfig RiscapConfig;

// Opaque MGF evaluator of the cascaded envelope sum.
typedef struct RiscapMgf RiscapMgf;

// Opaque beamforming result.
typedef struct RiscapResult RiscapResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty if none. Valid until the
// next failing call on the same thread.
const char *riscap_last_error(void);

// Default configuration.
//
// # Safety
// `out` must be a valid pointer.
enum RiscapStatus riscap_config_default(struct RiscapConfig **out);

// Parses a TOML configuration.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum RiscapStatus riscap_config_from_toml(const char *toml, struct RiscapConfig **out);

// # Safety
// `cfg` must come from this library or be null.
void riscap_config_free(struct RiscapConfig *cfg);

// Sets the antenna count `m` and RIS size `n`.
//
// # Safety
// `cfg` must be a live handle.
enum RiscapStatus riscap_config_set_dims(struct RiscapConfig *cfg, uintptr_t m, uintptr_t n);

// Sets the Rician factor of all links; `INFINITY` gives pure LoS.
//
// # Safety
// `cfg` must be a live handle.
enum RiscapStatus riscap_config_set_rician_factor(struct RiscapConfig *cfg, double k);

// Enables or disables the direct link and sets its linear amplitude ratio `mu`.
//
// # Safety
// `cfg` must be a live handle.
enum RiscapStatus riscap_config_set_direct_link(struct RiscapConfig *cfg, bool enabled, double mu);

// Sets the linear SNR scale `gamma`.
//
// # Safety
// `cfg` must be a live handle.
enum RiscapStatus riscap_config_set_gamma(struct RiscapConfig *cfg, double gamma);

// Effective linear `gamma` of the configuration.
//
// # Safety
// `cfg` and `out` must be valid.
enum RiscapStatus riscap_config_gamma(const struct RiscapConfig *cfg, double *out);

// Draws the channel of trial `trial` under `seed`, identical to the CLI draws.
//
// # Safety
// `cfg` must be a live handle and `out` valid.
enum RiscapStatus riscap_channel_draw(const struct RiscapConfig *cfg,
                                      uint64_t seed,
                                      uint64_t trial,
                                      struct RiscapChannel **out);

// Pure line-of-sight channel of the configured geometry.
//
// # Safety
// `cfg` must be a live handle and `out` valid.
enum RiscapStatus riscap_channel_los(const struct RiscapConfig *cfg, struct RiscapChannel **out);

// # Safety
// `ch` must come from this library or be null.
void riscap_channel_free(struct RiscapChannel *ch);

// Antenna count `m` and RIS size `n` of a channel.
//
// # Safety
// All pointers must be valid.
enum RiscapStatus riscap_channel_dims(const struct RiscapChannel *ch, uintptr_t *m, uintptr_t *n);

// `Γ^UB = (γ/M)‖G‖₁,₁²`.
//
// # Safety
// `ch` must be a live handle and `out` valid.
enum RiscapStatus riscap_snr_upper_bound(const struct RiscapChannel *ch, double gamma, double *out);

// `log₂(1 + snr)`.
//
// # Safety
// `out` must be valid.
enum RiscapStatus riscap_capacity(double snr, double *out);

// Runs one architecture (`RISCAP_ARCH_*`) with default iteration settings.
//
// # Safety
// `ch` must be a live handle and `out` valid.
enum RiscapStatus riscap_beamform(const struct RiscapChannel *ch,
                                  uint32_t arch,
                                  double gamma,
                                  struct RiscapResult **out);

// # Safety
// `r` must come from this library or be null.
void riscap_result_free(struct RiscapResult *r);

// Achieved SNR, iteration count and convergence flag.
//
// # Safety
// All pointers must be valid.
enum RiscapStatus riscap_result_summary(const struct RiscapResult *r,
                                        double *snr,
                                        uintptr_t *iterations,
                                        bool *converged);

// Copies the transmit beamformer `f` (M complex values) into `buf`.
//
// # Safety
// `buf` must hold `len` doubles.
enum RiscapStatus riscap_result_transmit(const struct RiscapResult *r, double *buf, uintptr_t len);

// Copies the RIS phase vector `ψ` (N complex values) into `buf`.
//
// # Safety
// `buf` must hold `len` doubles.
enum RiscapStatus riscap_result_phases(const struct RiscapResult *r, double *buf, uintptr_t len);

// Length of the objective trace.
//
// # Safety
// `r` and `out` must be valid.
enum RiscapStatus riscap_result_trace_len(const struct RiscapResult *r, uintptr_t *out);

// Copies the objective trace into `buf`.
//
// # Safety
// `buf` must hold `len` doubles.
enum RiscapStatus riscap_result_trace(const struct RiscapResult *r, double *buf, uintptr_t len);

// Modified Bessel function `I₀(x)`.
double riscap_bessel_i0(double x);

// Marcum `Q₁(a, b)`; NaN for negative arguments.
double riscap_marcum_q1(double a, double b);

// CDF at `x` of a Rician envelope with parameters `nu`, `sigma`.
//
// # Safety
// `out` must be valid.
enum RiscapStatus riscap_rician_cdf(double x, double nu, double sigma, double *out);

// MGF evaluator for the cascaded channel of `cfg`.
//
// # Safety
// `cfg` must be a live handle and `out` valid.
enum RiscapStatus riscap_mgf_new(const struct RiscapConfig *cfg, struct RiscapMgf **out);

// # Safety
// `ev` must come from this library or be null.
void riscap_mgf_free(struct RiscapMgf *ev);

// `E[e^{-sY}]` at `s = s_re + i s_im`, `s_re >= 0`.
//
// # Safety
// All pointers must be valid.
enum RiscapStatus riscap_mgf_evaluate(const struct RiscapMgf *ev,
                                      double s_re,
                                      double s_im,
                                      double *out_re,
                                      double *out_im);

// `P[Y <= y]` by transform inversion.
//
// # Safety
// All pointers must be valid.
enum RiscapStatus riscap_mgf_cdf(const struct RiscapMgf *ev, double y, double *out);

// Analytic outage lower bound at `len` ascending linear thresholds.
//
// # Safety
// `betas` and `out` must hold `len` doubles.
enum RiscapStatus riscap_outage_lower_bound(const struct RiscapMgf *ev,
                                            double gamma,
                                            const double *betas,
                                            uintptr_t len,
                                            uint32_t scaling,
                                            double *out);

// Empirical outage `P[Γ < β]` at `len` ascending linear thresholds.
//
// # Safety
// `betas` and `out` must hold `len` doubles.
enum RiscapStatus riscap_monte_carlo_outage(const struct RiscapConfig *cfg,
                                            uint32_t arch,
                                            const double *betas,
                                            uintptr_t len,
                                            uintptr_t trials,
                                            uint64_t seed,
                                            double *out);

// Ergodic capacity estimate: sample mean and its standard error.
//
// # Safety
// All pointers must be valid.
enum RiscapStatus riscap_monte_carlo_capacity(const struct RiscapConfig *cfg,
                                              uint32_t arch,
                                              uintptr_t trials,
                                              uint64_t seed,
                                              double *mean,
                                              double *std_err);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RISCAP_H */
