#ifndef TIBSIM_H
#define TIBSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum TibStatus {
  TIB_STATUS_OK = 0,
  TIB_STATUS_NULL_POINTER = 1,
  TIB_STATUS_INVALID_ARGUMENT = 2,
  TIB_STATUS_CONFIG = 3,
  TIB_STATUS_DEVICE = 4,
  TIB_STATUS_NUMERICAL = 5,
  TIB_STATUS_IO = 6,
  TIB_STATUS_BUFFER_TOO_SMALL = 7,
  TIB_STATUS_PANIC = 8,
} TibStatus;

/**
 * Configured device together with its run settings.
 */
typedef struct TibDevice TibDevice;

/**
 * Uniformly sampled real trace.
 */
typedef struct TibTrace TibTrace;

typedef struct TibBias {
  double uniform;
  double gradiometric;
} TibBias;

typedef struct TibComplex {
  double re;
  double im;
} TibComplex;

/**
 * Steady states of the driven Kerr cavity, ascending in photon number.
 */
typedef struct TibSteadyStates {
  size_t count;
  double photons[3];
  /**
   * 1 for stable branches.
   */
  uint8_t stable[3];
} TibSteadyStates;

typedef struct TibValue {
  double value;
  double std_error;
} TibValue;

typedef struct TibRingdownFit {
  /**
   * Switch time, s.
   */
  struct TibValue t0;
  /**
   * Energy linewidth, Hz.
   */
  struct TibValue kappa;
  /**
   * Filter corner, Hz.
   */
  struct TibValue gamma_c;
  /**
   * V.
   */
  struct TibValue amplitude;
  uint8_t converged;
  /**
   * 1 when the corner is pinned at the sampling limit.
   */
  uint8_t gamma_c_at_bound;
} TibRingdownFit;

typedef struct TibTable1 {
  struct TibValue loss_and_residual_coupling;
  struct TibValue maximal_coupling;
  struct TibValue on_off_ratio;
  /**
   * s.
   */
  struct TibValue switching_time;
  /**
   * Hz per photon.
   */
  struct TibValue self_kerr;
  struct TibValue kappa_int;
  struct TibValue gamma_c;
  double critical_bias_phi0;
} TibTable1;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next `tib_*` call on the same thread.
 */
const char *tib_last_error_message(void);

/**
 * Device from the shipped default configuration.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TibStatus tib_device_new_default(struct TibDevice **out);

/**
 * Device from a TOML configuration in the same format as the shipped default.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum TibStatus tib_device_from_toml(const char *toml, struct TibDevice **out);

/**
 * # Safety
 * `dev` must come from a `tib_device_new*` call and not be freed twice. NULL is ignored.
 */
void tib_device_free(struct TibDevice *dev);

/**
 * Bias at which the coupler is fully on.
 *
 * # Safety
 * `dev` must be a live handle; `out` must be valid for writes.
 */
enum TibStatus tib_device_on_bias(const struct TibDevice *dev, struct TibBias *out);

/**
 * External coupling rate κ_ext, Hz.
 *
 * # Safety
 * `dev` must be a live handle; `out` must be valid for writes.
 */
enum TibStatus tib_external_coupling(const struct TibDevice *dev, struct TibBias b, double *out);

/**
 * Cavity frequency, Hz.
 *
 * # Safety
 * `dev` must be a live handle; `out` must be valid for writes.
 */
enum TibStatus tib_cavity_frequency(const struct TibDevice *dev, struct TibBias b, double *out);

/**
 * Internal loss rate κ_int, Hz.
 *
 * # Safety
 * `dev` must be a live handle; `out` must be valid for writes.
 */
enum TibStatus tib_internal_loss(const struct TibDevice *dev, struct TibBias b, double *out);

/**
 * Total linewidth κ, Hz.
 *
 * # Safety
 * `dev` must be a live handle; `out` must be valid for writes.
 */
enum TibStatus tib_kappa_total(const struct TibDevice *dev, struct TibBias b, double *out);

/**
 * Self-Kerr, Hz per photon.
 *
 * # Safety
 * `dev` must be a live handle; `out` must be valid for writes.
 */
enum TibStatus tib_self_kerr(const struct TibDevice *dev, struct TibBias b, double *out);

/**
 * Linear reflection coefficient at `frequency`.
 *
 * # Safety
 * `dev` must be a live handle; `out` must be valid for writes.
 */
enum TibStatus tib_reflection_linear(const struct TibDevice *dev,
                                     struct TibBias b,
                                     double frequency,
                                     struct TibComplex *out);

/**
 * Steady states of a driven Kerr cavity; `photon_flux` is the incident flux in photons/s.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TibStatus tib_duffing_steady_states(double detuning,
                                         double kappa_int,
                                         double kappa_ext,
                                         double kerr,
                                         double photon_flux,
                                         struct TibSteadyStates *out);

/**
 * Intracavity photons for an input power P: P/(2πκ·h·f).
 */
double tib_photon_number(double input_power, double kappa_total, double frequency);

/**
 * Trace from raw samples.
 *
 * # Safety
 * `samples` must point to `len` doubles; `out` must be valid for writes.
 */
enum TibStatus tib_trace_new(double t0,
                             double dt,
                             const double *samples,
                             size_t len,
                             struct TibTrace **out);

/**
 * Simulated, ADC-filtered ringdown at `readout` with the device's configured settings.
 *
 * # Safety
 * `dev` must be a live handle; `out` must be valid for writes.
 */
enum TibStatus tib_ringdown(const struct TibDevice *dev,
                            struct TibBias readout,
                            double stored_photons,
                            struct TibTrace **out);

/**
 * # Safety
 * `trace` must be a live handle or NULL.
 */
size_t tib_trace_len(const struct TibTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle or NULL.
 */
double tib_trace_t0(const struct TibTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle or NULL.
 */
double tib_trace_dt(const struct TibTrace *trace);

/**
 * Copy the samples into `buf`, which holds `capacity` doubles.
 *
 * # Safety
 * `trace` must be a live handle; `buf` must be valid for `capacity` writes.
 */
enum TibStatus tib_trace_copy(const struct TibTrace *trace, double *buf, size_t capacity);

/**
 * # Safety
 * `trace` must come from `tib_trace_new` or `tib_ringdown` and not be freed twice. NULL is ignored.
 */
void tib_trace_free(struct TibTrace *trace);

/**
 * Fit a filtered ringdown with the default fit options.
 *
 * # Safety
 * `trace` must be a live handle; `out` must be valid for writes.
 */
enum TibStatus tib_fit_ringdown(const struct TibTrace *trace, struct TibRingdownFit *out);

/**
 * Run every virtual experiment on the device's configuration and fill the
 * performance summary. Takes a few seconds.
 *
 * # Safety
 * `dev` must be a live handle; `out` must be valid for writes.
 */
enum TibStatus tib_table1(const struct TibDevice *dev, struct TibTable1 *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TIBSIM_H */
