#ifndef MCFQKD_H
#define MCFQKD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum McfqkdStatus {
  MCFQKD_STATUS_OK = 0,
  MCFQKD_STATUS_NULL_POINTER = 1,
  MCFQKD_STATUS_INVALID_ARGUMENT = 2,
  MCFQKD_STATUS_PARSE = 3,
  MCFQKD_STATUS_VALIDATION = 4,
  MCFQKD_STATUS_DOMAIN = 5,
  MCFQKD_STATUS_SOLVER = 6,
  MCFQKD_STATUS_ESTIMATION = 7,
  MCFQKD_STATUS_IO = 8,
  MCFQKD_STATUS_PANIC = 9,
} McfqkdStatus;

typedef enum McfqkdIntensity {
  MCFQKD_INTENSITY_SIGNAL = 0,
  MCFQKD_INTENSITY_DECOY = 1,
} McfqkdIntensity;

typedef enum McfqkdKeyRateMode {
  MCFQKD_KEY_RATE_MODE_DECOY = 0,
  MCFQKD_KEY_RATE_MODE_NO_DECOY = 1,
} McfqkdKeyRateMode;

/**
 * Opaque run configuration.
 */
typedef struct McfqkdConfig McfqkdConfig;

/**
 * Opaque key-rate curve.
 */
typedef struct McfqkdCurve McfqkdCurve;

/**
 * Opaque session report.
 */
typedef struct McfqkdReport McfqkdReport;

/**
 * One row of a session report. `qber` is NaN when the bin has no sifted
 * symbols.
 */
typedef struct McfqkdBin {
  double time_s;
  enum McfqkdIntensity intensity;
  uint64_t pulses;
  uint64_t sifted_count;
  uint64_t errors;
  double qber;
} McfqkdBin;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or an empty string.
 * The pointer stays valid until the next library call on this thread.
 */
const char *mcfqkd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mcfqkd_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void mcfqkd_string_free(char *s);

/**
 * Configuration with every default.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum McfqkdStatus mcfqkd_config_default(struct McfqkdConfig **out);

/**
 * Parses and validates a JSON configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum McfqkdStatus mcfqkd_config_parse(const char *json, struct McfqkdConfig **out);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum McfqkdStatus mcfqkd_config_set_seed(struct McfqkdConfig *config, uint64_t seed);

/**
 * Serializes the configuration as JSON; free the result with
 * [`mcfqkd_string_free`].
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum McfqkdStatus mcfqkd_config_to_json(const struct McfqkdConfig *config, char **out);

/**
 * # Safety
 * `config` must come from this library; null is ignored.
 */
void mcfqkd_config_free(struct McfqkdConfig *config);

/**
 * Two-basis individual-attack disturbance threshold in percent.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum McfqkdStatus mcfqkd_threshold_individual(uint32_t n, double *out);

/**
 * Coherent-attack disturbance threshold in percent.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum McfqkdStatus mcfqkd_threshold_coherent(uint32_t n, double *out);

/**
 * Alice-Bob and Alice-Eve mutual information at Bob's fidelity `fidelity`.
 *
 * # Safety
 * `i_ab` and `i_ae` must be valid pointers.
 */
enum McfqkdStatus mcfqkd_mutual_info(double fidelity, uint32_t n, double *i_ab, double *i_ae);

/**
 * `max(0, I_AB − I_AE)` at disturbance `d`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum McfqkdStatus mcfqkd_secret_rate_ideal(double d, uint32_t n, double *out);

/**
 * Simulates a session. `workers = 0` uses every core; the report does not
 * depend on the worker count.
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum McfqkdStatus mcfqkd_simulate(const struct McfqkdConfig *config,
                                  uint32_t workers_,
                                  struct McfqkdReport **out);

/**
 * Total sifted symbols and QBER of one intensity class. `qber` is NaN when
 * the class has no sifted symbols.
 *
 * # Safety
 * `report` must be a live handle; `sifted` and `qber` valid pointers.
 */
enum McfqkdStatus mcfqkd_report_class_totals(const struct McfqkdReport *report,
                                             enum McfqkdIntensity intensity,
                                             uint64_t *sifted,
                                             double *qber);

/**
 * Number of decoy windows in the session.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum McfqkdStatus mcfqkd_report_decoy_windows(const struct McfqkdReport *report, size_t *out);

/**
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum McfqkdStatus mcfqkd_report_bin_count(const struct McfqkdReport *report, size_t *out);

/**
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum McfqkdStatus mcfqkd_report_bin(const struct McfqkdReport *report,
                                    size_t index,
                                    struct McfqkdBin *out);

/**
 * Report as CSV (`time_s,qber,sifted_count,intensity_class`); free the
 * result with [`mcfqkd_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum McfqkdStatus mcfqkd_report_to_csv(const struct McfqkdReport *report, char **out);

/**
 * # Safety
 * `report` must come from this library; null is ignored.
 */
void mcfqkd_report_free(struct McfqkdReport *report);

/**
 * Key rate on `0, step_km, …, max_km` using the configuration's rate and
 * channel settings with dimension `n`.
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum McfqkdStatus mcfqkd_keyrate(const struct McfqkdConfig *config,
                                 enum McfqkdKeyRateMode mode,
                                 uint32_t n,
                                 double max_km,
                                 double step_km,
                                 struct McfqkdCurve **out);

/**
 * Distance where the key rate first vanishes, searched up to `max_km`.
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum McfqkdStatus mcfqkd_cutoff_distance(const struct McfqkdConfig *config,
                                         enum McfqkdKeyRateMode mode,
                                         uint32_t n,
                                         double max_km,
                                         double *out);

/**
 * # Safety
 * `curve` must be a live handle and `out` a valid pointer.
 */
enum McfqkdStatus mcfqkd_curve_len(const struct McfqkdCurve *curve, size_t *out);

/**
 * # Safety
 * `curve` must be a live handle; `distance_km` and `rate` valid pointers.
 */
enum McfqkdStatus mcfqkd_curve_point(const struct McfqkdCurve *curve,
                                     size_t index,
                                     double *distance_km,
                                     double *rate);

/**
 * # Safety
 * `curve` must come from this library; null is ignored.
 */
void mcfqkd_curve_free(struct McfqkdCurve *curve);

/**
 * Fills `out[144]` row-major with the tomography matrix, rows and columns
 * ordered `M0_0 … M2_3`. `detections = 0` uses the configured budget.
 *
 * # Safety
 * `config` must be a live handle and `out` must point to 144 doubles.
 */
enum McfqkdStatus mcfqkd_tomography(const struct McfqkdConfig *config,
                                    uint64_t detections,
                                    uint32_t workers_,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCFQKD_H */
