#include <math.h>
#include <stdio.h>
#include <string.h>

#include "mcfqkd.h"

#define CHECK(expr)                                                        \
  do {                                                                     \
    McfqkdStatus st_ = (expr);                                             \
    if (st_ != MCFQKD_STATUS_OK) {                                         \
      fprintf(stderr, "%s -> %d: %s\n", #expr, st_, mcfqkd_last_error()); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  double d = 0.0;
  CHECK(mcfqkd_threshold_individual(2, &d));
  if (fabs(d - 14.644660940672624) > 1e-6) return 2;
  if (mcfqkd_threshold_coherent(0, &d) != MCFQKD_STATUS_DOMAIN) return 3;

  McfqkdConfig *cfg = NULL;
  CHECK(mcfqkd_config_parse("{\"pulse_rate_hz\": 1000, \"session_s\": 130}", &cfg));

  McfqkdReport *report = NULL;
  CHECK(mcfqkd_simulate(cfg, 2, &report));
  size_t bins = 0;
  CHECK(mcfqkd_report_bin_count(report, &bins));
  if (bins != 13) return 4;
  McfqkdBin bin;
  CHECK(mcfqkd_report_bin(report, 0, &bin));
  if (bin.intensity != MCFQKD_INTENSITY_DECOY || bin.time_s != 0.0) return 5;
  char *csv = NULL;
  CHECK(mcfqkd_report_to_csv(report, &csv));
  if (strncmp(csv, "time_s,", 7) != 0) return 6;
  mcfqkd_string_free(csv);
  mcfqkd_report_free(report);

  double cutoff = 0.0;
  CHECK(mcfqkd_cutoff_distance(cfg, MCFQKD_KEY_RATE_MODE_DECOY, 4, 300.0, &cutoff));
  if (!(cutoff > 100.0)) return 7;

  mcfqkd_config_free(cfg);
  printf("ok %s\n", mcfqkd_version());
  return 0;
}
