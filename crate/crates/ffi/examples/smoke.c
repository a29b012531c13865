#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "hermite_bmo.h"

static int check(HbStatus s, const char *what) {
  if (s != HB_STATUS_OK) {
    const char *msg = hb_last_error_message();
    fprintf(stderr, "%s failed with %d: %s\n", what, (int)s, msg ? msg : "");
    return 1;
  }
  return 0;
}

int main(void) {
  double x = 0.0, y = 0.0, k = 0.0;
  if (check(hb_heat_kernel(0.5, 1, &x, &y, &k), "hb_heat_kernel")) return 1;
  if (fabs(k - sqrt(3.0 / (8.0 * M_PI))) > 1e-14) return 2;

  if (hb_heat_kernel(0.5, 1, NULL, &y, &k) != HB_STATUS_NULL_POINTER) return 3;
  if (hb_last_error_message() == NULL) return 4;

  enum { M = 201 };
  double samples[M];
  for (int i = 0; i < M; i++) samples[i] = 1.0;
  HbGridFunction *f = NULL, *g = NULL;
  if (check(hb_grid_function_new(1, 4.0, M, samples, M, &f), "hb_grid_function_new")) return 5;
  if (check(hb_apply_heat(f, 0.3, &g), "hb_apply_heat")) return 6;
  double out[M];
  if (check(hb_grid_function_samples(g, out, hb_grid_function_len(g)), "hb_grid_function_samples")) return 7;
  double expect = 0;
  double c[1] = {0.0};
  if (check(hb_heat_action_on_one(0.3, 1, c, &expect), "hb_heat_action_on_one")) return 8;
  if (fabs(out[M / 2] - expect) > 1e-10) return 9;
  hb_grid_function_free(g);
  hb_grid_function_free(f);

  char *json = NULL;
  bool passed = false;
  if (check(hb_verify_json("{\"operators\": []}", &json, &passed), "hb_verify_json")) return 10;
  if (!passed || json == NULL) return 11;
  hb_string_free(json);
  printf("ok %s\n", hb_version());
  return 0;
}
