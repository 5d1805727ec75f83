/* Minimal C client: two disks, forward projection, reconstruction. */
#include <stdio.h>
#include <stdlib.h>

#include "dplane.h"

static const char *SCENE =
    "[scene]\n"
    "dim = 2\n"
    "bodies = [{ center = [-2.0, 0.0], radius = 1.0 }, { center = [2.0, 0.0], radius = 1.0 }]\n";

static int fail(const char *what, DpStatus status) {
    char msg[256];
    dp_last_error(msg, sizeof msg);
    fprintf(stderr, "%s: status %d: %s\n", what, (int)status, msg);
    return 1;
}

int main(void) {
    DpScene *scene = NULL;
    DpChart *chart = NULL;
    DpSinogram *sino = NULL;
    DpImage *image = NULL;
    DpStatus s;

    if ((s = dp_scene_from_toml(SCENE, &scene)) != DP_STATUS_OK) return fail("scene", s);
    if ((s = dp_chart_new(DP_CHART_KIND_LINE2, 180, 256, 4.0, &chart)) != DP_STATUS_OK) return fail("chart", s);
    if ((s = dp_forward(scene, chart, false, &sino)) != DP_STATUS_OK) return fail("forward", s);
    if ((s = dp_fbp(sino, 64, 4.0, &image)) != DP_STATUS_OK) return fail("fbp", s);

    size_t shape[3];
    dp_image_shape(image, shape);
    size_t n = shape[0] * shape[1] * shape[2];
    double *values = malloc(n * sizeof *values);
    if ((s = dp_image_values(image, values, n)) != DP_STATUS_OK) return fail("values", s);
    /* cell nearest (-2, 0) lies inside the left disk */
    size_t i = (size_t)((-2.0 + 4.0) / (8.0 / 64.0));
    printf("version %s value %.3f\n", dp_version(), values[i * shape[1] + shape[1] / 2]);

    free(values);
    dp_image_free(image);
    dp_sinogram_free(sino);
    dp_chart_free(chart);
    dp_scene_free(scene);
    return 0;
}
