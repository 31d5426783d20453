/* Upper bounds for a 2-d pyramid inclusion from the Fourier (GaNi) and
 * finite element (p1) discretisations. */
#include <stdio.h>

#include "homog.h"

static int check(HomogStatus s) {
    if (s != HOMOG_STATUS_OK) {
        fprintf(stderr, "error %d: %s\n", (int)s, homog_last_error());
        return 1;
    }
    return 0;
}

int main(void) {
    HomogMaterial *mat = NULL;
    if (check(homog_material_new(2, 10.0, HOMOG_GEOMETRY_PYRAMID, 0.0, &mat))) return 1;

    HomogSolveOptions opts = {1e-10, 0, false};
    const int methods[] = {HOMOG_METHOD_FFTH_GANI, HOMOG_METHOD_FEM_P1};
    const size_t grids[] = {15, 20};
    for (int i = 0; i < 2; i++) {
        HomogResult *res = NULL;
        if (check(homog_solve(mat, methods[i], grids[i], &opts, &res))) return 1;
        double value = 0.0, bound = 0.0;
        size_t iters = 0;
        homog_result_value(res, &value);
        homog_result_upper_bound(res, &bound);
        homog_result_iterations(res, &iters);
        printf("method %d N=%zu value %.10f bound %.10f iterations %zu\n", methods[i], grids[i], value, bound, iters);
        homog_result_free(res);
    }

    /* invalid input reports a status and a message */
    HomogMaterial *bad = NULL;
    HomogStatus s = homog_material_new(4, 10.0, HOMOG_GEOMETRY_SQUARE, 0.0, &bad);
    printf("d=4 -> status %d (%s)\n", (int)s, homog_last_error());

    homog_material_free(mat);
    return s == HOMOG_STATUS_INVALID_ARGUMENT ? 0 : 1;
}
