#include <stdio.h>
#include <string.h>
#include "matcircuit.h"

static const char *X = "{\"rows\":2,\"cols\":2,\"data\":[[\"1\",\"2\"],[\"3\",\"4\"]]}";
static const char *W = "{\"rows\":2,\"cols\":2,\"data\":[[\"5\",\"6\"],[\"7\",\"8\"]]}";

int main(void) {
    McInstance *inst = NULL;
    McAssignment *asg = NULL;
    char *y = NULL;
    McInstanceStats stats;
    size_t row = 0;

    if (mc_matmul_compile("97", 2, 2, 2, "crpc", NULL, &inst) != MC_STATUS_INVALID_ARGUMENT)
        return 10;
    if (mc_last_error_message() == NULL)
        return 11;
    if (mc_matmul_compile("97", 2, 2, 2, "crpc-psq", "seed", &inst) != MC_STATUS_OK)
        return 12;
    if (mc_instance_stats(inst, &stats) != MC_STATUS_OK || stats.n_constraints != 2)
        return 13;
    if (mc_matmul_witness(inst, X, W, &asg, &y) != MC_STATUS_OK)
        return 14;
    if (strstr(y, "\"19\"") == NULL || strstr(y, "\"50\"") == NULL)
        return 15;
    if (mc_check(inst, asg, &row) != MC_STATUS_OK || row != SIZE_MAX)
        return 16;
    printf("%s\n", y);
    mc_string_free(y);
    mc_assignment_free(asg);
    mc_instance_free(inst);
    return 0;
}
