/* Trains on the bundled two-block fixture through the C ABI, saves and
 * reloads the model, and checks both copies agree. argv[1] is the
 * checkpoint path. */
#include <stdio.h>
#include <stdlib.h>

#include "glgcn.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        GlgcnStatus s_ = (call);                                             \
        if (s_ != GLGCN_STATUS_OK) {                                         \
            const char *m_ = glgcn_last_error_message();                     \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,          \
                    m_ ? m_ : "(no message)");                               \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: smoke CHECKPOINT\n");
        return 2;
    }
    printf("glgcn %s\n", glgcn_version());

    GlgcnDataset *ds = NULL;
    CHECK(glgcn_dataset_builtin("sbm2", &ds));
    size_t n = 0, p = 0, d = 0;
    CHECK(glgcn_dataset_shape(ds, &n, &p, &d));
    printf("nodes %zu features %zu classes %zu\n", n, p, d);

    GlgcnModel *model = NULL;
    char *report = NULL;
    CHECK(glgcn_train(ds, "{\"variant\": \"glgcn-fl\", \"max_epochs\": 60}", &model, &report));
    glgcn_string_free(report);

    double acc = 0.0;
    CHECK(glgcn_evaluate(model, ds, GLGCN_SPLIT_TRAIN, &acc));
    printf("train accuracy %.3f\n", acc);

    CHECK(glgcn_model_save(model, argv[1]));
    GlgcnModel *again = NULL;
    CHECK(glgcn_model_load(argv[1], &again));

    size_t *a = malloc(n * sizeof *a);
    size_t *b = malloc(n * sizeof *b);
    CHECK(glgcn_predict(model, ds, a, n));
    CHECK(glgcn_predict(again, ds, b, n));
    for (size_t i = 0; i < n; i++) {
        if (a[i] != b[i]) {
            fprintf(stderr, "node %zu: %zu vs %zu\n", i, a[i], b[i]);
            return 1;
        }
    }
    printf("reloaded model agrees on %zu nodes\n", n);

    if (glgcn_predict(model, ds, a, n + 1) != GLGCN_STATUS_INVALID_ARGUMENT) {
        fprintf(stderr, "wrong buffer length was accepted\n");
        return 1;
    }

    free(a);
    free(b);
    glgcn_model_free(again);
    glgcn_model_free(model);
    glgcn_dataset_free(ds);
    return 0;
}
