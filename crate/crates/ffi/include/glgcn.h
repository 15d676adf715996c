#ifndef GLGCN_H
#define GLGCN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>

typedef enum GlgcnSplit {
  GLGCN_SPLIT_TRAIN = 0,
  GLGCN_SPLIT_VAL = 1,
  GLGCN_SPLIT_TEST = 2,
} GlgcnSplit;

/**
 * Result code of every exported function.
 */
typedef enum GlgcnStatus {
  GLGCN_STATUS_OK = 0,
  GLGCN_STATUS_NULL_POINTER = 1,
  GLGCN_STATUS_INVALID_ARGUMENT = 2,
  GLGCN_STATUS_IO = 3,
  GLGCN_STATUS_DATA = 4,
  GLGCN_STATUS_SHAPE = 5,
  GLGCN_STATUS_NON_FINITE = 6,
  GLGCN_STATUS_CHECKPOINT = 7,
  GLGCN_STATUS_PANIC = 8,
} GlgcnStatus;

/**
 * Opaque dataset handle.
 */
typedef struct GlgcnDataset GlgcnDataset;

/**
 * Opaque trained-model handle: parameters plus the configuration that
 * produced them.
 */
typedef struct GlgcnModel GlgcnModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *glgcn_version(void);

/**
 * Message of the last failed call on this thread, or NULL when the last
 * call succeeded. Valid until the next call into the library on the same
 * thread.
 */
const char *glgcn_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void glgcn_string_free(char *s);

/**
 * Loads a dataset directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GlgcnStatus glgcn_dataset_load(const char *path, struct GlgcnDataset **out_dataset);

/**
 * Builds a bundled synthetic dataset: `"sbm2"` or `"six-node"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum GlgcnStatus glgcn_dataset_builtin(const char *name, struct GlgcnDataset **out_dataset);

/**
 * Writes a dataset in the directory format read by [`glgcn_dataset_load`].
 *
 * # Safety
 * `dataset` must be a live handle; `path` a NUL-terminated string.
 */
enum GlgcnStatus glgcn_dataset_write(const struct GlgcnDataset *dataset, const char *path);

/**
 * Releases a dataset handle. NULL is ignored.
 *
 * # Safety
 * `dataset` must come from this library and not have been freed.
 */
void glgcn_dataset_free(struct GlgcnDataset *dataset);

/**
 * Node, feature and class counts; any out pointer may be NULL.
 *
 * # Safety
 * `dataset` must be a live handle; non-NULL out pointers must be writable.
 */
enum GlgcnStatus glgcn_dataset_shape(const struct GlgcnDataset *dataset,
                                     size_t *out_nodes,
                                     size_t *out_features,
                                     size_t *out_classes);

/**
 * Number of nodes in a split.
 *
 * # Safety
 * `dataset` must be a live handle; `out_len` must be writable.
 */
enum GlgcnStatus glgcn_dataset_split_len(const struct GlgcnDataset *dataset,
                                         enum GlgcnSplit split,
                                         size_t *out_len);

/**
 * The default training configuration as JSON.
 *
 * # Safety
 * `out_json` must be writable.
 */
enum GlgcnStatus glgcn_config_default_json(char **out_json);

/**
 * Trains one model. `config_json` may be NULL for the defaults; missing
 * fields take their default values. `out_report_json` may be NULL; when
 * set it receives the training report.
 *
 * # Safety
 * `dataset` must be a live handle; `config_json` NULL or NUL-terminated;
 * `out_model` writable.
 */
enum GlgcnStatus glgcn_train(const struct GlgcnDataset *dataset,
                             const char *config_json,
                             struct GlgcnModel **out_model,
                             char **out_report_json);

/**
 * Releases a model handle. NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and not have been freed.
 */
void glgcn_model_free(struct GlgcnModel *model);

/**
 * The configuration a model was trained with, as JSON.
 *
 * # Safety
 * `model` must be a live handle; `out_json` writable.
 */
enum GlgcnStatus glgcn_model_config_json(const struct GlgcnModel *model, char **out_json);

/**
 * Saves a model as a checkpoint file.
 *
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated string.
 */
enum GlgcnStatus glgcn_model_save(const struct GlgcnModel *model, const char *path);

/**
 * Loads a checkpoint written by [`glgcn_model_save`] or the CLI.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_model` writable.
 */
enum GlgcnStatus glgcn_model_load(const char *path, struct GlgcnModel **out_model);

/**
 * Classification accuracy on one split, in `[0, 1]`.
 *
 * # Safety
 * `model` and `dataset` must be live handles; `out_accuracy` writable.
 */
enum GlgcnStatus glgcn_evaluate(const struct GlgcnModel *model,
                                const struct GlgcnDataset *dataset,
                                enum GlgcnSplit split,
                                double *out_accuracy);

/**
 * Predicted class of every node. `len` must equal the node count.
 *
 * # Safety
 * `model` and `dataset` must be live handles; `out_labels` must point to
 * `len` writable values.
 */
enum GlgcnStatus glgcn_predict(const struct GlgcnModel *model,
                               const struct GlgcnDataset *dataset,
                               size_t *out_labels,
                               size_t len);

/**
 * Class probabilities, row-major `nodes × classes`. `len` must equal
 * their product.
 *
 * # Safety
 * `model` and `dataset` must be live handles; `out_probs` must point to
 * `len` writable values.
 */
enum GlgcnStatus glgcn_predict_proba(const struct GlgcnModel *model,
                                     const struct GlgcnDataset *dataset,
                                     double *out_probs,
                                     size_t len);

/**
 * Largest relative error between analytic and central-difference
 * gradients for `variant` (`gcn`, `glgcn-f`, `glgcn-l`, `glgcn-fl`) on the
 * six-node fixture.
 *
 * # Safety
 * `variant` must be a NUL-terminated string; `out_max_rel_error` writable.
 */
enum GlgcnStatus glgcn_gradcheck(const char *variant, double epsilon, double *out_max_rel_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLGCN_H */
