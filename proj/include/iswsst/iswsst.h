#ifndef ISWSST_H
#define ISWSST_H

/* C interface to the multi-domain segmentation library. Objects are opaque
 * handles; every fallible call returns an iswsst_status and records a
 * message retrievable with iswsst_last_error() on the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(ISWSST_BUILDING)
#define ISWSST_API __declspec(dllexport)
#else
#define ISWSST_API __declspec(dllimport)
#endif
#else
#define ISWSST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum iswsst_status {
  ISWSST_OK = 0,
  ISWSST_ERR_CONTRACT = 1, /* invalid argument, shape or configuration */
  ISWSST_ERR_IO = 2,       /* file missing or unwritable */
  ISWSST_ERR_FORMAT = 3,   /* malformed container or checkpoint */
  ISWSST_ERR_NUMERIC = 4,  /* non-finite loss during training */
  ISWSST_ERR_INTERNAL = 5
} iswsst_status;

typedef struct iswsst_config iswsst_config;
typedef struct iswsst_model iswsst_model;

#define ISWSST_MAX_CLASSES 256

typedef struct iswsst_metrics {
  double oa;
  double miou;
  size_t n_classes;
  /* NaN marks classes absent from both truth and prediction. */
  double per_class_iou[ISWSST_MAX_CLASSES];
} iswsst_metrics;

typedef void (*iswsst_progress_fn)(size_t step, double loss, void* user);
typedef void (*iswsst_gradcheck_fn)(const char* block, double max_rel_error, size_t checked, int passed,
                                    void* user);

ISWSST_API const char* iswsst_version(void);
/* Message for the last failed call on this thread; empty after success. */
ISWSST_API const char* iswsst_last_error(void);

/* Configuration: flat `section.key = value` entries over built-in defaults. */
ISWSST_API iswsst_status iswsst_config_create(iswsst_config** out);
ISWSST_API iswsst_status iswsst_config_load(const char* path, iswsst_config** out);
/* Rejects unknown keys and values that do not parse. */
ISWSST_API iswsst_status iswsst_config_set(iswsst_config* config, const char* key, const char* value);
/* Writes the effective value into buf (NUL-terminated); *needed receives the
 * required size including the terminator. */
ISWSST_API iswsst_status iswsst_config_get(const iswsst_config* config, const char* key, char* buf, size_t cap,
                                           size_t* needed);
ISWSST_API iswsst_status iswsst_config_save(const iswsst_config* config, const char* path);
ISWSST_API void iswsst_config_free(iswsst_config* config);

/* Builds a model; parameters are initialised from train.seed. */
ISWSST_API iswsst_status iswsst_model_create(const iswsst_config* config, iswsst_model** out);
/* Loads a checkpoint. With config NULL the `<checkpoint>.cfg` sidecar
 * written by iswsst_model_save is used. */
ISWSST_API iswsst_status iswsst_model_load(const char* checkpoint, const iswsst_config* config, iswsst_model** out);
/* Writes the checkpoint and its `.cfg` sidecar. */
ISWSST_API iswsst_status iswsst_model_save(const iswsst_model* model, const char* checkpoint);
ISWSST_API void iswsst_model_free(iswsst_model* model);

/* Trains on every sample in data_dir (*.msrs with matching *.lbls) using
 * the train.* settings. progress may be NULL. */
ISWSST_API iswsst_status iswsst_model_train(iswsst_model* model, const char* data_dir, iswsst_progress_fn progress,
                                            void* user, double* final_loss);
/* bands: comma-separated tags overriding those stored in the raster, or
 * NULL. window 0 selects the model size, stride 0 half the window. Writes
 * a label container and a palette BMP beside it. */
ISWSST_API iswsst_status iswsst_model_predict_file(const iswsst_model* model, const char* raster_path,
                                                   const char* bands, size_t window, size_t stride,
                                                   const char* out_path);
ISWSST_API iswsst_status iswsst_model_evaluate(const iswsst_model* model, const char* data_dir, const char* bands,
                                               iswsst_metrics* out);
ISWSST_API iswsst_status iswsst_model_fusion_weights(const iswsst_model* model, double* out, size_t cap,
                                                     size_t* count);
ISWSST_API iswsst_status iswsst_model_domain_name(const iswsst_model* model, size_t domain, char* buf, size_t cap,
                                                  size_t* needed);

/* CSV line `split,oa,miou,iou_0..` (or the header when header != 0). */
ISWSST_API iswsst_status iswsst_format_metrics_csv(const char* split, const iswsst_metrics* metrics, int header,
                                                   char* buf, size_t cap, size_t* needed);

ISWSST_API iswsst_status iswsst_synth_write(uint64_t seed, size_t n, size_t size, int boundary_dense,
                                            const char* dir);
/* Max |decode(encode(x)) - x| over a random 64-bit image. */
ISWSST_API iswsst_status iswsst_roundtrip_check(size_t size, size_t levels, size_t channels, uint64_t seed,
                                                double* max_error);
/* Runs the per-block finite-difference suite; callback may be NULL. */
ISWSST_API iswsst_status iswsst_gradcheck(uint64_t seed, iswsst_gradcheck_fn callback, void* user,
                                          int* all_passed);

#ifdef __cplusplus
}
#endif

#endif /* ISWSST_H */
