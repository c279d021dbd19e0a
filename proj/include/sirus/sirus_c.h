#ifndef SIRUS_C_H
#define SIRUS_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef SIRUS_BUILDING_LIBRARY
#    define SIRUS_API __declspec(dllexport)
#  else
#    define SIRUS_API __declspec(dllimport)
#  endif
#else
#  define SIRUS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sirus_status {
  SIRUS_OK = 0,
  SIRUS_ERR_CONFIG = 1,
  SIRUS_ERR_DATA = 2,
  SIRUS_ERR_IO = 3,
  SIRUS_ERR_RUNTIME = 4
} sirus_status;

typedef struct sirus_dataset sirus_dataset;
typedef struct sirus_model sirus_model;
typedef struct sirus_tuning sirus_tuning;

typedef struct sirus_config {
  int q;                  /* quantile count, default 10 */
  double p0;              /* selection threshold; negative means tune */
  int64_t num_trees;      /* 0 means adaptive */
  int max_depth;          /* default 2 */
  int mtry;               /* 0 means max(floor(p/3), 2) */
  int min_node_size;      /* default 1 */
  int subsample;          /* 0: bootstrap, 1: subsampling without replacement */
  double subsample_rate;  /* default 0.632 */
  uint64_t seed;
  int folds;              /* default 10 */
  int repeats;            /* default 10 */
  double alpha;           /* adaptive stopping level, default 0.05 */
  int batch_size;         /* adaptive batch, default 100 */
  int64_t max_trees;      /* adaptive cap, default 100000 */
} sirus_config;

SIRUS_API void sirus_config_default(sirus_config* config);

/* Message of the last failure on the calling thread, or "". */
SIRUS_API const char* sirus_last_error(void);

/* Strings returned through char** are owned by the caller. */
SIRUS_API void sirus_string_free(char* s);

SIRUS_API sirus_status sirus_dataset_load(const char* path, const char* response, const char* const* categorical,
                                          size_t n_categorical, sirus_dataset** out);
/* x is row-major n by p; names may be NULL. */
SIRUS_API sirus_status sirus_dataset_from_arrays(const double* x, const double* y, size_t n, size_t p,
                                                 const char* const* names, sirus_dataset** out);
SIRUS_API size_t sirus_dataset_rows(const sirus_dataset* data);
SIRUS_API size_t sirus_dataset_cols(const sirus_dataset* data);
SIRUS_API size_t sirus_dataset_dropped(const sirus_dataset* data);
SIRUS_API void sirus_dataset_free(sirus_dataset* data);

/* Fits at config->p0, or tunes p0 first when it is negative. */
SIRUS_API sirus_status sirus_fit(const sirus_dataset* data, const sirus_config* config, sirus_model** out);
SIRUS_API sirus_status sirus_model_save(const sirus_model* model, const char* path);
SIRUS_API sirus_status sirus_model_load(const char* path, sirus_model** out);
SIRUS_API sirus_status sirus_model_to_json(const sirus_model* model, char** out);
SIRUS_API sirus_status sirus_model_render(const sirus_model* model, int markdown, char** out);
SIRUS_API size_t sirus_model_num_rules(const sirus_model* model);
SIRUS_API size_t sirus_model_num_features(const sirus_model* model);
SIRUS_API double sirus_model_intercept(const sirus_model* model);
SIRUS_API double sirus_model_p0(const sirus_model* model);
SIRUS_API int64_t sirus_model_num_trees(const sirus_model* model);
/* Copies min(capacity, rules) weights. */
SIRUS_API size_t sirus_model_weights(const sirus_model* model, double* out, size_t capacity);
/* Dice-Sorensen index between the rule sets of two models. */
SIRUS_API sirus_status sirus_model_dice(const sirus_model* a, const sirus_model* b, double* out);
SIRUS_API void sirus_model_free(sirus_model* model);

SIRUS_API sirus_status sirus_predict(const sirus_model* model, const double* x, size_t p, double* out);
/* Predictions for every row of a query CSV, as CSV with a "prediction" header. */
SIRUS_API sirus_status sirus_predict_csv(const sirus_model* model, const char* query_path, char** out);

SIRUS_API sirus_status sirus_tune(const sirus_dataset* data, const sirus_config* config, sirus_tuning** out);
SIRUS_API double sirus_tuning_p0(const sirus_tuning* tuning);
SIRUS_API int64_t sirus_tuning_forests_grown(const sirus_tuning* tuning);
SIRUS_API sirus_status sirus_tuning_pareto_csv(const sirus_tuning* tuning, char** out);
SIRUS_API sirus_status sirus_tuning_report_json(const sirus_tuning* tuning, char** out);
SIRUS_API void sirus_tuning_free(sirus_tuning* tuning);

/* Cross-validated size, stability and error at a fixed p0, as JSON. */
SIRUS_API sirus_status sirus_cv_evaluate(const sirus_dataset* data, const sirus_config* config, double p0,
                                         char** report_json);
/* Cross-validated error of the unrestricted-depth quantile forest. */
SIRUS_API sirus_status sirus_baseline_error(const sirus_dataset* data, const sirus_config* config, double* out);

#ifdef __cplusplus
}
#endif

#endif
