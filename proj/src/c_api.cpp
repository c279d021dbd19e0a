#include "sirus/sirus_c.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>

#include "json.hpp"
#include "sirus/error.hpp"
#include "sirus/metrics.hpp"
#include "sirus/model_io.hpp"
#include "sirus/pipeline.hpp"
#include "sirus/render.hpp"
#include "sirus/tuning.hpp"

struct sirus_dataset {
  sirus::Dataset data;
};
struct sirus_model {
  sirus::SirusModel model;
};
struct sirus_tuning {
  sirus::TuningResult result;
};

namespace {

thread_local std::string last_error;

sirus_status status_of(sirus::ErrorKind kind) {
  switch (kind) {
    case sirus::ErrorKind::Config:
      return SIRUS_ERR_CONFIG;
    case sirus::ErrorKind::Io:
      return SIRUS_ERR_IO;
    case sirus::ErrorKind::Data:
    case sirus::ErrorKind::InvalidSplit:
    case sirus::ErrorKind::InvalidPath:
    case sirus::ErrorKind::DegenerateRule:
      return SIRUS_ERR_DATA;
    default:
      return SIRUS_ERR_RUNTIME;
  }
}

template <class F>
sirus_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return SIRUS_OK;
  } catch (const sirus::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  }
  return SIRUS_ERR_RUNTIME;
}

void require(const void* ptr, const char* what) {
  if (!ptr) throw sirus::Error(sirus::ErrorKind::Config, std::string(what) + " is null");
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

sirus::ForestParams to_params(const sirus_config& c) {
  sirus::ForestParams p;
  if (c.num_trees < 0) throw sirus::Error(sirus::ErrorKind::Config, "num_trees must be >= 0 (0 means adaptive)");
  if (c.num_trees > 0) p.num_trees = c.num_trees;
  p.max_depth = c.max_depth;
  if (c.mtry > 0) p.mtry = c.mtry;
  p.q = c.q;
  p.sampling = c.subsample ? sirus::Sampling::Subsample : sirus::Sampling::Bootstrap;
  p.subsample_rate = c.subsample_rate;
  p.min_node_size = c.min_node_size;
  p.seed = c.seed;
  p.adaptive.alpha = c.alpha;
  p.adaptive.batch_size = c.batch_size;
  p.adaptive.max_trees = c.max_trees;
  return p;
}

}  // namespace

extern "C" {

void sirus_config_default(sirus_config* c) {
  if (!c) return;
  const sirus::ForestParams p;
  c->q = p.q;
  c->p0 = -1.0;
  c->num_trees = 0;
  c->max_depth = p.max_depth;
  c->mtry = 0;
  c->min_node_size = p.min_node_size;
  c->subsample = 0;
  c->subsample_rate = p.subsample_rate;
  c->seed = p.seed;
  c->folds = 10;
  c->repeats = 10;
  c->alpha = p.adaptive.alpha;
  c->batch_size = p.adaptive.batch_size;
  c->max_trees = p.adaptive.max_trees;
}

const char* sirus_last_error(void) { return last_error.c_str(); }

void sirus_string_free(char* s) { std::free(s); }

sirus_status sirus_dataset_load(const char* path, const char* response, const char* const* categorical,
                                size_t n_categorical, sirus_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(response, "response");
    require(out, "out");
    std::vector<std::string> cats;
    for (size_t i = 0; i < n_categorical; ++i) {
      require(categorical[i], "categorical column name");
      cats.emplace_back(categorical[i]);
    }
    *out = new sirus_dataset{sirus::load_dataset(path, response, cats)};
  });
}

sirus_status sirus_dataset_from_arrays(const double* x, const double* y, size_t n, size_t p,
                                       const char* const* names, sirus_dataset** out) {
  return guarded([&] {
    require(x, "x");
    require(y, "y");
    require(out, "out");
    std::vector<std::string> feature_names(p);
    for (size_t j = 0; j < p; ++j) feature_names[j] = names && names[j] ? names[j] : "x" + std::to_string(j + 1);
    std::vector<double> columns(n * p);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < p; ++j) columns[j * n + i] = x[i * p + j];
    *out = new sirus_dataset{sirus::Dataset(std::move(feature_names), std::move(columns), std::vector<double>(y, y + n))};
  });
}

size_t sirus_dataset_rows(const sirus_dataset* d) { return d ? d->data.n() : 0; }
size_t sirus_dataset_cols(const sirus_dataset* d) { return d ? d->data.p() : 0; }
size_t sirus_dataset_dropped(const sirus_dataset* d) { return d ? d->data.dropped_rows() : 0; }
void sirus_dataset_free(sirus_dataset* d) { delete d; }

sirus_status sirus_fit(const sirus_dataset* data, const sirus_config* config, sirus_model** out) {
  return guarded([&] {
    require(data, "dataset");
    require(config, "config");
    require(out, "out");
    const auto params = to_params(*config);
    double p0 = config->p0;
    if (p0 < 0) p0 = sirus::tune_p0(data->data, params, config->folds, config->repeats).p0;
    *out = new sirus_model{sirus::fit_sirus(data->data, params, p0)};
  });
}

sirus_status sirus_model_save(const sirus_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    sirus::save_model(model->model, path);
  });
}

sirus_status sirus_model_load(const char* path, sirus_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new sirus_model{sirus::load_model(path)};
  });
}

sirus_status sirus_model_to_json(const sirus_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = duplicate(sirus::model_to_json(model->model));
  });
}

sirus_status sirus_model_render(const sirus_model* model, int markdown, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = duplicate(sirus::render_rules(model->model, markdown ? sirus::TableFormat::Markdown : sirus::TableFormat::Text));
  });
}

size_t sirus_model_num_rules(const sirus_model* m) { return m ? m->model.size() : 0; }
size_t sirus_model_num_features(const sirus_model* m) { return m ? m->model.schema.feature_names.size() : 0; }
double sirus_model_intercept(const sirus_model* m) { return m ? m->model.intercept : 0.0; }
double sirus_model_p0(const sirus_model* m) { return m ? m->model.p0 : 0.0; }
int64_t sirus_model_num_trees(const sirus_model* m) { return m ? m->model.num_trees : 0; }

size_t sirus_model_weights(const sirus_model* m, double* out, size_t capacity) {
  if (!m || !out) return 0;
  const size_t count = std::min(capacity, m->model.weights.size());
  for (size_t k = 0; k < count; ++k) out[k] = m->model.weights[k];
  return count;
}

sirus_status sirus_model_dice(const sirus_model* a, const sirus_model* b, double* out) {
  return guarded([&] {
    require(a, "model a");
    require(b, "model b");
    require(out, "out");
    *out = sirus::dice_sorensen(a->model.paths(), b->model.paths());
  });
}

void sirus_model_free(sirus_model* m) { delete m; }

sirus_status sirus_predict(const sirus_model* model, const double* x, size_t p, double* out) {
  return guarded([&] {
    require(model, "model");
    require(x, "x");
    require(out, "out");
    *out = sirus::predict(model->model, std::span<const double>(x, p));
  });
}

sirus_status sirus_predict_csv(const sirus_model* model, const char* query_path, char** out) {
  return guarded([&] {
    require(model, "model");
    require(query_path, "query path");
    require(out, "out");
    std::ifstream in(query_path);
    if (!in) throw sirus::Error(sirus::ErrorKind::Io, std::string("cannot open ") + query_path);
    const auto rows = sirus::load_query(in, model->model.schema);
    std::ostringstream os;
    os << "prediction\n";
    for (const auto& row : rows) os << sirus::format_exact(sirus::predict(model->model, row)) << '\n';
    *out = duplicate(os.str());
  });
}

sirus_status sirus_tune(const sirus_dataset* data, const sirus_config* config, sirus_tuning** out) {
  return guarded([&] {
    require(data, "dataset");
    require(config, "config");
    require(out, "out");
    *out = new sirus_tuning{sirus::tune_p0(data->data, to_params(*config), config->folds, config->repeats)};
  });
}

double sirus_tuning_p0(const sirus_tuning* t) { return t ? t->result.p0 : 0.0; }
int64_t sirus_tuning_forests_grown(const sirus_tuning* t) { return t ? t->result.forests_grown : 0; }

sirus_status sirus_tuning_pareto_csv(const sirus_tuning* t, char** out) {
  return guarded([&] {
    require(t, "tuning");
    require(out, "out");
    std::ostringstream os;
    sirus::write_pareto_csv(os, t->result.pareto);
    *out = duplicate(os.str());
  });
}

sirus_status sirus_tuning_report_json(const sirus_tuning* t, char** out) {
  return guarded([&] {
    require(t, "tuning");
    require(out, "out");
    auto doc = nlohmann::json::parse(sirus::to_json(t->result.evaluation));
    doc["repeat_p0"] = t->result.repeat_p0;
    doc["forests_grown"] = t->result.forests_grown;
    doc["full_data_trees"] = t->result.full_data_trees;
    *out = duplicate(doc.dump(2));
  });
}

void sirus_tuning_free(sirus_tuning* t) { delete t; }

sirus_status sirus_cv_evaluate(const sirus_dataset* data, const sirus_config* config, double p0, char** report_json) {
  return guarded([&] {
    require(data, "dataset");
    require(config, "config");
    require(report_json, "out");
    const auto report = sirus::cv_evaluate(data->data, p0, to_params(*config), config->folds, config->repeats);
    *report_json = duplicate(sirus::to_json(report));
  });
}

sirus_status sirus_baseline_error(const sirus_dataset* data, const sirus_config* config, double* out) {
  return guarded([&] {
    require(data, "dataset");
    require(config, "config");
    require(out, "out");
    auto params = to_params(*config);
    if (config->num_trees == 0) params.num_trees.reset();
    params.max_depth = 0;
    params.min_node_size = std::max(config->min_node_size, 5);
    *out = sirus::quantile_forest_cv_error(data->data, params, config->folds, config->repeats);
  });
}

}  // extern "C"
