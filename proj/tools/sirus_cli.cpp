#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sirus/sirus_c.h"

namespace {

struct Options {
  std::vector<std::string> data;
  std::vector<std::string> response;
  std::vector<std::string> categorical;
  int q = 10;
  std::optional<double> p0;
  std::string trees = "adaptive";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int folds = 10;
  int repeats = 10;
  std::string out;
  std::string model;
};

struct Failure {
  sirus_status status;
  std::string message;
};

int exit_code(sirus_status s) {
  switch (s) {
    case SIRUS_OK:
      return 0;
    case SIRUS_ERR_CONFIG:
      return 2;
    case SIRUS_ERR_DATA:
    case SIRUS_ERR_IO:
      return 3;
    default:
      return 4;
  }
}

void check(sirus_status s) {
  if (s != SIRUS_OK) throw Failure{s, sirus_last_error()};
}

struct StringDeleter {
  void operator()(char* s) const { sirus_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct DatasetDeleter {
  void operator()(sirus_dataset* d) const { sirus_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(sirus_model* m) const { sirus_model_free(m); }
};
struct TuningDeleter {
  void operator()(sirus_tuning* t) const { sirus_tuning_free(t); }
};
using Dataset = std::unique_ptr<sirus_dataset, DatasetDeleter>;
using Model = std::unique_ptr<sirus_model, ModelDeleter>;
using Tuning = std::unique_ptr<sirus_tuning, TuningDeleter>;

std::string take(sirus_status s, char** text) {
  check(s);
  OwnedString owned(*text);
  return owned.get();
}

sirus_config make_config(const Options& o) {
  sirus_config c;
  sirus_config_default(&c);
  c.q = o.q;
  c.p0 = o.p0.value_or(-1.0);
  if (o.trees == "adaptive") {
    c.num_trees = 0;
  } else {
    try {
      std::size_t used = 0;
      const long long m = std::stoll(o.trees, &used);
      if (used != o.trees.size() || m < 1) throw std::invalid_argument("");
      c.num_trees = m;
    } catch (const std::exception&) {
      throw Failure{SIRUS_ERR_CONFIG, "--trees must be a positive integer or 'adaptive'"};
    }
  }
  if (o.seed_set) c.seed = o.seed;
  c.folds = o.folds;
  c.repeats = o.repeats;
  return c;
}

Dataset load(const std::string& path, const std::string& response, const std::vector<std::string>& categorical) {
  std::vector<const char*> cats;
  for (const auto& c : categorical) cats.push_back(c.c_str());
  sirus_dataset* d = nullptr;
  check(sirus_dataset_load(path.c_str(), response.c_str(), cats.data(), cats.size(), &d));
  Dataset owned(d);
  std::cerr << path << ": n=" << sirus_dataset_rows(d) << " p=" << sirus_dataset_cols(d)
            << " dropped=" << sirus_dataset_dropped(d) << '\n';
  return owned;
}

void require_single_dataset(const Options& o) {
  if (o.data.size() != 1) throw Failure{SIRUS_ERR_CONFIG, "exactly one --data file is required"};
  if (o.response.size() != 1) throw Failure{SIRUS_ERR_CONFIG, "exactly one --response column is required"};
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Failure{SIRUS_ERR_IO, "cannot write " + path};
  out << text;
}

bool is_markdown(const std::string& path) {
  return std::filesystem::path(path).extension() == ".md";
}

void cmd_fit(const Options& o) {
  require_single_dataset(o);
  auto data = load(o.data[0], o.response[0], o.categorical);
  auto config = make_config(o);
  if (!o.p0) std::cerr << "tuning p0 with " << config.repeats << " x " << config.folds << "-fold CV\n";
  sirus_model* raw = nullptr;
  check(sirus_fit(data.get(), &config, &raw));
  Model model(raw);
  const std::string model_path = o.model.empty() ? "sirus_model.json" : o.model;
  check(sirus_model_save(model.get(), model_path.c_str()));
  char* table = nullptr;
  const auto text = take(sirus_model_render(model.get(), is_markdown(o.out), &table), &table);
  if (sirus_model_num_rules(model.get()) == 0) std::cerr << "warning: the model has no rule\n";
  std::cerr << "p0=" << sirus_model_p0(model.get()) << " trees=" << sirus_model_num_trees(model.get())
            << " rules=" << sirus_model_num_rules(model.get()) << " model=" << model_path << '\n';
  emit(o.out, text);
}

void cmd_predict(const Options& o) {
  if (o.model.empty()) throw Failure{SIRUS_ERR_CONFIG, "--model is required"};
  if (o.data.size() != 1) throw Failure{SIRUS_ERR_CONFIG, "exactly one --data query file is required"};
  sirus_model* raw = nullptr;
  check(sirus_model_load(o.model.c_str(), &raw));
  Model model(raw);
  char* csv = nullptr;
  emit(o.out, take(sirus_predict_csv(model.get(), o.data[0].c_str(), &csv), &csv));
}

void cmd_tune(const Options& o) {
  require_single_dataset(o);
  auto data = load(o.data[0], o.response[0], o.categorical);
  auto config = make_config(o);
  sirus_tuning* raw = nullptr;
  check(sirus_tune(data.get(), &config, &raw));
  Tuning tuning(raw);
  char* csv = nullptr;
  const auto pareto = take(sirus_tuning_pareto_csv(tuning.get(), &csv), &csv);
  char* json = nullptr;
  const auto report = take(sirus_tuning_report_json(tuning.get(), &json), &json);
  if (o.out.empty()) {
    std::cout << pareto;
    std::cerr << report << '\n';
  } else {
    emit(o.out, pareto);
    std::cout << report << '\n';
  }
}

void cmd_stability(const Options& o) {
  require_single_dataset(o);
  auto data = load(o.data[0], o.response[0], o.categorical);
  auto config = make_config(o);
  double p0 = config.p0;
  if (!o.p0) {
    sirus_tuning* raw = nullptr;
    check(sirus_tune(data.get(), &config, &raw));
    Tuning tuning(raw);
    p0 = sirus_tuning_p0(tuning.get());
  }
  char* json = nullptr;
  auto report = nlohmann::json::parse(take(sirus_cv_evaluate(data.get(), &config, p0, &json), &json));
  report["dataset"] = std::filesystem::path(o.data[0]).stem().string();
  std::cout << report.dump(2) << '\n';
  if (!o.out.empty()) {
    std::ostringstream row;
    row.precision(17);
    row << "dataset,p0,size,stability,error,M,seed\n"
        << report["dataset"].get<std::string>() << ',' << p0 << ',' << report["size"].get<double>() << ','
        << report["stability"].get<double>() << ',' << report["error"].get<double>() << ','
        << report["mean_trees"].get<double>() << ',' << config.seed << '\n';
    emit(o.out, row.str());
  }
}

int cmd_benchmark(const Options& o) {
  if (o.data.empty()) throw Failure{SIRUS_ERR_CONFIG, "at least one --data file is required"};
  if (o.response.size() != 1 && o.response.size() != o.data.size())
    throw Failure{SIRUS_ERR_CONFIG, "give one --response for all datasets or one per dataset"};
  auto config = make_config(o);
  std::ostringstream csv;
  csv.precision(17);
  csv << "dataset,method,p0,size,stability,error,M,seed\n";
  int code = 0;
  for (std::size_t d = 0; d < o.data.size(); ++d) {
    const auto name = std::filesystem::path(o.data[d]).stem().string();
    try {
      auto data = load(o.data[d], o.response.size() == 1 ? o.response[0] : o.response[d], o.categorical);
      nlohmann::json report;
      if (o.p0) {
        char* json = nullptr;
        report = nlohmann::json::parse(take(sirus_cv_evaluate(data.get(), &config, *o.p0, &json), &json));
      } else {
        sirus_tuning* raw = nullptr;
        check(sirus_tune(data.get(), &config, &raw));
        Tuning tuning(raw);
        char* json = nullptr;
        report = nlohmann::json::parse(take(sirus_tuning_report_json(tuning.get(), &json), &json));
      }
      csv << name << ",sirus," << report["p0"].get<double>() << ',' << report["size"].get<double>() << ','
          << report["stability"].get<double>() << ',' << report["error"].get<double>() << ','
          << report["mean_trees"].get<double>() << ',' << config.seed << '\n';
      double baseline = 0;
      check(sirus_baseline_error(data.get(), &config, &baseline));
      csv << name << ",quantile_forest,,,," << baseline << ",500," << config.seed << '\n';
      std::cerr << name << ": done\n";
    } catch (const Failure& f) {
      std::cerr << name << ": " << f.message << '\n';
      code = std::max(code, exit_code(f.status));
    }
  }
  emit(o.out, csv.str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable and interpretable rule sets for regression"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--data", o.data, "CSV file(s)")->delimiter(',');
    cmd->add_option("--response", o.response, "Response column(s)")->delimiter(',');
    cmd->add_option("--categorical", o.categorical, "Categorical columns")->delimiter(',');
    cmd->add_option("--q", o.q, "Quantile count")->check(CLI::Range(2, 1000000));
    cmd->add_option("--p0", o.p0, "Selection threshold (default: tuned)")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--trees", o.trees, "Tree count or 'adaptive'");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { o.seed = s, o.seed_set = true; }, "Random seed");
    cmd->add_option("--folds", o.folds, "Cross-validation folds")->check(CLI::Range(2, 1000000));
    cmd->add_option("--repeats", o.repeats, "Cross-validation repetitions")->check(CLI::Range(1, 1000000));
    cmd->add_option("--out", o.out, "Output file (default: stdout)");
    cmd->add_option("--model", o.model, "Model JSON path");
  };
  auto* fit = app.add_subcommand("fit", "Fit a rule set, write the model JSON and the rule table");
  auto* predict = app.add_subcommand("predict", "Predict the rows of a query CSV with a saved model");
  auto* tune = app.add_subcommand("tune", "Tune p0 and write the Pareto front CSV");
  auto* stability = app.add_subcommand("stability", "Cross-validated size, stability and error");
  auto* benchmark = app.add_subcommand("benchmark", "SIRUS and quantile-forest results for several datasets");
  for (auto* cmd : {fit, predict, tune, stability, benchmark}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit) cmd_fit(o);
    if (*predict) cmd_predict(o);
    if (*tune) cmd_tune(o);
    if (*stability) cmd_stability(o);
    if (*benchmark) return cmd_benchmark(o);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
