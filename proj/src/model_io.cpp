#include "sirus/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "sirus/error.hpp"

namespace sirus {

using nlohmann::json;

std::string model_to_json(const SirusModel& m) {
  json rules = json::array();
  for (std::size_t k = 0; k < m.rules.size(); ++k) {
    const auto& r = m.rules[k];
    json cons = json::array();
    for (const auto& c : r.conditions)
      cons.push_back({{"feature", c.feature},
                      {"rank", c.rank},
                      {"cut_value", c.cut},
                      {"side", c.side == Side::Left ? "L" : "R"}});
    rules.push_back({{"constraints", cons},
                     {"y_in", r.y_in},
                     {"y_out", r.y_out},
                     {"n_in", r.n_in},
                     {"n_out", r.n_out},
                     {"weight", m.weights[k]},
                     {"frequency", m.frequencies[k]}});
  }
  json grid = json::array();
  for (const auto& cuts : m.grid.cuts) {
    json col = json::array();
    for (const auto& c : cuts) col.push_back({c.rank, c.value});
    grid.push_back(col);
  }
  json cats = json::array();
  for (const auto& c : m.schema.categoricals) cats.push_back({{"name", c.name}, {"levels", c.levels}});
  json doc = {{"q", m.grid.q},
              {"p0", m.p0},
              {"lambda", m.lambda},
              {"intercept", m.intercept},
              {"response", m.response_name},
              {"response_mean", m.response_mean},
              {"feature_names", m.schema.feature_names},
              {"categoricals", cats},
              {"grid", grid},
              {"num_trees", m.num_trees},
              {"rules_before_discard", m.rules_before_discard},
              {"rules", rules}};
  return doc.dump(2);
}

SirusModel model_from_json(const std::string& text) {
  SirusModel m;
  try {
    const json doc = json::parse(text);
    m.grid.q = doc.at("q").get<int>();
    m.p0 = doc.at("p0").get<double>();
    m.lambda = doc.at("lambda").get<double>();
    m.intercept = doc.at("intercept").get<double>();
    m.response_name = doc.value("response", std::string("y"));
    m.response_mean = doc.value("response_mean", m.intercept);
    m.schema.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    for (const auto& c : doc.value("categoricals", json::array()))
      m.schema.categoricals.push_back({c.at("name").get<std::string>(), c.at("levels").get<std::vector<std::string>>()});
    for (const auto& col : doc.at("grid")) {
      std::vector<QuantileCut> cuts;
      for (const auto& c : col) cuts.push_back({c.at(0).get<int>(), c.at(1).get<double>()});
      m.grid.cuts.push_back(std::move(cuts));
    }
    m.num_trees = doc.value("num_trees", std::int64_t{0});
    m.rules_before_discard = doc.value("rules_before_discard", std::size_t{0});
    const auto p = m.schema.feature_names.size();
    if (m.grid.cuts.size() != p) throw Error(ErrorKind::Data, "grid does not match the feature count");
    for (const auto& r : doc.at("rules")) {
      Rule rule;
      std::vector<Constraint> raw;
      for (const auto& c : r.at("constraints")) {
        const auto side_text = c.at("side").get<std::string>();
        if (side_text != "L" && side_text != "R") throw Error(ErrorKind::Data, "constraint side must be L or R");
        const Side side = side_text == "L" ? Side::Left : Side::Right;
        const int feature = c.at("feature").get<int>();
        if (feature < 0 || static_cast<std::size_t>(feature) >= p)
          throw Error(ErrorKind::Data, "constraint feature index out of range");
        const int rank = c.at("rank").get<int>();
        raw.push_back({feature, rank, side});
        rule.conditions.push_back({feature, rank, side, c.at("cut_value").get<double>()});
      }
      rule.path = canonicalize_path(raw);
      std::sort(rule.conditions.begin(), rule.conditions.end(), [](const auto& a, const auto& b) {
        return std::tie(a.feature, a.rank, a.side) < std::tie(b.feature, b.rank, b.side);
      });
      rule.y_in = r.at("y_in").get<double>();
      rule.y_out = r.at("y_out").get<double>();
      rule.n_in = r.value("n_in", std::size_t{0});
      rule.n_out = r.value("n_out", std::size_t{0});
      m.rules.push_back(std::move(rule));
      m.weights.push_back(r.at("weight").get<double>());
      m.frequencies.push_back(r.value("frequency", 0.0));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Data, std::string("malformed model document: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidPath) throw Error(ErrorKind::Data, e.what());
    throw;
  }
  return m;
}

void save_model(const SirusModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << model_to_json(model) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

SirusModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace sirus
