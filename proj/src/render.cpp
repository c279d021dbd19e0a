#include "sirus/render.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sirus/error.hpp"

namespace sirus {

namespace {

constexpr const char* kGe = "≥";

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + sep.size();
  }
}

double parse_number(const std::string& text) {
  const auto t = trim(text);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) throw Error(ErrorKind::Data, "bad number in rule table: '" + t + "'");
  return v;
}

// "<name> = <value>", returning value.
double parse_assignment(const std::string& text) {
  const auto pos = text.rfind(" = ");
  if (pos == std::string::npos) throw Error(ErrorKind::Data, "expected '<name> = <value>' in '" + text + "'");
  return parse_number(text.substr(pos + 3));
}

}  // namespace

std::string format_significant(double x, int digits) {
  if (!std::isfinite(x)) return x != x ? "nan" : (x > 0 ? "inf" : "-inf");
  if (x == 0) return "0";
  int e = static_cast<int>(std::floor(std::log10(std::fabs(x))));
  const double scale = std::pow(10.0, e - digits + 1);
  const double rounded = std::round(x / scale) * scale;
  if (rounded != 0) e = static_cast<int>(std::floor(std::log10(std::fabs(rounded))));
  const int decimals = std::max(0, digits - 1 - e);
  char buf[64];
  if (decimals > 20 || e > 20)
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, rounded);
  else
    std::snprintf(buf, sizeof buf, "%.*f", decimals, rounded);
  return buf;
}

std::string format_exact(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string render_rules(const SirusModel& model, TableFormat format) {
  const bool md = format == TableFormat::Markdown;
  const auto& resp = model.response_name;
  std::ostringstream os;
  os << "Average " << resp << " = " << format_significant(model.response_mean, 2) << '\n';
  if (md) os << '\n';
  os << "Intercept = " << format_significant(model.intercept, 2) << "\n\n";
  if (md)
    os << "| Frequency | Rule | Weight |\n|---|---|---|\n";
  else
    os << "Frequency | Rule | Weight\n";
  for (std::size_t k = 0; k < model.rules.size(); ++k) {
    const auto& r = model.rules[k];
    std::ostringstream rule;
    rule << "if ";
    for (std::size_t c = 0; c < r.conditions.size(); ++c) {
      const auto& cond = r.conditions[c];
      if (c) rule << " & ";
      rule << model.schema.feature_names[static_cast<std::size_t>(cond.feature)]
           << (cond.side == Side::Left ? " < " : std::string(" ") + kGe + " ") << format_exact(cond.cut);
    }
    rule << " then " << resp << " = " << format_significant(r.y_in, 3) << " else " << resp << " = "
         << format_significant(r.y_out, 3);
    const auto row = format_significant(model.frequencies[k], 2) + " | " + rule.str() + " | " +
                     format_significant(model.weights[k], 2);
    os << (md ? "| " + row + " |" : row) << '\n';
  }
  return os.str();
}

RenderedTable parse_rule_table(const std::string& text) {
  RenderedTable table{"", 0, 0, {}};
  std::istringstream in(text);
  std::string line;
  bool have_average = false, have_intercept = false, in_rows = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (!in_rows && line.rfind("Average ", 0) == 0) {
      const auto pos = line.rfind(" = ");
      if (pos == std::string::npos || pos < 8) throw Error(ErrorKind::Data, "bad average line");
      table.response = line.substr(8, pos - 8);
      table.average = parse_number(line.substr(pos + 3));
      have_average = true;
      continue;
    }
    if (!in_rows && line.rfind("Intercept = ", 0) == 0) {
      table.intercept = parse_number(line.substr(12));
      have_intercept = true;
      continue;
    }
    if (line.front() == '|') {
      line = trim(line.substr(1, line.size() - (line.back() == '|' ? 2 : 1)));
      if (line.find_first_not_of("-| ") == std::string::npos) continue;
    }
    if (line.rfind("Frequency", 0) == 0) {
      in_rows = true;
      continue;
    }
    if (!in_rows) throw Error(ErrorKind::Data, "unexpected line before the rule header: '" + line + "'");
    const auto cols = split(line, " | ");
    if (cols.size() != 3) throw Error(ErrorKind::Data, "rule row must have 3 columns: '" + line + "'");
    RenderedRule rule{parse_number(cols[0]), {}, 0, 0, parse_number(cols[2])};
    auto body = trim(cols[1]);
    if (body.rfind("if ", 0) != 0) throw Error(ErrorKind::Data, "rule must start with 'if': '" + body + "'");
    const auto then_pos = body.find(" then ");
    const auto else_pos = body.rfind(" else ");
    if (then_pos == std::string::npos || else_pos == std::string::npos || else_pos < then_pos)
      throw Error(ErrorKind::Data, "rule must read 'if ... then ... else ...': '" + body + "'");
    for (const auto& cond : split(body.substr(3, then_pos - 3), " & ")) {
      const auto lt = cond.rfind(" < ");
      const auto ge = cond.rfind(std::string(" ") + kGe + " ");
      RenderedCondition rc;
      if (lt != std::string::npos && (ge == std::string::npos || lt > ge)) {
        rc = {cond.substr(0, lt), Side::Left, parse_number(cond.substr(lt + 3))};
      } else if (ge != std::string::npos) {
        const auto width = std::string(kGe).size() + 2;
        rc = {cond.substr(0, ge), Side::Right, parse_number(cond.substr(ge + width))};
      } else {
        throw Error(ErrorKind::Data, "bad condition '" + cond + "'");
      }
      rule.conditions.push_back(std::move(rc));
    }
    rule.y_in = parse_assignment(body.substr(then_pos + 6, else_pos - then_pos - 6));
    rule.y_out = parse_assignment(body.substr(else_pos + 6));
    table.rules.push_back(std::move(rule));
  }
  if (!have_average || !have_intercept) throw Error(ErrorKind::Data, "rule table lacks its header lines");
  return table;
}

std::vector<Path> paths_from_table(const RenderedTable& table, const FeatureSchema& schema, const QuantileGrid& grid) {
  std::vector<Path> out;
  for (const auto& rule : table.rules) {
    std::vector<Constraint> raw;
    for (const auto& c : rule.conditions) {
      const auto it = std::find(schema.feature_names.begin(), schema.feature_names.end(), c.feature);
      if (it == schema.feature_names.end()) throw Error(ErrorKind::Data, "unknown feature '" + c.feature + "'");
      const auto j = static_cast<std::size_t>(it - schema.feature_names.begin());
      int rank = -1;
      for (const auto& cut : grid.cuts[j])
        if (cut.value == c.cut) rank = cut.rank;
      if (rank < 0) throw Error(ErrorKind::Data, "cut " + format_exact(c.cut) + " is not on the grid of " + c.feature);
      raw.push_back({static_cast<int>(j), rank, c.side});
    }
    out.push_back(canonicalize_path(raw));
  }
  return out;
}

}  // namespace sirus
