#pragma once

#include "glarma/panel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace glarma {

/// Nine significant digits, the format of every numeric output file.
inline std::string fmt(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

struct LoadOptions {
  /// Optional extra column whose values split the table into independent panels.
  std::string group_column{};
  /// Files listing one condition (resp. series) name per line; otherwise first appearance.
  std::string condition_order_file{};
  std::string series_order_file{};
};

/// One dense panel with the names behind its axes.
struct CountPanel {
  std::string group;
  PanelData data;
  std::vector<std::string> conditions;
  std::vector<std::string> series;
  /// replicate_ids[i][j]: replicate label of slot j in condition i, sorted ascending.
  std::vector<std::vector<long long>> replicate_ids;
};

namespace detail {

inline std::vector<std::string> read_order_file(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& raw : read_lines(path)) {
    const auto s = trim(raw);
    if (!s.empty() && s[0] != '#') out.push_back(s);
  }
  return out;
}

inline long long parse_integer(const std::string& s, const std::string& what, std::size_t line) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size())
    throw InputError("line " + std::to_string(line) + ": " + what + " '" + s + "' is not an integer");
  return v;
}

}  // namespace detail

/// Reads a `series,condition,replicate,count` table (columns found by header
/// name, any order, extra columns ignored, lines starting with '#' skipped).
/// Series become positions t, conditions become i. Returns one panel per group
/// value in first-appearance order, or a single panel when no group column is set.
inline std::vector<CountPanel> load_counts(const std::string& path, const LoadOptions& opts = {}) {
  const auto lines = detail::read_lines(path);
  std::size_t k = 0;
  while (k < lines.size() && (detail::trim(lines[k]).empty() || lines[k][0] == '#')) ++k;
  if (k == lines.size()) throw InputError(path + ": no header row");
  const auto header = detail::split(lines[k], ',');
  auto find_col = [&](const std::string& name) -> int {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return static_cast<int>(c);
    return -1;
  };
  const int c_series = find_col("series"), c_cond = find_col("condition"), c_rep = find_col("replicate"),
            c_count = find_col("count");
  if (c_series < 0 || c_cond < 0 || c_rep < 0 || c_count < 0)
    throw InputError(path + ": header must name the columns series, condition, replicate, count");
  int c_group = -1;
  if (!opts.group_column.empty()) {
    c_group = find_col(opts.group_column);
    if (c_group < 0) throw InputError(path + ": group column '" + opts.group_column + "' not in header");
  }

  struct Row {
    std::string series, condition;
    long long replicate;
    long long count;
    std::size_t line;
  };
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<Row>> by_group;
  for (std::size_t n = k + 1; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    if (detail::trim(lines[n]).empty() || lines[n][0] == '#') continue;
    const auto f = detail::split(lines[n], ',');
    if (f.size() != header.size())
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(f.size()));
    Row r{f[c_series], f[c_cond], detail::parse_integer(f[c_rep], "replicate", line_no),
          detail::parse_integer(f[c_count], "count", line_no), line_no};
    if (r.series.empty() || r.condition.empty())
      throw InputError("line " + std::to_string(line_no) + ": empty series or condition");
    if (r.count < 0) throw InputError("line " + std::to_string(line_no) + ": negative count " + f[c_count]);
    const std::string g = c_group >= 0 ? f[c_group] : std::string();
    if (!by_group.count(g)) group_order.push_back(g);
    by_group[g].push_back(std::move(r));
  }
  if (group_order.empty()) throw InputError(path + ": no data rows");

  const auto cond_file = opts.condition_order_file.empty() ? std::vector<std::string>{}
                                                           : detail::read_order_file(opts.condition_order_file);
  const auto series_file = opts.series_order_file.empty() ? std::vector<std::string>{}
                                                          : detail::read_order_file(opts.series_order_file);

  std::vector<CountPanel> out;
  for (const auto& g : group_order) {
    const auto& rows = by_group[g];
    const std::string where = g.empty() ? "" : " (group " + g + ")";
    CountPanel p;
    p.group = g;
    std::unordered_map<std::string, int> cidx, sidx;
    auto ordered = [&](const std::vector<std::string>& given, std::vector<std::string>& names,
                       std::unordered_map<std::string, int>& idx, auto key, const char* what) {
      if (!given.empty()) {
        for (const auto& s : given) {
          if (idx.count(s)) throw InputError(std::string("ordering file repeats ") + what + " '" + s + "'");
          idx[s] = static_cast<int>(names.size());
          names.push_back(s);
        }
        for (const auto& r : rows)
          if (!idx.count(key(r)))
            throw InputError("line " + std::to_string(r.line) + ": " + what + " '" + key(r) +
                             "' missing from the ordering file");
      } else {
        for (const auto& r : rows)
          if (!idx.count(key(r))) {
            idx[key(r)] = static_cast<int>(names.size());
            names.push_back(key(r));
          }
      }
    };
    ordered(cond_file, p.conditions, cidx, [](const Row& r) { return r.condition; }, "condition");
    ordered(series_file, p.series, sidx, [](const Row& r) { return r.series; }, "series");

    const int I = static_cast<int>(p.conditions.size());
    const int T = static_cast<int>(p.series.size());
    p.replicate_ids.resize(I);
    for (const auto& r : rows) {
      auto& ids = p.replicate_ids[cidx[r.condition]];
      if (std::find(ids.begin(), ids.end(), r.replicate) == ids.end()) ids.push_back(r.replicate);
    }
    std::vector<int> reps(I);
    for (int i = 0; i < I; ++i) {
      std::sort(p.replicate_ids[i].begin(), p.replicate_ids[i].end());
      reps[i] = static_cast<int>(p.replicate_ids[i].size());
    }
    p.data = PanelData(reps, T);
    std::vector<std::size_t> seen(static_cast<std::size_t>(p.data.series_count()) * T, 0);
    for (const auto& r : rows) {
      const int i = cidx[r.condition];
      const auto& ids = p.replicate_ids[i];
      const int j = static_cast<int>(std::lower_bound(ids.begin(), ids.end(), r.replicate) - ids.begin());
      const int t = sidx[r.series];
      auto& slot = seen[static_cast<std::size_t>(p.data.series_index(i, j)) * T + t];
      if (slot)
        throw InputError("line " + std::to_string(r.line) + ": duplicate entry for series '" + r.series +
                         "', condition '" + r.condition + "', replicate " + std::to_string(r.replicate) +
                         " (first at line " + std::to_string(slot) + ")" + where);
      slot = r.line;
      p.data.set(i, j, t, r.count);
    }
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < reps[i]; ++j)
        for (int t = 0; t < T; ++t)
          if (!seen[static_cast<std::size_t>(p.data.series_index(i, j)) * T + t])
            throw InputError("missing count for series '" + p.series[t] + "', condition '" + p.conditions[i] +
                             "', replicate " + std::to_string(p.replicate_ids[i][j]) + where);
    out.push_back(std::move(p));
  }
  return out;
}

/// Writes a panel in the load_counts format (group column only when non-empty).
inline void write_counts(std::ostream& os, const CountPanel& p) {
  const bool grouped = !p.group.empty();
  os << "series,condition,replicate,count" << (grouped ? ",group" : "") << '\n';
  for (int t = 0; t < p.data.length(); ++t)
    for (int i = 0; i < p.data.conditions(); ++i)
      for (int j = 0; j < p.data.replicates(i); ++j) {
        os << p.series[t] << ',' << p.conditions[i] << ',' << p.replicate_ids[i][j] << ','
           << static_cast<long long>(p.data(i, j, t));
        if (grouped) os << ',' << p.group;
        os << '\n';
      }
}

/// Default names for an unnamed panel: conditions c1.., series s1.., replicates 1..
inline CountPanel name_panel(const PanelData& data, std::string group = {}) {
  CountPanel p;
  p.group = std::move(group);
  p.data = data;
  for (int i = 0; i < data.conditions(); ++i) {
    p.conditions.push_back("c" + std::to_string(i + 1));
    std::vector<long long> ids;
    for (int j = 0; j < data.replicates(i); ++j) ids.push_back(j + 1);
    p.replicate_ids.push_back(std::move(ids));
  }
  for (int t = 0; t < data.length(); ++t) p.series.push_back("s" + std::to_string(t + 1));
  return p;
}

/// Flat `section.key = value` document. '#' starts a comment line.
class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text, const std::string& source = "config") {
    ConfigDocument doc;
    std::stringstream ss(text);
    std::string line;
    int n = 0;
    while (std::getline(ss, line)) {
      ++n;
      const auto s = detail::trim(line);
      if (s.empty() || s[0] == '#') continue;
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw InputError(source + ":" + std::to_string(n) + ": expected 'section.key = value'");
      const auto key = detail::trim(s.substr(0, eq));
      const auto val = detail::trim(s.substr(eq + 1));
      if (key.find('.') == std::string::npos || key.front() == '.' || key.back() == '.')
        throw InputError(source + ":" + std::to_string(n) + ": key '" + key + "' must look like section.key");
      if (doc.values_.count(key)) throw InputError(source + ":" + std::to_string(n) + ": key '" + key + "' repeated");
      doc.values_[key] = val;
      doc.order_.push_back(key);
    }
    return doc;
  }

  static ConfigDocument load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  /// Throws listing the valid keys if any key is not in `valid`.
  void require_known(const std::vector<std::string>& valid) const {
    for (const auto& k : order_) {
      if (std::find(valid.begin(), valid.end(), k) != valid.end()) continue;
      std::string list;
      for (const auto& v : valid) list += (list.empty() ? "" : ", ") + v;
      throw InputError("unknown config key '" + k + "' (valid keys: " + list + ")");
    }
  }

  std::optional<std::string> get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<std::string>& keys() const noexcept { return order_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// Parses a comma-separated list of reals.
inline std::vector<double> parse_real_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : detail::split(text, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) throw InputError(what + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw InputError(what + ": empty list");
  return out;
}

}  // namespace glarma
