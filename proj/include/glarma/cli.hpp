#pragma once

#include "glarma/experiment.hpp"
#include "glarma/filter.hpp"
#include "glarma/io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace glarma {

/// Everything a command can be configured with. Precedence: defaults, then the
/// --config document, then command-line flags.
struct RunConfig {
  FitConfig fit;
  SimScenario scenario;
  std::vector<Method> methods{Method::q0, Method::q1, Method::classical};
  FilterOptions filter;
  LoadOptions load;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out = ".";
};

namespace cli {

inline long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) throw InputError(key + ": '" + v + "' is not an integer");
  return x;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] != '-') x = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) throw InputError(key + ": '" + v + "' is not a non-negative integer");
  return x;
}

inline double to_real(const std::string& key, const std::string& v) { return parse_real_list(v, key).at(0); }

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError(key + ": '" + v + "' is not a boolean");
}

inline std::string join(const std::vector<double>& v, char sep = ',') {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? std::string(1, sep) : "") + fmt(v[k]);
  return s;
}

inline std::string join(const Eigen::VectorXd& v, char sep = ',') {
  return join(std::vector<double>(v.data(), v.data() + v.size()), sep);
}

struct Key {
  std::string name;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
  /// Left out of the resolved-configuration header (does not affect results).
  bool in_header = true;
};

inline std::vector<Key> keys(RunConfig& c) {
  auto& f = c.fit;
  auto& s = c.scenario;
  std::vector<Key> k;
  auto integer = [&](const std::string& name, int& ref) {
    k.push_back({name, [&ref, name](const std::string& v) { ref = static_cast<int>(to_int(name, v)); },
                 [&ref] { return std::to_string(ref); }});
  };
  auto real = [&](const std::string& name, double& ref) {
    k.push_back({name, [&ref, name](const std::string& v) { ref = to_real(name, v); }, [&ref] { return fmt(ref); }});
  };
  auto boolean = [&](const std::string& name, bool& ref) {
    k.push_back({name, [&ref, name](const std::string& v) { ref = to_bool(name, v); },
                 [&ref] { return std::string(ref ? "true" : "false"); }});
  };
  auto text = [&](const std::string& name, std::string& ref) {
    k.push_back({name, [&ref](const std::string& v) { ref = v; }, [&ref] { return ref; }});
  };

  k.push_back({"run.seed", [&c](const std::string& v) { c.seed = to_u64("run.seed", v); },
               [&c] { return std::to_string(c.seed); }});
  k.push_back({"run.workers", [&c](const std::string& v) { c.workers = static_cast<int>(to_int("run.workers", v)); },
               [&c] { return std::to_string(c.workers); }, false});
  k.push_back({"run.out", [&c](const std::string& v) { c.out = v; }, [&c] { return c.out; }, false});

  integer("fit.q", f.q);
  k.push_back({"fit.thresholds", [&f](const std::string& v) { f.thresholds = parse_real_list(v, "fit.thresholds"); },
               [&f] { return join(f.thresholds); }});
  real("fit.primary_threshold", f.primary_threshold);
  integer("fit.max_outer_iter", f.max_outer_iter);
  integer("fit.min_outer_iter", f.min_outer_iter);
  real("fit.gamma_stab_tol", f.gamma_stab_tol);
  k.push_back({"fit.oracle_gamma",
               [&f](const std::string& v) {
                 if (v.empty() || v == "none") {
                   f.oracle_gamma.reset();
                 } else {
                   const auto g = parse_real_list(v, "fit.oracle_gamma");
                   f.oracle_gamma = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
                 }
               },
               [&f] { return f.oracle_gamma ? join(*f.oracle_gamma) : std::string("none"); }});
  k.push_back({"fit.expansion", [&f](const std::string& v) { f.expansion = parse_expansion_policy(v); },
               [&f] { return to_string(f.expansion); }});
  integer("fit.n_subsamples", f.n_subsamples);

  real("newton.tol", f.newton.tol);
  integer("newton.max_iter", f.newton.max_iter);
  integer("newton.step_halving_max", f.newton.step_halving_max);
  real("eta_mle.tol", f.eta_mle.tol);
  integer("eta_mle.max_iter", f.eta_mle.max_iter);
  integer("eta_mle.step_halving_max", f.eta_mle.step_halving_max);

  k.push_back({"penalty.scale", [&f](const std::string& v) { f.penalty.scale = parse_penalty_scale(v); },
               [&f] { return to_string(f.penalty.scale); }});
  boolean("penalty.standardize", f.penalty.standardize);
  boolean("penalty.intercept", f.penalty.intercept);
  boolean("penalty.truncate_path", f.penalty.truncate_path);
  integer("penalty.n_lambda", f.penalty.grid.n_lambda);
  real("penalty.ratio", f.penalty.grid.ratio);
  real("penalty.small_n_ratio", f.penalty.small_n_ratio);
  real("penalty.dev_max", f.penalty.dev_max);
  real("penalty.dev_change", f.penalty.dev_change);
  integer("penalty.min_path_points", f.penalty.min_path_points);
  real("lasso.tol", f.lasso.tol);
  integer("lasso.max_sweeps", f.lasso.max_sweeps);
  real("quadratic.floor_ratio", f.quadratic.floor_ratio);
  boolean("quadratic.per_block", f.quadratic.per_block);

  text("scenario.name", s.name);
  integer("scenario.T", s.T);
  integer("scenario.J", s.J);
  integer("scenario.I", s.I);
  integer("scenario.q_star", s.q_star);
  k.push_back({"scenario.gamma_star",
               [&s](const std::string& v) { s.gamma_star = parse_real_list(v, "scenario.gamma_star"); },
               [&s] { return join(s.gamma_star); }});
  integer("scenario.n_nonnull", s.n_nonnull);
  real("scenario.magnitude_min", s.magnitude_min);
  real("scenario.magnitude_max", s.magnitude_max);
  k.push_back({"scenario.sign", [&s](const std::string& v) { s.sign_policy = parse_sign_policy(v); },
               [&s] { return to_string(s.sign_policy); }});
  integer("scenario.reps", s.n_reps);
  k.push_back({"benchmark.methods", [&c](const std::string& v) { c.methods = parse_methods(v); },
               [&c] {
                 std::string out;
                 for (Method m : c.methods) out += (out.empty() ? "" : ",") + to_string(m);
                 return out;
               }});

  k.push_back({"filter.test", [&c](const std::string& v) { c.filter.test = parse_filter_test(v); },
               [&c] { return std::string(c.filter.test == FilterTest::likelihood_ratio ? "lrt" : "wald"); }});
  k.push_back({"filter.rule",
               [&c](const std::string& v) {
                 if (v == "one_over_T") c.filter.rule = FilterRule::one_over_T;
                 else if (v == "fixed_alpha") c.filter.rule = FilterRule::fixed_alpha;
                 else throw InputError("filter.rule: '" + v + "' (valid: one_over_T, fixed_alpha)");
               },
               [&c] { return std::string(c.filter.rule == FilterRule::one_over_T ? "one_over_T" : "fixed_alpha"); }});
  real("filter.alpha", c.filter.alpha);
  text("input.group_column", c.load.group_column);
  text("input.condition_order_file", c.load.condition_order_file);
  text("input.series_order_file", c.load.series_order_file);
  return k;
}

inline void set_key(RunConfig& c, const std::string& name, const std::string& value) {
  for (auto& k : keys(c))
    if (k.name == name) return k.set(value);
  throw InputError("unknown config key '" + name + "'");
}

inline void apply_document(RunConfig& c, const ConfigDocument& doc) {
  auto ks = keys(c);
  std::vector<std::string> valid;
  for (const auto& k : ks) valid.push_back(k.name);
  doc.require_known(valid);
  for (const auto& name : doc.keys())
    for (auto& k : ks)
      if (k.name == name) k.set(*doc.get(name));
}

/// `# key = value` lines for every result-affecting setting.
inline std::string header(RunConfig& c, const std::string& command, const std::vector<std::string>& extra = {}) {
  std::string h = "# command = " + command + '\n';
  for (const auto& e : extra) h += "# " + e + '\n';
  for (const auto& k : keys(c))
    if (k.in_header) h += "# " + k.name + " = " + k.get() + '\n';
  return h;
}

inline nlohmann::ordered_json config_json(RunConfig& c) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& k : keys(c))
    if (k.in_header) j[k.name] = k.get();
  return j;
}

/// Rounds to the 9 significant digits used in every output file.
inline double r9(double v) { return std::isfinite(v) ? std::stod(fmt(v)) : v; }

inline std::string opt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) const {
    const auto path = dir_ / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write '" + path.string() + "'");
    os << content;
    if (!os) throw Error("write failed for '" + path.string() + "'");
  }

  const std::filesystem::path& path() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void check_group_name(const std::string& g) {
  if (g.find('/') != std::string::npos || g.find('\\') != std::string::npos || g == "." || g == "..")
    throw InputError("group value '" + g + "' cannot be used as a directory name");
}

// ---- fit -------------------------------------------------------------------

inline int cmd_fit(RunConfig& c, const std::string& input, bool timing, std::ostream& log) {
  c.fit.seed = c.seed;
  c.fit.workers = c.workers;
  c.fit.validate();
  const auto panels = load_counts(input, c.load);
  const OutputDir root(c.out);
  nlohmann::ordered_json summary;
  summary["command"] = "fit";
  summary["input"] = input;
  summary["config"] = config_json(c);
  summary["groups"] = nlohmann::ordered_json::array();
  std::string times = "group,seconds\n";

  for (const auto& p : panels) {
    check_group_name(p.group);
    const OutputDir dir(p.group.empty() ? root.path() : root.path() / p.group);
    const std::vector<std::string> extra{"input = " + input, "group = " + p.group};
    const std::string head = header(c, "fit", extra);
    Stopwatch sw;
    const auto res = fit(p.data, c.fit);
    const double secs = sw.seconds();
    const int I = p.data.conditions();
    const int T = p.data.length();

    std::string g = head + "iteration,expansion";
    for (int a = 1; a <= c.fit.q; ++a) g += ",gamma_" + std::to_string(a);
    g += ",support_size,loglik,lambda,newton_iterations,newton_converged,dropped_directions\n";
    for (std::size_t k = 0; k < res.outer_trace.size(); ++k) {
      const auto& s = res.outer_trace[k];
      g += std::to_string(k + 1) + ',' + s.expansion;
      for (Eigen::Index a = 0; a < s.gamma.size(); ++a) g += ',' + fmt(s.gamma[a]);
      g += ',' + std::to_string(s.support_size) + ',' + fmt(s.loglik) + ',' + fmt(s.lambda) + ',' +
           std::to_string(s.newton_iterations) + ',' + (s.newton_converged ? "true" : "false") + ',' +
           std::to_string(s.dropped_directions) + '\n';
    }
    dir.write("gamma_trace.csv", g);

    std::string fr = head + "condition,series,frequency\n";
    std::string eh = head + "condition,series,eta\n";
    for (int i = 0; i < I; ++i)
      for (int t = 0; t < T; ++t) {
        fr += p.conditions[i] + ',' + p.series[t] + ',' + fmt(res.frequencies(i, t)) + '\n';
        eh += p.conditions[i] + ',' + p.series[t] + ',' + fmt(res.eta_hat(i, t)) + '\n';
      }
    dir.write("frequencies.csv", fr);
    dir.write("eta_hat.csv", eh);

    std::string su = head + "threshold,condition,series\n";
    for (double th : c.fit.thresholds)
      for (const auto& [i, t] : res.support(th)) su += fmt(th) + ',' + p.conditions[i] + ',' + p.series[t] + '\n';
    dir.write("support.csv", su);

    nlohmann::ordered_json gj;
    gj["group"] = p.group;
    gj["conditions"] = I;
    gj["length"] = T;
    gj["series_count"] = p.data.series_count();
    gj["gamma_hat"] = nlohmann::ordered_json::array();
    for (Eigen::Index a = 0; a < res.gamma_hat.size(); ++a) gj["gamma_hat"].push_back(r9(res.gamma_hat[a]));
    gj["outer_iterations"] = res.outer_trace.size();
    gj["converged"] = res.converged;
    gj["newton_called"] = res.newton_called;
    gj["empty_support"] = res.empty_support;
    gj["clamp_events"] = res.clamp_events;
    gj["primary_support_size"] = res.support(c.fit.primary_threshold).size();
    summary["groups"].push_back(gj);
    times += p.group + ',' + fmt(secs) + '\n';
    log << "fit" << (p.group.empty() ? "" : " [" + p.group + "]") << ": I=" << I << " T=" << T
        << " gamma_hat=" << (res.gamma_hat.size() ? join(res.gamma_hat) : "-")
        << " support=" << res.support(c.fit.primary_threshold).size() << '\n';
  }
  root.write("summary.json", summary.dump(2) + '\n');
  if (timing) root.write("timing.csv", times);
  return 0;
}

// ---- simulate --------------------------------------------------------------

inline int cmd_simulate(RunConfig& c, bool timing, std::ostream& log) {
  c.scenario.seed = c.seed;
  c.scenario.validate();
  const OutputDir dir(c.out);
  const auto& sc = c.scenario;
  const std::string head = header(c, "simulate");
  nlohmann::ordered_json summary;
  summary["command"] = "simulate";
  summary["config"] = config_json(c);
  summary["replicates"] = nlohmann::ordered_json::array();
  std::string times = "replicate,seconds\n";
  for (int rep = 0; rep < sc.n_reps; ++rep) {
    Stopwatch sw;
    const std::uint64_t rs = replicate_seed(sc, rep);
    const auto eta = gen_eta_star(sc, rs);
    const auto sim = simulate_panel(sc, eta, rs);
    const auto named = name_panel(sim.data);
    const std::string tag = std::to_string(rep + 1);

    std::ostringstream panel;
    panel << head << "# replicate = " << tag << '\n';
    write_counts(panel, named);
    dir.write("panel_" + tag + ".csv", panel.str());

    std::string truth = head + "# replicate = " + tag + "\n# gamma_star = " + join(sc.gamma_star, ';') +
                        "\ncondition,series,eta_star\n";
    for (int i = 0; i < sc.I; ++i)
      for (int t = 0; t < sc.T; ++t) truth += named.conditions[i] + ',' + named.series[t] + ',' + fmt(eta(i, t)) + '\n';
    dir.write("truth_" + tag + ".csv", truth);
    summary["replicates"].push_back({{"replicate", rep + 1}, {"clamp_events", sim.clamp_events}});
    times += tag + ',' + fmt(sw.seconds()) + '\n';
  }
  dir.write("summary.json", summary.dump(2) + '\n');
  if (timing) dir.write("timing.csv", times);
  log << "simulate: " << sc.n_reps << " replicate(s) of " << sc.name << " written to " << c.out << '\n';
  return 0;
}

// ---- benchmark -------------------------------------------------------------

inline int cmd_benchmark(RunConfig& c, bool timing, std::ostream& log) {
  c.scenario.seed = c.seed;
  c.scenario.validate();
  c.fit.validate();
  ExperimentOptions eo;
  eo.methods = c.methods;
  eo.fit = c.fit;
  eo.workers = c.workers;
  const auto res = run_experiment(c.scenario, eo);
  const OutputDir dir(c.out);
  const std::string head = header(c, "benchmark");

  std::string metrics = head + "replicate,method,threshold,tpr,fpr,diff\n";
  std::string reps = head + "replicate,method,max_diff,sign_tpr,failure\n";
  std::string gammas = head + "replicate,method,iteration,lag,gamma\n";
  std::string times = "replicate,method,seconds\n";
  for (const auto& o : res.outcomes) {
    const std::string key = std::to_string(o.replicate + 1) + ',' + to_string(o.method);
    if (o.failure) {
      std::string msg = *o.failure;
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      reps += key + ",NA,NA," + msg + '\n';
      continue;
    }
    for (const auto& t : o.metrics.per_threshold)
      metrics += key + ',' + fmt(t.threshold) + ',' + opt(t.tpr) + ',' + opt(t.fpr) + ',' + opt(t.diff) + '\n';
    reps += key + ',' + opt(o.metrics.max_diff) + ',' + fmt(o.metrics.sign_tpr) + ",\n";
    for (std::size_t k = 0; k < o.gamma_trajectory.size(); ++k)
      for (Eigen::Index a = 0; a < o.gamma_trajectory[k].size(); ++a)
        gammas += key + ',' + std::to_string(k + 1) + ',' + std::to_string(a + 1) + ',' +
                  fmt(o.gamma_trajectory[k][a]) + '\n';
    times += key + ',' + fmt(o.seconds) + '\n';
  }
  dir.write("metrics.csv", metrics);
  dir.write("replicates.csv", reps);
  dir.write("gamma_trace.csv", gammas);

  nlohmann::ordered_json summary;
  summary["command"] = "benchmark";
  summary["config"] = config_json(c);
  summary["methods"] = nlohmann::ordered_json::array();
  for (const auto& s : res.summarize(c.methods, c.fit.thresholds)) {
    nlohmann::ordered_json m;
    m["method"] = to_string(s.method);
    m["replicates"] = s.replicates;
    m["mean_max_diff"] = r9(s.mean_max_diff);
    m["se_max_diff"] = r9(s.se_max_diff);
    m["mean_sign_tpr"] = r9(s.mean_sign_tpr);
    summary["methods"].push_back(m);
    log << to_string(s.method) << ": mean max(TPR-FPR) = " << fmt(s.mean_max_diff) << " (se " << fmt(s.se_max_diff)
        << ", " << s.replicates << " replicates)\n";
  }
  dir.write("summary.json", summary.dump(2) + '\n');
  if (timing) dir.write("timing.csv", times);
  return 0;
}

// ---- filter ----------------------------------------------------------------

inline int cmd_filter(RunConfig& c, const std::string& input, std::ostream& log) {
  const auto panels = load_counts(input, c.load);
  const OutputDir dir(c.out);
  const std::vector<std::string> extra{"input = " + input};
  const std::string head = header(c, "filter", extra);
  const bool grouped = !c.load.group_column.empty();
  std::string table = head + (grouped ? "group," : "") + "series,statistic,p_value,cutoff,kept\n";
  std::ostringstream kept_counts;
  kept_counts << head;
  bool first = true;
  for (const auto& p : panels) {
    const auto fr = anova_filter(p.data, c.filter);
    std::vector<char> keep(p.data.length(), 0);
    for (int t : fr.kept) keep[t] = 1;
    for (int t = 0; t < p.data.length(); ++t)
      table += (grouped ? p.group + ',' : "") + p.series[t] + ',' + fmt(fr.statistic[t]) + ',' + fmt(fr.p_value[t]) +
               ',' + fmt(fr.cutoff) + ',' + (keep[t] ? "true" : "false") + '\n';
    CountPanel sub = p;
    sub.data = select_positions(p.data, fr.kept);
    sub.series.clear();
    for (int t : fr.kept) sub.series.push_back(p.series[t]);
    std::ostringstream part;
    write_counts(part, sub);
    std::string text = part.str();
    if (!first) text = text.substr(text.find('\n') + 1);  // one header row only
    kept_counts << text;
    first = false;
    log << "filter" << (p.group.empty() ? "" : " [" + p.group + "]") << ": kept " << fr.kept.size() << " of "
        << p.data.length() << " series (cutoff " << fmt(fr.cutoff) << ")\n";
  }
  dir.write("filter.csv", table);
  dir.write("kept_counts.csv", kept_counts.str());
  return 0;
}

// ---- export-plot-data --------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name, const std::string& path) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return static_cast<int>(k);
    throw InputError(path + ": missing column '" + name + "'");
  }
};

inline CsvTable read_csv(const std::string& path) {
  CsvTable t;
  for (const auto& line : detail::read_lines(path)) {
    if (detail::trim(line).empty() || line[0] == '#') continue;
    auto f = detail::split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(f);
    } else {
      if (f.size() != t.header.size()) throw InputError(path + ": ragged row");
      t.rows.push_back(std::move(f));
    }
  }
  if (t.header.empty()) throw InputError(path + ": no header row");
  return t;
}

/// Linear-interpolation quantile of sorted values.
inline double quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline int cmd_export(RunConfig& c, const std::string& in_dir, std::ostream& log) {
  const std::filesystem::path in(in_dir);
  const auto metrics = read_csv((in / "metrics.csv").string());
  const std::string mpath = (in / "metrics.csv").string();
  const int c_rep = metrics.column("replicate", mpath), c_m = metrics.column("method", mpath),
            c_th = metrics.column("threshold", mpath), c_tpr = metrics.column("tpr", mpath),
            c_fpr = metrics.column("fpr", mpath), c_diff = metrics.column("diff", mpath);
  auto num = [](const std::string& s) { return s == "NA" ? std::nan("") : std::stod(s); };

  // Method order of first appearance, thresholds ascending.
  std::vector<std::string> methods;
  std::map<std::pair<std::string, double>, std::vector<std::pair<double, double>>> cells;
  std::map<std::pair<std::string, std::string>, double> best;
  for (const auto& r : metrics.rows) {
    if (std::find(methods.begin(), methods.end(), r[c_m]) == methods.end()) methods.push_back(r[c_m]);
    cells[{r[c_m], std::stod(r[c_th])}].emplace_back(num(r[c_tpr]), num(r[c_fpr]));
    const double d = num(r[c_diff]);
    auto key = std::make_pair(r[c_m], r[c_rep]);
    if (std::isfinite(d)) best[key] = best.count(key) ? std::max(best[key], d) : d;
  }

  const OutputDir dir(c.out);
  const std::string head = "# command = export-plot-data\n# input = " + in_dir + '\n';
  std::string roc = head + "method,threshold,mean_tpr,se_tpr,mean_fpr,se_fpr,replicates\n";
  for (const auto& m : methods)
    for (const auto& [key, vals] : cells) {
      if (key.first != m) continue;
      std::vector<double> tp, fp;
      for (auto [a, b] : vals) {
        if (std::isfinite(a)) tp.push_back(a);
        if (std::isfinite(b)) fp.push_back(b);
      }
      const auto [mt, st] = detail::mean_se(tp);
      const auto [mf, sf] = detail::mean_se(fp);
      roc += m + ',' + fmt(key.second) + ',' + fmt(mt) + ',' + fmt(st) + ',' + fmt(mf) + ',' + fmt(sf) + ',' +
             std::to_string(vals.size()) + '\n';
    }
  dir.write("roc.csv", roc);

  std::string md = head + "method,replicate,max_diff\n";
  for (const auto& m : methods)
    for (const auto& [key, v] : best)
      if (key.first == m) md += m + ',' + key.second + ',' + fmt(v) + '\n';
  dir.write("max_diff.csv", md);

  const auto gpath = in / "gamma_trace.csv";
  if (std::filesystem::exists(gpath)) {
    const auto g = read_csv(gpath.string());
    const int g_m = g.column("method", gpath.string()), g_it = g.column("iteration", gpath.string()),
              g_lag = g.column("lag", gpath.string()), g_v = g.column("gamma", gpath.string());
    std::map<std::tuple<std::string, int, int>, std::vector<double>> groups;
    for (const auto& r : g.rows)
      groups[{r[g_m], std::stoi(r[g_it]), std::stoi(r[g_lag])}].push_back(std::stod(r[g_v]));
    std::string box = head + "method,iteration,lag,min,q1,median,q3,max,iqr,replicates\n";
    for (const auto& m : methods)
      for (auto& [key, v] : groups) {
        if (std::get<0>(key) != m) continue;
        std::sort(v.begin(), v.end());
        const double q1 = quantile(v, 0.25), q3 = quantile(v, 0.75);
        box += m + ',' + std::to_string(std::get<1>(key)) + ',' + std::to_string(std::get<2>(key)) + ',' +
               fmt(v.front()) + ',' + fmt(q1) + ',' + fmt(quantile(v, 0.5)) + ',' + fmt(q3) + ',' + fmt(v.back()) +
               ',' + fmt(q3 - q1) + ',' + std::to_string(v.size()) + '\n';
      }
    dir.write("gamma_boxplot.csv", box);
  }
  log << "export-plot-data: wrote plot tables for " << methods.size() << " method(s) to " << c.out << '\n';
  return 0;
}

}  // namespace cli

/// Entry point of the command-line tool. Returns the process exit status;
/// failures print one `error: ...` line on `err`.
inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"GLARMA sparse condition-effect estimation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::string config_path, seed, workers, out_dir, q, threshold, thresholds, subsamples, max_outer, oracle, scenario,
      methods, reps, group_column, expansion, penalty, test, alpha, input, in_dir;
  bool timing = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Configuration document (section.key = value)");
    sub->add_option("--seed", seed, "Seed for all randomness");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--workers", workers, "Worker threads (results do not depend on it)");
    sub->add_flag("--timing", timing, "Also write timing.csv");
  };
  auto fit_flags = [&](CLI::App* sub) {
    sub->add_option("--thresholds", thresholds, "Selection thresholds, comma separated");
    sub->add_option("--threshold", threshold, "Primary threshold for eta_hat");
    sub->add_option("--subsamples", subsamples, "Stability-selection subsamples");
    sub->add_option("--max-outer", max_outer, "Maximum outer iterations");
    sub->add_option("--expansion", expansion, "Later-iteration expansion: profile or sparse_refit");
    sub->add_option("--penalty", penalty, "Penalty scale: glmnet or raw");
  };

  auto* sim = app.add_subcommand("simulate", "Generate panels and truth files");
  common(sim);
  sim->add_option("--scenario", scenario, "table1-rowN or T=..,J=..,I=..,qstar=..,gamma=..");
  sim->add_option("--reps", reps, "Number of replicates");

  auto* fitc = app.add_subcommand("fit", "Fit a count table");
  common(fitc);
  fit_flags(fitc);
  fitc->add_option("counts", input, "Count table (series,condition,replicate,count)")->required();
  fitc->add_option("--q", q, "Moving-average order");
  fitc->add_option("--oracle-gamma", oracle, "Fix gamma at these values");
  fitc->add_option("--group-column", group_column, "Column splitting the table into independent panels");

  auto* bench = app.add_subcommand("benchmark", "Compare methods on simulated replicates");
  common(bench);
  fit_flags(bench);
  bench->add_option("--scenario", scenario, "table1-rowN or T=..,J=..,I=..,qstar=..,gamma=..");
  bench->add_option("--methods", methods, "Comma list of q0,q1,q2,oracle,classical");
  bench->add_option("--reps", reps, "Number of replicates");

  auto* filt = app.add_subcommand("filter", "Poisson one-way ANOVA pre-filter");
  common(filt);
  filt->add_option("counts", input, "Count table")->required();
  filt->add_option("--test", test, "lrt or wald");
  filt->add_option("--alpha", alpha, "Fixed significance level instead of 1/T");
  filt->add_option("--group-column", group_column, "Column splitting the table into independent panels");

  auto* exp = app.add_subcommand("export-plot-data", "Tidy plot tables from a benchmark directory");
  common(exp);
  exp->add_option("--in", in_dir, "Benchmark output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    RunConfig c;
    if (!config_path.empty()) cli::apply_document(c, ConfigDocument::load(config_path));
    auto set = [&](const std::string& key, const std::string& v) {
      if (!v.empty()) cli::set_key(c, key, v);
    };
    set("run.seed", seed);
    set("run.workers", workers);
    set("run.out", out_dir);
    set("fit.q", q);
    set("fit.thresholds", thresholds);
    set("fit.primary_threshold", threshold);
    set("fit.n_subsamples", subsamples);
    set("fit.max_outer_iter", max_outer);
    set("fit.oracle_gamma", oracle);
    set("fit.expansion", expansion);
    set("penalty.scale", penalty);
    set("benchmark.methods", methods);
    set("scenario.reps", reps);
    set("input.group_column", group_column);
    set("filter.test", test);
    if (!alpha.empty()) {
      set("filter.alpha", alpha);
      set("filter.rule", "fixed_alpha");
    }
    if (!scenario.empty()) {
      const int n = c.scenario.n_reps;
      c.scenario = parse_scenario(scenario, c.scenario);
      c.scenario.n_reps = n;
    }
    if (c.fit.max_outer_iter < c.fit.min_outer_iter) c.fit.min_outer_iter = c.fit.max_outer_iter;
    if (c.fit.oracle_gamma && q.empty()) c.fit.q = static_cast<int>(c.fit.oracle_gamma->size());
    if (c.workers < 1) throw InputError("--workers must be >= 1");

    if (sim->parsed()) return cli::cmd_simulate(c, timing, out);
    if (fitc->parsed()) return cli::cmd_fit(c, input, timing, out);
    if (bench->parsed()) return cli::cmd_benchmark(c, timing, out);
    if (filt->parsed()) return cli::cmd_filter(c, input, out);
    return cli::cmd_export(c, in_dir, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    err << "error: " << msg << '\n';
    return 1;
  }
}

}  // namespace glarma
