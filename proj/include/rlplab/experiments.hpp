#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dyadic.hpp"
#include "frequency.hpp"
#include "signal.hpp"
#include "square_function.hpp"
#include "tiles.hpp"
#include "weights.hpp"

namespace rlplab {

struct ExperimentConfig {
  std::string name;
  std::size_t n = 1024;
  std::uint64_t seed = 1;
  std::string family_spec = "lacunary:2";
  std::string weight_spec = "one";
  std::vector<double> p_values;
  std::size_t budget = 64;
  std::string output_dir = ".";
  std::map<std::string, double> thresholds;

  void validate() const {
    if (!is_pow2(n) || n < 64 || n > 8192) throw std::invalid_argument("n must be a power of two in [64, 8192]");
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  }
};

struct ExperimentInfo {
  std::string name;
  std::string anchor;
};

inline const std::vector<ExperimentInfo>& experiment_list() {
  static const std::vector<ExperimentInfo> list = {
      {"plancherel", "|Tf|_2 = |f|_2 for a partition of the frequency axis"},
      {"p-growth", "|T|_p grows linearly in p as p -> infinity"},
      {"sub2-failure", "T is unbounded on L^p for p < 2 in general"},
      {"sparse-domination", "<Tf, g> <= K sum_{I in S} |I| <f>_{2,I} <|g|>_I, S 1/6-sparse"},
      {"model-sparse", "model form Lambda_P(f, g) <= K sparse form"},
      {"weighted-exponent", "|T|_{L^p(w)} <~ [w]_{A_{p/2}}^{max(1/(p-2), 1)}"},
      {"weak-endpoint", "|T|_{L^2(w) -> L^{2,inf}(w)} <~ [w]_{A_1}^{1/2} [w]_{A_inf}^{1/2} log(e + [w]_{A_inf})"},
      {"congruent-composition", "congruent splitting of a lacunary family: bound [w]_{A_1}^5"},
  };
  return list;
}

inline ExperimentConfig default_config(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "plancherel") {
    c.n = 1024;
    c.family_spec = "blocks:16";
    c.budget = 100;
    c.thresholds = {{"max_deviation", 1e-10}};
  } else if (name == "p-growth") {
    c.n = 2048;
    c.family_spec = "unit";
    c.p_values = {4, 8, 16};
    c.budget = 200;
    c.thresholds = {{"slope_min", 0.5}, {"slope_max", 1.5}};
  } else if (name == "sub2-failure") {
    c.n = 2048;
    c.family_spec = "unit";
    c.p_values = {1.5};
    c.budget = 64;
    c.thresholds = {{"min_growth", 1.5}};
  } else if (name == "sparse-domination") {
    c.n = 2048;
    c.family_spec = "lacunary:2";
    c.budget = 50;
    c.thresholds = {{"max_K_ratio", 2.0}};
  } else if (name == "model-sparse") {
    c.n = 2048;
    c.family_spec = "lacunary:2";
    c.budget = 20;
    c.thresholds = {{"max_K_ratio", 2.0}};
  } else if (name == "weighted-exponent") {
    c.n = 1024;
    c.family_spec = "lacunary:2";
    c.weight_spec = "power";
    c.p_values = {2.5, 3, 4};
    c.budget = 64;
    c.thresholds = {{"C_over_median", 10.0}, {"a_min", 0.1}, {"a_points", 5}};
  } else if (name == "weak-endpoint") {
    c.n = 1024;
    c.family_spec = "lacunary:2";
    c.weight_spec = "power";
    c.p_values = {2};
    c.budget = 64;
    c.thresholds = {{"C_over_median", 10.0}};
  } else if (name == "congruent-composition") {
    c.n = 1024;
    c.family_spec = "congruent:2:unit";
    c.weight_spec = "power";
    c.budget = 20;
    c.thresholds = {{"factorization", 1e-12}, {"max_ratio", 1.0}};
  } else {
    throw std::invalid_argument("unknown experiment '" + name + "'");
  }
  return c;
}

struct ExperimentResult {
  std::string experiment;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  bool passed = true;
  std::map<std::string, double> metrics;
  std::map<std::string, double> constants_measured;
  std::vector<std::string> failures;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string plot_x = "x", plot_y = "y";
  std::vector<std::pair<double, double>> plot;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      failures.push_back(what);
    }
  }
};

namespace detail {

inline std::vector<std::size_t> size_sweep(std::size_t n) { return {n / 8, n / 4, n / 2, n}; }

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double threshold(const ExperimentConfig& c, const std::string& key) {
  auto it = c.thresholds.find(key);
  if (it == c.thresholds.end()) throw std::invalid_argument("missing threshold '" + key + "' for " + c.name);
  return it->second;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Trial t of a domination sweep: f is gaussian noise, one spike or four
// spikes; g is the pairing-maximizing dual of f, independent noise, or the
// dual of f switched off on the arc of length N/4 centred at the peak of |f|.
inline std::pair<Signal, VectorSignal> domination_trial(const IntervalFamily& fam, std::uint64_t seed, std::size_t t) {
  const std::size_t n = fam.n();
  std::mt19937_64 rng(seed + t);
  std::vector<cplx> v(n);
  switch (t % 3) {
    case 0: {
      std::normal_distribution<double> g(0.0, 1.0);
      for (auto& z : v) z = cplx(g(rng), g(rng));
      break;
    }
    case 1:
      v[rng() % n] = 1.0;
      break;
    default:
      for (int j = 0; j < 4; ++j) v[rng() % n] += cplx(1.0, 0.5 * j);
  }
  Signal f(std::move(v));
  switch ((t / 3) % 3) {
    case 0:
      return {f, self_dual(f, fam)};
    case 1:
      return {std::move(f), random_vector_signal(fam, seed + t)};
    default:
      break;
  }
  const auto a = f.abs();
  const std::size_t peak = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
  const GridInterval hole{(peak + n - n / 8) % n, n / 4};
  const auto dual = self_dual(f, fam);
  std::vector<Signal> comps;
  comps.reserve(fam.size());
  for (const auto& c : dual.components) {
    std::vector<cplx> z(c.samples().begin(), c.samples().end());
    for (std::size_t u = 0; u < hole.length; ++u) z[(hole.start + u) % n] = 0.0;
    comps.emplace_back(std::move(z), f.domain_length());
  }
  return {std::move(f), VectorSignal(std::move(comps), fam)};
}

// Grid-family packing: children of every node cover at most |Q|/2.
inline bool half_packing(const SparseBuild& b, std::size_t n) {
  for (const auto& node : b.nodes) {
    const std::size_t q = realize(node.Q, n).length;
    if (2 * node.packed > q) return false;
  }
  return true;
}

inline std::vector<double> a_grid(double lo, double hi, int points) {
  std::vector<double> out;
  if (points <= 1 || hi <= lo) return {lo};
  for (int i = 0; i < points; ++i) out.push_back(lo + (hi - lo) * i / (points - 1));
  return out;
}

inline std::pair<IntervalFamily, std::vector<long>> parse_congruent(const std::string& spec, std::size_t n) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3 || parts[0] != "congruent")
    throw std::invalid_argument("congruent-composition needs a congruent:L:... family");
  const auto base = make_lacunary(std::stol(parts[1]), n);
  std::vector<long> pieces;
  if (parts[2] == "unit") {
    for (const auto& w : base.intervals()) pieces.push_back(w.length());
  } else {
    for (const auto& t : split(parts[2], ',')) pieces.push_back(std::stol(t));
    pieces.resize(base.size(), 1);
  }
  return {base, pieces};
}

inline void run_plancherel(const ExperimentConfig& c, ExperimentResult& r) {
  const auto fam = parse_family(c.family_spec, c.n);
  r.columns = {"trial", "ratio", "deviation"};
  std::vector<double> ratio(c.budget);
  parallel_for(c.budget, [&](std::size_t t) {
    const Signal f = random_signal(c.n, c.seed + t);
    ratio[t] = lp_norm(square_fn(f, fam), 2.0) / lp_norm(f, 2.0);
  });
  double dev = 0.0;
  for (std::size_t t = 0; t < c.budget; ++t) {
    const double d = std::abs(ratio[t] - 1.0);
    dev = std::max(dev, d);
    r.rows.push_back({static_cast<double>(t), ratio[t], d});
    r.plot.emplace_back(static_cast<double>(t), d);
  }
  r.plot_x = "trial";
  r.plot_y = "deviation";
  r.metrics["max_deviation"] = dev;
  r.metrics["overlap_B"] = fam.overlap_B();
  r.check(dev <= threshold(c, "max_deviation"), "max deviation " + fmt(dev) + " exceeds threshold");
}

inline void run_p_growth(const ExperimentConfig& c, ExperimentResult& r) {
  const auto fam = parse_family(c.family_spec, c.n);
  const auto w = parse_weight(c.weight_spec, c.n);
  r.columns = {"p", "norm_lb"};
  std::vector<double> ps, lbs;
  for (double p : c.p_values) {
    const auto e = estimate_opnorm(fam, w, p, NormMode::strong, c.budget, c.seed);
    ps.push_back(p);
    lbs.push_back(e.value);
    r.rows.push_back({p, e.value});
    r.plot.emplace_back(p, e.value);
    r.metrics["norm_lb_p" + fmt(p)] = e.value;
  }
  r.plot_x = "p";
  r.plot_y = "norm_lb";
  const double slope = ps.size() >= 2 ? loglog_slope(ps, lbs) : 0.0;
  r.metrics["slope"] = slope;
  r.check(slope >= threshold(c, "slope_min") && slope <= threshold(c, "slope_max"),
          "log-log slope " + fmt(slope) + " outside [slope_min, slope_max]");
}

inline void run_sub2(const ExperimentConfig& c, ExperimentResult& r) {
  const double p = c.p_values.empty() ? 1.5 : c.p_values.front();
  r.columns = {"N", "norm_lb"};
  std::vector<double> lbs;
  for (std::size_t N : size_sweep(c.n)) {
    const auto fam = parse_family(c.family_spec, N);
    const auto w = parse_weight(c.weight_spec, N);
    const double lb = estimate_opnorm(fam, w, p, NormMode::strong, c.budget, c.seed).value;
    lbs.push_back(lb);
    r.rows.push_back({static_cast<double>(N), lb});
    r.plot.emplace_back(static_cast<double>(N), lb);
    r.metrics["norm_lb_N" + std::to_string(N)] = lb;
  }
  r.plot_x = "N";
  r.plot_y = "norm_lb";
  bool monotone = true;
  for (std::size_t i = 1; i < lbs.size(); ++i) monotone = monotone && lbs[i] > lbs[i - 1];
  const double growth = lbs.back() / lbs.front();
  r.metrics["monotone"] = monotone ? 1.0 : 0.0;
  r.metrics["growth"] = growth;
  r.check(monotone, "lower bounds are not strictly increasing in N");
  r.check(growth >= threshold(c, "min_growth"), "growth " + fmt(growth) + " below min_growth");
}

inline void run_sparse_domination(const ExperimentConfig& c, ExperimentResult& r) {
  r.columns = {"N", "trial", "grid", "K", "K_q1", "sparse_ok"};
  std::vector<double> maxK, maxK1;
  bool all_ok = true;
  for (std::size_t N : size_sweep(c.n)) {
    const auto fam = parse_family(c.family_spec, N);
    double k2 = 0.0, k1 = 0.0;
    for (std::size_t t = 0; t < c.budget; ++t) {
      const auto [f, g] = domination_trial(fam, c.seed, t);
      const Signal ga = vector_norm(g);
      const double pair = std::abs(dual_pairing(f, g));
      const auto best = build_sparse_best(f, ga, 2.0);
      const bool ok = verify_sparse(best.build.family, 1.0 / 6.0).ok &&
                      verify_sparse(best.build.grid_family, 0.5).ok && half_packing(best.build, N);
      all_ok = all_ok && ok;
      const double K = best.form > 0.0 ? pair / best.form : 0.0;
      const double q1 = sparse_form(best.build.family, f, ga, 1.0);
      const double K1 = q1 > 0.0 ? pair / q1 : 0.0;
      k2 = std::max(k2, K);
      k1 = std::max(k1, K1);
      r.rows.push_back({static_cast<double>(N), static_cast<double>(t), static_cast<double>(best.grid_id), K, K1,
                        ok ? 1.0 : 0.0});
    }
    maxK.push_back(k2);
    maxK1.push_back(k1);
    r.plot.emplace_back(static_cast<double>(N), k2);
    r.constants_measured["K_N" + std::to_string(N)] = k2;
    r.constants_measured["K_q1_N" + std::to_string(N)] = k1;
  }
  r.plot_x = "N";
  r.plot_y = "max_K";
  const double ratio = maxK.back() / maxK.front();
  r.metrics["K_ratio"] = ratio;
  r.metrics["K_q1_ratio"] = maxK1.back() / maxK1.front();
  r.metrics["sparse_valid"] = all_ok ? 1.0 : 0.0;
  r.check(all_ok, "a sparse collection failed verification");
  r.check(ratio <= threshold(c, "max_K_ratio"), "K ratio " + fmt(ratio) + " exceeds max_K_ratio");
}

inline void run_model_sparse(const ExperimentConfig& c, ExperimentResult& r) {
  r.columns = {"N", "trial", "lambda", "sparse_form", "K"};
  std::vector<double> maxK;
  for (std::size_t N : size_sweep(c.n)) {
    const auto fam = parse_family(c.family_spec, N);
    const TileCollection P(fam);
    double k = 0.0;
    for (std::size_t t = 0; t < c.budget; ++t) {
      const auto [f, g] = domination_trial(fam, c.seed, t);
      const Signal ga = vector_norm(g);
      const double lam = model_form(P, f, g);
      const double form = build_sparse_best(f, ga, 2.0).form;
      const double K = form > 0.0 ? lam / form : 0.0;
      k = std::max(k, K);
      r.rows.push_back({static_cast<double>(N), static_cast<double>(t), lam, form, K});
    }
    maxK.push_back(k);
    r.plot.emplace_back(static_cast<double>(N), k);
    r.constants_measured["K_N" + std::to_string(N)] = k;
  }
  r.plot_x = "N";
  r.plot_y = "max_K";
  const double ratio = maxK.back() / maxK.front();
  const double spread = *std::max_element(maxK.begin(), maxK.end()) / *std::min_element(maxK.begin(), maxK.end());
  r.metrics["K_ratio"] = ratio;
  r.metrics["K_spread"] = spread;
  r.check(ratio <= threshold(c, "max_K_ratio"), "K ratio " + fmt(ratio) + " exceeds max_K_ratio");
}

// Minimal C with lb <= C * bound over the sweep, checked against the median ratio.
inline void finish_consistency(const ExperimentConfig& c, ExperimentResult& r, const std::vector<double>& ratios) {
  const double C = *std::max_element(ratios.begin(), ratios.end());
  const double med = median(ratios);
  r.constants_measured["C"] = C;
  r.metrics["median_ratio"] = med;
  r.metrics["C_over_median"] = C / med;
  r.check(C <= threshold(c, "C_over_median") * med, "minimal constant " + fmt(C) + " exceeds C_over_median * median");
}

inline void run_weighted_exponent(const ExperimentConfig& c, ExperimentResult& r) {
  const auto fam = parse_family(c.family_spec, c.n);
  r.columns = {"p", "a", "ap_char", "exponent", "norm_lb", "ratio"};
  std::vector<double> ratios;
  for (double p : c.p_values) {
    const double alpha = exponent_formula(p, 2.0, std::numeric_limits<double>::infinity()).alpha;
    const double hi = 0.8 * (p / 2.0 - 1.0);
    std::vector<std::pair<double, double>> samples;
    for (double a : a_grid(threshold(c, "a_min"), hi, static_cast<int>(threshold(c, "a_points")))) {
      const Weight w = power_weight(a, 0, c.n);
      const double ch = ap_characteristic(w, p / 2.0);
      const double lb = estimate_opnorm(fam, w, p, NormMode::strong, c.budget, c.seed).value;
      const double ratio = lb / std::pow(ch, alpha);
      ratios.push_back(ratio);
      samples.emplace_back(ch, lb);
      r.rows.push_back({p, a, ch, alpha, lb, ratio});
      r.plot.emplace_back(ch, lb);
    }
    if (samples.size() >= 4) {
      try {
        r.metrics["fitted_slope_p" + fmt(p)] = fit_exponent(samples).slope;
      } catch (const std::invalid_argument&) {
      }
    }
  }
  r.plot_x = "ap_char";
  r.plot_y = "norm_lb";
  finish_consistency(c, r, ratios);
}

inline void run_weak_endpoint(const ExperimentConfig& c, ExperimentResult& r) {
  const auto fam = parse_family(c.family_spec, c.n);
  const double p = c.p_values.empty() ? 2.0 : c.p_values.front();
  r.columns = {"a", "a1", "ainf", "bound", "weak_lb", "ratio"};
  std::vector<double> ratios;
  for (double a : {-0.1, -0.25, -0.4, -0.55, -0.7}) {
    const Weight w = power_weight(a, 0, c.n);
    const double a1 = a1_characteristic(w);
    const double ai = ainfty_characteristic(w);
    const double bound = std::sqrt(a1) * std::sqrt(ai) * std::log(std::numbers::e + ai);
    const double lb = estimate_opnorm(fam, w, p, NormMode::weak, c.budget, c.seed).value;
    ratios.push_back(lb / bound);
    r.rows.push_back({a, a1, ai, bound, lb, lb / bound});
    r.plot.emplace_back(bound, lb);
  }
  r.plot_x = "bound";
  r.plot_y = "weak_lb";
  finish_consistency(c, r, ratios);
}

inline void run_congruent(const ExperimentConfig& c, ExperimentResult& r) {
  const auto [base, pieces] = parse_congruent(c.family_spec, c.n);
  r.columns = {"a", "a1", "factorization_error", "max_ratio"};
  double fact = 0.0, worst = 0.0;
  for (double a : {-0.6, -0.3, 0.0, 0.3, 0.6}) {
    const Weight w = power_weight(a, 0, c.n);
    const auto rep = congruent_composition_check(base, pieces, w, c.budget, c.seed);
    fact = std::max(fact, rep.factorization_error);
    worst = std::max(worst, rep.max_ratio);
    r.rows.push_back({a, rep.a1, rep.factorization_error, rep.max_ratio});
    r.plot.emplace_back(a, rep.max_ratio);
    r.constants_measured["ratio_a" + fmt(a)] = rep.max_ratio;
  }
  r.plot_x = "a";
  r.plot_y = "max_ratio";
  r.metrics["factorization_error"] = fact;
  r.metrics["max_ratio"] = worst;
  r.check(fact <= threshold(c, "factorization"), "factorization error " + fmt(fact) + " exceeds threshold");
  r.check(worst <= threshold(c, "max_ratio"), "ratio " + fmt(worst) + " exceeds max_ratio");
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  ExperimentResult r;
  r.experiment = c.name;
  r.n = c.n;
  r.seed = c.seed;
  for (const auto& [k, v] : c.thresholds) r.metrics["threshold_" + k] = v;
  if (c.name == "plancherel") detail::run_plancherel(c, r);
  else if (c.name == "p-growth") detail::run_p_growth(c, r);
  else if (c.name == "sub2-failure") detail::run_sub2(c, r);
  else if (c.name == "sparse-domination") detail::run_sparse_domination(c, r);
  else if (c.name == "model-sparse") detail::run_model_sparse(c, r);
  else if (c.name == "weighted-exponent") detail::run_weighted_exponent(c, r);
  else if (c.name == "weak-endpoint") detail::run_weak_endpoint(c, r);
  else if (c.name == "congruent-composition") detail::run_congruent(c, r);
  else throw std::invalid_argument("unknown experiment '" + c.name + "'");
  return r;
}

inline nlohmann::ordered_json report_json(const ExperimentResult& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["n"] = r.n;
  j["seed"] = r.seed;
  j["passed"] = r.passed;
  j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = v;
  j["constants_measured"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.constants_measured) j["constants_measured"][k] = v;
  return j;
}

inline ExperimentResult parse_report(const nlohmann::json& j) {
  ExperimentResult r;
  r.experiment = j.at("experiment").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.passed = j.at("passed").get<bool>();
  for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.get<double>();
  for (const auto& [k, v] : j.at("constants_measured").items()) r.constants_measured[k] = v.get<double>();
  return r;
}

namespace detail {
inline std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// Writes report.json, data.csv and plot.dat into dir.
inline void emit_report(const ExperimentResult& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "report.json");
    if (!out) throw std::runtime_error("cannot write report.json in " + dir);
    out << report_json(r).dump(2) << '\n';
  }
  {
    std::ofstream out(base / "data.csv");
    if (!out) throw std::runtime_error("cannot write data.csv in " + dir);
    for (std::size_t i = 0; i < r.columns.size(); ++i) out << (i ? "," : "") << r.columns[i];
    out << '\n';
    for (const auto& row : r.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << detail::g17(row[i]);
      out << '\n';
    }
  }
  {
    std::ofstream out(base / "plot.dat");
    if (!out) throw std::runtime_error("cannot write plot.dat in " + dir);
    out << "# " << r.experiment << ": " << r.plot_x << ' ' << r.plot_y << '\n';
    for (const auto& [x, y] : r.plot) out << detail::g17(x) << ' ' << detail::g17(y) << '\n';
  }
}

}  // namespace rlplab
