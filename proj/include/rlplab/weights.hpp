#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dyadic.hpp"
#include "frequency.hpp"
#include "parallel.hpp"
#include "signal.hpp"
#include "square_function.hpp"

namespace rlplab {

/// Strictly positive weight on the grid. A_p values are cached per p.
class Weight {
 public:
  Weight() = default;
  explicit Weight(Signal values) : values_(std::move(values)), cache_(std::make_shared<Cache>()) {
    for (const auto& z : values_.samples())
      if (!(z.imag() == 0.0 && z.real() > 0.0 && std::isfinite(z.real())))
        throw std::invalid_argument("weight samples must be real, finite and > 0");
  }
  static Weight from_real(const std::vector<double>& v, double domain_length = 1.0) {
    return Weight(Signal::from_real(v, domain_length));
  }

  const Signal& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i].real(); }
  std::vector<double> real() const { return values_.abs(); }

  /// w(Q) = sum_{x in Q} w(x) dx
  double mass(const GridInterval& Q) const {
    std::vector<double> t(Q.length);
    for (std::size_t j = 0; j < Q.length; ++j) t[j] = (*this)[(Q.start + j) % size()];
    return pairwise_sum(t) * values_.dx();
  }

  bool cached(double p, double& out) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->ap.find(p);
    if (it == cache_->ap.end()) return false;
    out = it->second;
    return true;
  }
  void store(double p, double v) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    cache_->ap[p] = v;
  }

 private:
  struct Cache {
    std::mutex mu;
    std::map<double, double> ap;
  };
  Signal values_;
  std::shared_ptr<Cache> cache_;
};

/// Largest N for which the characteristics scan every arc.
inline constexpr std::size_t kExactCharacteristicLimit = 4096;
/// Largest N for which the A_infinity constant scans every arc (cubic cost).
inline constexpr std::size_t kExactAinftyLimit = 1024;

namespace detail {

inline std::vector<long double> doubled_prefix(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<long double> pre(2 * n + 1, 0.0L);
  for (std::size_t i = 0; i < 2 * n; ++i) pre[i + 1] = pre[i] + v[i % n];
  return pre;
}

inline double ap_term(double mean_w, double mean_s, double p) {
  return p == 2.0 ? mean_w * mean_s : mean_w * std::pow(mean_s, p - 1.0);
}

// Visits every dyadic block of the three shifted grids as (start, length).
template <typename Fn>
void for_each_shifted_dyadic(std::size_t n, Fn&& fn) {
  for (int j = 0; j < 3; ++j) {
    const std::size_t off = grid_offset(j, n);
    for (std::size_t len = 1; len <= n; len *= 2)
      for (std::size_t pos = 0; pos < n / len; ++pos) fn(GridInterval{(pos * len + off) % n, len});
  }
}

}  // namespace detail

/// [w]_{A_p} = sup_Q <w>_Q (<w^{1-p'}>_Q)^{p-1} over all arcs of the torus
/// (three-grid dyadic arcs above kExactCharacteristicLimit).
inline double ap_characteristic(const Weight& w, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("ap_characteristic requires p > 1");
  double hit = 0.0;
  if (w.cached(p, hit)) return hit;
  const std::size_t n = w.size();
  const auto wv = w.real();
  std::vector<double> sv(n);
  for (std::size_t i = 0; i < n; ++i) sv[i] = p == 2.0 ? 1.0 / wv[i] : std::pow(wv[i], -1.0 / (p - 1.0));
  const auto W = detail::doubled_prefix(wv);
  const auto S = detail::doubled_prefix(sv);
  auto value = [&](std::size_t s, std::size_t m) {
    const auto lm = static_cast<long double>(m);
    return detail::ap_term(static_cast<double>((W[s + m] - W[s]) / lm), static_cast<double>((S[s + m] - S[s]) / lm),
                           p);
  };
  double best = 0.0;
  if (n <= kExactCharacteristicLimit) {
    std::vector<double> per(n, 0.0);
    parallel_for(n, [&](std::size_t s) {
      double b = 0.0;
      for (std::size_t m = 1; m <= n; ++m) b = std::max(b, value(s, m));
      per[s] = b;
    });
    best = *std::max_element(per.begin(), per.end());
  } else {
    detail::for_each_shifted_dyadic(n, [&](const GridInterval& Q) { best = std::max(best, value(Q.start, Q.length)); });
  }
  w.store(p, best);
  return best;
}

/// [w]_{A_1} = max_x M(w)(x) / w(x)
inline double a1_characteristic(const Weight& w) {
  const auto m = maximal_fn(w.values(), 1.0);
  double best = 0.0;
  for (std::size_t x = 0; x < w.size(); ++x) best = std::max(best, m[x].real() / w[x]);
  return best;
}

/// Fujii-Wilson constant sup_Q (1/w(Q)) int_Q M(w 1_Q). The maximal function
/// of w 1_Q runs over sub-arcs of Q, as on the line; for Q the full period it
/// runs over every arc. Three-grid dyadic above kExactAinftyLimit.
inline double ainfty_characteristic(const Weight& w) {
  const std::size_t n = w.size();
  const auto wv = w.real();
  if (n > kExactAinftyLimit) {
    double best = 0.0;
    for (int j = 0; j < 3; ++j) {
      const std::size_t off = grid_offset(j, n);
      std::vector<double> u(n);
      for (std::size_t i = 0; i < n; ++i) u[i] = wv[(off + i) % n];
      const int top = log2_exact(n);
      std::vector<std::vector<double>> mean(static_cast<std::size_t>(top) + 1);
      mean[0] = u;
      for (int k = 1; k <= top; ++k) {
        const auto& prev = mean[static_cast<std::size_t>(k) - 1];
        std::vector<double> row(prev.size() / 2);
        for (std::size_t b = 0; b < row.size(); ++b) row[b] = 0.5 * (prev[2 * b] + prev[2 * b + 1]);
        mean[static_cast<std::size_t>(k)] = std::move(row);
      }
      std::vector<double> per(static_cast<std::size_t>(top) + 1, 0.0);
      parallel_for(per.size(), [&](std::size_t k) {
        const std::size_t len = std::size_t{1} << k;
        double b = 0.0;
        for (std::size_t pos = 0; pos < n / len; ++pos) {
          long double integral = 0.0L;
          for (std::size_t x = pos * len; x < (pos + 1) * len; ++x) {
            double m = 0.0;
            for (std::size_t l = 0; l <= k; ++l) m = std::max(m, mean[l][x >> l]);
            integral += m;
          }
          b = std::max(b, static_cast<double>(integral / (static_cast<long double>(mean[k][pos]) * len)));
        }
        per[k] = b;
      });
      best = std::max(best, *std::max_element(per.begin(), per.end()));
    }
    return best;
  }
  const auto pre = detail::doubled_prefix(wv);
  std::vector<double> per(n, 0.0);
  parallel_for(n, [&](std::size_t s) {
    std::vector<double> inner(n, 0.0);
    double b = 0.0;
    for (std::size_t m = 1; m < n; ++m) {
      // arcs [s + a, s + m) close at the new right end
      double run = 0.0;
      for (std::size_t a = 0; a < m; ++a) {
        run = std::max(run, static_cast<double>((pre[s + m] - pre[s + a]) / static_cast<long double>(m - a)));
        inner[a] = std::max(inner[a], run);
      }
      long double integral = 0.0L;
      for (std::size_t x = 0; x < m; ++x) integral += inner[x];
      b = std::max(b, static_cast<double>(integral / (pre[s + m] - pre[s])));
    }
    per[s] = b;
  });
  const auto full = detail::max_mean_all_arcs(wv);
  long double integral = 0.0L;
  for (double v : full) integral += v;
  per.push_back(static_cast<double>(integral / pre[n]));
  return *std::max_element(per.begin(), per.end());
}

/// (sum |f|^p w dx)^{1/p}
inline double weighted_lp_norm(const Signal& f, const Weight& w, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("weighted_lp_norm requires p >= 1");
  require_same_grid(f, w.values());
  std::vector<double> t(f.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double a = std::abs(f[i]);
    t[i] = (p == 2.0 ? a * a : std::pow(a, p)) * w[i];
  }
  const double s = pairwise_sum(t) * f.dx();
  return p == 2.0 ? std::sqrt(s) : std::pow(s, 1.0 / p);
}

/// sup over lambda of lambda w({|f| > lambda})^{1/p}, attained as lambda rises to some |f(x_i)|.
inline double weak_norm(const Signal& f, const Weight& w, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("weak_norm requires p >= 1");
  require_same_grid(f, w.values());
  const std::size_t n = f.size();
  const auto a = f.abs();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x] > a[y]; });
  double best = 0.0;
  long double at_least = 0.0L;
  std::size_t i = 0;
  while (i < n) {
    const double lambda = a[order[i]];
    std::size_t j = i;
    while (j < n && a[order[j]] == lambda) at_least += w[order[j++]];
    const double mass = static_cast<double>(at_least) * f.dx();
    best = std::max(best, lambda * (p == 2.0 ? std::sqrt(mass) : std::pow(mass, 1.0 / p)));
    i = j;
  }
  return best;
}

/// w(x) = max(dist(x, basepoint), dx)^a with periodic distance.
inline Weight power_weight(double a, std::size_t basepoint, std::size_t n, double domain_length = 1.0) {
  if (!is_pow2(n) || n < 16) throw std::invalid_argument("power_weight: N must be a power of two >= 16");
  const double dx = domain_length / static_cast<double>(n);
  std::vector<double> v(n);
  for (std::size_t x = 0; x < n; ++x) {
    const std::size_t d = x >= basepoint ? x - basepoint : basepoint - x;
    const double dist = static_cast<double>(std::min(d, n - d)) * dx;
    v[x] = std::pow(std::max(dist, dx), a);
  }
  return Weight::from_real(v, domain_length);
}

/// Value lo on [0, N/2) and hi on [N/2, N).
inline Weight step_weight(double lo, double hi, std::size_t n, double domain_length = 1.0) {
  std::vector<double> v(n, lo);
  std::fill(v.begin() + static_cast<long>(n / 2), v.end(), hi);
  return Weight::from_real(v, domain_length);
}

/// Piecewise constant weight with `steps` random levels drawn from [1, spread].
inline Weight random_step_weight(std::size_t n, std::size_t steps, double spread, std::uint64_t seed,
                                 double domain_length = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(0.0, std::log(spread));
  std::vector<std::size_t> cuts{0, n};
  std::uniform_int_distribution<std::size_t> pos(1, n - 1);
  while (cuts.size() < steps + 1) {
    const std::size_t c = pos(rng);
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> v(n);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double val = std::exp(level(rng));
    for (std::size_t x = cuts[i]; x < cuts[i + 1]; ++x) v[x] = val;
  }
  return Weight::from_real(v, domain_length);
}

/// power:a[:base] | const:c | step:lo:hi | file:path
inline Weight parse_weight(const std::string& spec, std::size_t n, double domain_length = 1.0) {
  const auto parts = detail::split(spec, ':');
  if (parts.empty()) throw std::invalid_argument("empty weight spec");
  const std::string& kind = parts[0];
  if (kind == "power" && parts.size() >= 2)
    return power_weight(std::stod(parts[1]), parts.size() > 2 ? std::stoul(parts[2]) : 0, n, domain_length);
  if (kind == "const" && parts.size() == 2)
    return Weight::from_real(std::vector<double>(n, std::stod(parts[1])), domain_length);
  if (kind == "one") return Weight::from_real(std::vector<double>(n, 1.0), domain_length);
  if (kind == "step" && parts.size() == 3) return step_weight(std::stod(parts[1]), std::stod(parts[2]), n, domain_length);
  if (kind == "file" && parts.size() >= 2) {
    const std::string path = spec.substr(5);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open weight file " + path);
    Weight w(read_signal(in));
    if (w.size() != n) throw std::invalid_argument("weight file has the wrong length");
    return w;
  }
  throw std::invalid_argument("unknown weight spec '" + spec + "'");
}

enum class NormMode { strong, weak };

struct OpnormEstimate {
  double value = 0.0;
  Signal witness;
  std::size_t witness_index = 0;
  std::string witness_kind;
};

/// Trial i of the candidate set, seeded by seed + i. Trial 0 is a unit spike
/// at sample 0; afterwards the kinds cycle: random Fourier coefficients,
/// sparse spikes, Dirichlet bumps, modulated indicators adapted to the family.
inline std::pair<Signal, std::string> opnorm_candidate(const IntervalFamily& fam, std::size_t i, std::uint64_t seed,
                                                       double domain_length = 1.0) {
  const std::size_t n = fam.n();
  const int top = log2_exact(n);
  std::vector<cplx> v(n);
  if (i == 0) {
    v[0] = 1.0;
    return {Signal(std::move(v), domain_length), "spike"};
  }
  std::mt19937_64 rng(seed + i);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> anywhere(0, n - 1);
  std::uniform_int_distribution<int> octave(0, top);
  std::string kind;
  switch ((i - 1) % 4) {
    case 0: {
      kind = "fourier";
      const std::size_t support = std::size_t{1} << octave(rng);
      std::vector<cplx> spec(n);
      for (std::size_t j = 0; j < support; ++j) spec[anywhere(rng)] = cplx(gauss(rng), gauss(rng));
      v = fft_backward(spec);
      break;
    }
    case 1: {
      kind = "spikes";
      const std::size_t count = 1 + rng() % 8;
      for (std::size_t j = 0; j < count; ++j) v[anywhere(rng)] += cplx(gauss(rng), gauss(rng));
      break;
    }
    case 2: {
      kind = "dirichlet";
      const std::size_t len = std::size_t{1} << octave(rng);
      const std::size_t a = anywhere(rng), x0 = anywhere(rng);
      std::vector<cplx> spec(n);
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t xi = (a + j) % n;
        spec[xi] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(xi * x0 % n) / static_cast<double>(n));
      }
      v = fft_backward(spec);
      break;
    }
    default: {
      kind = "modulated";
      const auto& w = fam[rng() % fam.size()];
      const std::size_t len = std::max<std::size_t>(1, n / static_cast<std::size_t>(w.length()));
      const std::size_t x0 = anywhere(rng);
      const double xi = 0.5 * static_cast<double>(w.a + w.b);
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t x = (x0 + j) % n;
        v[x] = std::polar(1.0, 2.0 * std::numbers::pi * xi * static_cast<double>(x) / static_cast<double>(n));
      }
      break;
    }
  }
  bool nonzero = false;
  for (const auto& z : v) nonzero = nonzero || z != cplx{};
  if (!nonzero) v[0] = 1.0;
  return {Signal(std::move(v), domain_length), kind};
}

/// Lower bound for |T|_{L^p(w) -> L^p(w)} (strong) or L^p(w) -> L^{p,inf}(w)
/// (weak): max of |Tf| / |f|_{L^p(w)} over `budget` candidates.
inline OpnormEstimate estimate_opnorm(const IntervalFamily& fam, const Weight& w, double p, NormMode mode,
                                      std::size_t budget, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("estimate_opnorm: budget must be >= 1");
  if (w.size() != fam.n()) throw std::invalid_argument("estimate_opnorm: weight and family disagree on N");
  std::vector<double> ratio(budget, 0.0);
  // square_fn runs serially inside each worker
  parallel_for(budget, [&](std::size_t i) {
    auto [f, kind] = opnorm_candidate(fam, i, seed, w.values().domain_length());
    const Signal Tf = square_fn(f, fam);
    const double num = mode == NormMode::strong ? weighted_lp_norm(Tf, w, p) : weak_norm(Tf, w, p);
    const double den = weighted_lp_norm(f, w, p);
    ratio[i] = den > 0.0 ? num / den : 0.0;
  });
  const std::size_t best = static_cast<std::size_t>(std::max_element(ratio.begin(), ratio.end()) - ratio.begin());
  auto [f, kind] = opnorm_candidate(fam, best, seed, w.values().domain_length());
  return {ratio[best], std::move(f), best, kind};
}

struct ExponentFormula {
  double phi_p = 0.0;
  double alpha = 0.0;
};

/// phi(p) = (q0/p)'(p/p0 - 1) + 1 and exponent max(1/(p-p0), (q0-1)/(q0-p)) / (q0/p)'.
/// q0 may be +infinity.
inline ExponentFormula exponent_formula(double p, double p0, double q0) {
  if (!(p0 < p && p < q0)) throw std::invalid_argument("exponent_formula requires p0 < p < q0");
  const bool inf = std::isinf(q0);
  const double conj = inf ? 1.0 : q0 / (q0 - p);
  const double second = inf ? 1.0 : (q0 - 1.0) / (q0 - p);
  return {conj * (p / p0 - 1.0) + 1.0, std::max(1.0 / (p - p0), second) / conj};
}

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double width = 0.0;  // standard error of the slope
};

/// Least squares of log(norm) against log(characteristic).
inline ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 4) throw std::invalid_argument("fit_exponent needs at least 4 samples");
  std::vector<double> x, y;
  for (const auto& [c, v] : samples) {
    if (!(c > 0.0 && v > 0.0)) throw std::invalid_argument("fit_exponent: samples must be positive");
    x.push_back(std::log(c));
    y.push_back(std::log(v));
  }
  const double k = static_cast<double>(x.size());
  const double mx = pairwise_sum(x) / k, my = pairwise_sum(y) / k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 1e-300)) throw std::invalid_argument("fit_exponent: characteristics are all equal");
  ExponentFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - out.intercept - out.slope * x[i];
    rss += r * r;
  }
  out.width = std::sqrt(rss / (k - 2.0) / sxx);
  return out;
}

struct CompositionReport {
  double factorization_error = 0.0;  // max relative |T_{k,n} T_k f - T_{k,n} f|_2
  double max_ratio = 0.0;            // max |T f|^2_{L^2(w)} / ([w]_{A_1}^5 |f|^2_{L^2(w)})
  double a1 = 0.0;
  std::size_t trials = 0;
};

/// Two-step composition through a lacunary family split into congruent pieces.
inline CompositionReport congruent_composition_check(const IntervalFamily& lacunary, const std::vector<long>& pieces,
                                                     const Weight& w, std::size_t trials, std::uint64_t seed) {
  const auto fam = make_congruent(lacunary, pieces);
  if (w.size() != fam.n()) throw std::invalid_argument("composition check: N mismatch");
  CompositionReport out;
  out.trials = trials;
  out.a1 = a1_characteristic(w);
  const double bound = std::pow(out.a1, 5);
  std::vector<double> err(trials, 0.0), ratio(trials, 0.0);
  parallel_for(trials, [&](std::size_t t) {
    const Signal f = random_signal(fam.n(), seed + t, true, w.values().domain_length());
    Projector pf(f);
    std::size_t j = 0;
    double e = 0.0;
    for (std::size_t k = 0; k < lacunary.size(); ++k) {
      const Signal tk(pf.project(lacunary[k]), f.domain_length());
      Projector pk(tk);
      for (long r = 0; r < pieces[k]; ++r, ++j) {
        const auto direct = pf.project(fam[j]);
        const auto twice = pk.project(fam[j]);
        double num = 0.0, den = 0.0;
        for (std::size_t x = 0; x < direct.size(); ++x) {
          num += std::norm(direct[x] - twice[x]);
          den += std::norm(direct[x]);
        }
        if (den > 0.0) e = std::max(e, std::sqrt(num / den));
      }
    }
    err[t] = e;
    const double lhs = std::pow(weighted_lp_norm(square_fn(f, fam), w, 2.0), 2);
    const double rhs = bound * std::pow(weighted_lp_norm(f, w, 2.0), 2);
    ratio[t] = lhs / rhs;
  });
  for (std::size_t t = 0; t < trials; ++t) {
    out.factorization_error = std::max(out.factorization_error, err[t]);
    out.max_ratio = std::max(out.max_ratio, ratio[t]);
  }
  return out;
}

}  // namespace rlplab
