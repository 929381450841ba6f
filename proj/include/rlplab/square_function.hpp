#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "frequency.hpp"
#include "parallel.hpp"
#include "signal.hpp"

namespace rlplab {

/// Band projections of one signal; the spectrum is computed once.
class Projector {
 public:
  explicit Projector(const Signal& f) : f_(f), spec_(f.spectrum()), tw_(f.size()) {
    const std::size_t n = f.size();
    for (std::size_t j = 0; j < n; ++j)
      tw_[j] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
  }

  const Signal& signal() const { return f_; }
  const std::vector<cplx>& spectrum() const { return spec_; }

  /// Inverse DFT of 1_w * f^.
  std::vector<cplx> project(const FrequencyInterval& w) const {
    const std::size_t n = spec_.size();
    if (w.a < 0 || w.b > static_cast<long>(n) || w.a >= w.b)
      throw std::invalid_argument("project: interval outside [0, N)");
    if (w.a == 0 && w.b == static_cast<long>(n)) return {f_.samples().begin(), f_.samples().end()};
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<cplx> out(n);
    const std::size_t len = static_cast<std::size_t>(w.length());
    if (len <= static_cast<std::size_t>(f_.n_log2())) {
      const auto& tw = tw_;
      for (long xi = w.a; xi < w.b; ++xi) {
        const cplx c = spec_[static_cast<std::size_t>(xi)] * inv_n;
        if (c == cplx{}) continue;
        const std::size_t step = static_cast<std::size_t>(xi);
        std::size_t idx = 0;
        for (std::size_t x = 0; x < n; ++x) {
          out[x] += c * tw[idx];
          idx = (idx + step) & (n - 1);
        }
      }
      return out;
    }
    std::vector<cplx> masked(n);
    for (long xi = w.a; xi < w.b; ++xi) masked[static_cast<std::size_t>(xi)] = spec_[static_cast<std::size_t>(xi)];
    out = fft_backward(masked);
    for (auto& z : out) z *= inv_n;
    return out;
  }

 private:
  Signal f_;
  std::vector<cplx> spec_;
  std::vector<cplx> tw_;
};

inline Signal project(const Signal& f, const FrequencyInterval& w) {
  return Signal(Projector(f).project(w), f.domain_length());
}

namespace detail {

// Sum of per-band nonnegative rows, reduced pairwise across bands with a
// fixed tree so the result is independent of thread count.
template <typename RowFn>
std::vector<double> reduce_rows(std::size_t rows, std::size_t n, RowFn&& row) {
  if (rows == 0) return std::vector<double>(n, 0.0);
  constexpr std::size_t kBlock = 32;
  const std::size_t blocks = (rows + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t lo = b * kBlock, hi = std::min(rows, lo + kBlock);
    std::vector<std::vector<double>> level;
    level.reserve(hi - lo);
    for (std::size_t k = lo; k < hi; ++k) level.push_back(row(k));
    while (level.size() > 1) {
      std::vector<std::vector<double>> next;
      for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
        for (std::size_t x = 0; x < n; ++x) level[i][x] += level[i + 1][x];
        next.push_back(std::move(level[i]));
      }
      if (level.size() % 2) next.push_back(std::move(level.back()));
      level = std::move(next);
    }
    partial[b] = std::move(level.front());
  });
  while (partial.size() > 1) {
    std::vector<std::vector<double>> next;
    for (std::size_t i = 0; i + 1 < partial.size(); i += 2) {
      for (std::size_t x = 0; x < n; ++x) partial[i][x] += partial[i + 1][x];
      next.push_back(std::move(partial[i]));
    }
    if (partial.size() % 2) next.push_back(std::move(partial.back()));
    partial = std::move(next);
  }
  return std::move(partial.front());
}

}  // namespace detail

/// Tf = (sum_k |f * check(1_{omega_k})|^2)^{1/2}
inline Signal square_fn(const Signal& f, const IntervalFamily& fam) {
  if (fam.n() != f.size()) throw std::invalid_argument("square_fn: family built for a different N");
  Projector proj(f);
  const std::size_t n = f.size();
  auto sum = detail::reduce_rows(fam.size(), n, [&](std::size_t k) {
    auto p = proj.project(fam[k]);
    std::vector<double> r(n);
    for (std::size_t x = 0; x < n; ++x) r[x] = std::norm(p[x]);
    return r;
  });
  for (auto& v : sum) v = std::sqrt(v);
  return Signal::from_real(sum, f.domain_length());
}

/// g = {g_k}, one component per interval of the family.
struct VectorSignal {
  std::vector<Signal> components;
  IntervalFamily family;

  VectorSignal() = default;
  VectorSignal(std::vector<Signal> comps, IntervalFamily fam)
      : components(std::move(comps)), family(std::move(fam)) {
    if (components.size() != family.size())
      throw std::invalid_argument("vector signal: one component per interval required");
    for (const auto& c : components) {
      require_same_grid(c, components.front());
      if (c.size() != family.n()) throw std::invalid_argument("vector signal: N mismatch with family");
    }
  }

  std::size_t n() const { return family.n(); }
  double domain_length() const { return components.front().domain_length(); }
};

/// |g|(x) = (sum_k |g_k(x)|^2)^{1/2}
inline Signal vector_norm(const VectorSignal& g) {
  const std::size_t n = g.n();
  auto sum = detail::reduce_rows(g.components.size(), n, [&](std::size_t k) {
    std::vector<double> r(n);
    for (std::size_t x = 0; x < n; ++x) r[x] = std::norm(g.components[k][x]);
    return r;
  });
  for (auto& v : sum) v = std::sqrt(v);
  return Signal::from_real(sum, g.domain_length());
}

/// <Tf, g> = sum_k sum_x (f * check(1_{omega_k}))(x) g_k(x) dx, bilinear.
inline cplx dual_pairing(const Signal& f, const VectorSignal& g) {
  if (g.n() != f.size()) throw std::invalid_argument("dual_pairing: N mismatch");
  Projector proj(f);
  const std::size_t n = f.size();
  std::vector<cplx> per_k(g.components.size());
  parallel_for(per_k.size(), [&](std::size_t k) {
    auto p = proj.project(g.family[k]);
    std::vector<cplx> t(n);
    for (std::size_t x = 0; x < n; ++x) t[x] = p[x] * g.components[k][x];
    per_k[k] = pairwise_sum(t);
  });
  return pairwise_sum(per_k) * f.dx();
}

/// Conjugated projections: the g that saturates the pairing against f.
inline VectorSignal self_dual(const Signal& f, const IntervalFamily& fam) {
  Projector proj(f);
  std::vector<Signal> comps(fam.size());
  parallel_for(fam.size(), [&](std::size_t k) {
    auto p = proj.project(fam[k]);
    for (auto& z : p) z = std::conj(z);
    comps[k] = Signal(std::move(p), f.domain_length());
  });
  return VectorSignal(std::move(comps), fam);
}

inline VectorSignal random_vector_signal(const IntervalFamily& fam, std::uint64_t seed,
                                         double domain_length = 1.0) {
  std::vector<Signal> comps;
  comps.reserve(fam.size());
  for (std::size_t k = 0; k < fam.size(); ++k)
    comps.push_back(random_signal(fam.n(), seed * 1000003ULL + k, true, domain_length));
  return VectorSignal(std::move(comps), fam);
}

}  // namespace rlplab
