#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fft.hpp"

namespace rlplab {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline int log2_exact(std::size_t n) {
  int k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

/// Pairwise (cascade) summation; the result depends only on the input order.
template <typename T>
T pairwise_sum(std::span<const T> v) {
  if (v.size() <= 16) {
    T s{};
    for (const auto& x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(std::span<const T>(v));
}

/// Samples of a function on the periodic grid Z_N, N = 2^n >= 16.
class Signal {
 public:
  Signal() = default;

  explicit Signal(std::vector<cplx> samples, double domain_length = 1.0)
      : samples_(std::move(samples)), domain_length_(domain_length) {
    if (samples_.size() < 16 || !is_pow2(samples_.size()))
      throw std::invalid_argument("signal length must be a power of two >= 16");
    if (!(domain_length_ > 0.0) || !std::isfinite(domain_length_))
      throw std::invalid_argument("domain length must be positive");
    for (const auto& z : samples_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("signal samples must be finite");
  }

  static Signal from_real(std::span<const double> values, double domain_length = 1.0) {
    return Signal(std::vector<cplx>(values.begin(), values.end()), domain_length);
  }

  static Signal zeros(std::size_t n, double domain_length = 1.0) {
    return Signal(std::vector<cplx>(n), domain_length);
  }

  static Signal constant(std::size_t n, cplx c, double domain_length = 1.0) {
    return Signal(std::vector<cplx>(n, c), domain_length);
  }

  std::size_t size() const { return samples_.size(); }
  int n_log2() const { return log2_exact(samples_.size()); }
  double domain_length() const { return domain_length_; }
  double dx() const { return domain_length_ / static_cast<double>(samples_.size()); }

  const cplx& operator[](std::size_t i) const { return samples_[i]; }
  std::span<const cplx> samples() const { return samples_; }

  std::vector<double> abs() const {
    std::vector<double> out(samples_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(samples_[i]);
    return out;
  }

  Signal abs_signal() const { return from_real(abs(), domain_length_); }

  /// Unnormalized DFT, bins 0..N-1.
  std::vector<cplx> spectrum() const { return fft_forward(samples_); }

 private:
  std::vector<cplx> samples_;
  double domain_length_ = 1.0;
};

inline void require_same_grid(const Signal& a, const Signal& b) {
  if (a.size() != b.size()) throw std::invalid_argument("signal length mismatch");
  if (a.domain_length() != b.domain_length())
    throw std::invalid_argument("signal domain length mismatch");
}

/// Half-open block of consecutive samples [start, start + length), wrapping mod N.
struct GridInterval {
  std::size_t start = 0;
  std::size_t length = 1;

  friend bool operator==(const GridInterval&, const GridInterval&) = default;
};

inline void check_interval(const GridInterval& I, std::size_t n) {
  if (I.start >= n || I.length < 1 || I.length > n)
    throw std::invalid_argument("grid interval out of range");
}

inline double measure(const GridInterval& I, const Signal& f) {
  return static_cast<double>(I.length) * f.dx();
}

inline bool contains(const GridInterval& I, std::size_t x, std::size_t n) {
  return (x + n - I.start) % n < I.length;
}

/// Block-in-block containment on the torus.
inline bool contains(const GridInterval& outer, const GridInterval& inner, std::size_t n) {
  if (outer.length >= n) return true;
  if (inner.length > outer.length) return false;
  return (inner.start + n - outer.start) % n + inner.length <= outer.length;
}

/// 3I: I together with its two neighbours of equal length, capped at the full period.
inline GridInterval triple(const GridInterval& I, std::size_t n) {
  if (3 * I.length >= n) return {0, n};
  return {(I.start + n - I.length) % n, 3 * I.length};
}

/// Periodic distance in samples from x to the sample hull of I (0 inside I).
inline std::size_t periodic_distance(const GridInterval& I, std::size_t x, std::size_t n) {
  if (contains(I, x, n)) return 0;
  const std::size_t last = (I.start + I.length - 1) % n;
  const std::size_t fwd = (x + n - last) % n;
  const std::size_t bwd = (I.start + n - x) % n;
  return std::min(fwd, bwd);
}

inline double lp_norm(const Signal& f, double p) {
  if (std::isinf(p) && p > 0) {
    double m = 0.0;
    for (const auto& z : f.samples()) m = std::max(m, std::abs(z));
    return m;
  }
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm requires p >= 1");
  std::vector<double> terms(f.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double a = std::abs(f[i]);
    terms[i] = p == 2.0 ? a * a : std::pow(a, p);
  }
  const double s = pairwise_sum(terms) * f.dx();
  return p == 2.0 ? std::sqrt(s) : std::pow(s, 1.0 / p);
}

/// ((1/|I|) sum_{i in I} |f_i|^r dx)^{1/r}
inline double local_average(const Signal& f, double r, const GridInterval& I) {
  if (!(r >= 1.0)) throw std::invalid_argument("local_average requires r >= 1");
  check_interval(I, f.size());
  const std::size_t n = f.size();
  std::vector<double> terms(I.length);
  for (std::size_t j = 0; j < I.length; ++j) {
    const double a = std::abs(f[(I.start + j) % n]);
    terms[j] = r == 1.0 ? a : (r == 2.0 ? a * a : std::pow(a, r));
  }
  const double mean = pairwise_sum(terms) / static_cast<double>(I.length);
  if (r == 1.0) return mean;
  return r == 2.0 ? std::sqrt(mean) : std::pow(mean, 1.0 / r);
}

/// (1 + dist(x, I)/|I|)^{-exponent}; the ratio is dimensionless so no dx enters.
inline double cutoff_chi(const GridInterval& I, std::size_t x, int exponent, std::size_t n) {
  if (exponent < 1) throw std::invalid_argument("cutoff_chi requires exponent >= 1");
  const double d = static_cast<double>(periodic_distance(I, x, n));
  if (d == 0.0) return 1.0;
  return std::pow(1.0 + d / static_cast<double>(I.length), -exponent);
}

inline double energy_from_spectrum(const Signal& f) {
  auto F = f.spectrum();
  std::vector<double> terms(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) terms[i] = std::norm(F[i]);
  // unitary normalization on the grid of spacing dx: |f|_2^2 = dx/N sum |F|^2
  return pairwise_sum(terms) * f.dx() / static_cast<double>(f.size());
}

inline Signal random_signal(std::size_t n, std::uint64_t seed, bool complex_valued = true,
                            double domain_length = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> v(n);
  for (auto& z : v) {
    const double re = g(rng);
    z = complex_valued ? cplx(re, g(rng)) : cplx(re, 0.0);
  }
  return Signal(std::move(v), domain_length);
}

inline Signal random_nonnegative(std::size_t n, std::uint64_t seed, double domain_length = 1.0) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> e(1.0);
  std::vector<cplx> v(n);
  for (auto& z : v) z = e(rng);
  return Signal(std::move(v), domain_length);
}

inline void write_signal(std::ostream& os, const Signal& f) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu %.17g\n", f.size(), f.domain_length());
  os << buf;
  for (const auto& z : f.samples()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", z.real(), z.imag());
    os << buf;
  }
}

inline Signal read_signal(std::istream& is) {
  std::size_t n = 0;
  double length = 0.0;
  if (!(is >> n >> length)) throw std::runtime_error("signal file: bad header");
  if (n > (std::size_t{1} << 26)) throw std::runtime_error("signal file: N too large");
  std::vector<cplx> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    double re = 0.0, im = 0.0;
    if (!(is >> re >> im)) throw std::runtime_error("signal file: truncated at sample " + std::to_string(i));
    v[i] = {re, im};
  }
  return Signal(std::move(v), length);
}

}  // namespace rlplab
