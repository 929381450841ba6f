#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace rlplab {

using cplx = std::complex<double>;

namespace detail {

// FFTW planning is not thread safe; execution with the new-array interface is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(static_cast<std::size_t>(n));
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(n));
    fftw_plan plan = fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline std::vector<cplx> run_fft(std::span<const cplx> in, int sign) {
  std::vector<cplx> src(in.begin(), in.end());
  std::vector<cplx> out(in.size());
  if (in.empty()) return out;
  fftw_plan plan = PlanCache::instance().get(static_cast<int>(in.size()), sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(src.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace detail

/// Unnormalized forward DFT: X[k] = sum_n x[n] e^{-2 pi i k n / N}.
inline std::vector<cplx> fft_forward(std::span<const cplx> x) {
  return detail::run_fft(x, FFTW_FORWARD);
}

/// Unnormalized backward DFT: x[n] = sum_k X[k] e^{+2 pi i k n / N}.
/// Divide by N for the inverse of fft_forward.
inline std::vector<cplx> fft_backward(std::span<const cplx> x) {
  return detail::run_fft(x, FFTW_BACKWARD);
}

}  // namespace rlplab
