#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dyadic.hpp"
#include "frequency.hpp"
#include "parallel.hpp"
#include "signal.hpp"
#include "square_function.hpp"

namespace rlplab {

struct WavePacketParams {
  int decay_exponent = 10;
  int derivative_count = 2;
  double taper_width = 0.005;

  void validate() const {
    if (decay_exponent < 2) throw std::invalid_argument("decay_exponent must be >= 2");
    if (!(taper_width > 0.0 && taper_width < 0.5))
      throw std::invalid_argument("taper_width must lie in (0, 1/2)");
  }
};

/// Mother profile on the unit band: zero outside [tw, 1 - tw], raised-cosine
/// ramps on [tw, 2tw] and [1 - 2tw, 1 - tw], flat in between.
inline double taper(double u, double tw) {
  const double d = std::min(u, 1.0 - u);
  if (d <= tw) return 0.0;
  if (d >= 2.0 * tw) return 1.0;
  const double s = std::sin(0.5 * std::numbers::pi * (d - tw) / tw);
  return s * s;
}

/// Area-one rectangle: grid-0 dyadic time interval times a frequency block.
struct Tile {
  DyadicInterval time;
  FrequencyInterval freq;
  int family_index = 0;  // 1-based; 0 marks a reference tile

  friend bool operator==(const Tile&, const Tile&) = default;
};

/// All tiles sharing one frequency piece of one omega_k.
struct TileClass {
  std::size_t k = 0;  // 0-based index into the family
  FrequencyInterval piece;
  FrequencyInterval ref;  // piece - nu_k
  int time_scale = 0;     // time length 2^time_scale samples
  std::size_t first = 0;  // tile index of position 0
  std::size_t count = 0;  // number of positions (= piece length)
};

/// Distinct reference block with the classes realizing it.
struct RefClass {
  FrequencyInterval ref;
  int time_scale = 0;
  std::vector<std::size_t> classes;
  std::vector<std::size_t> finer;  // refs R' with |R'| > |R| and R in 3R'
};

inline FrequencyInterval dilate(const FrequencyInterval& w, long factor) {
  const long len = w.length();
  const long ext = (factor - 1) / 2 * len;
  return {w.a - ext, w.b + ext};
}

using TileMask = std::vector<char>;

class TileCollection {
 public:
  TileCollection() = default;

  explicit TileCollection(IntervalFamily fam, double domain_length = 1.0)
      : family_(std::move(fam)), domain_length_(domain_length) {
    const std::size_t n = family_.n();
    L_ = family_.max_length();
    for (std::size_t k = 0; k < family_.size(); ++k) {
      const auto& w = family_[k];
      nu_.push_back(w.a);
      for (const auto& J : whitney_tiling(w)) {
        const auto m = static_cast<std::size_t>(J.length());
        if (n % m != 0) throw std::logic_error("tile piece length does not divide N");
        TileClass c;
        c.k = k;
        c.piece = J;
        c.ref = {J.a - w.a, J.b - w.a};
        c.time_scale = log2_exact(n / m);
        c.first = tile_count_;
        c.count = m;
        tile_count_ += m;
        classes_.push_back(c);
      }
    }
    tile_class_.resize(tile_count_);
    for (std::size_t c = 0; c < classes_.size(); ++c)
      for (std::size_t t = 0; t < classes_[c].count; ++t) tile_class_[classes_[c].first + t] = c;
    std::map<std::pair<long, long>, std::size_t> ref_index;
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const auto key = std::make_pair(classes_[c].ref.a, classes_[c].ref.b);
      auto [it, inserted] = ref_index.try_emplace(key, refs_.size());
      if (inserted) refs_.push_back({classes_[c].ref, classes_[c].time_scale, {}, {}});
      refs_[it->second].classes.push_back(c);
      class_ref_.push_back(it->second);
    }
    for (std::size_t r = 0; r < refs_.size(); ++r)
      for (std::size_t q = 0; q < refs_.size(); ++q) {
        if (refs_[q].ref.length() <= refs_[r].ref.length()) continue;
        if (dilate(refs_[q].ref, 3).contains(refs_[r].ref)) refs_[r].finer.push_back(q);
      }
  }

  const IntervalFamily& family() const { return family_; }
  std::size_t n() const { return family_.n(); }
  double domain_length() const { return domain_length_; }
  double dx() const { return domain_length_ / static_cast<double>(n()); }
  const std::vector<long>& nu() const { return nu_; }
  long L() const { return L_; }
  const std::vector<TileClass>& classes() const { return classes_; }
  const std::vector<RefClass>& refs() const { return refs_; }
  std::size_t size() const { return tile_count_; }
  std::size_t class_of(std::size_t tile) const { return tile_class_[tile]; }
  std::size_t ref_of_class(std::size_t cls) const { return class_ref_[cls]; }
  std::size_t position_of(std::size_t tile) const { return tile - classes_[tile_class_[tile]].first; }

  Tile tile(std::size_t idx) const {
    const auto& c = classes_[tile_class_[idx]];
    return {{0, c.time_scale, static_cast<long>(idx - c.first)}, c.piece, static_cast<int>(c.k) + 1};
  }

  std::vector<Tile> tiles() const {
    std::vector<Tile> out;
    out.reserve(tile_count_);
    for (std::size_t i = 0; i < tile_count_; ++i) out.push_back(tile(i));
    return out;
  }

  /// Reference tile of a family tile: frequency translated back by nu_k.
  Tile reference_tile(std::size_t idx) const {
    Tile t = tile(idx);
    const auto& c = classes_[tile_class_[idx]];
    t.freq = c.ref;
    t.family_index = 0;
    return t;
  }

  /// |I_P| for a tile of the given class.
  double time_measure(const TileClass& c) const {
    return static_cast<double>(std::size_t{1} << c.time_scale) * dx();
  }

  TileMask all() const { return TileMask(tile_count_, 1); }

 private:
  IntervalFamily family_;
  double domain_length_ = 1.0;
  std::vector<long> nu_;
  long L_ = 0;
  std::vector<TileClass> classes_;
  std::vector<RefClass> refs_;
  std::vector<std::size_t> tile_class_;
  std::vector<std::size_t> class_ref_;
  std::size_t tile_count_ = 0;
};

inline TileCollection tiles_for_family(const IntervalFamily& fam, double domain_length = 1.0) {
  return TileCollection(fam, domain_length);
}

/// Exact area identity: time samples times frequency bins equals N.
inline bool has_area_one(const Tile& P, std::size_t n) {
  return (std::size_t{1} << P.time.scale) * static_cast<std::size_t>(P.freq.length()) == n;
}

enum class TileOrder { less, equal, greater, incomparable };

/// P < P' iff I_P strictly inside I_P' and omega_P' inside 3 omega_P.
inline TileOrder tile_order(const Tile& P, const Tile& Q) {
  if (P.time == Q.time && P.freq == Q.freq) return TileOrder::equal;
  auto less = [](const Tile& a, const Tile& b) {
    return a.time.scale < b.time.scale && dyadic_contains(b.time, a.time) &&
           dilate(a.freq, 3).contains(b.freq);
  };
  if (less(P, Q)) return TileOrder::less;
  if (less(Q, P)) return TileOrder::greater;
  return TileOrder::incomparable;
}

/// Spectrum (unnormalized DFT) of phi_P; nonzero only on omega_P.
inline std::vector<cplx> wave_packet_spectrum(const Tile& P, std::size_t n, double domain_length,
                                              const WavePacketParams& params) {
  params.validate();
  if (P.freq.a < 0 || P.freq.b > static_cast<long>(n))
    throw std::invalid_argument("wave_packet: frequency support exceeds the spectrum");
  if (!has_area_one(P, n)) throw std::invalid_argument("wave_packet: tile is not of area one");
  const std::size_t m = static_cast<std::size_t>(P.freq.length());
  const std::size_t s = n / m;
  const double c = static_cast<double>(static_cast<std::size_t>(P.time.position) * s) + 0.5 * static_cast<double>(s);
  std::vector<cplx> spec(n);
  const double scale = static_cast<double>(n) / domain_length;
  for (std::size_t r = 0; r < m; ++r) {
    const double tau = taper((static_cast<double>(r) + 0.5) / static_cast<double>(m), params.taper_width);
    const long xi = P.freq.a + static_cast<long>(r);
    const double phase = -2.0 * std::numbers::pi * static_cast<double>(xi) * c / static_cast<double>(n);
    spec[static_cast<std::size_t>(xi)] = scale * tau * std::polar(1.0, phase);
  }
  return spec;
}

/// phi_P(x) = (1/len) sum_{xi in omega_P} tau(...) e^{2 pi i xi (x - c_P)/N}, c_P the center of I_P.
inline Signal wave_packet(const Tile& P, std::size_t n, double domain_length, const WavePacketParams& params) {
  auto v = fft_backward(wave_packet_spectrum(P, n, domain_length, params));
  for (auto& z : v) z /= static_cast<double>(n);
  return Signal(std::move(v), domain_length);
}

inline std::vector<double> taper_table(std::size_t m, const WavePacketParams& params) {
  std::vector<double> t(m);
  for (std::size_t r = 0; r < m; ++r)
    t[r] = taper((static_cast<double>(r) + 0.5) / static_cast<double>(m), params.taper_width);
  return t;
}

namespace detail {

// <h, phi_P> = sum_x h(x) conj(phi_P(x)) dx for every position of one class,
// from the spectrum H of h via one size-m transform.
inline void class_coefficients(const TileClass& c, const std::vector<cplx>& H, std::size_t n,
                               const WavePacketParams& params, cplx* out) {
  const std::size_t m = c.count;
  const auto tau = taper_table(m, params);
  std::vector<cplx> a(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double half = std::numbers::pi * static_cast<double>(r) / static_cast<double>(m);
    a[r] = tau[r] * H[static_cast<std::size_t>(c.piece.a) + r] * std::polar(1.0, half);
  }
  const auto b = m == 1 ? a : fft_backward(a);
  const std::size_t s = n / m;
  for (std::size_t t = 0; t < m; ++t) {
    const double center = static_cast<double>(t * s) + 0.5 * static_cast<double>(s);
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(c.piece.a) * center / static_cast<double>(n);
    out[t] = b[t] * std::polar(1.0, phase) / static_cast<double>(n);
  }
}

}  // namespace detail

/// <f, phi_P> for every tile.
inline std::vector<cplx> coefficients(const TileCollection& P, const Signal& f, const WavePacketParams& params) {
  if (f.size() != P.n()) throw std::invalid_argument("coefficients: N mismatch");
  params.validate();
  const auto H = f.spectrum();
  std::vector<cplx> out(P.size());
  parallel_for(P.classes().size(), [&](std::size_t ci) {
    const auto& c = P.classes()[ci];
    detail::class_coefficients(c, H, P.n(), params, out.data() + c.first);
  });
  return out;
}

/// <g_k, phi_P> for every tile P of P_k.
inline std::vector<cplx> coefficients(const TileCollection& P, const VectorSignal& g, const WavePacketParams& params) {
  if (g.components.size() != P.family().size()) throw std::invalid_argument("coefficients: family mismatch");
  params.validate();
  std::vector<std::vector<cplx>> spectra(g.components.size());
  parallel_for(spectra.size(), [&](std::size_t k) { spectra[k] = g.components[k].spectrum(); });
  std::vector<cplx> out(P.size());
  parallel_for(P.classes().size(), [&](std::size_t ci) {
    const auto& c = P.classes()[ci];
    detail::class_coefficients(c, spectra[c.k], P.n(), params, out.data() + c.first);
  });
  return out;
}

/// Per-tile energies |I_P| |a_P|^2, zero for tiles outside the mask.
inline std::vector<double> tile_energies(const TileCollection& P, const std::vector<cplx>& a, const TileMask& mask) {
  std::vector<double> e(P.size(), 0.0);
  for (const auto& c : P.classes()) {
    const double len = P.time_measure(c);
    for (std::size_t t = 0; t < c.count; ++t) {
      const std::size_t i = c.first + t;
      if (mask[i]) e[i] = len * std::norm(a[i]);
    }
  }
  return e;
}

/// sum_P |I_P| |<f, phi_P>| |<g_k, phi_P>| over the tiles in the mask.
inline double model_form(const TileCollection& P, const std::vector<cplx>& af, const std::vector<cplx>& ag,
                         const TileMask& mask) {
  std::vector<double> terms(P.size(), 0.0);
  for (const auto& c : P.classes()) {
    const double len = P.time_measure(c);
    for (std::size_t t = 0; t < c.count; ++t) {
      const std::size_t i = c.first + t;
      if (mask[i]) terms[i] = len * std::abs(af[i]) * std::abs(ag[i]);
    }
  }
  return pairwise_sum(terms);
}

inline double model_form(const TileCollection& P, const Signal& f, const VectorSignal& g,
                         const WavePacketParams& params = {}) {
  if (!(g.family.intervals() == P.family().intervals()))
    throw std::invalid_argument("model_form: collection built for a different family");
  return model_form(P, coefficients(P, f, params), coefficients(P, g, params), P.all());
}

/// Relative residual |1_omega f^ - sum_{P in P_k} |I_P| <f,phi_P> phi_P^| / |1_omega f^|,
/// synthesized in the time domain from explicit packets.
inline double reconstruction_residual(const TileCollection& P, const Signal& f, std::size_t k,
                                      const WavePacketParams& params) {
  const std::size_t n = P.n();
  const double dx = P.dx();
  std::vector<std::size_t> tiles;
  for (const auto& c : P.classes())
    if (c.k == k)
      for (std::size_t t = 0; t < c.count; ++t) tiles.push_back(c.first + t);
  std::vector<std::vector<cplx>> parts(tiles.size());
  parallel_for(tiles.size(), [&](std::size_t i) {
    const Tile T = P.tile(tiles[i]);
    const Signal phi = wave_packet(T, n, P.domain_length(), params);
    std::vector<cplx> prod(n);
    for (std::size_t x = 0; x < n; ++x) prod[x] = f[x] * std::conj(phi[x]);
    const cplx coef = pairwise_sum(prod) * dx;
    const double len = static_cast<double>(std::size_t{1} << T.time.scale) * dx;
    std::vector<cplx> contrib(n);
    for (std::size_t x = 0; x < n; ++x) contrib[x] = len * coef * phi[x];
    parts[i] = std::move(contrib);
  });
  std::vector<cplx> synth(n);
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<cplx> col(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) col[i] = parts[i][x];
    synth[x] = pairwise_sum(col);
  }
  const auto S = fft_forward(synth);
  const auto F = f.spectrum();
  const auto& w = P.family()[k];
  std::vector<double> num, den;
  for (std::size_t xi = 0; xi < n; ++xi) {
    const cplx target = w.contains(static_cast<long>(xi)) ? F[xi] : cplx{};
    num.push_back(std::norm(target - S[xi]));
    den.push_back(std::norm(target));
  }
  const double d = pairwise_sum(den);
  return d == 0.0 ? 0.0 : std::sqrt(pairwise_sum(num) / d);
}

}  // namespace rlplab
