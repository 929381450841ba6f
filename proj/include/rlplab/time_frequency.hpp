#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dyadic.hpp"
#include "parallel.hpp"
#include "signal.hpp"
#include "square_function.hpp"
#include "tiles.hpp"

namespace rlplab {

/// A vectorial tree is fixed by its reference top: ref block R and the time
/// position of I_T at scale 2^{time_scale(R)}. Members: tiles with reference R
/// at I_T itself, and tiles with |R'| > |R|, R in 3R', below I_T. With
/// xi_T the center of R, xi_T lies in 7 omega_P for every such member.
struct TreeShape {
  std::size_t ref = 0;
  std::size_t position = 0;

  friend bool operator==(const TreeShape&, const TreeShape&) = default;
};

inline double shape_xi(const TileCollection& P, const TreeShape& s) {
  const auto& R = P.refs()[s.ref].ref;
  return 0.5 * static_cast<double>(R.a + R.b);
}

inline double shape_top_measure(const TileCollection& P, const TreeShape& s) {
  return static_cast<double>(std::size_t{1} << P.refs()[s.ref].time_scale) * P.dx();
}

inline GridInterval shape_interval(const TileCollection& P, const TreeShape& s) {
  const std::size_t len = std::size_t{1} << P.refs()[s.ref].time_scale;
  return {s.position * len, len};
}

/// Reference top tile P_T (family_index 0).
inline Tile shape_top(const TileCollection& P, const TreeShape& s) {
  const auto& r = P.refs()[s.ref];
  return {{0, r.time_scale, static_cast<long>(s.position)}, r.ref, 0};
}

/// All shapes ordered by (largest I_T, smallest start, smallest xi_T, smallest R.a).
inline std::vector<TreeShape> ordered_shapes(const TileCollection& P) {
  std::vector<TreeShape> out;
  for (std::size_t r = 0; r < P.refs().size(); ++r) {
    const std::size_t count = static_cast<std::size_t>(P.refs()[r].ref.length());
    for (std::size_t t = 0; t < count; ++t) out.push_back({r, t});
  }
  std::sort(out.begin(), out.end(), [&](const TreeShape& x, const TreeShape& y) {
    const auto& rx = P.refs()[x.ref];
    const auto& ry = P.refs()[y.ref];
    if (rx.time_scale != ry.time_scale) return rx.time_scale > ry.time_scale;
    const std::size_t sx = x.position << rx.time_scale, sy = y.position << ry.time_scale;
    if (sx != sy) return sx < sy;
    if (rx.ref.a + rx.ref.b != ry.ref.a + ry.ref.b) return rx.ref.a + rx.ref.b < ry.ref.a + ry.ref.b;
    return rx.ref.a < ry.ref.a;
  });
  return out;
}

/// Tile indices of the maximal tree of a shape, restricted to the mask.
inline std::vector<std::size_t> tree_members(const TileCollection& P, const TreeShape& s, const TileMask& mask) {
  std::vector<std::size_t> out;
  const auto& r = P.refs()[s.ref];
  for (std::size_t c : r.classes) {
    const std::size_t i = P.classes()[c].first + s.position;
    if (mask[i]) out.push_back(i);
  }
  for (std::size_t q : r.finer) {
    const int delta = r.time_scale - P.refs()[q].time_scale;
    const std::size_t lo = s.position << delta, hi = (s.position + 1) << delta;
    for (std::size_t c : P.refs()[q].classes)
      for (std::size_t t = lo; t < hi; ++t) {
        const std::size_t i = P.classes()[c].first + t;
        if (mask[i]) out.push_back(i);
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Tree {
  Tile top;
  double xi = 0.0;
  std::vector<Tile> members;
};

/// Base tree in the reference collection plus its frequency translates, one per omega_k.
struct VectorialTree {
  Tree base;
  std::vector<Tree> branches;
};

inline VectorialTree vectorial_tree(const TileCollection& P, const TreeShape& s, const TileMask& mask) {
  VectorialTree out;
  out.base.top = shape_top(P, s);
  out.base.xi = shape_xi(P, s);
  const auto members = tree_members(P, s, mask);
  out.branches.resize(P.family().size());
  for (std::size_t k = 0; k < out.branches.size(); ++k) {
    auto& b = out.branches[k];
    b.top = out.base.top;
    b.top.freq = {b.top.freq.a + P.nu()[k], b.top.freq.b + P.nu()[k]};
    b.top.family_index = static_cast<int>(k) + 1;
    b.xi = out.base.xi + static_cast<double>(P.nu()[k]);
  }
  for (std::size_t i : members) {
    out.branches[P.classes()[P.class_of(i)].k].members.push_back(P.tile(i));
    const Tile r = P.reference_tile(i);
    if (std::find(out.base.members.begin(), out.base.members.end(), r) == out.base.members.end())
      out.base.members.push_back(r);
  }
  return out;
}

namespace detail {

// Binary pyramid over positions with a fixed combining tree. Both + and max
// are monotone under IEEE rounding, so lowering a leaf never raises a node.
template <typename Op>
class Pyramid {
 public:
  Pyramid() = default;
  Pyramid(std::vector<double> leaves, Op op) : op_(op) {
    levels_.push_back(std::move(leaves));
    while (levels_.back().size() > 1) {
      const auto& prev = levels_.back();
      std::vector<double> next(prev.size() / 2);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = op_(prev[2 * i], prev[2 * i + 1]);
      levels_.push_back(std::move(next));
    }
  }
  double at(int level, std::size_t idx) const { return levels_[static_cast<std::size_t>(level)][idx]; }
  double leaf(std::size_t idx) const { return levels_[0][idx]; }
  void set(std::size_t idx, double v) {
    levels_[0][idx] = v;
    for (std::size_t l = 1; l < levels_.size(); ++l) {
      idx /= 2;
      levels_[l][idx] = op_(levels_[l - 1][2 * idx], levels_[l - 1][2 * idx + 1]);
    }
  }

 private:
  Op op_{};
  std::vector<std::vector<double>> levels_;
};

struct PlusOp {
  double operator()(double a, double b) const { return a + b; }
};
struct MaxOp {
  double operator()(double a, double b) const { return std::max(a, b); }
};

}  // namespace detail

/// Tree energies sum_{P in T} |I_P| |<f,phi_P>|^2 over the present tiles.
class EnergyIndex {
 public:
  EnergyIndex(const TileCollection& P, const std::vector<cplx>& af, const TileMask& mask)
      : P_(&P), mask_(mask), energy_(tile_energies(P, af, mask)) {
    for (const auto& r : P.refs()) pyr_.push_back(detail::Pyramid<detail::PlusOp>(ref_leaves(r), {}));
  }

  double value(const TreeShape& s) const {
    const auto& r = P_->refs()[s.ref];
    double e = pyr_[s.ref].leaf(s.position);
    for (std::size_t q : r.finer) e += pyr_[q].at(r.time_scale - P_->refs()[q].time_scale, s.position);
    return std::sqrt(e / shape_top_measure(*P_, s));
  }

  void remove(std::size_t tile) {
    if (!mask_[tile]) return;
    mask_[tile] = 0;
    energy_[tile] = 0.0;
    const std::size_t c = P_->class_of(tile), t = P_->position_of(tile);
    const std::size_t r = P_->ref_of_class(c);
    pyr_[r].set(t, leaf_sum(P_->refs()[r], t));
  }

  const TileMask& mask() const { return mask_; }

 private:
  double leaf_sum(const RefClass& r, std::size_t t) const {
    double s = 0.0;
    for (std::size_t c : r.classes) s += energy_[P_->classes()[c].first + t];
    return s;
  }
  std::vector<double> ref_leaves(const RefClass& r) const {
    std::vector<double> v(static_cast<std::size_t>(r.ref.length()));
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = leaf_sum(r, t);
    return v;
  }

  const TileCollection* P_;
  TileMask mask_;
  std::vector<double> energy_;
  std::vector<detail::Pyramid<detail::PlusOp>> pyr_;
};

/// (1/|3I'|) int |g| chi~_{3I'} for every grid-0 dyadic I', and the maximum
/// over dyadic ancestors, indexed [scale][position].
struct DualAverages {
  std::vector<std::vector<double>> avg;
  std::vector<std::vector<double>> ancestor_max;
};

inline DualAverages dual_averages(const Signal& g_abs, int decay_exponent) {
  const std::size_t n = g_abs.size();
  const int top = g_abs.n_log2();
  const auto g = g_abs.abs();
  DualAverages out;
  out.avg.resize(static_cast<std::size_t>(top) + 1);
  out.ancestor_max.resize(static_cast<std::size_t>(top) + 1);
  parallel_for(static_cast<std::size_t>(top) + 1, [&](std::size_t s) {
    const std::size_t len = std::size_t{1} << s;
    const std::size_t count = n / len;
    std::vector<double> row(count);
    if (3 * len >= n) {
      const double mean = pairwise_sum(g) / static_cast<double>(n);
      std::fill(row.begin(), row.end(), mean);
    } else {
      const std::size_t len3 = 3 * len;
      std::vector<double> weight(n + 1);
      for (std::size_t d = 0; d <= n; ++d)
        weight[d] = d == 0 ? 1.0 : std::pow(1.0 + static_cast<double>(d) / static_cast<double>(len3), -decay_exponent);
      std::vector<double> terms(n);
      for (std::size_t m = 0; m < count; ++m) {
        const GridInterval t = triple({m * len, len}, n);
        for (std::size_t x = 0; x < n; ++x) terms[x] = g[x] * weight[periodic_distance(t, x, n)];
        row[m] = pairwise_sum(terms) / static_cast<double>(len3);
      }
    }
    out.avg[s] = std::move(row);
  });
  out.ancestor_max[static_cast<std::size_t>(top)] = out.avg[static_cast<std::size_t>(top)];
  for (int s = top - 1; s >= 0; --s) {
    const auto& up = out.ancestor_max[static_cast<std::size_t>(s) + 1];
    auto row = out.avg[static_cast<std::size_t>(s)];
    for (std::size_t m = 0; m < row.size(); ++m) row[m] = std::max(row[m], up[m / 2]);
    out.ancestor_max[static_cast<std::size_t>(s)] = std::move(row);
  }
  return out;
}

/// Dual size of tree shapes: max over present members of the ancestor maximum.
class DualIndex {
 public:
  DualIndex(const TileCollection& P, const DualAverages& da, const TileMask& mask)
      : P_(&P), mask_(mask), tile_value_(P.size()) {
    for (const auto& c : P.classes())
      for (std::size_t t = 0; t < c.count; ++t)
        tile_value_[c.first + t] = da.ancestor_max[static_cast<std::size_t>(c.time_scale)][t];
    for (const auto& r : P.refs()) pyr_.push_back(detail::Pyramid<detail::MaxOp>(ref_leaves(r), {}));
  }

  static constexpr double kEmpty = -1.0;

  double value(const TreeShape& s) const {
    const auto& r = P_->refs()[s.ref];
    double v = pyr_[s.ref].leaf(s.position);
    for (std::size_t q : r.finer) v = std::max(v, pyr_[q].at(r.time_scale - P_->refs()[q].time_scale, s.position));
    return std::max(v, 0.0);
  }

  void remove(std::size_t tile) {
    if (!mask_[tile]) return;
    mask_[tile] = 0;
    const std::size_t c = P_->class_of(tile), t = P_->position_of(tile);
    const std::size_t r = P_->ref_of_class(c);
    pyr_[r].set(t, leaf_max(P_->refs()[r], t));
  }

  double tile_value(std::size_t tile) const { return tile_value_[tile]; }
  const TileMask& mask() const { return mask_; }

 private:
  double leaf_max(const RefClass& r, std::size_t t) const {
    double v = kEmpty;
    for (std::size_t c : r.classes) {
      const std::size_t i = P_->classes()[c].first + t;
      if (mask_[i]) v = std::max(v, tile_value_[i]);
    }
    return v;
  }
  std::vector<double> ref_leaves(const RefClass& r) const {
    std::vector<double> v(static_cast<std::size_t>(r.ref.length()));
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = leaf_max(r, t);
    return v;
  }

  const TileCollection* P_;
  TileMask mask_;
  std::vector<double> tile_value_;
  std::vector<detail::Pyramid<detail::MaxOp>> pyr_;
};

struct SizeWitness {
  double size = 0.0;
  TreeShape shape;
};

template <typename Index>
SizeWitness max_over_shapes(const TileCollection& P, const Index& idx) {
  SizeWitness best;
  for (const auto& s : ordered_shapes(P)) {
    const double v = idx.value(s);
    if (v > best.size) best = {v, s};
  }
  return best;
}

/// sup over vectorial trees of ((1/|I_T|) sum_{P in T} |I_P| |<f,phi_P>|^2)^{1/2}.
inline double vectorial_size(const TileCollection& P, const std::vector<cplx>& af, const TileMask& mask) {
  return max_over_shapes(P, EnergyIndex(P, af, mask)).size;
}

inline double vectorial_size(const TileCollection& P, const Signal& f, const WavePacketParams& params = {}) {
  return vectorial_size(P, coefficients(P, f, params), P.all());
}

/// sup over dyadic I' containing some present I_P of (1/|3I'|) int |g| chi~_{3I'}.
inline double dual_size(const TileCollection& P, const DualAverages& da, const TileMask& mask) {
  double best = 0.0;
  for (const auto& c : P.classes())
    for (std::size_t t = 0; t < c.count; ++t)
      if (mask[c.first + t]) best = std::max(best, da.ancestor_max[static_cast<std::size_t>(c.time_scale)][t]);
  return best;
}

inline double dual_size(const TileCollection& P, const Signal& g_abs, const WavePacketParams& params = {}) {
  return dual_size(P, dual_averages(g_abs, params.decay_exponent), P.all());
}

struct TreeRecord {
  TreeShape shape;
  double size = 0.0;
  double top_measure = 0.0;
  std::vector<std::size_t> tiles;
};

struct DecompositionLevel {
  int n = 0;
  double cap = 0.0;
  double sum_IT = 0.0;
  std::vector<TreeRecord> trees;
  TileMask tiles;
};

struct Decomposition {
  double lambda = 0.0;
  double initial_size = 0.0;
  std::vector<DecompositionLevel> levels;
};

/// Levels whose tree sizes exceed this many halvings are swept into one final level.
inline constexpr int kMaxDecompositionLevels = 60;

namespace detail {

template <typename Index>
Decomposition decompose(const TileCollection& P, Index idx, double lambda, double initial) {
  if (lambda < initial) throw std::invalid_argument("decomposition requires size <= lambda");
  Decomposition out;
  out.lambda = lambda;
  out.initial_size = initial;
  const auto shapes = ordered_shapes(P);
  auto remaining = [&] {
    for (char c : idx.mask())
      if (c) return true;
    return false;
  };
  auto current_max = [&] {
    double m = 0.0;
    for (const auto& s : shapes) m = std::max(m, idx.value(s));
    return m;
  };
  int n = 0;
  while (initial > 0.0 && remaining()) {
    const double cur = current_max();
    double thr;
    if (lambda == 0.0 || cur == 0.0) {
      thr = -1.0;
    } else {
      while (n < kMaxDecompositionLevels && cur <= std::ldexp(lambda, -n - 1)) ++n;
      thr = n >= kMaxDecompositionLevels ? -1.0 : std::ldexp(lambda, -n - 1);
    }
    DecompositionLevel level;
    level.n = n;
    level.cap = std::min(std::ldexp(lambda, -n), initial);
    level.tiles.assign(P.size(), 0);
    for (const auto& s : shapes) {
      const double v = idx.value(s);
      if (!(v > thr)) continue;
      auto members = tree_members(P, s, idx.mask());
      if (members.empty()) continue;
      TreeRecord rec{s, v, shape_top_measure(P, s), std::move(members)};
      for (std::size_t i : rec.tiles) {
        idx.remove(i);
        level.tiles[i] = 1;
      }
      level.sum_IT += rec.top_measure;
      level.trees.push_back(std::move(rec));
    }
    out.levels.push_back(std::move(level));
    ++n;
  }
  if (out.levels.empty()) {
    DecompositionLevel level;
    level.cap = 0.0;
    level.tiles.assign(P.size(), 0);
    out.levels.push_back(std::move(level));
  }
  return out;
}

}  // namespace detail

/// Greedy energy stopping time: level n holds trees of size in (lambda 2^{-n-1}, lambda 2^{-n}].
inline Decomposition energy_decomposition(const TileCollection& P, const std::vector<cplx>& af,
                                          const TileMask& mask, double lambda) {
  EnergyIndex idx(P, af, mask);
  const double initial = max_over_shapes(P, idx).size;
  return detail::decompose(P, std::move(idx), lambda, initial);
}

/// Same stopping time driven by the dual size of |g|.
inline Decomposition mass_decomposition(const TileCollection& P, const DualAverages& da, const TileMask& mask,
                                        double lambda) {
  DualIndex idx(P, da, mask);
  const double initial = dual_size(P, da, mask);
  return detail::decompose(P, std::move(idx), lambda, initial);
}

/// Tiles whose time interval lies inside the grid-0 dyadic interval Q.
inline TileMask tiles_below(const TileCollection& P, const DyadicInterval& Q, const TileMask& mask) {
  TileMask out(P.size(), 0);
  for (const auto& c : P.classes())
    for (std::size_t t = 0; t < c.count; ++t) {
      const std::size_t i = c.first + t;
      if (mask[i] && dyadic_contains(Q, {0, c.time_scale, static_cast<long>(t)})) out[i] = 1;
    }
  return out;
}

/// Removes every tile whose time interval sits inside one of the stopping intervals.
inline TileMask good_tiles(const TileCollection& P, const TileMask& mask, const std::vector<DyadicInterval>& stops) {
  TileMask out = mask;
  for (const auto& c : P.classes())
    for (std::size_t t = 0; t < c.count; ++t) {
      const DyadicInterval I{0, c.time_scale, static_cast<long>(t)};
      for (const auto& S : stops)
        if (dyadic_contains(S, I)) {
          out[c.first + t] = 0;
          break;
        }
    }
  return out;
}

enum class Part { in, out };

inline Signal restrict_to(const Signal& f, const GridInterval& I, Part part) {
  std::vector<cplx> v(f.samples().begin(), f.samples().end());
  const std::size_t n = f.size();
  for (std::size_t x = 0; x < n; ++x) {
    const bool inside = contains(I, x, n);
    if (inside != (part == Part::in)) v[x] = 0.0;
  }
  return Signal(std::move(v), f.domain_length());
}

inline VectorSignal restrict_to(const VectorSignal& g, const GridInterval& I, Part part) {
  std::vector<Signal> comps;
  for (const auto& c : g.components) comps.push_back(restrict_to(c, I, part));
  return VectorSignal(std::move(comps), g.family);
}

/// Lambda over the masked tiles with f on I^{t1} and g on I^{t2}, I^in = 3I.
inline double in_out_split(const TileCollection& P, const TileMask& below, const Signal& f, const VectorSignal& g,
                           const GridInterval& I, Part t1, Part t2, const WavePacketParams& params = {}) {
  const GridInterval I3 = triple(I, P.n());
  const auto af = coefficients(P, restrict_to(f, I3, t1), params);
  const auto ag = coefficients(P, restrict_to(g, I3, t2), params);
  return model_form(P, af, ag, below);
}

/// sup over present P of ((1/|I_P|) int |f|^2 chi~^M_{I_P})^{1/2}.
inline double localized_l2_sup(const TileCollection& P, const Signal& f, const TileMask& mask, int M) {
  const std::size_t n = P.n();
  const auto a = f.abs();
  const int top = log2_exact(n);
  std::vector<std::vector<double>> table(static_cast<std::size_t>(top) + 1);
  std::vector<char> needed(static_cast<std::size_t>(top) + 1, 0);
  for (const auto& c : P.classes()) needed[static_cast<std::size_t>(c.time_scale)] = 1;
  parallel_for(needed.size(), [&](std::size_t s) {
    if (!needed[s]) return;
    const std::size_t len = std::size_t{1} << s;
    std::vector<double> weight(n + 1);
    for (std::size_t d = 0; d <= n; ++d)
      weight[d] = d == 0 ? 1.0 : std::pow(1.0 + static_cast<double>(d) / static_cast<double>(len), -M);
    std::vector<double> row(n / len), terms(n);
    for (std::size_t m = 0; m < row.size(); ++m) {
      for (std::size_t x = 0; x < n; ++x) terms[x] = a[x] * a[x] * weight[periodic_distance({m * len, len}, x, n)];
      row[m] = std::sqrt(pairwise_sum(terms) / static_cast<double>(len));
    }
    table[s] = std::move(row);
  });
  double best = 0.0;
  for (const auto& c : P.classes())
    for (std::size_t t = 0; t < c.count; ++t)
      if (mask[c.first + t]) best = std::max(best, table[static_cast<std::size_t>(c.time_scale)][t]);
  return best;
}

struct TreeEstimate {
  double form = 0.0;
  double dual = 0.0;
  double vectorial = 0.0;
  double top_measure = 0.0;
  double ratio = 0.0;
};

/// Lambda_T / (dual size * vectorial size * |I_T|) for the tiles of one tree.
inline TreeEstimate tree_estimate_check(const TileCollection& P, const TileMask& tree, double top_measure,
                                        const std::vector<cplx>& af, const std::vector<cplx>& ag,
                                        const DualAverages& da) {
  TreeEstimate out;
  out.form = model_form(P, af, ag, tree);
  out.dual = dual_size(P, da, tree);
  out.vectorial = vectorial_size(P, af, tree);
  out.top_measure = top_measure;
  const double den = out.dual * out.vectorial * out.top_measure;
  out.ratio = den > 0.0 ? out.form / den : 0.0;
  return out;
}

inline TreeEstimate tree_estimate_check(const TileCollection& P, const TreeShape& s, const std::vector<cplx>& af,
                                        const std::vector<cplx>& ag, const DualAverages& da) {
  TileMask tree(P.size(), 0);
  for (std::size_t i : tree_members(P, s, P.all())) tree[i] = 1;
  return tree_estimate_check(P, tree, shape_top_measure(P, s), af, ag, da);
}

/// max_x |phi_P(x)| |3I_P| / chi~_{3I_P}(x): the one-term bound for a single-tile tree.
inline double single_tile_bound(const TileCollection& P, std::size_t tile, const WavePacketParams& params) {
  const Tile T = P.tile(tile);
  const Signal phi = wave_packet(T, P.n(), P.domain_length(), params);
  const GridInterval I = realize(T.time, P.n());
  const GridInterval I3 = triple(I, P.n());
  const double m3 = static_cast<double>(I3.length) * P.dx();
  double best = 0.0;
  for (std::size_t x = 0; x < P.n(); ++x)
    best = std::max(best, std::abs(phi[x]) * m3 / cutoff_chi(I3, x, params.decay_exponent, P.n()));
  return best;
}

}  // namespace rlplab
