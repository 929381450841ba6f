#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "parallel.hpp"
#include "signal.hpp"

namespace rlplab {

/// Interval of length 2^scale at position m in grid j.
struct DyadicInterval {
  int grid_id = 0;
  int scale = 0;
  long position = 0;

  friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;
  friend auto operator<=>(const DyadicInterval&, const DyadicInterval&) = default;
};

/// Offset of grid j: j * 0b0101...01 (n bits) mod N. Translating the standard
/// grid by a constant keeps it nested; the offset mod 2^k alternates between
/// about 2^k/3 and 2*2^k/3.
inline std::size_t grid_offset(int grid_id, std::size_t n) {
  if (grid_id < 0 || grid_id > 2) throw std::invalid_argument("grid id must be 0, 1 or 2");
  std::size_t d = 0;
  for (std::size_t bit = 1; bit < n; bit <<= 2) d |= bit;
  return (static_cast<std::size_t>(grid_id) * d) % n;
}

inline GridInterval realize(const DyadicInterval& I, std::size_t n) {
  const std::size_t len = std::size_t{1} << I.scale;
  if (len > n || I.position < 0 || static_cast<std::size_t>(I.position) * len >= n)
    throw std::invalid_argument("dyadic interval out of range");
  return {(static_cast<std::size_t>(I.position) * len + grid_offset(I.grid_id, n)) % n, len};
}

/// Dyadic interval of grid j and scale k that contains sample x.
inline DyadicInterval dyadic_containing(int grid_id, int scale, std::size_t x, std::size_t n) {
  const std::size_t off = grid_offset(grid_id, n);
  return {grid_id, scale, static_cast<long>(((x + n - off) % n) >> scale)};
}

inline DyadicInterval dyadic_root(int grid_id, std::size_t n) { return {grid_id, log2_exact(n), 0}; }

inline DyadicInterval dyadic_parent(const DyadicInterval& I) {
  return {I.grid_id, I.scale + 1, I.position / 2};
}

inline bool dyadic_contains(const DyadicInterval& outer, const DyadicInterval& inner) {
  if (outer.grid_id != inner.grid_id || inner.scale > outer.scale) return false;
  return (inner.position >> (outer.scale - inner.scale)) == outer.position;
}

struct EnclosingInterval {
  DyadicInterval interval;
  int type = 0;
};

/// Smallest shifted-grid interval containing 3I (ties to the lowest grid id).
inline EnclosingInterval enclosing_shifted(const GridInterval& I, std::size_t n) {
  check_interval(I, n);
  if (3 * I.length > n) throw std::invalid_argument("enclosing_shifted: 3I exceeds the period");
  const GridInterval t = triple(I, n);
  const int top = log2_exact(n);
  for (int k = 0; k <= top; ++k) {
    const std::size_t len = std::size_t{1} << k;
    if (len < t.length) continue;
    for (int j = 0; j < 3; ++j) {
      const DyadicInterval D = dyadic_containing(j, k, t.start, n);
      if (contains(realize(D, n), t, n)) return {D, j};
    }
  }
  return {dyadic_root(0, n), 0};
}

namespace detail {

// Exact sup over all arcs containing x of the mean of v on the arc, v >= 0.
inline std::vector<double> max_mean_all_arcs(const std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t blocks = std::min<std::size_t>(n, 64);
  std::vector<std::vector<double>> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> best(n, 0.0);
    std::vector<double> suf(n + 2);
    for (std::size_t s = b; s < n; s += blocks) {
      long double run = 0.0L;
      for (std::size_t l = 1; l <= n; ++l) {
        run += v[(s + l - 1) % n];
        suf[l] = static_cast<double>(run / static_cast<long double>(l));
      }
      suf[n + 1] = 0.0;
      for (std::size_t l = n; l >= 1; --l) suf[l] = std::max(suf[l], suf[l + 1]);
      for (std::size_t t = 0; t < n; ++t) {
        double& slot = best[(s + t) % n];
        slot = std::max(slot, suf[t + 1]);
      }
    }
    partial[b] = std::move(best);
  });
  std::vector<double> out(n, 0.0);
  for (const auto& p : partial)
    for (std::size_t x = 0; x < n; ++x) out[x] = std::max(out[x], p[x]);
  return out;
}

// Sup over arcs of the torus Z_n of the mean of v * 1_W, evaluated at the
// points of the proper arc W. Local coordinate u corresponds to W.start + u.
// Arcs that leave W on one side only are dominated by their trace on W; arcs
// covering the whole complement of W are handled as wrap arcs.
inline std::vector<double> max_mean_on_window(const std::vector<double>& v, const GridInterval& W) {
  const std::size_t n = v.size();
  if (W.length >= n) {
    std::vector<double> rot(n);
    auto full = max_mean_all_arcs(v);
    for (std::size_t u = 0; u < n; ++u) rot[u] = full[(W.start + u) % n];
    return rot;
  }
  const std::size_t m = W.length;
  std::vector<long double> pre(m + 1, 0.0L);
  for (std::size_t u = 0; u < m; ++u) pre[u + 1] = pre[u] + v[(W.start + u) % n];
  std::vector<double> best(m, 0.0);
  std::vector<double> suf(m + 2);
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t span = m - s;
    for (std::size_t l = 1; l <= span; ++l)
      suf[l] = static_cast<double>((pre[s + l] - pre[s]) / static_cast<long double>(l));
    suf[span + 1] = 0.0;
    for (std::size_t l = span; l >= 1; --l) suf[l] = std::max(suf[l], suf[l + 1]);
    for (std::size_t t = 0; t < span; ++t) best[s + t] = std::max(best[s + t], suf[t + 1]);
  }
  // Wrap arcs: complement of W plus [0, u) and [o, m), u <= o, of length n - o + u.
  const long double total = pre[m];
  auto wrap_mean = [&](std::size_t u, std::size_t o) {
    return static_cast<double>((pre[u] + (total - pre[o])) / static_cast<long double>(n - o + u));
  };
  std::vector<double> by_o(m + 1, 0.0), by_u(m + 1, 0.0);
  for (std::size_t o = 0; o <= m; ++o)
    for (std::size_t u = 0; u <= o; ++u) {
      const double val = wrap_mean(u, o);
      by_o[o] = std::max(by_o[o], val);
      by_u[u] = std::max(by_u[u], val);
    }
  // x in [o, m) for some o <= x, or x in [0, u) for some u > x.
  double run = 0.0;
  for (std::size_t x = 0; x < m; ++x) {
    run = std::max(run, by_o[x]);
    best[x] = std::max(best[x], run);
  }
  run = 0.0;
  for (std::size_t x = m; x-- > 0;) {
    run = std::max(run, by_u[x + 1]);
    best[x] = std::max(best[x], run);
  }
  return best;
}

inline std::vector<double> abs_pow(const Signal& f, double p) {
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(f[i]);
    v[i] = p == 1.0 ? a : (p == 2.0 ? a * a : std::pow(a, p));
  }
  return v;
}

inline double root_p(double m, double p) {
  return p == 1.0 ? m : (p == 2.0 ? std::sqrt(m) : std::pow(m, 1.0 / p));
}

}  // namespace detail

/// Largest N for which maximal_fn uses the exact all-arcs supremum.
inline constexpr std::size_t kExactMaximalLimit = 4096;

/// Maximal function over the dyadic intervals of the three shifted grids.
inline Signal maximal_fn_dyadic(const Signal& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("maximal_fn requires p >= 1");
  const std::size_t n = f.size();
  const auto v = detail::abs_pow(f, p);
  std::vector<double> best(n, 0.0);
  for (int j = 0; j < 3; ++j) {
    const std::size_t off = grid_offset(j, n);
    std::vector<double> level(n);
    for (std::size_t u = 0; u < n; ++u) level[u] = v[(off + u) % n];
    std::size_t len = 1;
    while (true) {
      for (std::size_t u = 0; u < n; ++u) {
        double& slot = best[(off + u) % n];
        slot = std::max(slot, level[u / len] / static_cast<double>(len));
      }
      if (len == n) break;
      std::vector<double> next(n / (2 * len));
      for (std::size_t b = 0; b < next.size(); ++b) next[b] = level[2 * b] + level[2 * b + 1];
      level = std::move(next);
      len *= 2;
    }
  }
  for (auto& x : best) x = detail::root_p(x, p);
  return Signal::from_real(best, f.domain_length());
}

/// M_p f(x) = sup over arcs I containing x of <f>_{p,I}. Exact up to
/// kExactMaximalLimit, three-grid dyadic above (comparable within 2*3).
inline Signal maximal_fn(const Signal& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("maximal_fn requires p >= 1");
  if (f.size() > kExactMaximalLimit) return maximal_fn_dyadic(f, p);
  auto m = detail::max_mean_all_arcs(detail::abs_pow(f, p));
  for (auto& x : m) x = detail::root_p(x, p);
  return Signal::from_real(m, f.domain_length());
}

/// M_p(f 1_W) on the points of W, as p-th powers, with <f>_{p,W}^p.
struct WindowMaximal {
  GridInterval window;
  std::vector<double> mp;
  double avg_p = 0.0;

  double at(std::size_t x, std::size_t n) const { return mp[(x + n - window.start) % n]; }
};

inline WindowMaximal window_maximal(const std::vector<double>& vp, const GridInterval& W) {
  WindowMaximal out;
  out.window = W;
  out.mp = detail::max_mean_on_window(vp, W);
  const std::size_t n = vp.size();
  std::vector<double> terms(W.length);
  for (std::size_t u = 0; u < W.length; ++u) terms[u] = vp[(W.start + u) % n];
  out.avg_p = pairwise_sum(terms) / static_cast<double>(W.length);
  return out;
}

namespace detail {

// Maximal proper dyadic sub-intervals of Q (same grid) lying in {mp >= thr}.
inline std::vector<DyadicInterval> maximal_subintervals(const WindowMaximal& wm, const DyadicInterval& Q,
                                                        double thr, std::size_t n) {
  std::vector<DyadicInterval> out;
  if (Q.scale == 0) return out;
  const GridInterval q = realize(Q, n);
  std::vector<char> full(q.length);
  for (std::size_t u = 0; u < q.length; ++u) full[u] = wm.at((q.start + u) % n, n) >= thr;
  std::vector<std::vector<char>> levels{full};
  for (int s = 1; s < Q.scale; ++s) {
    const auto& prev = levels.back();
    std::vector<char> next(prev.size() / 2);
    for (std::size_t b = 0; b < next.size(); ++b) next[b] = prev[2 * b] && prev[2 * b + 1];
    levels.push_back(std::move(next));
  }
  for (int s = Q.scale - 1; s >= 0; --s) {
    const auto& lv = levels[static_cast<std::size_t>(s)];
    for (std::size_t b = 0; b < lv.size(); ++b) {
      if (!lv[b]) continue;
      const bool parent_full =
          s + 1 < Q.scale && levels[static_cast<std::size_t>(s + 1)][b / 2];
      if (parent_full) continue;
      out.push_back({Q.grid_id, s, (Q.position << (Q.scale - s)) + static_cast<long>(b)});
    }
  }
  std::sort(out.begin(), out.end(), [](const DyadicInterval& a, const DyadicInterval& b) {
    return (a.position << a.scale) < (b.position << b.scale);
  });
  return out;
}

inline std::size_t total_length(const std::vector<DyadicInterval>& v) {
  std::size_t s = 0;
  for (const auto& I : v) s += std::size_t{1} << I.scale;
  return s;
}

}  // namespace detail

/// Maximal dyadic I strictly inside Q with I in {M_p(f 1_{3Q}) >= C <f>_{p,3Q}}.
/// Empty when the average on 3Q vanishes.
inline std::vector<DyadicInterval> stopping_intervals(const Signal& f, double p, const DyadicInterval& Q,
                                                      double C) {
  if (!(C > 1.0)) throw std::invalid_argument("stopping_intervals requires C > 1");
  if (!(p >= 1.0)) throw std::invalid_argument("stopping_intervals requires p >= 1");
  const std::size_t n = f.size();
  const auto wm = window_maximal(detail::abs_pow(f, p), triple(realize(Q, n), n));
  if (wm.avg_p == 0.0) return {};
  return detail::maximal_subintervals(wm, Q, std::pow(C, p) * wm.avg_p, n);
}

struct AdaptiveStops {
  std::vector<DyadicInterval> intervals;
  double C = 2.0;
  std::size_t packed = 0;  // total length in samples
};

/// Smallest C in {2, 4, 8, ...} whose stopping intervals pack to at most |Q|/6.
inline AdaptiveStops adaptive_stopping(const WindowMaximal& wm, const DyadicInterval& Q, double p,
                                       std::size_t n) {
  AdaptiveStops out;
  if (wm.avg_p == 0.0) return out;
  const std::size_t qlen = std::size_t{1} << Q.scale;
  const double peak = *std::max_element(wm.mp.begin(), wm.mp.end());
  for (double C = 2.0;; C *= 2.0) {
    const double thr = std::pow(C, p) * wm.avg_p;
    auto I = detail::maximal_subintervals(wm, Q, thr, n);
    const std::size_t packed = detail::total_length(I);
    if (6 * packed <= qlen || thr > peak) {
      out.intervals = std::move(I);
      out.C = C;
      out.packed = packed;
      return out;
    }
  }
}

/// Maximal elements of a union of dyadic intervals from one grid.
inline std::vector<DyadicInterval> maximal_elements(std::vector<DyadicInterval> v) {
  std::sort(v.begin(), v.end(), [](const DyadicInterval& a, const DyadicInterval& b) {
    if (a.scale != b.scale) return a.scale > b.scale;
    return a.position < b.position;
  });
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<DyadicInterval> out;
  for (const auto& I : v) {
    bool covered = false;
    for (const auto& J : out)
      if (dyadic_contains(J, I)) {
        covered = true;
        break;
      }
    if (!covered) out.push_back(I);
  }
  std::sort(out.begin(), out.end(), [](const DyadicInterval& a, const DyadicInterval& b) {
    return (a.position << a.scale) < (b.position << b.scale);
  });
  return out;
}

/// One node of the stopping-time recursion for the pair (f, p=2), (g, p=1).
struct NodeStops {
  DyadicInterval Q;
  std::vector<DyadicInterval> children;
  double C_f = 2.0, C_g = 2.0;
  std::size_t packed = 0;
  // max over children I of inf_{3I} M_{p_j}(f_j 1_{3Q}) / <f_j>_{p_j,3Q}
  double inf_ratio_f = 0.0, inf_ratio_g = 0.0;
};

inline NodeStops merge_stopping(const std::vector<double>& f2, const std::vector<double>& g1,
                                const DyadicInterval& Q) {
  const std::size_t n = f2.size();
  const GridInterval W = triple(realize(Q, n), n);
  const auto wf = window_maximal(f2, W);
  const auto wg = window_maximal(g1, W);
  const auto sf = adaptive_stopping(wf, Q, 2.0, n);
  const auto sg = adaptive_stopping(wg, Q, 1.0, n);
  NodeStops out;
  out.Q = Q;
  out.C_f = sf.C;
  out.C_g = sg.C;
  std::vector<DyadicInterval> all = sf.intervals;
  all.insert(all.end(), sg.intervals.begin(), sg.intervals.end());
  out.children = maximal_elements(std::move(all));
  out.packed = detail::total_length(out.children);
  for (const auto& I : out.children) {
    const GridInterval t = triple(realize(I, n), n);
    double inf_f = std::numeric_limits<double>::infinity(), inf_g = inf_f;
    for (std::size_t u = 0; u < t.length; ++u) {
      const std::size_t x = (t.start + u) % n;
      inf_f = std::min(inf_f, wf.at(x, n));
      inf_g = std::min(inf_g, wg.at(x, n));
    }
    if (wf.avg_p > 0) out.inf_ratio_f = std::max(out.inf_ratio_f, std::sqrt(inf_f / wf.avg_p));
    if (wg.avg_p > 0) out.inf_ratio_g = std::max(out.inf_ratio_g, inf_g / wg.avg_p);
  }
  return out;
}

inline NodeStops merge_stopping(const Signal& f, const Signal& g_abs, const DyadicInterval& Q) {
  require_same_grid(f, g_abs);
  return merge_stopping(detail::abs_pow(f, 2.0), detail::abs_pow(g_abs, 1.0), Q);
}

struct SparseMember {
  GridInterval interval;
  std::vector<std::size_t> witness;
};

struct SparseFamily {
  std::size_t n = 0;
  double eta = 1.0 / 6.0;
  std::vector<SparseMember> members;
};

struct SparseBuild {
  int grid_id = 0;
  std::vector<NodeStops> nodes;      // breadth-first, root first
  std::vector<std::size_t> parent;   // index into nodes, root points to itself
  SparseFamily grid_family;          // (Q, E_Q), eta = 1/2
  SparseFamily family;               // (3Q, E_Q), eta = 1/6
};

/// Stopping-time recursion from the full period in grid j.
inline SparseBuild build_sparse(const Signal& f, const Signal& g_abs, int grid_id) {
  require_same_grid(f, g_abs);
  const std::size_t n = f.size();
  const auto f2 = detail::abs_pow(f, 2.0);
  const auto g1 = detail::abs_pow(g_abs, 1.0);
  SparseBuild out;
  out.grid_id = grid_id;
  std::vector<DyadicInterval> level{dyadic_root(grid_id, n)};
  std::vector<std::size_t> level_parent{0};
  while (!level.empty()) {
    std::vector<NodeStops> done(level.size());
    parallel_for(level.size(), [&](std::size_t i) { done[i] = merge_stopping(f2, g1, level[i]); });
    std::vector<DyadicInterval> next;
    std::vector<std::size_t> next_parent;
    for (std::size_t i = 0; i < level.size(); ++i) {
      const std::size_t idx = out.nodes.size();
      out.parent.push_back(level_parent[i]);
      for (const auto& c : done[i].children) {
        next.push_back(c);
        next_parent.push_back(idx);
      }
      out.nodes.push_back(std::move(done[i]));
    }
    level = std::move(next);
    level_parent = std::move(next_parent);
  }
  out.grid_family.n = out.family.n = n;
  out.grid_family.eta = 0.5;
  out.family.eta = 1.0 / 6.0;
  for (const auto& node : out.nodes) {
    const GridInterval q = realize(node.Q, n);
    std::vector<char> taken(q.length, 0);
    for (const auto& c : node.children) {
      const GridInterval ci = realize(c, n);
      const std::size_t off = (ci.start + n - q.start) % n;
      for (std::size_t u = 0; u < ci.length; ++u) taken[off + u] = 1;
    }
    std::vector<std::size_t> witness;
    for (std::size_t u = 0; u < q.length; ++u)
      if (!taken[u]) witness.push_back((q.start + u) % n);
    std::sort(witness.begin(), witness.end());
    out.grid_family.members.push_back({q, witness});
    out.family.members.push_back({triple(q, n), std::move(witness)});
  }
  return out;
}

struct SparseCertificate {
  bool ok = true;
  std::string reason;
  long first = -1;
  long second = -1;
};

/// Exact check of eta|I| <= |E_I|, E_I in I and pairwise disjointness.
inline SparseCertificate verify_sparse(const SparseFamily& S, double eta) {
  SparseCertificate cert;
  const std::size_t n = S.n;
  std::vector<long> owner(n, -1);
  for (std::size_t i = 0; i < S.members.size(); ++i) {
    const auto& m = S.members[i];
    if (m.interval.start >= n || m.interval.length < 1 || m.interval.length > n) {
      cert = {false, "interval out of range", static_cast<long>(i), -1};
      return cert;
    }
    std::vector<std::size_t> w = m.witness;
    std::sort(w.begin(), w.end());
    if (std::adjacent_find(w.begin(), w.end()) != w.end()) {
      cert = {false, "witness repeats a sample", static_cast<long>(i), -1};
      return cert;
    }
    if (static_cast<double>(w.size()) < eta * static_cast<double>(m.interval.length)) {
      cert = {false, "witness too small", static_cast<long>(i), -1};
      return cert;
    }
    for (std::size_t x : w) {
      if (x >= n || !contains(m.interval, x, n)) {
        cert = {false, "witness leaves its interval", static_cast<long>(i), -1};
        return cert;
      }
      if (owner[x] >= 0) {
        cert = {false, "witnesses overlap", owner[x], static_cast<long>(i)};
        return cert;
      }
      owner[x] = static_cast<long>(i);
    }
  }
  return cert;
}

/// sum_I |I| <f>_{q,I} <g>_{1,I}; q = 2 is the dominating form.
inline double sparse_form(const SparseFamily& S, const Signal& f, const Signal& g_abs, double q = 2.0) {
  require_same_grid(f, g_abs);
  std::vector<double> terms(S.members.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& I = S.members[i].interval;
    terms[i] = measure(I, f) * local_average(f, q, I) * local_average(g_abs, 1.0, I);
  }
  return pairwise_sum(terms);
}

struct BestSparse {
  int grid_id = 0;
  SparseBuild build;
  double form = 0.0;
};

/// The three grid constructions; keeps the one with the largest sparse form.
inline BestSparse build_sparse_best(const Signal& f, const Signal& g_abs, double q = 2.0) {
  BestSparse best;
  best.form = -1.0;
  for (int j = 0; j < 3; ++j) {
    auto b = build_sparse(f, g_abs, j);
    const double v = sparse_form(b.family, f, g_abs, q);
    if (v > best.form) best = {j, std::move(b), v};
  }
  return best;
}

inline void write_sparse(std::ostream& os, const SparseFamily& S) {
  os << "# N " << S.n << " eta " << S.eta << '\n';
  for (const auto& m : S.members) {
    os << m.interval.start << ' ' << m.interval.length << " |";
    for (std::size_t x : m.witness) os << ' ' << x;
    os << '\n';
  }
}

inline SparseFamily read_sparse(std::istream& is) {
  SparseFamily S;
  S.n = 0;
  std::string line;
  std::size_t max_index = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      while (hs >> key) {
        if (key == "N") hs >> S.n;
        else if (key == "eta") hs >> S.eta;
      }
      continue;
    }
    const auto bar = line.find('|');
    if (bar == std::string::npos) throw std::runtime_error("sparse file: missing '|' in '" + line + "'");
    std::istringstream head(line.substr(0, bar)), tail(line.substr(bar + 1));
    SparseMember m;
    if (!(head >> m.interval.start >> m.interval.length))
      throw std::runtime_error("sparse file: bad interval in '" + line + "'");
    std::size_t x;
    while (tail >> x) {
      m.witness.push_back(x);
      max_index = std::max(max_index, x);
    }
    max_index = std::max(max_index, m.interval.start + 1);
    S.members.push_back(std::move(m));
  }
  if (S.n == 0) {
    S.n = 16;
    while (S.n <= max_index) S.n *= 2;
  }
  return S;
}

}  // namespace rlplab
