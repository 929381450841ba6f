#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rlplab/dyadic.hpp"

using namespace rlplab;

namespace {

// M(v 1_W): sup over every arc containing x of the mean of v restricted to W.
std::vector<double> window_oracle(const std::vector<double>& v, const GridInterval& W) {
  const std::size_t n = v.size();
  std::vector<double> local(n, 0.0);
  for (std::size_t u = 0; u < W.length; ++u) local[(W.start + u) % n] = v[(W.start + u) % n];
  return oracle::maximal(local);
}

std::vector<double> powers(const Signal& f, double p) {
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(std::abs(f[i]), p);
  return v;
}

Signal spikes(std::size_t n, std::vector<std::size_t> at, double h = 1.0) {
  std::vector<double> v(n, 0.0);
  for (auto x : at) v[x] = h;
  return Signal::from_real(v);
}

bool in_level_set(const std::vector<double>& M, const GridInterval& I, double thr, std::size_t n) {
  for (std::size_t u = 0; u < I.length; ++u)
    if (M[(I.start + u) % n] < thr) return false;
  return true;
}

}  // namespace

TEST(Grids, NestedAndDistinct) {
  const std::size_t n = 256;
  EXPECT_EQ(grid_offset(0, n), 0u);
  EXPECT_NE(grid_offset(1, n), grid_offset(2, n));
  for (int j = 0; j < 3; ++j)
    for (std::size_t x = 0; x < n; ++x) {
      const auto D = dyadic_containing(j, 3, x, n);
      EXPECT_TRUE(contains(realize(D, n), x, n));
      EXPECT_TRUE(dyadic_contains(dyadic_parent(D), D));
      EXPECT_TRUE(dyadic_contains(dyadic_root(j, n), D));
    }
  EXPECT_THROW(grid_offset(3, n), std::invalid_argument);
}

TEST(EnclosingShifted, ExhaustiveN64) {
  const std::size_t n = 64;
  std::size_t worst = 0;
  for (std::size_t len = 1; 3 * len <= n; ++len)
    for (std::size_t s = 0; s < n; ++s) {
      const GridInterval I{s, len};
      const auto E = enclosing_shifted(I, n);
      const auto D = realize(E.interval, n);
      EXPECT_TRUE(contains(D, triple(I, n), n)) << s << ' ' << len;
      EXPECT_EQ(E.type, E.interval.grid_id);
      worst = std::max(worst, (D.length + 3 * len - 1) / (3 * len));
      EXPECT_LE(D.length, 6 * 3 * len);
    }
  RecordProperty("worst_ratio", static_cast<int>(worst));
}

TEST(EnclosingShifted, AlignedTripleIsTypeZero) {
  // I = [1, 2): 3I = [0, 3) lies in [0, 4) of grid 0
  const auto E = enclosing_shifted({1, 1}, 64);
  EXPECT_EQ(E.type, 0);
  EXPECT_EQ(realize(E.interval, 64), (GridInterval{0, 4}));
}

TEST(MaximalFn, Constant) {
  const auto M = maximal_fn(Signal::constant(64, 3.0), 2.0);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(M[i].real(), 3.0, 1e-14);
}

TEST(MaximalFn, MatchesOracle) {
  for (double p : {1.0, 2.0}) {
    const auto f = random_signal(32, 7);
    const auto M = maximal_fn(f, p);
    const auto R = oracle::maximal(powers(f, p));
    for (std::size_t i = 0; i < 32; ++i) EXPECT_NEAR(M[i].real(), std::pow(R[i], 1.0 / p), 1e-12 * (1 + M[i].real()));
  }
}

TEST(MaximalFn, SingleSample) {
  const auto f = spikes(32, {5});
  const auto M = maximal_fn(f, 1.0);
  for (std::size_t i = 0; i < 32; ++i) {
    EXPECT_GE(M[i].real(), f[i].real());
    EXPECT_GE(M[i].real(), f.dx() / f.domain_length() - 1e-15);
  }
}

TEST(MaximalFn, DyadicIsComparable) {
  const auto f = random_signal(256, 3);
  const auto M = maximal_fn(f, 1.0), D = maximal_fn_dyadic(f, 1.0);
  for (std::size_t i = 0; i < 256; ++i) {
    EXPECT_LE(D[i].real(), M[i].real() * (1 + 1e-12));
    EXPECT_GE(D[i].real() * 6.0, M[i].real() * (1 - 1e-12));
  }
}

TEST(WindowMaximal, MatchesOracle) {
  const auto f = random_nonnegative(64, 4);
  const auto v = powers(f, 2.0);
  for (GridInterval W : {GridInterval{0, 64}, GridInterval{56, 24}, GridInterval{8, 12}}) {
    const auto wm = window_maximal(v, W);
    const auto R = window_oracle(v, W);
    for (std::size_t u = 0; u < W.length; ++u) {
      const std::size_t x = (W.start + u) % 64;
      EXPECT_NEAR(wm.at(x, 64), R[x], 1e-12 * (1 + R[x]));
    }
  }
}

TEST(Stopping, ConstantIsEmpty) {
  const auto f = Signal::constant(128, 2.0);
  EXPECT_TRUE(stopping_intervals(f, 2.0, dyadic_root(0, 128), 1.01).empty());
  EXPECT_TRUE(stopping_intervals(f, 1.0, {1, 4, 3}, 4.0).empty());
}

TEST(Stopping, SingleSpike) {
  const std::size_t n = 256;
  const auto Q = dyadic_root(0, n);
  const auto I = stopping_intervals(spikes(n, {77}), 2.0, Q, 16.0);
  ASSERT_EQ(I.size(), 1u);
  EXPECT_EQ(realize(I[0], n), (GridInterval{77, 1}));
  EXPECT_LE(6 * I[0].scale, static_cast<int>(n));
}

TEST(Stopping, MatchesLevelSet) {
  const std::size_t n = 128;
  const auto f = random_signal(n, 21);
  const DyadicInterval Q{2, 5, 1};
  const auto q = realize(Q, n);
  const auto W = triple(q, n);
  const double C = 1.5;
  const auto v = powers(f, 2.0);
  const auto R = window_oracle(v, W);
  double avg = 0.0;
  for (std::size_t u = 0; u < W.length; ++u) avg += v[(W.start + u) % n];
  avg /= static_cast<double>(W.length);
  const double thr = C * C * avg;
  const auto I = stopping_intervals(f, 2.0, Q, C);
  std::vector<char> covered(n, 0);
  for (const auto& D : I) {
    EXPECT_TRUE(dyadic_contains(Q, D));
    EXPECT_LT(D.scale, Q.scale);
    const auto g = realize(D, n);
    EXPECT_TRUE(in_level_set(R, g, thr, n));
    if (D.scale + 1 < Q.scale) {
      EXPECT_FALSE(in_level_set(R, realize(dyadic_parent(D), n), thr, n));
    }
    for (std::size_t u = 0; u < g.length; ++u) {
      EXPECT_FALSE(covered[(g.start + u) % n]);
      covered[(g.start + u) % n] = 1;
    }
  }
  for (std::size_t u = 0; u < q.length; ++u) {
    const std::size_t x = (q.start + u) % n;
    if (!covered[x]) {
      EXPECT_LT(R[x], thr) << x;
    }
  }
}

TEST(Merge, ZeroG) {
  const std::size_t n = 256;
  const auto f = random_signal(n, 5);
  const auto Q = dyadic_root(1, n);
  const auto m = merge_stopping(f, Signal::zeros(n), Q);
  EXPECT_EQ(m.children, stopping_intervals(f, 2.0, Q, m.C_f));
}

TEST(Merge, DisjointSpikes) {
  const std::size_t n = 256;
  const auto f = spikes(n, {40}, 5.0), g = spikes(n, {200}, 5.0);
  const auto Q = dyadic_root(0, n);
  const auto m = merge_stopping(f, g, Q);
  auto expect = stopping_intervals(f, 2.0, Q, m.C_f);
  const auto eg = stopping_intervals(g, 1.0, Q, m.C_g);
  expect.insert(expect.end(), eg.begin(), eg.end());
  std::sort(expect.begin(), expect.end(), [](auto& a, auto& b) { return (a.position << a.scale) < (b.position << b.scale); });
  EXPECT_EQ(m.children, expect);
}

TEST(Merge, PackingAndLevelSets) {
  const std::size_t n = 128;
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const auto f = random_signal(n, rng());
    const auto g = random_nonnegative(n, rng());
    const DyadicInterval Q{static_cast<int>(t % 3), 7 - t % 4, 0};
    const auto m = merge_stopping(f, g, Q);
    const auto q = realize(Q, n);
    ASSERT_LE(2 * m.packed, q.length);
    const auto W = triple(q, n);
    const auto v2 = powers(f, 2.0), v1 = powers(g, 1.0);
    const auto R2 = window_oracle(v2, W), R1 = window_oracle(v1, W);
    double a2 = 0, a1 = 0;
    for (std::size_t u = 0; u < W.length; ++u) {
      a2 += v2[(W.start + u) % n];
      a1 += v1[(W.start + u) % n];
    }
    a2 /= static_cast<double>(W.length);
    a1 /= static_cast<double>(W.length);
    const double t2 = m.C_f * m.C_f * a2, t1 = m.C_g * a1;
    for (const auto& D : m.children) {
      const auto d = realize(D, n);
      ASSERT_TRUE(dyadic_contains(Q, D) && D.scale < Q.scale);
      ASSERT_TRUE(in_level_set(R2, d, t2, n) || in_level_set(R1, d, t1, n));
      if (D.scale + 1 < Q.scale) {
        const auto p = realize(dyadic_parent(D), n);
        ASSERT_FALSE(in_level_set(R2, p, t2, n) || in_level_set(R1, p, t1, n));
      }
    }
  }
}

TEST(BuildSparse, Constants) {
  const std::size_t n = 256;
  for (int j = 0; j < 3; ++j) {
    const auto b = build_sparse(Signal::constant(n, 1.0), Signal::constant(n, 2.0), j);
    ASSERT_EQ(b.family.members.size(), 1u);
    EXPECT_EQ(b.family.members[0].interval, (GridInterval{0, n}));
    EXPECT_EQ(b.family.members[0].witness.size(), n);
  }
}

TEST(BuildSparse, TwoSpikes) {
  const std::size_t n = 512;
  const auto f = spikes(n, {100, 400}, 10.0);
  const auto b = build_sparse(f, Signal::constant(n, 1.0), 0);
  ASSERT_GE(b.nodes.size(), 3u);
  const auto& root = b.nodes[0];
  EXPECT_EQ(root.Q, dyadic_root(0, n));

  // level one re-derived from the level set of M_2 f on the whole period
  const auto v = powers(f, 2.0);
  const auto M = oracle::maximal(v);
  const double thr = root.C_f * root.C_f * oracle::arc_mean(v, 0, n);
  std::vector<DyadicInterval> expect;
  for (int s = root.Q.scale - 1; s >= 0; --s) {
    const std::size_t len = std::size_t{1} << s;
    for (std::size_t k = 0; k < n / len; ++k) {
      auto inside = [&](std::size_t st, std::size_t l) {
        for (std::size_t u = 0; u < l; ++u)
          if (M[st + u] < thr) return false;
        return true;
      };
      if (!inside(k * len, len)) continue;
      if (s + 1 < root.Q.scale && inside((k / 2) * 2 * len, 2 * len)) continue;
      expect.push_back({0, s, static_cast<long>(k)});
    }
  }
  auto key = [n](const DyadicInterval& D) { return realize(D, n).start; };
  auto got = root.children;
  std::sort(got.begin(), got.end(), [&](auto& a, auto& c) { return key(a) < key(c); });
  std::sort(expect.begin(), expect.end(), [&](auto& a, auto& c) { return key(a) < key(c); });
  EXPECT_EQ(got, expect);

  for (std::size_t spike : {100u, 400u}) {
    std::size_t covering = 0;
    for (const auto& c : root.children) covering += contains(realize(c, n), spike, n);
    EXPECT_EQ(covering, 1u) << spike;
  }
  for (const auto& c : root.children) {
    const auto g = realize(c, n);
    const std::size_t d = std::min(periodic_distance(g, 100, n), periodic_distance(g, 400, n));
    EXPECT_LE(d, n / 16);
  }
  EXPECT_TRUE(verify_sparse(b.family, 1.0 / 6.0).ok);
}

TEST(BuildSparse, RandomVerifies) {
  const std::size_t n = 256;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto f = random_signal(n, s);
    const auto g = random_nonnegative(n, s + 5000);
    const auto b = build_sparse(f, g, static_cast<int>(s % 3));
    const auto c = verify_sparse(b.family, 1.0 / 6.0);
    ASSERT_TRUE(c.ok) << c.reason;
    ASSERT_TRUE(verify_sparse(b.grid_family, 0.5).ok);
    for (const auto& node : b.nodes) ASSERT_LE(2 * node.packed, realize(node.Q, n).length);
    for (std::size_t i = 1; i < b.nodes.size(); ++i) {
      const auto& par = b.nodes[b.parent[i]];
      ASSERT_NE(std::find(par.children.begin(), par.children.end(), b.nodes[i].Q), par.children.end());
    }
  }
}

TEST(VerifySparse, DisjointTrue) {
  SparseFamily S{64, 1.0, {}};
  for (std::size_t s = 0; s < 64; s += 16) {
    std::vector<std::size_t> w;
    for (std::size_t u = 0; u < 8; ++u) w.push_back(s + u);
    S.members.push_back({{s, 8}, w});
  }
  EXPECT_TRUE(verify_sparse(S, 1.0).ok);
}

TEST(VerifySparse, NestedSharedWitnessFalse) {
  std::vector<std::size_t> w{0, 1, 2, 3};
  SparseFamily S{64, 0.5, {{{0, 8}, w}, {{0, 4}, w}}};
  const auto c = verify_sparse(S, 0.5);
  EXPECT_FALSE(c.ok);
  EXPECT_EQ(c.first, 0);
  EXPECT_EQ(c.second, 1);
}

TEST(VerifySparse, SmallWitnessFalse) {
  SparseFamily S{64, 0.5, {{{0, 8}, {0, 1, 2}}}};
  EXPECT_FALSE(verify_sparse(S, 0.5).ok);
  EXPECT_TRUE(verify_sparse(S, 0.375).ok);
}

TEST(SparseForm, Examples) {
  SparseFamily full{64, 1.0, {{{0, 64}, {}}}};
  const auto one = Signal::constant(64, 1.0, 2.5);
  EXPECT_NEAR(sparse_form(full, one, one), 2.5, 1e-14);
  EXPECT_EQ(sparse_form(full, Signal::zeros(64, 2.5), one), 0.0);
}

TEST(SparseForm, HandSum) {
  // f = 2 on [0,16), 0 elsewhere; g = 1 on [0,32), 3 elsewhere; dx = 1/64.
  std::vector<double> fv(64, 0.0), gv(64, 3.0);
  for (int i = 0; i < 16; ++i) fv[i] = 2.0;
  for (int i = 0; i < 32; ++i) gv[i] = 1.0;
  const auto f = Signal::from_real(fv), g = Signal::from_real(gv);
  SparseFamily S{64, 0.5, {{{0, 16}, {}}, {{0, 32}, {}}, {{16, 32}, {}}}};
  // [0,16): |I| = 1/4, <f>_2 = 2, <g> = 1 -> 1/2
  // [0,32): |I| = 1/2, <f>_2 = sqrt(2), <g> = 1 -> sqrt(2)/2
  // [16,48): <f>_2 = 0 -> 0
  EXPECT_NEAR(sparse_form(S, f, g), 0.5 + std::sqrt(2.0) / 2.0, 1e-14);
  // q = 1: <f>_1 on [0,32) is 1
  EXPECT_NEAR(sparse_form(S, f, g, 1.0), 0.5 + 0.5, 1e-14);
}

TEST(SparseIO, RoundTrip) {
  const auto b = build_sparse(random_signal(128, 1), random_nonnegative(128, 2), 1);
  std::stringstream ss;
  write_sparse(ss, b.family);
  const auto S = read_sparse(ss);
  EXPECT_EQ(S.n, 128u);
  ASSERT_EQ(S.members.size(), b.family.members.size());
  for (std::size_t i = 0; i < S.members.size(); ++i) {
    EXPECT_EQ(S.members[i].interval, b.family.members[i].interval);
    EXPECT_EQ(S.members[i].witness, b.family.members[i].witness);
  }
  EXPECT_TRUE(verify_sparse(S, S.eta).ok);
}
