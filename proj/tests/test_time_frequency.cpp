#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "rlplab/time_frequency.hpp"

using namespace rlplab;

namespace {

struct Bench {
  IntervalFamily fam;
  TileCollection P;
  explicit Bench(const std::string& spec, std::size_t n) : fam(parse_family(spec, n)), P(tiles_for_family(fam)) {}
};

// Tree members by scanning every tile against the definition.
std::vector<std::size_t> members_by_scan(const TileCollection& P, const TreeShape& s) {
  const auto& r = P.refs()[s.ref];
  const DyadicInterval top{0, r.time_scale, static_cast<long>(s.position)};
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const auto R = P.reference_tile(i);
    const bool same = R.freq == r.ref && R.time == top;
    const bool finer = R.freq.length() > r.ref.length() && dilate(R.freq, 3).contains(r.ref) &&
                       dyadic_contains(top, R.time);
    if (same || finer) out.push_back(i);
  }
  return out;
}

double direct_energy_size(const TileCollection& P, const std::vector<cplx>& af, const std::vector<std::size_t>& m,
                          const TreeShape& s) {
  double e = 0.0;
  for (std::size_t i : m) e += P.time_measure(P.classes()[P.class_of(i)]) * std::norm(af[i]);
  return std::sqrt(e / shape_top_measure(P, s));
}

void check_partition_and_caps(const Decomposition& D, const TileMask& mask, std::size_t size,
                              const std::function<double(const TileMask&)>& size_of) {
  TileMask seen(size, 0);
  TileMask rest = mask;
  for (const auto& L : D.levels) {
    for (std::size_t i = 0; i < size; ++i) {
      if (!L.tiles[i]) continue;
      ASSERT_TRUE(mask[i]);
      ASSERT_FALSE(seen[i]);
      seen[i] = 1;
      rest[i] = 0;
    }
    std::vector<char> in_trees(size, 0);
    for (const auto& T : L.trees) {
      EXPECT_LE(T.size, L.cap * (1 + 1e-12));
      for (std::size_t i : T.tiles) {
        ASSERT_FALSE(in_trees[i]);
        in_trees[i] = 1;
      }
    }
    for (std::size_t i = 0; i < size; ++i) ASSERT_EQ(in_trees[i], L.tiles[i]);
    if (L.n < kMaxDecompositionLevels) {
      EXPECT_LE(size_of(rest), std::ldexp(D.lambda, -L.n - 1) * (1 + 1e-12)) << L.n;
    }
  }
  EXPECT_EQ(seen, mask);
}

}  // namespace

TEST(Shapes, MembersMatchDefinition) {
  for (const char* spec : {"lacunary:2", "congruent:2:1,2,2,4,4", "blocks:8", "dyadic"}) {
    Bench S(spec, 128);
    for (const auto& s : ordered_shapes(S.P)) {
      const auto m = tree_members(S.P, s, S.P.all());
      ASSERT_EQ(m, members_by_scan(S.P, s)) << spec;
      const double xi = shape_xi(S.P, s);
      const Tile top = shape_top(S.P, s);
      for (std::size_t i : m) {
        const auto R = S.P.reference_tile(i);
        const auto seven = dilate(R.freq, 7);
        EXPECT_TRUE(seven.a <= xi && xi <= seven.b);
        EXPECT_TRUE(R.time == top.time || tile_order(R, top) == TileOrder::less);
      }
    }
  }
}

TEST(Shapes, VectorialTreeBranches) {
  Bench S("lacunary:2", 128);
  const auto shapes = ordered_shapes(S.P);
  const auto T = vectorial_tree(S.P, shapes[3], S.P.all());
  ASSERT_EQ(T.branches.size(), S.fam.size());
  for (std::size_t k = 0; k < T.branches.size(); ++k) {
    EXPECT_EQ(T.branches[k].xi, T.base.xi + double(S.P.nu()[k]));
    for (const auto& P : T.branches[k].members) {
      EXPECT_EQ(P.family_index, int(k) + 1);
      EXPECT_TRUE(S.fam[k].contains(P.freq));
    }
  }
}

TEST(VectorialSize, ZeroSignal) {
  Bench S("lacunary:2", 256);
  EXPECT_EQ(vectorial_size(S.P, Signal::zeros(256)), 0.0);
}

TEST(VectorialSize, MatchesDirectMaximum) {
  Bench S("congruent:2:1,2,2,4,4", 128);
  const auto af = coefficients(S.P, random_signal(128, 3), {});
  double best = 0.0;
  for (const auto& s : ordered_shapes(S.P))
    best = std::max(best, direct_energy_size(S.P, af, members_by_scan(S.P, s), s));
  EXPECT_NEAR(vectorial_size(S.P, af, S.P.all()), best, 1e-12 * best);
}

TEST(VectorialSize, MonotoneUnderRemoval) {
  Bench S("lacunary:2", 256);
  const auto af = coefficients(S.P, random_signal(256, 4), {});
  auto mask = S.P.all();
  double prev = vectorial_size(S.P, af, mask);
  for (std::size_t i = 0; i < mask.size(); i += 3) {
    mask[i] = 0;
    const double v = vectorial_size(S.P, af, mask);
    ASSERT_LE(v, prev);
    prev = v;
  }
}

TEST(VectorialSize, LocalizedL2Domination) {
  // size <= C sup_P ((1/|I_P|) int |f|^2 chi~^M_{I_P})^{1/2} with C stable in N
  double c[2] = {0, 0};
  int idx = 0;
  for (std::size_t n : {256, 1024}) {
    Bench S("lacunary:2", n);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto f = random_signal(n, s);
      const double r = vectorial_size(S.P, f) / localized_l2_sup(S.P, f, S.P.all(), 10);
      c[idx] = std::max(c[idx], r);
    }
    ++idx;
  }
  EXPECT_LE(c[1], 1.5 * c[0]);
  EXPECT_GE(c[1], 0.5 * c[0]);
}

TEST(DualSize, Zero) {
  Bench S("lacunary:2", 128);
  EXPECT_EQ(dual_size(S.P, Signal::zeros(128)), 0.0);
}

TEST(DualSize, ConstantClosedForm) {
  const std::size_t n = 256;
  const double c = 1.7;
  const int M = 10;
  Bench S("lacunary:2", n);
  std::set<int> scales;
  for (const auto& cl : S.P.classes()) scales.insert(cl.time_scale);
  double expect = 0.0;
  for (int s = *scales.begin(); s <= log2_exact(n); ++s) {
    const std::size_t len = std::size_t{1} << s;
    double v;
    if (3 * len >= n) {
      v = c;
    } else {
      // chi~ over a block of 3 len samples: 1 inside, (1 + d/(3 len))^{-M} at distance d on each side
      double sum = 3.0 * double(len);
      const std::size_t outside = n - 3 * len;
      for (std::size_t u = 1; u <= outside; ++u) {
        const std::size_t d = std::min(u, outside + 1 - u);
        sum += std::pow(1.0 + double(d) / double(3 * len), -M);
      }
      v = c * sum / double(3 * len);
    }
    expect = std::max(expect, v);
  }
  const double got = dual_size(S.P, Signal::constant(n, c));
  EXPECT_NEAR(got, expect, 1e-12 * expect);
  EXPECT_GE(got, c);
}

TEST(DualSize, MonotoneInG) {
  Bench S("lacunary:2", 256);
  const auto g = random_nonnegative(256, 2);
  std::vector<double> h(256);
  for (std::size_t i = 0; i < 256; ++i) h[i] = g[i].real() * (i % 3 == 0 ? 1.5 : 1.0);
  EXPECT_LE(dual_size(S.P, g), dual_size(S.P, Signal::from_real(h)));
}

TEST(EnergyDecomposition, ZeroSignal) {
  Bench S("lacunary:2", 128);
  const auto af = coefficients(S.P, Signal::zeros(128), {});
  const auto D = energy_decomposition(S.P, af, S.P.all(), 1.0);
  ASSERT_EQ(D.levels.size(), 1u);
  EXPECT_TRUE(D.levels[0].trees.empty());
}

TEST(EnergyDecomposition, PrecondViolation) {
  Bench S("lacunary:2", 128);
  const auto af = coefficients(S.P, random_signal(128, 1), {});
  EXPECT_THROW(energy_decomposition(S.P, af, S.P.all(), 0.5 * vectorial_size(S.P, af, S.P.all())),
               std::invalid_argument);
}

TEST(EnergyDecomposition, PartitionAndCaps) {
  for (const char* spec : {"lacunary:2", "congruent:2:1,2,2,4,4,8"}) {
    Bench S(spec, 256);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto af = coefficients(S.P, random_signal(256, s), {});
      const double lam = vectorial_size(S.P, af, S.P.all()) * (s % 2 ? 1.0 : 3.0);
      const auto D = energy_decomposition(S.P, af, S.P.all(), lam);
      check_partition_and_caps(D, S.P.all(), S.P.size(),
                               [&](const TileMask& m) { return vectorial_size(S.P, af, m); });
    }
  }
}

TEST(EnergyDecomposition, PackingStableAcrossN) {
  double worst[2] = {0, 0};
  int idx = 0;
  for (std::size_t n : {256, 1024}) {
    Bench S("lacunary:2", n);
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto f = random_signal(n, s);
      const auto af = coefficients(S.P, f, {});
      const double lam = vectorial_size(S.P, af, S.P.all());
      const double f2 = std::pow(lp_norm(f, 2.0), 2.0);
      for (const auto& L : energy_decomposition(S.P, af, S.P.all(), lam).levels)
        worst[idx] = std::max(worst[idx], L.sum_IT * lam * lam * std::ldexp(1.0, -2 * L.n) / f2);
    }
    ++idx;
  }
  RecordProperty("packing_256", std::to_string(worst[0]));
  RecordProperty("packing_1024", std::to_string(worst[1]));
  EXPECT_LE(worst[1], 1.5 * worst[0]);
  EXPECT_GE(worst[1], 0.5 * worst[0]);
}

TEST(MassDecomposition, ZeroG) {
  Bench S("lacunary:2", 128);
  const auto D = mass_decomposition(S.P, dual_averages(Signal::zeros(128), 10), S.P.all(), 1.0);
  ASSERT_EQ(D.levels.size(), 1u);
  EXPECT_TRUE(D.levels[0].trees.empty());
}

TEST(MassDecomposition, PartitionAndCaps) {
  Bench S("lacunary:2", 256);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto da = dual_averages(random_nonnegative(256, s), 10);
    const double mu = dual_size(S.P, da, S.P.all());
    const auto D = mass_decomposition(S.P, da, S.P.all(), mu);
    check_partition_and_caps(D, S.P.all(), S.P.size(), [&](const TileMask& m) { return dual_size(S.P, da, m); });
  }
}

TEST(MassDecomposition, PackingStableAcrossN) {
  double worst[2] = {0, 0};
  int idx = 0;
  for (std::size_t n : {256, 1024}) {
    Bench S("lacunary:2", n);
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto g = random_nonnegative(n, s + 99);
      const auto da = dual_averages(g, 10);
      const double mu = dual_size(S.P, da, S.P.all());
      const double g1 = lp_norm(g, 1.0);
      for (const auto& L : mass_decomposition(S.P, da, S.P.all(), mu).levels)
        worst[idx] = std::max(worst[idx], L.sum_IT * mu * std::ldexp(1.0, -L.n) / g1);
    }
    ++idx;
  }
  RecordProperty("packing_256", std::to_string(worst[0]));
  RecordProperty("packing_1024", std::to_string(worst[1]));
  EXPECT_LE(worst[1], 1.5 * worst[0]);
  EXPECT_GE(worst[1], 0.5 * worst[0]);
}

TEST(GoodTiles, Examples) {
  Bench S("lacunary:2", 128);
  const auto all = S.P.all();
  EXPECT_EQ(good_tiles(S.P, all, {}), all);
  const DyadicInterval Q{0, 5, 1};
  const auto g = good_tiles(S.P, all, {Q});
  for (std::size_t i = 0; i < S.P.size(); ++i)
    EXPECT_EQ(bool(g[i]), !dyadic_contains(Q, S.P.tile(i).time)) << i;
  const auto below = tiles_below(S.P, Q, all);
  for (std::size_t i = 0; i < S.P.size(); ++i) EXPECT_EQ(bool(below[i]), !g[i]);
}

TEST(InOut, SupportInside) {
  const std::size_t n = 256;
  Bench S("lacunary:2", n);
  const DyadicInterval Q{0, 4, 5};
  const auto I = realize(Q, n);
  const auto I3 = triple(I, n);
  std::vector<cplx> v(n);
  for (std::size_t u = 0; u < I3.length; ++u) v[(I3.start + u) % n] = cplx(1.0 + u, -0.5 * u);
  const Signal f(v);
  const auto g = random_vector_signal(S.fam, 3);
  const auto below = tiles_below(S.P, Q, S.P.all());
  EXPECT_EQ(in_out_split(S.P, below, f, g, I, Part::out, Part::in), 0.0);
  EXPECT_EQ(in_out_split(S.P, below, f, g, I, Part::out, Part::out), 0.0);
}

TEST(InOut, InInAndSuperadditivity) {
  const std::size_t n = 256;
  Bench S("lacunary:2", n);
  const DyadicInterval Q{0, 5, 2};
  const auto I = realize(Q, n);
  const auto f = random_signal(n, 8);
  const auto g = random_vector_signal(S.fam, 9);
  const auto below = tiles_below(S.P, Q, S.P.all());
  const auto I3 = triple(I, n);
  const double in_in = in_out_split(S.P, below, f, g, I, Part::in, Part::in);
  const double direct = model_form(S.P, coefficients(S.P, restrict_to(f, I3, Part::in), {}),
                                   coefficients(S.P, restrict_to(g, I3, Part::in), {}), below);
  EXPECT_EQ(in_in, direct);
  double sum = 0.0;
  for (Part a : {Part::in, Part::out})
    for (Part b : {Part::in, Part::out}) sum += in_out_split(S.P, below, f, g, I, a, b);
  const double whole = model_form(S.P, coefficients(S.P, f, {}), coefficients(S.P, g, {}), below);
  EXPECT_GE(sum * (1 + 1e-12), whole);
}

TEST(TreeEstimate, ZeroF) {
  Bench S("lacunary:2", 128);
  const auto af = coefficients(S.P, Signal::zeros(128), {});
  const auto ag = coefficients(S.P, random_vector_signal(S.fam, 1), {});
  const auto da = dual_averages(vector_norm(random_vector_signal(S.fam, 1)), 10);
  for (const auto& s : ordered_shapes(S.P)) EXPECT_EQ(tree_estimate_check(S.P, s, af, ag, da).ratio, 0.0);
}

TEST(TreeEstimate, SingleTile) {
  const std::size_t n = 256;
  Bench S("lacunary:2", n);
  const WavePacketParams params{};
  const auto f = random_signal(n, 2);
  const auto g = random_vector_signal(S.fam, 3);
  const auto af = coefficients(S.P, f, params), ag = coefficients(S.P, g, params);
  const auto da = dual_averages(vector_norm(g), params.decay_exponent);
  for (std::size_t i = 0; i < S.P.size(); i += 4) {
    TileMask m(S.P.size(), 0);
    m[i] = 1;
    const auto& c = S.P.classes()[S.P.class_of(i)];
    const auto est = tree_estimate_check(S.P, m, S.P.time_measure(c), af, ag, da);
    EXPECT_LE(est.ratio, single_tile_bound(S.P, i, params) * (1 + 1e-9)) << i;
  }
}
