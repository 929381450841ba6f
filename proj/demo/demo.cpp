// Walkthrough: square function, sparse bound and a weight characteristic.

#include <cstdio>

#include "rlplab/rlplab.hpp"

using namespace rlplab;

int main() {
  const std::size_t n = 1024;
  const auto fam = make_lacunary(2, n);
  const auto f = random_signal(n, 1);
  const auto g = random_vector_signal(fam, 2);

  const auto Tf = square_fn(f, fam);
  std::printf("N = %zu, %zu lacunary intervals, overlap %d\n", n, fam.size(), fam.overlap_B());
  std::printf("|f|_2 = %.6f  |Tf|_2 = %.6f\n", lp_norm(f, 2.0), lp_norm(Tf, 2.0));

  const auto ga = vector_norm(g);
  const auto best = build_sparse_best(f, ga);
  const auto& S = best.build.family;
  const auto cert = verify_sparse(S, 1.0 / 6.0);
  const double pairing = std::abs(dual_pairing(f, g));
  const double form = best.form;
  std::printf("sparse collection: %zu intervals, valid %s\n", S.members.size(), cert.ok ? "yes" : "no");
  std::printf("|<Tf, g>| = %.6f  sparse form = %.6f  ratio = %.4f\n", pairing, form, pairing / form);

  const auto P = tiles_for_family(fam);
  const auto af = coefficients(P, f, {});
  const auto ag = coefficients(P, g, {});
  std::printf("tiles: %zu  model form = %.6f\n", P.size(), std::abs(model_form(P, af, ag, P.all())));

  for (double a : {0.1, 0.2, 0.4}) {
    const auto w = power_weight(a, n / 2, n);
    std::printf("power weight a = %.1f: [w]_A1.5 = %.4f  [w]_A1 = %.4f\n", a, ap_characteristic(w, 1.5),
                a1_characteristic(w));
  }
  return 0;
}
