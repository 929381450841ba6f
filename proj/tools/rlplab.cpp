#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rlplab/experiments.hpp"
#include "rlplab/rlplab.hpp"

using namespace rlplab;

namespace {

Signal load_signal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_signal(in);
}

// Scalar input g becomes the vector (g * check(1_{omega_k}))_k.
VectorSignal vector_from(const Signal& g, const IntervalFamily& fam) {
  Projector pg(g);
  std::vector<Signal> comps;
  for (const auto& w : fam.intervals()) comps.emplace_back(pg.project(w), g.domain_length());
  return VectorSignal(std::move(comps), fam);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& t : rlplab::detail::split(s, ','))
    if (!t.empty()) out.push_back(std::stod(t));
  return out;
}

std::string g17(double v) { return rlplab::detail::g17(v); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Square function laboratory"};
  app.require_subcommand(0, 1);
  bool list = false;
  app.add_flag("--list", list, "List experiments");

  // sqfn
  auto* sq = app.add_subcommand("sqfn", "Evaluate Tf for a family");
  std::size_t sq_n = 1024;
  std::string sq_family = "lacunary:2", sq_input, sq_output;
  std::uint64_t sq_seed = 1;
  sq->add_option("--n", sq_n, "Grid size when no input is given");
  sq->add_option("--family", sq_family, "Family spec");
  sq->add_option("--input", sq_input, "Signal file");
  sq->add_option("--seed", sq_seed, "Seed of the random input");
  sq->add_option("--output", sq_output, "Write Tf to this file");

  // sparse-build
  auto* sb = app.add_subcommand("sparse-build", "Build a sparse collection for (f, |g|)");
  std::size_t sb_n = 1024;
  std::string sb_f, sb_g, sb_out, sb_grid = "best";
  std::uint64_t sb_seed = 1;
  sb->add_option("--n", sb_n, "Grid size for random inputs");
  sb->add_option("--input-f", sb_f, "Signal file for f");
  sb->add_option("--input-g", sb_g, "Signal file for |g|");
  sb->add_option("--seed", sb_seed, "Seed for random inputs");
  sb->add_option("--grid", sb_grid, "best | 0 | 1 | 2");
  sb->add_option("--output,--out", sb_out, "Sparse collection file");

  // sparse-verify
  auto* sv = app.add_subcommand("sparse-verify", "Check a sparse collection file");
  std::string sv_in;
  double sv_eta = 1.0 / 6.0;
  sv->add_option("input,--input", sv_in, "Sparse collection file")->required();
  sv->add_option("--eta", sv_eta, "Sparseness parameter");

  // tiles
  auto* ti = app.add_subcommand("tiles", "Enumerate the tiles of a family");
  std::size_t ti_n = 256;
  std::string ti_family = "lacunary:2", ti_dump;
  ti->add_option("--n", ti_n, "Grid size");
  ti->add_option("--family", ti_family, "Family spec");
  ti->add_option("--dump", ti_dump, "Write one tile per line: k scale pos freq_a freq_b");

  // model-form
  auto* mf = app.add_subcommand("model-form", "Model form and its energy decomposition");
  std::size_t mf_n = 1024;
  std::string mf_family = "lacunary:2", mf_f, mf_g;
  std::uint64_t mf_seed = 1;
  mf->add_option("--n", mf_n, "Grid size for random inputs");
  mf->add_option("--family", mf_family, "Family spec");
  mf->add_option("--input-f", mf_f, "Signal file for f");
  mf->add_option("--input-g", mf_g, "Signal file g; g_k is its band projection on omega_k");
  mf->add_option("--seed", mf_seed, "Seed for random inputs");

  // weights
  auto* we = app.add_subcommand("weights", "Characteristics of a weight");
  std::size_t we_n = 256;
  std::string we_weight = "power:0.5";
  std::vector<double> we_p{2.0};
  bool we_report = false;
  we->add_option("--n", we_n, "Grid size");
  we->add_option("--weight", we_weight, "power:a[:base] | const:c | step:lo:hi | one | file:path");
  we->add_option("--p", we_p, "Exponents for A_p")->delimiter(',');
  we->add_flag("--report", we_report, "Print the CSV table");

  // opnorm
  auto* op = app.add_subcommand("opnorm", "Lower bound for the operator norm");
  std::size_t op_n = 1024, op_budget = 64;
  std::string op_family = "lacunary:2", op_weight = "one", op_mode = "strong";
  double op_p = 2.0;
  std::uint64_t op_seed = 1;
  op->add_option("--n", op_n, "Grid size");
  op->add_option("--family", op_family, "Family spec");
  op->add_option("--weight", op_weight, "Weight spec");
  op->add_option("--p", op_p, "Exponent");
  op->add_option("--mode", op_mode, "strong | weak")->check(CLI::IsMember({"strong", "weak"}));
  op->add_option("--budget", op_budget, "Number of candidates");
  op->add_option("--seed", op_seed, "Seed");

  // exponent-fit
  auto* ef = app.add_subcommand("exponent-fit", "Norm lower bounds against [w]_{A_{p/2}} over power weights");
  std::size_t ef_n = 1024, ef_budget = 64;
  std::string ef_family = "lacunary:2", ef_wfam = "power", ef_grid = "0.05,0.1,0.2,0.3,0.4";
  double ef_p = 3.0;
  std::uint64_t ef_seed = 1;
  ef->add_option("--n", ef_n, "Grid size");
  ef->add_option("--family", ef_family, "Family spec");
  ef->add_option("--p", ef_p, "Exponent > 2");
  ef->add_option("--weight-family", ef_wfam, "Weight family (power)")->check(CLI::IsMember({"power"}));
  ef->add_option("--a-grid", ef_grid, "Comma separated power exponents");
  ef->add_option("--budget", ef_budget, "Candidates per weight");
  ef->add_option("--seed", ef_seed, "Seed");

  // experiments
  struct ExpOpts {
    std::size_t n = 0, budget = 0;
    std::uint64_t seed = 1;
    std::string family, weight, p, out;
  };
  std::vector<std::pair<CLI::App*, ExpOpts>> exps;
  exps.reserve(experiment_list().size());
  for (const auto& e : experiment_list()) {
    exps.emplace_back(app.add_subcommand(e.name, e.anchor), ExpOpts{});
    auto& [cmd, o] = exps.back();
    cmd->add_option("--n", o.n, "Grid size");
    cmd->add_option("--seed", o.seed, "Seed");
    cmd->add_option("--family", o.family, "Family spec");
    cmd->add_option("--weight", o.weight, "Weight spec");
    cmd->add_option("--p", o.p, "Comma separated exponents");
    cmd->add_option("--budget", o.budget, "Trials");
    cmd->add_option("--out", o.out, "Output directory");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (list) {
      for (const auto& e : experiment_list()) std::printf("%-22s %s\n", e.name.c_str(), e.anchor.c_str());
      return 0;
    }
    if (*sq) {
      const Signal f = sq_input.empty() ? random_signal(sq_n, sq_seed) : load_signal(sq_input);
      const auto fam = parse_family(sq_family, f.size());
      const Signal T = square_fn(f, fam);
      std::printf("N,%zu\nintervals,%zu\noverlap_B,%d\nnorm_f,%s\nnorm_Tf,%s\n", f.size(), fam.size(),
                  fam.overlap_B(), g17(lp_norm(f, 2)).c_str(), g17(lp_norm(T, 2)).c_str());
      if (!sq_output.empty()) {
        std::ofstream out(sq_output);
        write_signal(out, T);
      }
      return 0;
    }
    if (*sb) {
      const Signal f = sb_f.empty() ? random_signal(sb_n, sb_seed) : load_signal(sb_f);
      const Signal g = sb_g.empty() ? random_nonnegative(f.size(), sb_seed + 1, f.domain_length()) : load_signal(sb_g);
      SparseBuild b;
      if (sb_grid == "best") {
        b = build_sparse_best(f, g).build;
      } else {
        b = build_sparse(f, g, std::stoi(sb_grid));
      }
      const auto cert = verify_sparse(b.family, 1.0 / 6.0);
      std::printf("grid,%d\nmembers,%zu\nsparse_form,%s\nverified,%s\n", b.grid_id, b.family.members.size(),
                  g17(sparse_form(b.family, f, g)).c_str(), cert.ok ? "yes" : cert.reason.c_str());
      if (!sb_out.empty()) {
        std::ofstream out(sb_out);
        write_sparse(out, b.family);
      }
      return cert.ok ? 0 : 1;
    }
    if (*sv) {
      std::ifstream in(sv_in);
      if (!in) throw std::runtime_error("cannot open " + sv_in);
      const auto S = read_sparse(in);
      const auto cert = verify_sparse(S, sv_eta);
      if (cert.ok) {
        std::printf("ok,%zu members\n", S.members.size());
        return 0;
      }
      std::printf("fail,%s,%ld,%ld\n", cert.reason.c_str(), cert.first, cert.second);
      return 1;
    }
    if (*ti) {
      const TileCollection P(parse_family(ti_family, ti_n));
      std::printf("tiles,%zu\nclasses,%zu\nreferences,%zu\nL,%ld\n", P.size(), P.classes().size(), P.refs().size(),
                  P.L());
      if (!ti_dump.empty()) {
        std::ofstream out(ti_dump);
        for (std::size_t i = 0; i < P.size(); ++i) {
          const Tile t = P.tile(i);
          out << t.family_index << ' ' << t.time.scale << ' ' << t.time.position << ' ' << t.freq.a << ' '
              << t.freq.b << '\n';
        }
      }
      return 0;
    }
    if (*mf) {
      const Signal f = mf_f.empty() ? random_signal(mf_n, mf_seed) : load_signal(mf_f);
      const auto fam = parse_family(mf_family, f.size());
      const Signal gs = mf_g.empty() ? random_signal(f.size(), mf_seed + 1, true, f.domain_length()) : load_signal(mf_g);
      const auto g = vector_from(gs, fam);
      const TileCollection P(fam, f.domain_length());
      const WavePacketParams params;
      const auto af = coefficients(P, f, params);
      const auto ag = coefficients(P, g, params);
      std::printf("lambda,%s\n", g17(model_form(P, af, ag, P.all())).c_str());
      const double size = vectorial_size(P, af, P.all());
      const auto dec = energy_decomposition(P, af, P.all(), size);
      std::printf("level,tree_count,sum_IT,size_cap\n");
      for (const auto& l : dec.levels)
        std::printf("%d,%zu,%s,%s\n", l.n, l.trees.size(), g17(l.sum_IT).c_str(), g17(l.cap).c_str());
      return 0;
    }
    if (*we) {
      const Weight w = parse_weight(we_weight, we_n);
      std::printf("quantity,value\n");
      std::printf("A_1,%s\n", g17(a1_characteristic(w)).c_str());
      for (double p : we_p) std::printf("A_%g,%s\n", p, g17(ap_characteristic(w, p)).c_str());
      std::printf("A_inf,%s\n", g17(ainfty_characteristic(w)).c_str());
      return 0;
    }
    if (*op) {
      const auto fam = parse_family(op_family, op_n);
      const Weight w = parse_weight(op_weight, op_n);
      const auto e = estimate_opnorm(fam, w, op_p, op_mode == "weak" ? NormMode::weak : NormMode::strong, op_budget,
                                     op_seed);
      std::printf("norm_lb,%s\nwitness,%zu\nkind,%s\n", g17(e.value).c_str(), e.witness_index,
                  e.witness_kind.c_str());
      return 0;
    }
    if (*ef) {
      const auto fam = parse_family(ef_family, ef_n);
      const double alpha = exponent_formula(ef_p, 2.0, std::numeric_limits<double>::infinity()).alpha;
      std::vector<std::pair<double, double>> samples;
      std::printf("a,ap_char,norm_lb\n");
      for (double a : parse_list(ef_grid)) {
        const Weight w = power_weight(a, 0, ef_n);
        const double ch = ap_characteristic(w, ef_p / 2.0);
        const double lb = estimate_opnorm(fam, w, ef_p, NormMode::strong, ef_budget, ef_seed).value;
        samples.emplace_back(ch, lb);
        std::printf("%s,%s,%s\n", g17(a).c_str(), g17(ch).c_str(), g17(lb).c_str());
      }
      std::printf("# predicted exponent %s\n", g17(alpha).c_str());
      if (samples.size() >= 4) {
        const auto fit = fit_exponent(samples);
        std::printf("# slope %s width %s\n", g17(fit.slope).c_str(), g17(fit.width).c_str());
      }
      return 0;
    }
    for (auto& [cmd, o] : exps) {
      if (!*cmd) continue;
      ExperimentConfig c = default_config(cmd->get_name());
      if (o.n) c.n = o.n;
      c.seed = o.seed;
      if (!o.family.empty()) c.family_spec = o.family;
      if (!o.weight.empty()) c.weight_spec = o.weight;
      if (!o.p.empty()) c.p_values = parse_list(o.p);
      if (o.budget) c.budget = o.budget;
      c.output_dir = o.out.empty() ? "out/" + c.name : o.out;
      const auto r = run_experiment(c);
      emit_report(r, c.output_dir);
      std::printf("%s %s -> %s\n", c.name.c_str(), r.passed ? "passed" : "FAILED", c.output_dir.c_str());
      for (const auto& f : r.failures) std::fprintf(stderr, "assertion failed: %s\n", f.c_str());
      return r.passed ? 0 : 1;
    }
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
