// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "selboot/bootstrap.hpp"
#include "selboot/hclust.hpp"
#include "selboot/pvalues.hpp"
#include "selboot/region_oracle.hpp"
#include "selboot/scaling_models.hpp"
#include "selboot/tables.hpp"

namespace selboot::cli {

namespace {

constexpr int kExitDegenerate = 3;

void emit(const Shared& sh, const std::string& text) {
  if (sh.output.empty() || sh.output == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(sh.output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + sh.output);
  out << text;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

Progress progress_for(const Shared& sh) {
  if (sh.quiet) return {};
  return [](const std::string& s) { std::cerr << s << '\n'; };
}

std::vector<ModelSpec> parse_models(const std::vector<std::string>& names) {
  std::vector<ModelSpec> out;
  for (const auto& n : names) out.push_back(ModelSpec::parse(n));
  if (out.empty()) throw std::invalid_argument("no candidate models given");
  return out;
}

std::vector<PValueFn> parse_methods(const std::vector<std::string>& keys) {
  std::vector<PValueFn> out;
  for (const auto& k : keys) out.push_back(PValueFn::parse(k));
  return out;
}

OracleConfig oracle_config(const Shared& sh, const OracleArgs& a) {
  OracleConfig c;
  c.inner_order = a.inner_order;
  c.outer_order = a.outer_order;
  c.sdbp_order = a.sdbp_order;
  c.bisect_tol = a.bisect_tol;
  c.u_window = a.u_window;
  c.stencil_step = a.stencil_step;
  c.sdbp_sigma2 = a.sdbp_sigma2;
  c.threads = sh.threads;
  c.validate();
  return c;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

}  // namespace

int run_fit(const Shared& sh, const FitArgs& a) {
  CountTable counts;
  std::string source = a.counts;
  if (a.counts == "-") {
    counts = read_count_tsv(std::cin, "<stdin>");
  } else {
    std::ifstream in(a.counts);
    if (!in) throw std::runtime_error("cannot open " + a.counts);
    counts = read_count_tsv(in, a.counts);
  }
  if (a.complement) counts = complement(counts);
  std::string name = a.name;
  if (name.empty()) name = a.counts == "-" ? "H" : std::filesystem::path(a.counts).stem().string();
  if (a.procedure != "A" && a.procedure != "B") throw std::invalid_argument("procedure must be A or B");
  const bool proc_b = a.procedure == "B";
  auto candidates = parse_models(a.models);

  BootstrapProb bp = p_bp(counts);
  PValueReport rep;
  ModelSelection sel;
  std::string degenerate;
  try {
    sel = select_model(counts, candidates);
    FitResult fS = negate(sel.best);
    rep = proc_b ? p_values_B(sel.best, fS, a.k, a.tau2_minus1, a.tau2_zero) : p_values_A(sel.best, fS);
    add_standard_errors(rep, sel.best, fS, proc_b, a.k, a.tau2_minus1, a.tau2_zero, true);
  } catch (const DegenerateFit& e) {
    degenerate = e.what();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.z_H = rep.z_S = rep.t_hat = rep.gamma_hat = rep.p_au = rep.p_si = nan;
    rep.model = "-";
    rep.flags.degenerate_fit = true;
  }
  rep.p_bp = bp.p;
  rep.flags.bp_boundary = bp.boundary;

  if (sh.format == "json") {
    nlohmann::json j;
    j["cluster"] = name;
    j["report"] = to_json(rep);
    j["models"] = nlohmann::json::array();
    for (const auto& f : sel.all) {
      auto fj = to_json(f);
      fj["selected"] = !degenerate.empty() ? false : f.spec == sel.best.spec;
      j["models"].push_back(fj);
    }
    j["rejected"] = sel.rejected;
    if (!degenerate.empty()) j["error"] = degenerate;
    emit(sh, dump(j));
  } else {
    std::ostringstream os;
    os << report_tsv_header() << '\n' << report_tsv_row(name, rep) << "\n\n";
    os << "model\tnpar\tloglik\taic\tconverged\tselected\n";
    for (const auto& f : sel.all)
      os << f.spec.name() << '\t' << f.spec.npar() << '\t' << fmt(f.loglik) << '\t' << fmt(f.aic) << '\t'
         << (f.converged ? "yes" : "no") << '\t' << (degenerate.empty() && f.spec == sel.best.spec ? "*" : "")
         << '\n';
    emit(sh, os.str());
  }
  if (!degenerate.empty()) {
    std::cerr << "selboot fit: degenerate: " << degenerate << "; reporting the bootstrap probability only\n";
    return kExitDegenerate;
  }
  return 0;
}

int run_simulate(const Shared& sh, const SimulateArgs& a) {
  RegionSpec region = a.sign != 0 ? RegionSpec::curve(a.sign, a.a) : RegionSpec::preset(a.region);
  OracleConfig cfg = oracle_config(sh, a.oracle);
  if (a.contours) {
    auto methods = parse_methods(a.methods.empty() ? std::vector<std::string>{"2bp", "2au3", "si2", "si3", "sdbp"}
                                                   : a.methods);
    std::vector<double> u = a.u;
    if (u.empty())
      for (int i = -40; i <= 40; ++i) u.push_back(0.1 * i);
    auto cs = run_contours(region, methods, a.alpha, u, cfg);
    emit(sh, sh.format == "json" ? dump(to_json(cs)) : to_tsv(cs));
    return 0;
  }
  auto methods = a.methods.empty() ? table_methods() : parse_methods(a.methods);
  auto t = run_region_table(region, methods, a.alpha, a.thetas, !a.no_bias, cfg, progress_for(sh));
  emit(sh, sh.format == "json" ? dump(to_json(t)) : to_tsv(t));
  return 0;
}

int run_sphere(const Shared& sh, const SphereArgs& a) {
  OracleConfig cfg = oracle_config(sh, a.oracle);
  for (double g : a.gammas)
    if (!(g > 0)) throw std::invalid_argument("-gamma values must be > 0");
  auto curves = run_sphere_curves(parse_methods(a.methods), a.gammas, a.dims, a.alpha, cfg, progress_for(sh));
  emit(sh, sh.format == "json" ? dump(to_json(curves)) : to_tsv(curves));
  return 0;
}

int run_pvclust(const Shared& sh, const PvclustArgs& a) {
  if (a.delimiter.size() != 1) throw std::invalid_argument("delimiter must be a single character");
  DatasetMatrix data;
  {
    std::ifstream in(a.data);
    if (!in) throw std::runtime_error("cannot open " + a.data);
    data = read_csv(in, a.delimiter[0], a.data);
  }
  HclustConfig hc;
  hc.metric = parse_metric(a.metric);
  hc.k = a.k;
  hc.candidates = parse_models(a.models);
  hc.threads = sh.threads;
  hc.policy = a.skip_failures ? FailurePolicy::SkipAndRecord : FailurePolicy::Error;
  ScaleGrid grid = a.nprime.empty() ? default_scale_grid(static_cast<long>(data.n))
                                    : scale_grid_from_nprime(static_cast<long>(data.n), a.nprime);
  if (!sh.quiet)
    std::cerr << "pvclust: n=" << data.n << " p=" << data.p << " scales=" << grid.size() << " B=" << a.B << '\n';
  auto res = pvclust_run(data, grid, a.B, sh.seed, hc);
  if (!a.newick.empty()) {
    std::ofstream out(a.newick);
    if (!out) throw std::runtime_error("cannot write " + a.newick);
    out << newick(res) << '\n';
  }
  emit(sh, sh.format == "json" ? dump(to_json(res)) : pvclust_tsv(res));
  return 0;
}

int run_mixture(const Shared& sh, const MixtureArgs& a) {
  if (a.n < 2) throw std::invalid_argument("n must be >= 2");
  if (a.emit_data) {
    std::ostringstream os;
    write_csv(os, mixture_sim(a.a.at(0), static_cast<std::size_t>(a.n), sh.seed));
    emit(sh, os.str());
    return 0;
  }
  MixtureSimConfig mc;
  mc.n = static_cast<std::size_t>(a.n);
  mc.datasets = a.datasets;
  mc.B = a.B;
  mc.alpha = a.alpha;
  mc.hclust.k = a.k;
  mc.hclust.metric = parse_metric(a.metric);
  std::string tsv;
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < a.a.size(); ++i) {
    mc.a = a.a[i];
    auto r = mixture_simulation(mc, sh.seed, sh.threads, progress_for(sh));
    std::string block = to_tsv(r);
    tsv += i == 0 ? block : block.substr(block.find('\n') + 1);
    arr.push_back(to_json(r));
  }
  emit(sh, sh.format == "json" ? dump(arr) : tsv);
  return 0;
}

}  // namespace selboot::cli
