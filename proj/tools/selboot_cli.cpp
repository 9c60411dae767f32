// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
//
// selboot <command> [options]
//
// Options may also come from a TOML file given with --config. Top-level keys
// set the shared options, a [command] table sets that command's options.
// Flags on the command line win over the file, the file wins over defaults,
// and unknown keys are an error.
#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "selboot/bootstrap.hpp"
#include "selboot/region_oracle.hpp"
#include "selboot/simd.hpp"

using namespace selboot::cli;

namespace {

void add_oracle_options(CLI::App* c, OracleArgs& o) {
  c->add_option("--inner-order", o.inner_order, "Legendre nodes per piece for inner expectations")
      ->capture_default_str();
  c->add_option("--outer-order", o.outer_order, "Legendre nodes per piece for outer integrals")->capture_default_str();
  c->add_option("--sdbp-order", o.sdbp_order, "Legendre nodes per piece inside the double bootstrap")
      ->capture_default_str();
  c->add_option("--bisect-tol", o.bisect_tol, "threshold root tolerance")->capture_default_str();
  c->add_option("--u-window", o.u_window, "half-width of the outer integration window (sd units)")
      ->capture_default_str();
  c->add_option("--stencil-step", o.stencil_step, "sigma2 spacing of the local 5-point fit")->capture_default_str();
  c->add_option("--sdbp-sigma2", o.sdbp_sigma2, "scale of the first double-bootstrap step")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selboot: multiscale bootstrap p-values and selective inference for the problem of regions"};
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "TOML config file (flags override it)");
  app.require_subcommand(1);
  app.fallthrough();

  Shared sh;
  app.add_option("--seed", sh.seed, "random seed")->capture_default_str();
  app.add_option("--threads", sh.threads, "worker threads (results do not depend on it)")
      ->capture_default_str()
      ->check(CLI::Range(1, 4096));
  app.add_option("--format", sh.format, "output format")->capture_default_str()->check(CLI::IsMember({"tsv", "json"}));
  app.add_option("-o,--output", sh.output, "output file (default: standard output)");
  app.add_flag("-q,--quiet", sh.quiet, "no progress messages");
  app.add_flag_callback(
      "--simd-info",
      [] {
        std::cout << "simd: " << selboot::simd::isa_name(selboot::simd::active_isa()) << '\n';
        throw CLI::Success();
      },
      "print the selected vector kernels and exit");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit scaling models to count data and report p-values");
  fit->add_option("counts", fa.counts, "count table (TSV: sigma2 nprime B C), '-' for stdin")->capture_default_str();
  fit->add_option("--name", fa.name, "label for the report row (default: file stem)");
  fit->add_flag("--complement", fa.complement, "input counts are for S; fit H = complement");
  fit->add_option("-k", fa.k, "Taylor terms for procedure B")->capture_default_str()->check(CLI::Range(1, 5));
  fit->add_option("--procedure", fa.procedure, "A or B")->capture_default_str()->check(CLI::IsMember({"A", "B"}));
  fit->add_option("--tau2-minus1", fa.tau2_minus1, "expansion point for the sigma2=-1 extrapolation")
      ->capture_default_str();
  fit->add_option("--tau2-zero", fa.tau2_zero, "expansion point for the sigma2=0 extrapolation")
      ->capture_default_str();
  fit->add_option("--models", fa.models, "candidate models")->delimiter(',')->capture_default_str();

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "exact selective rejection tables for 2-D regions");
  sim->add_option("--region", sa.region,
                  "concave-smooth, concave-nonsmooth, convex-smooth, convex-nonsmooth or halfspace")
      ->capture_default_str();
  sim->add_option("--sign", sa.sign, "custom curve region: sign of h (+1 or -1)")->check(CLI::IsMember({-1, 1}));
  sim->add_option("--a", sa.a, "custom curve region: h(u) = sign*sqrt(a + u^2/3)")->capture_default_str();
  sim->add_option("--methods", sa.methods, "p-values: bp auK 2bp 2auK siK sdbp etsi")->delimiter(',');
  sim->add_option("--alpha", sa.alpha, "significance level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sim->add_option("--thetas", sa.thetas, "boundary points shown")->delimiter(',')->capture_default_str();
  sim->add_flag("--no-bias", sa.no_bias, "skip the average absolute bias column");
  sim->add_flag("--contours", sa.contours, "emit level-alpha threshold curves instead of the table");
  sim->add_option("--u", sa.u, "u values for --contours (default -4..4 step 0.1)")->delimiter(',');
  add_oracle_options(sim, sa.oracle);

  SphereArgs spa;
  auto* sph = app.add_subcommand("sphere", "selective rejection for spherical regions by dimension");
  sph->add_option("--gammas", spa.gammas, "values of -gamma = m/(2 theta)")->delimiter(',')->capture_default_str();
  sph->add_option("--dims", spa.dims, "dimensions m+1")->delimiter(',')->capture_default_str();
  sph->add_option("--methods", spa.methods, "p-values")->delimiter(',')->capture_default_str();
  sph->add_option("--alpha", spa.alpha, "significance level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  add_oracle_options(sph, spa.oracle);

  PvclustArgs pa;
  auto* pvc = app.add_subcommand("pvclust", "hierarchical clustering with multiscale bootstrap p-values");
  pvc->add_option("data", pa.data, "CSV: header of item labels, one row per sampling unit")->required();
  pvc->add_option("--delimiter", pa.delimiter, "field separator")->capture_default_str();
  pvc->add_option("--metric", pa.metric, "euclid or correlation")->capture_default_str();
  pvc->add_option("-B,--replicates", pa.B, "replicates per scale")->capture_default_str()->check(CLI::PositiveNumber);
  pvc->add_option("-k", pa.k, "Taylor terms")->capture_default_str()->check(CLI::Range(1, 5));
  pvc->add_option("--models", pa.models, "candidate models")->delimiter(',')->capture_default_str();
  pvc->add_option("--nprime", pa.nprime, "replicate sizes (default: 13 scales from n/9 to 9n)")->delimiter(',');
  pvc->add_flag("--skip-failures", pa.skip_failures, "drop replicates whose clustering fails and report them");
  pvc->add_option("--newick", pa.newick, "also write the annotated dendrogram to this file");

  MixtureArgs ma;
  auto* mix = app.add_subcommand("mixture-sim", "selective rejection rates on simulated 3-item mixtures");
  mix->add_option("--a", ma.a, "mixture parameter(s)")->delimiter(',')->capture_default_str();
  mix->add_option("-n", ma.n, "rows per dataset")->capture_default_str();
  mix->add_option("--datasets", ma.datasets, "simulated datasets")->capture_default_str()->check(CLI::PositiveNumber);
  mix->add_option("-B,--replicates", ma.B, "replicates per scale")->capture_default_str()->check(CLI::PositiveNumber);
  mix->add_option("--alpha", ma.alpha, "significance level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  mix->add_option("-k", ma.k, "Taylor terms")->capture_default_str()->check(CLI::Range(1, 5));
  mix->add_option("--metric", ma.metric, "euclid or correlation")->capture_default_str();
  mix->add_flag("--emit-data", ma.emit_data, "write one simulated dataset (first --a) as CSV and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*fit) return run_fit(sh, fa);
    if (*sim) return run_simulate(sh, sa);
    if (*sph) return run_sphere(sh, spa);
    if (*pvc) return run_pvclust(sh, pa);
    if (*mix) return run_mixture(sh, ma);
  } catch (const selboot::DiagnosticError& e) {
    std::cerr << "selboot: " << e.what() << "\ndiagnostic grid: " << e.grid().dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "selboot: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
