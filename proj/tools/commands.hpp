// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace selboot::cli {

struct Shared {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string format = "tsv";
  std::string output;  // empty: standard output
  bool quiet = false;
};

struct FitArgs {
  std::string counts = "-";
  std::string name;
  bool complement = false;
  int k = 3;
  std::string procedure = "B";
  double tau2_minus1 = 1.0, tau2_zero = 1.0;
  std::vector<std::string> models{"poly.1", "poly.2", "poly.3", "sing.3"};
};

struct OracleArgs {
  int inner_order = 64, outer_order = 128, sdbp_order = 48;
  double bisect_tol = 1e-10, u_window = 8.0, stencil_step = 0.05, sdbp_sigma2 = 1.0;
};

struct SimulateArgs {
  std::string region = "concave-smooth";
  int sign = 0;  // nonzero: custom curve region with this sign and `a`
  double a = 1.0;
  std::vector<std::string> methods;  // empty: the table rows
  double alpha = 0.1;
  std::vector<double> thetas{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
  bool no_bias = false;
  bool contours = false;
  std::vector<double> u;
  OracleArgs oracle;
};

struct SphereArgs {
  std::vector<double> gammas{0.5, 1.0, 1.5};
  std::vector<int> dims{10, 30, 100, 300, 1000};
  std::vector<std::string> methods{"2bp", "2au2", "2au3", "si2", "si3"};
  double alpha = 0.1;
  OracleArgs oracle;
};

struct PvclustArgs {
  std::string data;
  std::string delimiter = ",";
  std::string metric = "euclid";
  long B = 10000;
  int k = 3;
  std::vector<std::string> models{"poly.1", "poly.2", "poly.3", "sing.3"};
  std::vector<long> nprime;
  bool skip_failures = false;
  std::string newick;
};

struct MixtureArgs {
  std::vector<double> a{0.0};
  long n = 1000;
  long datasets = 2000;
  long B = 1000;
  double alpha = 0.1;
  int k = 3;
  std::string metric = "euclid";
  bool emit_data = false;
};

// Each returns the process exit code.
int run_fit(const Shared& sh, const FitArgs& a);
int run_simulate(const Shared& sh, const SimulateArgs& a);
int run_sphere(const Shared& sh, const SphereArgs& a);
int run_pvclust(const Shared& sh, const PvclustArgs& a);
int run_mixture(const Shared& sh, const MixtureArgs& a);

}  // namespace selboot::cli
