// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "selboot/bootstrap.hpp"
#include "selboot/pvalues.hpp"
#include "selboot/scaling_models.hpp"

namespace selboot {

enum class RegionKind { Halfspace, CurveBoundary, SphereShell };
enum class SphereOrientation { HOutside, HInside };

// Analytic hypothesis regions. The selective region is always S = H^c.
//   halfspace:       H = {v <= 0}
//   curve_boundary:  H = {v <= -h(u)}, h(u) = sign * sqrt(a + u^2/3)
//   sphere_shell:    H = {|mu| >= theta} (outside) or {|mu| <= theta} (inside)
struct RegionSpec {
  RegionKind kind = RegionKind::Halfspace;
  int sign = -1;
  double a = 1.0;
  double theta = 1.0;
  int dim = 2;
  SphereOrientation orientation = SphereOrientation::HOutside;

  static RegionSpec halfspace();
  static RegionSpec curve(int sign, double a);
  static RegionSpec sphere(double theta, int dim, SphereOrientation o);
  // concave-smooth, concave-nonsmooth, convex-smooth, convex-nonsmooth, halfspace
  static RegionSpec preset(const std::string& name);
  std::string name() const;
  void validate() const;

  int dimension() const { return kind == RegionKind::SphereShell ? dim : 2; }
  // v coordinate of the boundary above u (2-D kinds).
  double boundary_v(double u) const;
  bool contains(std::span<const double> y) const;  // y in H
  // Point of the boundary parametrized by theta: (theta, boundary_v(theta))
  // in 2-D, theta * e_1 for spheres.
  std::vector<double> boundary_point(double theta) const;
  double mean_curvature_sphere() const;  // m / (2 theta), signed, sphere only
};

struct OracleConfig {
  int inner_order = 64;    // Gauss-Legendre nodes per piece, inner expectations
  int outer_order = 128;   // Gauss-Legendre nodes per piece, outer u-integrals
  int sdbp_order = 48;     // nodes per piece, inner null-distribution integral
  double bisect_tol = 1e-10;
  double u_window = 8.0;   // half-width of the outer window, in sd units
  double stencil_step = 0.05;
  double sdbp_sigma2 = 1.0;  // scale of the first-step numerator
  bool check_monotone = true;
  int threads = 1;
  void validate() const;
};

enum class Procedure { A, B };

// How the oracle turns exact bootstrap probabilities into p-values.
// The default fits a local polynomial on a 5-point stencil around each
// expansion point, which recovers the exact psi derivatives there.
struct PipelineMethod {
  Procedure procedure = Procedure::B;
  double sigma2_minus1 = 1.0;
  double sigma2_zero = 1.0;
  bool local_stencil = true;
  std::vector<ModelSpec> candidates;  // used when local_stencil is false
  // Replicates the exact probabilities stand in for; scales the Fisher
  // weights so that AIC trades fit against parameters as it would on counts.
  double nominal_B = 10000;

  static PipelineMethod local();
  static PipelineMethod grid(std::vector<ModelSpec> candidates = default_candidates());
};

ScaleGrid local_stencil_grid(double tau2, double step);

enum class Method { BP, AU, TwoBP, TwoAU, SI, SDBP, ETSI };

struct PValueFn {
  Method method = Method::SI;
  int k = 3;
  std::string label() const;  // "SI (k=3)", "2BP", ...
  std::string key() const;    // "si3", "2bp", ...
  static PValueFn parse(const std::string& key);
};

std::vector<PValueFn> table_methods();  // the rows of the 2-D tables

class DiagnosticError : public std::runtime_error {
 public:
  DiagnosticError(const std::string& what, nlohmann::json grid);
  const nlohmann::json& grid() const { return grid_; }

 private:
  nlohmann::json grid_;
};

class RegionOracle {
 public:
  RegionOracle(RegionSpec region, OracleConfig cfg = {}, PipelineMethod method = PipelineMethod::local());
  ~RegionOracle();
  RegionOracle(RegionOracle&&) noexcept;

  const RegionSpec& region() const { return region_; }
  const OracleConfig& config() const { return cfg_; }

  // alpha_sigma2(H | y)
  double bootstrap_prob(std::span<const double> y, double sigma2) const;
  double bootstrap_prob_2d(double u, double v, double sigma2) const;
  double bootstrap_prob_radial(double r, double sigma2) const;

  // Algorithm 1 on exact probabilities over `grid` (or the local stencil).
  PValueReport pipeline(std::span<const double> y, int k, const ScaleGrid* grid = nullptr) const;

  double pvalue(const PValueFn& fn, std::span<const double> y) const;

  // Nearest boundary point and signed distance (positive outside H).
  std::vector<double> project(std::span<const double> y, double* signed_distance = nullptr) const;

  double selection_probability(std::span<const double> mu) const;
  double selective_rejection(const PValueFn& fn, double alpha, std::span<const double> mu) const;
  // theta-parametrized boundary point
  double selective_rejection_at(const PValueFn& fn, double alpha, double theta) const;
  double average_absolute_bias(const PValueFn& fn, double alpha) const;

  // Double-bootstrap and projection-corrected selective p-values.
  double p_sdbp(std::span<const double> y) const;
  double p_et_si(std::span<const double> y) const;

  // Level-alpha threshold in the signed coordinate at a given u (2-D) or the
  // radial threshold (sphere); used for contour output.
  double rejection_threshold(const PValueFn& fn, double alpha, double u) const;

 private:
  struct Impl;
  RegionSpec region_;
  OracleConfig cfg_;
  PipelineMethod method_;
  std::unique_ptr<Impl> impl_;
};

// Free-function forms of the oracle operations.
double exact_bootstrap_prob(const RegionSpec& region, std::span<const double> y, double sigma2,
                            const OracleConfig& cfg = {});
PValueReport exact_pvalue_pipeline(const RegionSpec& region, std::span<const double> y, const ScaleGrid& grid,
                                   const PipelineMethod& method, int k, const OracleConfig& cfg = {});
double selection_probability(const RegionSpec& region, std::span<const double> mu, const OracleConfig& cfg = {});
double selective_rejection_probability(const RegionSpec& region, const PValueFn& fn, double alpha,
                                       std::span<const double> mu, const OracleConfig& cfg = {});
double average_absolute_bias(const RegionSpec& region, const PValueFn& fn, double alpha,
                             const OracleConfig& cfg = {});
// Selective rejection for spheres with -gamma = m/(2 theta) fixed, per m+1.
std::vector<double> sphere_curve(const PValueFn& fn, double minus_gamma, const std::vector<int>& dims, double alpha,
                                 const OracleConfig& cfg = {});
double p_sdbp(const RegionSpec& region, std::span<const double> y, const OracleConfig& cfg = {});
double p_et_si(const RegionSpec& region, std::span<const double> y, const OracleConfig& cfg = {});

}  // namespace selboot
