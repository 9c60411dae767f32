// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selboot/bootstrap.hpp"
#include "selboot/scaling_models.hpp"

namespace selboot {

struct PValueFlags {
  bool clamped_si = false;
  bool degenerate_fit = false;
  bool negative_signed_distance = false;
  bool bp_boundary = false;  // bootstrap probability was exactly 0 or 1
  std::string str() const;   // comma separated, "-" when none
};

struct PValueReport {
  double z_H = 0.0;
  double z_S = 0.0;
  double t_hat = 0.0;      // psi of H at sigma2 = 0
  double gamma_hat = 0.0;  // t_hat - z_H, positive when curved towards H
  double p_bp = 0.0;
  double p_au = 0.0;
  double p_si = 0.0;
  std::string model;
  PValueFlags flags;
  std::optional<double> se_au, se_si;
};

nlohmann::json to_json(const PValueReport& r);
PValueReport report_from_json(const nlohmann::json& j);

// sigma * upper_inv(alpha); +-infinity at alpha = 0 or 1.
double psi(double alpha, double sigma2);

struct BootstrapProb {
  double p = 0.0;
  bool boundary = false;  // C = 0 or C = B
};

// C/B at the sigma2 = 1 row (matched within 1e-9).
BootstrapProb p_bp(const CountTable& counts);

// Shared tail of both procedures: p_au = upper(z_H),
// p_si = min(1, upper(z_H) / upper(z_H + z_S)).
PValueReport report_from_z(double z_H, double z_S, double t_hat);

// Procedure A: evaluate the fitted models directly at sigma2 = -1 and 0.
PValueReport p_values_A(const FitResult& fit_H, const FitResult& fit_S);

// Procedure B: k-term Taylor expansions around tau2 values.
PValueReport p_values_B(const FitResult& fit_H, const FitResult& fit_S, int k = 3, double sigma2_minus1 = 1.0,
                        double sigma2_zero = 1.0);

// Delta-method standard errors of p_au and p_si through the fitted
// coefficients. With `complement`, fit_S is negate(fit_H) and shares its
// covariance; otherwise the two fits are treated as independent.
void add_standard_errors(PValueReport& r, const FitResult& fit_H, const FitResult& fit_S, bool procedure_b, int k,
                         double sigma2_minus1, double sigma2_zero, bool complement);

// Bias-corrected selective p-value from resampling at the projection.
double et_si_formula(double psi1_H, double zproj_H, double psi1_S, double zproj_S);

std::string report_tsv_header();  // cluster bp au si t gamma model flags
std::string report_tsv_row(const std::string& cluster, const PValueReport& r);

}  // namespace selboot
