// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "selboot/bootstrap.hpp"

namespace selboot {

enum class Family { Poly, Sing };

struct ModelSpec {
  Family family = Family::Poly;
  int k = 1;

  int npar() const { return k; }
  std::string name() const;
  static ModelSpec parse(const std::string& s);  // "poly.3", "sing.3"
  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

std::vector<ModelSpec> default_candidates();  // poly.1, poly.2, poly.3, sing.3

struct FitResult {
  ModelSpec spec;
  std::vector<double> beta;
  double loglik = 0.0;
  double aic = 0.0;
  bool converged = false;
  int n_informative = 0;
  std::optional<std::vector<double>> cov;  // npar x npar, row-major
};

nlohmann::json to_json(const FitResult& f);

// Fit of the complement region: psi(S) = -psi(H), which in both families is
// the same model with the non-constraint coefficients negated.
FitResult negate(const FitResult& f);

class DegenerateFit : public std::runtime_error {
 public:
  DegenerateFit(int n_informative, int npar, const std::string& model);
  int n_informative() const { return n_informative_; }
  int npar() const { return npar_; }

 private:
  int n_informative_, npar_;
};

// Throws std::domain_error for sing at sigma2 <= 0.
double eval_model(const ModelSpec& spec, std::span<const double> beta, double sigma2);

// d^j phi / d(sigma2)^j at tau2 for j = 0..order-1.
std::vector<double> model_derivatives(const ModelSpec& spec, std::span<const double> beta, double tau2, int order);

// Truncated Taylor series of phi around tau2 with k_terms terms.
double taylor_extrapolate(const ModelSpec& spec, std::span<const double> beta, int k_terms, double tau2,
                          double sigma2_target);
double taylor_from_derivatives(std::span<const double> derivs, int k_terms, double tau2, double sigma2_target);

// Binomial log-likelihood of the counts under the model.
double binomial_loglik(const CountTable& counts, const ModelSpec& spec, std::span<const double> beta);

int count_informative(const CountTable& counts);

FitResult fit_mle(const CountTable& counts, const ModelSpec& spec);

struct ModelSelection {
  FitResult best;
  std::vector<FitResult> all;          // fits that succeeded, candidate order
  std::vector<std::string> rejected;   // "sing.3: ..." for degenerate candidates
};

// Minimal AIC among converged fits; ties go to fewer parameters, then to
// candidate order. Throws DegenerateFit when no candidate can be fitted.
ModelSelection select_model(const CountTable& counts, const std::vector<ModelSpec>& candidates);

// Oracle-mode data: exact psi values with weights.
struct PsiPoint {
  double sigma2;
  double psi;
  double weight;
};

// Fisher weight of psi at probability alpha: phi(z)^2 / (sigma2 alpha (1-alpha)),
// z = psi / sigma. This is the B -> infinity limit of the binomial likelihood.
double fisher_weight(double alpha, double sigma2);

// Weighted least squares of psi on the model. loglik holds -RSS/2.
FitResult fit_wls(std::span<const PsiPoint> pts, const ModelSpec& spec);
ModelSelection select_model_wls(std::span<const PsiPoint> pts, const std::vector<ModelSpec>& candidates);

}  // namespace selboot
