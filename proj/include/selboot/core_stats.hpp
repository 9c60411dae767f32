// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace selboot {

// Upper tail of N(0,1), computed from erfc so the far tail keeps full
// relative precision.
double normal_upper(double x);
double normal_lower(double x);
double normal_pdf(double x);
double log_normal_upper(double x);

// Inverse of normal_upper. Throws std::domain_error outside (0,1).
double normal_upper_inv(double p);

// P(chi'^2(df, lambda) <= x) and its complement, Poisson mixture summed
// outwards from the modal term.
double noncentral_chisq_cdf(double x, double df, double lambda);
double noncentral_chisq_sf(double x, double df, double lambda);

enum class QuadratureKind { GaussHermiteProbabilist, GaussLegendre };

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  QuadratureKind kind = QuadratureKind::GaussLegendre;
};

// Gauss-Legendre is on [-1,1]; Gauss-Hermite weights are normalized against
// the standard normal density (they sum to one).
QuadratureRule make_quadrature(QuadratureKind kind, int order);
QuadratureRule make_quadrature(const std::string& kind, int order);

// Legendre rule mapped affinely onto [a,b].
QuadratureRule map_legendre(const QuadratureRule& rule, double a, double b);

}  // namespace selboot
