// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/core_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace selboot {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Acklam's rational approximation of the lower-tail quantile, p <= 0.5.
double acklam_lower(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  if (p < 0.02425) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_upper(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double normal_lower(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double log_normal_upper(double x) {
  if (x < 30.0) return std::log(normal_upper(x));
  // Asymptotic series; erfc underflows long before this matters.
  double x2 = x * x;
  double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double normal_upper_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_upper_inv: p must lie in (0,1)");
  if (p > 0.5) return -normal_upper_inv(1.0 - p);  // 1-p is exact here
  double x = -acklam_lower(p);
  for (int it = 0; it < 3; ++it) {
    double e = normal_upper(x) - p;
    double pdf = normal_pdf(x);
    if (pdf == 0.0) break;
    double u = e / pdf;
    // Halley step for f(x) = upper(x) - p
    x += u / (1.0 - 0.5 * x * u);
  }
  return x;
}

namespace {

// Boost sums the Poisson mixture from the term that dominates the requested
// tail, so deep upper tails keep their relative accuracy.
double nc_chisq(double x, double df, double lambda, bool upper) {
  if (x <= 0.0) return upper ? 1.0 : 0.0;
  if (lambda <= 0.0) {
    return upper ? boost::math::gamma_q(0.5 * df, 0.5 * x) : boost::math::gamma_p(0.5 * df, 0.5 * x);
  }
  boost::math::non_central_chi_squared nc(df, lambda);
  return upper ? boost::math::cdf(boost::math::complement(nc, x)) : boost::math::cdf(nc, x);
}

}  // namespace

double noncentral_chisq_cdf(double x, double df, double lambda) {
  return nc_chisq(x, df, lambda, false);
}

double noncentral_chisq_sf(double x, double df, double lambda) {
  return nc_chisq(x, df, lambda, true);
}

namespace {

QuadratureRule legendre(int n) {
  QuadratureRule r;
  r.kind = QuadratureKind::GaussLegendre;
  r.nodes.resize(n);
  r.weights.resize(n);
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

// Physicists' Hermite roots by Newton on the orthonormal recurrence, then
// rescaled to the probabilists' weight.
QuadratureRule hermite(int n) {
  std::vector<double> x(n), w(n);
  const double pim4 = 0.7511255444649425;  // pi^(-1/4)
  int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(double(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  QuadratureRule r;
  r.kind = QuadratureKind::GaussHermiteProbabilist;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // reverse so nodes increase
    r.nodes[i] = std::sqrt(2.0) * x[n - 1 - i];
    r.weights[i] = w[n - 1 - i] / std::sqrt(std::numbers::pi);
  }
  return r;
}

}  // namespace

QuadratureRule make_quadrature(QuadratureKind kind, int order) {
  if (order < 2) throw std::invalid_argument("make_quadrature: order must be >= 2");
  switch (kind) {
    case QuadratureKind::GaussLegendre: return legendre(order);
    case QuadratureKind::GaussHermiteProbabilist: return hermite(order);
  }
  throw std::invalid_argument("make_quadrature: unsupported kind");
}

QuadratureRule make_quadrature(const std::string& kind, int order) {
  if (kind == "gauss-legendre") return make_quadrature(QuadratureKind::GaussLegendre, order);
  if (kind == "gauss-hermite" || kind == "gauss-hermite-probabilist")
    return make_quadrature(QuadratureKind::GaussHermiteProbabilist, order);
  throw std::invalid_argument("make_quadrature: unsupported kind '" + kind + "'");
}

QuadratureRule map_legendre(const QuadratureRule& rule, double a, double b) {
  QuadratureRule out;
  out.kind = QuadratureKind::GaussLegendre;
  out.nodes.resize(rule.nodes.size());
  out.weights.resize(rule.nodes.size());
  double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    out.nodes[i] = mid + half * rule.nodes[i];
    out.weights[i] = half * rule.weights[i];
  }
  return out;
}

}  // namespace selboot
