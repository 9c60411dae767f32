// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

namespace selboot::detail {

struct SimplexResult {
  std::vector<double> x;
  double f = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Plain Nelder-Mead minimizer. Stops when the spread of function values over
// the simplex falls below ftol (absolute) and the simplex has collapsed to
// xtol in every coordinate.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x0, const std::vector<double>& step, double ftol = 1e-8,
                                 double xtol = 1e-7, int max_iter = 4000) {
  const std::size_t d = x0.size();
  std::vector<std::vector<double>> s(d + 1, x0);
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i < d; ++i) s[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= d; ++i) fv[i] = f(s[i]);

  std::vector<std::size_t> order(d + 1);
  SimplexResult res;
  int it = 0;
  auto point = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> p(d);
    for (std::size_t j = 0; j < d; ++j) p[j] = c[j] + t * (w[j] - c[j]);
    return p;
  };
  for (; it < max_iter; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::size_t lo = order.front(), hi = order.back(), nh = order[d - 1];
    double spread = fv[hi] - fv[lo];
    double size = 0.0;
    for (std::size_t i = 0; i <= d; ++i)
      for (std::size_t j = 0; j < d; ++j) size = std::max(size, std::abs(s[i][j] - s[lo][j]));
    if (spread <= ftol && size <= xtol) {
      res.converged = true;
      break;
    }
    std::vector<double> c(d, 0.0);
    for (std::size_t i = 0; i <= d; ++i)
      if (i != hi)
        for (std::size_t j = 0; j < d; ++j) c[j] += s[i][j] / d;
    auto xr = point(c, s[hi], -1.0);
    double fr = f(xr);
    if (fr < fv[lo]) {
      auto xe = point(c, s[hi], -2.0);
      double fe = f(xe);
      if (fe < fr) {
        s[hi] = xe;
        fv[hi] = fe;
      } else {
        s[hi] = xr;
        fv[hi] = fr;
      }
    } else if (fr < fv[nh]) {
      s[hi] = xr;
      fv[hi] = fr;
    } else {
      bool outside = fr < fv[hi];
      auto xc = outside ? point(c, xr, 0.5) : point(c, s[hi], 0.5);
      double fc = f(xc);
      if (fc < (outside ? fr : fv[hi])) {
        s[hi] = xc;
        fv[hi] = fc;
      } else {
        for (std::size_t i = 0; i <= d; ++i) {
          if (i == lo) continue;
          s[i] = point(s[lo], s[i], 0.5);
          fv[i] = f(s[i]);
        }
      }
    }
  }
  std::size_t best = std::min_element(fv.begin(), fv.end()) - fv.begin();
  res.x = s[best];
  res.f = fv[best];
  res.iterations = it;
  return res;
}

}  // namespace selboot::detail
