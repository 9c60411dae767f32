// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/simd.hpp"

namespace selboot::simd::scalar {

// Four independent accumulators, combined pairwise. The vector variants use
// the same lane layout, which keeps their results close to these.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s2) + (s1 + s3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += w[i] * a[i] * b[i];
    s1 += w[i + 1] * a[i + 1] * b[i + 1];
    s2 += w[i + 2] * a[i + 2] * b[i + 2];
    s3 += w[i + 3] * a[i + 3] * b[i + 3];
  }
  double s = (s0 + s2) + (s1 + s3);
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

double weighted_sq_diff_sum(const double* w, const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    double d0 = a[i] - b[i], d1 = a[i + 1] - b[i + 1];
    double d2 = a[i + 2] - b[i + 2], d3 = a[i + 3] - b[i + 3];
    s0 += w[i] * d0 * d0;
    s1 += w[i + 1] * d1 * d1;
    s2 += w[i + 2] * d2 * d2;
    s3 += w[i + 3] * d3 * d3;
  }
  double s = (s0 + s2) + (s1 + s3);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    s += w[i] * d * d;
  }
  return s;
}

}  // namespace selboot::simd::scalar
