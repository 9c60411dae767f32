// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/simd.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#define SELBOOT_HAVE_NEON 1
#include <arm_neon.h>
#endif

namespace selboot::simd::neon {

#ifdef SELBOOT_HAVE_NEON

bool compiled() { return true; }

// Two 2-lane accumulators give the same 4-lane layout as the scalar code:
// acc01 holds lanes (0,1), acc23 holds lanes (2,3).
double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0), acc23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc01 = vfmaq_f64(acc01, vld1q_f64(a + i), vld1q_f64(b + i));
    acc23 = vfmaq_f64(acc23, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  float64x2_t s2 = vaddq_f64(acc01, acc23);
  double s = vgetq_lane_f64(s2, 0) + vgetq_lane_f64(s2, 1);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0), acc23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc01 = vfmaq_f64(acc01, vmulq_f64(vld1q_f64(w + i), vld1q_f64(a + i)), vld1q_f64(b + i));
    acc23 = vfmaq_f64(acc23, vmulq_f64(vld1q_f64(w + i + 2), vld1q_f64(a + i + 2)), vld1q_f64(b + i + 2));
  }
  float64x2_t s2 = vaddq_f64(acc01, acc23);
  double s = vgetq_lane_f64(s2, 0) + vgetq_lane_f64(s2, 1);
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

double weighted_sq_diff_sum(const double* w, const double* a, const double* b, std::size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0), acc23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float64x2_t d01 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    float64x2_t d23 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    acc01 = vfmaq_f64(acc01, vmulq_f64(vld1q_f64(w + i), d01), d01);
    acc23 = vfmaq_f64(acc23, vmulq_f64(vld1q_f64(w + i + 2), d23), d23);
  }
  float64x2_t s2 = vaddq_f64(acc01, acc23);
  double s = vgetq_lane_f64(s2, 0) + vgetq_lane_f64(s2, 1);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    s += w[i] * d * d;
  }
  return s;
}

#else

bool compiled() { return false; }
double dot(const double*, const double*, std::size_t) { return 0.0; }
double weighted_dot(const double*, const double*, const double*, std::size_t) { return 0.0; }
double weighted_sq_diff_sum(const double*, const double*, const double*, std::size_t) { return 0.0; }

#endif

}  // namespace selboot::simd::neon
