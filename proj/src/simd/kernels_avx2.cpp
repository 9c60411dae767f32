// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/simd.hpp"

#if defined(__x86_64__) || defined(__i386__)
#define SELBOOT_HAVE_AVX2 1
#include <immintrin.h>
#endif

namespace selboot::simd::avx2 {

#ifdef SELBOOT_HAVE_AVX2

bool compiled() { return true; }

namespace {

__attribute__((target("avx2,fma"))) inline double hsum(__m256d v) {
  // lanes (0,1,2,3) -> (0+2) + (1+3), matching the scalar combination order
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

}  // namespace

__attribute__((target("avx2,fma"))) double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

__attribute__((target("avx2,fma"))) double weighted_dot(const double* w, const double* a, const double* b,
                                                        std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    acc = _mm256_fmadd_pd(wa, _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

__attribute__((target("avx2,fma"))) double weighted_sq_diff_sum(const double* w, const double* a,
                                                                const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    __m256d wd = _mm256_mul_pd(_mm256_loadu_pd(w + i), d);
    acc = _mm256_fmadd_pd(wd, d, acc);
  }
  double s = hsum(acc);
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

}  // namespace selboot::simd::avx2
