// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

// Reduction kernels used by the resampling distance computations and the
// quadrature sums. Each has a scalar reference and vector variants; the
// variant is picked once at runtime from the CPU features.
namespace selboot::simd {

enum class Isa { Scalar, Avx2, Neon };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);

// The dispatcher honours SELBOOT_SIMD=scalar|avx2|neon at first use.
Isa active_isa();
// Overrides the dispatcher; throws std::runtime_error if unsupported here.
void set_isa(Isa isa);

// sum a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);
// sum w[i]*a[i]*b[i]
double weighted_dot(const double* w, const double* a, const double* b, std::size_t n);
// sum w[i]*(a[i]-b[i])^2
double weighted_sq_diff_sum(const double* w, const double* a, const double* b, std::size_t n);

struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*weighted_dot)(const double*, const double*, const double*, std::size_t);
  double (*weighted_sq_diff_sum)(const double*, const double*, const double*, std::size_t);
};

// Direct access to one variant, for equivalence tests and benchmarks.
// Returns nullptr members when the variant was not compiled in.
KernelTable kernels_for(Isa isa);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double weighted_dot(const double* w, const double* a, const double* b, std::size_t n);
double weighted_sq_diff_sum(const double* w, const double* a, const double* b, std::size_t n);
}  // namespace scalar

namespace avx2 {
bool compiled();
double dot(const double* a, const double* b, std::size_t n);
double weighted_dot(const double* w, const double* a, const double* b, std::size_t n);
double weighted_sq_diff_sum(const double* w, const double* a, const double* b, std::size_t n);
}  // namespace avx2

namespace neon {
bool compiled();
double dot(const double* a, const double* b, std::size_t n);
double weighted_dot(const double* w, const double* a, const double* b, std::size_t n);
double weighted_sq_diff_sum(const double* w, const double* a, const double* b, std::size_t n);
}  // namespace neon

}  // namespace selboot::simd
