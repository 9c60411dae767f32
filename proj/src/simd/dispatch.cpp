// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "selboot/simd.hpp"

namespace selboot::simd {

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(__i386__)
      return avx2::compiled() && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon: return neon::compiled();  // baseline on aarch64
  }
  return false;
}

KernelTable kernels_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return {scalar::dot, scalar::weighted_dot, scalar::weighted_sq_diff_sum};
    case Isa::Avx2:
      if (avx2::compiled()) return {avx2::dot, avx2::weighted_dot, avx2::weighted_sq_diff_sum};
      break;
    case Isa::Neon:
      if (neon::compiled()) return {neon::dot, neon::weighted_dot, neon::weighted_sq_diff_sum};
      break;
  }
  return {nullptr, nullptr, nullptr};
}

namespace {

Isa pick_default() {
  if (const char* env = std::getenv("SELBOOT_SIMD")) {
    std::string v(env);
    if (v == "scalar") return Isa::Scalar;
    if (v == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
    if (v == "neon" && isa_supported(Isa::Neon)) return Isa::Neon;
  }
  if (isa_supported(Isa::Avx2)) return Isa::Avx2;
  if (isa_supported(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

std::atomic<int>& current() {
  static std::atomic<int> isa{static_cast<int>(pick_default())};
  return isa;
}

const KernelTable& table(Isa isa) {
  static const KernelTable tables[3] = {kernels_for(Isa::Scalar), kernels_for(Isa::Avx2),
                                        kernels_for(Isa::Neon)};
  return tables[static_cast<int>(isa)];
}

}  // namespace

Isa active_isa() { return static_cast<Isa>(current().load(std::memory_order_relaxed)); }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) throw std::runtime_error(std::string("SIMD variant not available: ") + isa_name(isa));
  current().store(static_cast<int>(isa));
}

double dot(const double* a, const double* b, std::size_t n) { return table(active_isa()).dot(a, b, n); }

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
  return table(active_isa()).weighted_dot(w, a, b, n);
}

double weighted_sq_diff_sum(const double* w, const double* a, const double* b, std::size_t n) {
  return table(active_isa()).weighted_sq_diff_sum(w, a, b, n);
}

}  // namespace selboot::simd
