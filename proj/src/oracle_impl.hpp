// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <mutex>
#include <vector>

#include "selboot/core_stats.hpp"
#include "selboot/region_oracle.hpp"

namespace selboot {

// Both tails are carried so that psi keeps full precision on either side.
struct Tails {
  double h = 0.0;  // alpha(H)
  double s = 0.0;  // alpha(S) = 1 - alpha(H)
};

// A point in oracle coordinates: (u, v) for 2-D kinds, radius in u for
// spheres.
struct Pt {
  double u = 0.0, v = 0.0;
};

struct RegionOracle::Impl {
  const RegionSpec& R;
  const OracleConfig& cfg;
  const PipelineMethod& method;
  QuadratureRule inner, outer, sdbp;
  ScaleGrid default_grid;

  // Selection probability at boundary point f, tabulated on [0, qmax].
  mutable std::once_flag q_once;
  mutable std::vector<double> qtab;
  double qstep = 0.0025, qmax = 25.0;

  // z-value of H at sdbp_sigma2, tabulated in (|u|, v - c(u)) where c is the
  // smooth boundary shape; cubic Lagrange in both directions.
  mutable std::once_flag z_once;
  mutable std::vector<double> ztab;
  double zstep = 0.05, zumax = 24.0, zdmin = -12.0, zdmax = 14.0;
  mutable std::size_t znu = 0, znd = 0;
  void build_z() const;
  double z_first(Pt p) const;
  double z_exact(Pt p) const;

  Impl(const RegionSpec& r, const OracleConfig& c, const PipelineMethod& m);

  Pt to_pt(std::span<const double> y) const;
  bool is_2d() const { return R.kind != RegionKind::SphereShell; }

  Tails tails(Pt p, double sigma2) const;
  double psi_of(Pt p, double sigma2, bool* underflow) const;

  PValueReport pipeline(Pt p, int k, const ScaleGrid* grid) const;
  double pvalue(const PValueFn& fn, Pt p) const;

  // sdbp.cpp
  void build_q() const;
  double Q(double f) const;  // P(Y* in S | boundary point at f)
  Pt project(Pt p, double* t) const;
  double p_bp1(Pt p) const;
  double p_sdbp(Pt p) const;
  double p_et_si(Pt p) const;

  double threshold(const PValueFn& fn, double alpha, double u, double warm) const;
  void check_monotone(const PValueFn& fn, double theta) const;
  double selective_rejection_2d(const PValueFn& fn, double alpha, double theta) const;
  double selective_rejection_sphere(const PValueFn& fn, double alpha) const;
  double selection_prob_at(double theta) const;
};

// Sum of f over [a,b] with a Legendre rule on [-1,1].
template <class F>
double integrate(const QuadratureRule& rule, double a, double b, F&& f) {
  if (!(b > a)) return 0.0;
  const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return s * half;
}

}  // namespace selboot
