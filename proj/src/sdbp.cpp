// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
//
// Double bootstrap and ET-SI on the analytic regions. Both need the nearest
// boundary point and the selection probability at boundary points, which is
// tabulated once per oracle.
#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "oracle_impl.hpp"

namespace selboot {

void RegionOracle::Impl::build_q() const {
  std::call_once(q_once, [this] {
    if (R.kind == RegionKind::CurveBoundary) {
      const std::size_t n = static_cast<std::size_t>(std::lround(qmax / qstep)) + 1;
      qtab.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        double f = static_cast<double>(i) * qstep;
        qtab[i] = tails({f, R.boundary_v(f)}, 1.0).s;
      }
    } else if (R.kind == RegionKind::Halfspace) {
      qtab = {0.5};
    } else {
      qtab = {tails({R.theta, 0.0}, 1.0).s};
    }
  });
}

double RegionOracle::Impl::Q(double f) const {
  build_q();
  if (qtab.size() == 1) return qtab[0];
  double x = std::abs(f) / qstep;  // symmetric in f
  std::size_t i = static_cast<std::size_t>(x);
  if (i + 1 >= qtab.size()) return qtab.back();
  double w = x - static_cast<double>(i);
  return (1.0 - w) * qtab[i] + w * qtab[i + 1];
}

Pt RegionOracle::Impl::project(Pt p, double* t) const {
  switch (R.kind) {
    case RegionKind::Halfspace:
      if (t) *t = p.v;
      return {p.u, 0.0};
    case RegionKind::SphereShell:
      if (t) *t = R.orientation == SphereOrientation::HOutside ? R.theta - p.u : p.u - R.theta;
      return {R.theta, 0.0};
    case RegionKind::CurveBoundary:
      break;
  }
  const double vb = R.boundary_v(p.u);
  const double r0 = std::abs(p.v - vb);
  const double sgn = p.v > vb ? 1.0 : -1.0;
  if (r0 == 0.0) {
    if (t) *t = 0.0;
    return {p.u, vb};
  }
  auto d2 = [&](double f) {
    double dv = R.boundary_v(f) - p.v, du = f - p.u;
    return du * du + dv * dv;
  };
  // The foot lies within r0 of u. Scan for the basin, then refine; the
  // vertex at f = 0 is checked on its own since it can be a kink.
  constexpr int N = 24;
  const double lo = p.u - r0, step = 2.0 * r0 / N;
  double bestf = p.u, bestd = d2(p.u);
  for (int i = 0; i <= N; ++i) {
    double f = lo + step * i, d = d2(f);
    if (d < bestd) {
      bestd = d;
      bestf = f;
    }
  }
  auto refined = boost::math::tools::brent_find_minima(d2, bestf - step, bestf + step, 40);
  if (refined.second < bestd) {
    bestf = refined.first;
    bestd = refined.second;
  }
  if (std::abs(0.0 - p.u) <= r0) {
    double d0 = d2(0.0);
    if (d0 < bestd) {
      bestd = d0;
      bestf = 0.0;
    }
  }
  if (t) *t = sgn * std::sqrt(bestd);
  return {bestf, R.boundary_v(bestf)};
}

namespace {

double shear(const RegionSpec& R, double u) {
  return R.kind == RegionKind::CurveBoundary ? -R.sign * std::sqrt(1.0 + u * u / 3.0) : 0.0;
}

// Cubic Lagrange weights for nodes -1, 0, 1, 2 at offset w in [0,1).
void lagrange4(double w, double* c) {
  c[0] = -w * (w - 1) * (w - 2) / 6.0;
  c[1] = (w + 1) * (w - 1) * (w - 2) / 2.0;
  c[2] = -(w + 1) * w * (w - 2) / 2.0;
  c[3] = (w + 1) * w * (w - 1) / 6.0;
}

}  // namespace

double RegionOracle::Impl::z_exact(Pt p) const {
  Tails t = tails(p, cfg.sdbp_sigma2);
  if (std::min(t.h, t.s) < 1e-300) return t.h < t.s ? 40.0 : -40.0;
  return t.h <= t.s ? normal_upper_inv(t.h) : -normal_upper_inv(t.s);
}

void RegionOracle::Impl::build_z() const {
  std::call_once(z_once, [this] {
    // one extra node on each side for the 4-point stencil
    znu = static_cast<std::size_t>(std::lround(zumax / zstep)) + 3;
    znd = static_cast<std::size_t>(std::lround((zdmax - zdmin) / zstep)) + 3;
    ztab.resize(znu * znd);
    for (std::size_t i = 0; i < znu; ++i) {
      double u = (static_cast<double>(i) - 1.0) * zstep;
      for (std::size_t j = 0; j < znd; ++j) {
        double d = zdmin + (static_cast<double>(j) - 1.0) * zstep;
        ztab[i * znd + j] = z_exact({u, shear(R, u) + d});
      }
    }
  });
}

double RegionOracle::Impl::z_first(Pt p) const {
  if (R.kind != RegionKind::CurveBoundary) return z_exact(p);
  build_z();
  const double au = std::abs(p.u), d = p.v - shear(R, p.u);
  double x = au / zstep + 1.0, y = (d - zdmin) / zstep + 1.0;
  double fx = std::floor(x), fy = std::floor(y);
  if (fx < 1 || fy < 1 || fx + 2 >= static_cast<double>(znu) || fy + 2 >= static_cast<double>(znd))
    return z_exact(p);
  std::size_t i = static_cast<std::size_t>(fx), j = static_cast<std::size_t>(fy);
  double cx[4], cy[4];
  lagrange4(x - fx, cx);
  lagrange4(y - fy, cy);
  double s = 0;
  for (int a = 0; a < 4; ++a) {
    const double* row = ztab.data() + (i + a - 1) * znd + (j - 1);
    s += cx[a] * (cy[0] * row[0] + cy[1] * row[1] + cy[2] * row[2] + cy[3] * row[3]);
  }
  return s;
}

double RegionOracle::Impl::p_bp1(Pt p) const {
  double t = 0;
  Pt q = project(p, &t);
  double num = cfg.sdbp_sigma2 > 0 ? normal_upper(z_first(p)) : normal_upper(t);
  return num / Q(q.u);
}

double RegionOracle::Impl::p_sdbp(Pt p) const {
  double t = 0;
  Pt q = project(p, &t);
  if (!is_2d()) {
    // p_BP,1 is monotone in the radius, so the level set is the sphere
    // through y.
    const double x = p.u * p.u, lam = R.theta * R.theta;
    double num = R.orientation == SphereOrientation::HOutside ? noncentral_chisq_cdf(x, R.dim, lam)
                                                              : noncentral_chisq_sf(x, R.dim, lam);
    return std::min(1.0, num / Q(0.0));
  }
  const double c = p_bp1(p);
  if (c <= 1e-300) return 0.0;

  // P{p_BP,1(Y*) < c} under Y* ~ N(q, I): for each x = U*, the set is
  // {V* > v*(x)} where p_BP,1(x, v*) = c.
  double warm = std::numeric_limits<double>::quiet_NaN();
  auto vstar = [&](double x) {
    const double vb = R.boundary_v(x);
    auto g = [&](double v) { return p_bp1({x, v}) - c; };
    double v0;
    if (std::isfinite(warm)) {
      v0 = vb + warm;
    } else {
      double cq = c * Q(x);
      v0 = cq < 1.0 ? vb + std::sqrt(1.0 + cfg.sdbp_sigma2) * normal_upper_inv(cq) : vb - 5.0;
    }
    double g0 = g(v0);
    double lo, hi, glo, ghi;
    double d = 0.05;
    if (g0 > 0) {
      lo = v0;
      glo = g0;
      hi = v0 + d;
      ghi = g(hi);
      for (int it = 0; ghi > 0; ++it) {
        if (it > 60) return std::numeric_limits<double>::infinity();
        lo = hi;
        glo = ghi;
        d *= 2;
        hi += d;
        ghi = g(hi);
      }
    } else {
      hi = v0;
      ghi = g0;
      lo = v0 - d;
      glo = g(lo);
      for (int it = 0; glo <= 0; ++it) {
        if (it > 60) return -std::numeric_limits<double>::infinity();
        hi = lo;
        ghi = glo;
        d *= 2;
        lo -= d;
        glo = g(lo);
      }
    }
    if (ghi == 0) return hi;
    boost::uintmax_t iters = 100;
    auto stop = [](double a, double b) { return std::abs(b - a) <= 1e-10; };
    auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, stop, iters);
    double v = 0.5 * (r.first + r.second);
    warm = v - vb;
    return v;
  };

  double num = 0;
  auto piece = [&](double a, double b) {
    if (!(b > a)) return;
    const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
    for (std::size_t i = 0; i < sdbp.nodes.size(); ++i) {
      double x = mid + half * sdbp.nodes[i];
      double vs = vstar(x);
      double tail = std::isinf(vs) ? (vs > 0 ? 0.0 : 1.0) : normal_upper(vs - q.v);
      num += sdbp.weights[i] * half * normal_pdf(x - q.u) * tail;
    }
  };
  const double a = q.u - cfg.u_window, b = q.u + cfg.u_window;
  if (R.kind == RegionKind::CurveBoundary && a < 0 && b > 0) {
    piece(a, 0.0);
    warm = std::numeric_limits<double>::quiet_NaN();
    piece(0.0, b);
  } else {
    piece(a, b);
  }
  return std::min(1.0, num / Q(q.u));
}

double RegionOracle::Impl::p_et_si(Pt p) const {
  Pt q = project(p, nullptr);
  bool under = false;
  double psi1 = psi_of(p, 1.0, &under);
  if (under) return psi1 > 0 ? 0.0 : 1.0;
  // alpha_1(H | proj) = 1 - Q
  double zproj = -normal_upper_inv(Q(q.u));
  return et_si_formula(psi1, zproj, -psi1, -zproj);
}

}  // namespace selboot
