// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/region_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/tools/toms748_solve.hpp>

#include "oracle_impl.hpp"
#include "selboot/parallel.hpp"

namespace selboot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZWindow = 9.0;     // inner normal window, in sd units
constexpr double kTinyTail = 1e-280;

}  // namespace

// ---------------------------------------------------------------- regions

RegionSpec RegionSpec::halfspace() { return RegionSpec{}; }

RegionSpec RegionSpec::curve(int sign, double a) {
  RegionSpec r;
  r.kind = RegionKind::CurveBoundary;
  r.sign = sign;
  r.a = a;
  r.validate();
  return r;
}

RegionSpec RegionSpec::sphere(double theta, int dim, SphereOrientation o) {
  RegionSpec r;
  r.kind = RegionKind::SphereShell;
  r.theta = theta;
  r.dim = dim;
  r.orientation = o;
  r.validate();
  return r;
}

RegionSpec RegionSpec::preset(const std::string& name) {
  // concave: H is the region below a convex curve, so h carries sign -1
  if (name == "concave-smooth") return curve(-1, 1.0);
  if (name == "concave-nonsmooth") return curve(-1, 0.0);
  if (name == "convex-smooth") return curve(+1, 1.0);
  if (name == "convex-nonsmooth") return curve(+1, 0.0);
  if (name == "halfspace") return halfspace();
  throw std::invalid_argument("unknown region '" + name +
                              "' (expected concave-smooth, concave-nonsmooth, convex-smooth, convex-nonsmooth, "
                              "halfspace)");
}

std::string RegionSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case RegionKind::Halfspace:
      return "halfspace";
    case RegionKind::CurveBoundary:
      os << (sign < 0 ? "concave" : "convex") << '-' << (a == 0.0 ? "nonsmooth" : "smooth");
      if (a != 0.0 && a != 1.0) os << "(a=" << a << ')';
      return os.str();
    case RegionKind::SphereShell:
      os << "sphere(theta=" << theta << ",dim=" << dim << ','
         << (orientation == SphereOrientation::HOutside ? "H-outside" : "H-inside") << ')';
      return os.str();
  }
  return "?";
}

void RegionSpec::validate() const {
  if (kind == RegionKind::CurveBoundary) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("curve region: sign must be +1 or -1");
    if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("curve region: a must be >= 0");
  }
  if (kind == RegionKind::SphereShell) {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw std::invalid_argument("sphere region: theta must be > 0");
    if (dim < 1) throw std::invalid_argument("sphere region: dim must be >= 1");
  }
}

double RegionSpec::boundary_v(double u) const {
  switch (kind) {
    case RegionKind::Halfspace:
      return 0.0;
    case RegionKind::CurveBoundary:
      return -sign * std::sqrt(a + u * u / 3.0);
    case RegionKind::SphereShell:
      break;
  }
  throw std::logic_error("boundary_v: not a 2-D region");
}

bool RegionSpec::contains(std::span<const double> y) const {
  if (kind == RegionKind::SphereShell) {
    if (y.size() != static_cast<std::size_t>(dim)) throw std::invalid_argument("point has wrong dimension");
    double r2 = 0;
    for (double x : y) r2 += x * x;
    return orientation == SphereOrientation::HOutside ? r2 >= theta * theta : r2 <= theta * theta;
  }
  if (y.size() != 2) throw std::invalid_argument("point must be 2-D");
  return y[1] <= boundary_v(y[0]);
}

std::vector<double> RegionSpec::boundary_point(double t) const {
  if (kind == RegionKind::SphereShell) {
    std::vector<double> p(dim, 0.0);
    p[0] = theta;
    return p;
  }
  return {t, boundary_v(t)};
}

double RegionSpec::mean_curvature_sphere() const {
  if (kind != RegionKind::SphereShell) throw std::logic_error("mean curvature defined for spheres only");
  double g = (dim - 1) / (2.0 * theta);
  return orientation == SphereOrientation::HOutside ? g : -g;
}

void OracleConfig::validate() const {
  if (inner_order < 16 || outer_order < 16 || sdbp_order < 16) throw std::invalid_argument("quadrature orders must be >= 16");
  if (!(bisect_tol > 0)) throw std::invalid_argument("bisect_tol must be > 0");
  if (!(u_window > 0)) throw std::invalid_argument("u_window must be > 0");
  if (!(stencil_step > 0 && stencil_step < 0.2)) throw std::invalid_argument("stencil_step must be in (0, 0.2)");
  if (sdbp_sigma2 < 0) throw std::invalid_argument("sdbp_sigma2 must be >= 0");
}

PipelineMethod PipelineMethod::local() { return PipelineMethod{}; }

PipelineMethod PipelineMethod::grid(std::vector<ModelSpec> candidates) {
  PipelineMethod m;
  m.local_stencil = false;
  m.candidates = std::move(candidates);
  return m;
}

ScaleGrid local_stencil_grid(double tau2, double step) {
  std::vector<double> s2;
  for (int j = -2; j <= 2; ++j) s2.push_back(tau2 + j * step);
  if (s2.front() <= 0) throw std::invalid_argument("stencil reaches sigma2 <= 0");
  return scale_grid_from_sigma2(s2);
}

// ---------------------------------------------------------------- methods

std::string PValueFn::label() const {
  std::string ks = " (k=" + std::to_string(k) + ")";
  switch (method) {
    case Method::BP: return "BP";
    case Method::AU: return "AU" + ks;
    case Method::TwoBP: return "2BP";
    case Method::TwoAU: return "2AU" + ks;
    case Method::SI: return "SI" + ks;
    case Method::SDBP: return "SDBP";
    case Method::ETSI: return "ET-SI";
  }
  return "?";
}

std::string PValueFn::key() const {
  std::string ks = std::to_string(k);
  switch (method) {
    case Method::BP: return "bp";
    case Method::AU: return "au" + ks;
    case Method::TwoBP: return "2bp";
    case Method::TwoAU: return "2au" + ks;
    case Method::SI: return "si" + ks;
    case Method::SDBP: return "sdbp";
    case Method::ETSI: return "etsi";
  }
  return "?";
}

PValueFn PValueFn::parse(const std::string& key_in) {
  std::string key;
  for (char c : key_in)
    if (c != '-' && c != '_' && c != ' ') key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto with_k = [&](const std::string& prefix, Method m) -> std::optional<PValueFn> {
    if (key.rfind(prefix, 0) != 0) return std::nullopt;
    std::string rest = key.substr(prefix.size());
    if (rest.empty() || rest.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    int k = std::stoi(rest);
    if (k < 1 || k > 5) throw std::invalid_argument("p-value '" + key_in + "': k must be in 1..5");
    return PValueFn{m, k};
  };
  if (key == "bp") return {Method::BP, 1};
  if (key == "2bp") return {Method::TwoBP, 1};
  if (key == "sdbp") return {Method::SDBP, 2};
  if (key == "etsi") return {Method::ETSI, 2};
  if (auto f = with_k("2au", Method::TwoAU)) return *f;
  if (auto f = with_k("au", Method::AU)) return *f;
  if (auto f = with_k("si", Method::SI)) return *f;
  throw std::invalid_argument("unknown p-value '" + key_in +
                              "' (expected bp, auK, 2bp, 2auK, siK, sdbp, etsi with K in 1..5)");
}

std::vector<PValueFn> table_methods() {
  return {{Method::BP, 1},    {Method::AU, 3},   {Method::TwoBP, 1}, {Method::TwoAU, 2},
          {Method::TwoAU, 3}, {Method::SDBP, 2}, {Method::SI, 2},    {Method::SI, 3}};
}

DiagnosticError::DiagnosticError(const std::string& what, nlohmann::json grid)
    : std::runtime_error(what), grid_(std::move(grid)) {}

// ---------------------------------------------------------------- impl

RegionOracle::Impl::Impl(const RegionSpec& r, const OracleConfig& c, const PipelineMethod& m)
    : R(r),
      cfg(c),
      method(m),
      inner(make_quadrature(QuadratureKind::GaussLegendre, c.inner_order)),
      outer(make_quadrature(QuadratureKind::GaussLegendre, c.outer_order)),
      sdbp(make_quadrature(QuadratureKind::GaussLegendre, c.sdbp_order)) {
  std::vector<double> s2;
  for (int i = 0; i < 13; ++i) s2.push_back(std::pow(9.0, (i - 6) / 6.0));
  default_grid = scale_grid_from_sigma2(s2);
}

Pt RegionOracle::Impl::to_pt(std::span<const double> y) const {
  if (is_2d()) {
    if (y.size() != 2) throw std::invalid_argument("point must be 2-D for region " + R.name());
    return {y[0], y[1]};
  }
  if (y.size() != static_cast<std::size_t>(R.dim))
    throw std::invalid_argument("point must have dimension " + std::to_string(R.dim));
  double r2 = 0;
  for (double x : y) r2 += x * x;
  return {std::sqrt(r2), 0.0};
}

Tails RegionOracle::Impl::tails(Pt p, double sigma2) const {
  if (!std::isfinite(p.u) || !std::isfinite(p.v)) throw std::invalid_argument("non-finite point");
  if (sigma2 <= 0) {
    bool in = is_2d() ? p.v <= R.boundary_v(p.u)
                      : (R.orientation == SphereOrientation::HOutside ? p.u >= R.theta : p.u <= R.theta);
    return in ? Tails{1.0, 0.0} : Tails{0.0, 1.0};
  }
  const double sig = std::sqrt(sigma2);
  switch (R.kind) {
    case RegionKind::Halfspace:
      return {normal_upper(p.v / sig), normal_upper(-p.v / sig)};
    case RegionKind::CurveBoundary: {
      // integrate over U* = u + sig z; the boundary has its vertex at z = -u/sig
      Tails t;
      const double zk = -p.u / sig;
      auto piece = [&](double lo, double hi) {
        if (!(hi > lo)) return;
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        double sh = 0, ss = 0;
        for (std::size_t i = 0; i < inner.nodes.size(); ++i) {
          double z = mid + half * inner.nodes[i];
          double x = (R.boundary_v(p.u + sig * z) - p.v) / sig;
          double w = inner.weights[i] * normal_pdf(z);
          sh += w * normal_upper(-x);
          ss += w * normal_upper(x);
        }
        t.h += sh * half;
        t.s += ss * half;
      };
      piece(-kZWindow, std::min(zk, kZWindow));
      piece(std::max(zk, -kZWindow), kZWindow);
      return t;
    }
    case RegionKind::SphereShell: {
      const double x = R.theta * R.theta / sigma2, lam = p.u * p.u / sigma2;
      double out = noncentral_chisq_sf(x, R.dim, lam), in = noncentral_chisq_cdf(x, R.dim, lam);
      return R.orientation == SphereOrientation::HOutside ? Tails{out, in} : Tails{in, out};
    }
  }
  throw std::logic_error("tails: bad region kind");
}

double RegionOracle::Impl::psi_of(Pt p, double sigma2, bool* underflow) const {
  Tails t = tails(p, sigma2);
  const double sig = std::sqrt(sigma2);
  if (std::min(t.h, t.s) < kTinyTail) {
    if (underflow) *underflow = true;
    return t.h < t.s ? kInf : -kInf;
  }
  return t.h <= t.s ? sig * normal_upper_inv(t.h) : -sig * normal_upper_inv(t.s);
}

PValueReport RegionOracle::Impl::pipeline(Pt p, int k, const ScaleGrid* grid) const {
  if (k < 1 || k > 5) throw std::invalid_argument("pipeline: k must be in 1..5");
  const double bp = tails(p, 1.0).h;
  PValueReport rep;
  if (method.local_stencil) {
    if (method.procedure == Procedure::A)
      throw std::invalid_argument("procedure A needs a scale grid fit, not the local stencil");
    // Degree-4 interpolation through five exact psi values: its derivatives at
    // the centre are the five-point difference formulas.
    auto fit_at = [&](double tau2) {
      std::vector<PsiPoint> pts;
      for (const auto& e : local_stencil_grid(tau2, cfg.stencil_step).entries) {
        bool under = false;
        double ps = psi_of(p, e.sigma2, &under);
        if (under) throw std::domain_error("bootstrap probability underflows on the stencil");
        pts.push_back({e.sigma2, ps, 1.0});
      }
      return fit_wls(pts, ModelSpec{Family::Poly, 5});
    };
    FitResult fm1 = fit_at(method.sigma2_minus1);
    FitResult fz = method.sigma2_zero == method.sigma2_minus1 ? fm1 : fit_at(method.sigma2_zero);
    double zH = taylor_extrapolate(fm1.spec, fm1.beta, k, method.sigma2_minus1, -1.0);
    double t = taylor_extrapolate(fz.spec, fz.beta, k, method.sigma2_zero, 0.0);
    rep = report_from_z(zH, -t, t);
    rep.model = "local";
  } else {
    const ScaleGrid& g = grid ? *grid : default_grid;
    std::vector<PsiPoint> pts;
    for (const auto& e : g.entries) {
      Tails t = tails(p, e.sigma2);
      double a = std::min(t.h, t.s);
      if (a < kTinyTail) continue;
      double ps = t.h <= t.s ? std::sqrt(e.sigma2) * normal_upper_inv(t.h)
                             : -std::sqrt(e.sigma2) * normal_upper_inv(t.s);
      pts.push_back({e.sigma2, ps, method.nominal_B * fisher_weight(a, e.sigma2)});
    }
    auto sel = select_model_wls(pts, method.candidates.empty() ? default_candidates() : method.candidates);
    FitResult fS = negate(sel.best);
    rep = method.procedure == Procedure::A
              ? p_values_A(sel.best, fS)
              : p_values_B(sel.best, fS, k, method.sigma2_minus1, method.sigma2_zero);
  }
  rep.p_bp = bp;
  rep.flags.bp_boundary = bp <= 0.0 || bp >= 1.0;
  return rep;
}

double RegionOracle::Impl::pvalue(const PValueFn& fn, Pt p) const {
  switch (fn.method) {
    case Method::BP:
      return tails(p, 1.0).h;
    case Method::TwoBP:
      return std::min(1.0, 2.0 * tails(p, 1.0).h);
    case Method::SDBP:
      return p_sdbp(p);
    case Method::ETSI:
      return p_et_si(p);
    default:
      break;
  }
  PValueReport r;
  try {
    r = pipeline(p, fn.k, nullptr);
  } catch (const std::domain_error&) {
    // far from the boundary: the limit is 0 on the S side and 1 inside H
    return tails(p, 1.0).h < 0.5 ? 0.0 : 1.0;
  }
  switch (fn.method) {
    case Method::AU: return r.p_au;
    case Method::TwoAU: return std::min(1.0, 2.0 * r.p_au);
    case Method::SI: return r.p_si;
    default: break;
  }
  throw std::logic_error("pvalue: unhandled method");
}

namespace {

template <class G>
double solve_bracket(G&& g, double lo, double hi, double glo, double ghi, double tol) {
  boost::uintmax_t iters = 200;
  auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, stop, iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace

// Smallest v above the boundary with p(u, v) <= alpha; rejection is {v > v*}.
double RegionOracle::Impl::threshold(const PValueFn& fn, double alpha, double u, double warm) const {
  const double vb = R.boundary_v(u);
  auto g = [&](double v) { return pvalue(fn, {u, v}) - alpha; };
  const double g0 = g(vb);
  if (g0 <= 0) return vb;
  double lo = vb, glo = g0, off = 1.0;
  if (std::isfinite(warm) && warm > 0) {
    // neighbouring nodes have nearly the same offset above the boundary
    double a = vb + 0.95 * warm, ga = g(a);
    if (ga <= 0) return solve_bracket(g, lo, a, glo, ga, cfg.bisect_tol);
    double b = vb + 1.05 * warm, gb = g(b);
    if (gb <= 0) return solve_bracket(g, a, b, ga, gb, cfg.bisect_tol);
    lo = b;
    glo = gb;
    off = 1.3 * warm;
  }
  double hi = vb + off, ghi = g(hi);
  for (int it = 0; ghi > 0; ++it) {
    if (it > 60) throw std::runtime_error("threshold: p-value never drops below alpha along the v axis");
    lo = hi;
    glo = ghi;
    hi = vb + 2.0 * (hi - vb);
    ghi = g(hi);
  }
  return solve_bracket(g, lo, hi, glo, ghi, cfg.bisect_tol);
}

void RegionOracle::Impl::check_monotone(const PValueFn& fn, double theta) const {
  if (!cfg.check_monotone) return;
  nlohmann::json grid = nlohmann::json::array();
  bool ok = true;
  for (int du = -2; du <= 2; ++du) {
    double u = theta + du;
    double vb = R.boundary_v(u);
    double prev = kInf;
    nlohmann::json row = {{"u", u}, {"v", nlohmann::json::array()}, {"p", nlohmann::json::array()}};
    for (int j = 0; j <= 16; ++j) {
      double v = vb + 0.25 * j;
      double pv = pvalue(fn, {u, v});
      row["v"].push_back(v);
      row["p"].push_back(pv);
      if (pv > prev + 1e-7) ok = false;
      prev = pv;
    }
    grid.push_back(row);
  }
  if (!ok)
    throw DiagnosticError(fn.label() + " is not monotone along v near theta=" + std::to_string(theta) +
                              "; the rejection region is not of the form {v > v*(u)}",
                          grid);
}

double RegionOracle::Impl::selection_prob_at(double theta) const {
  if (!is_2d()) {
    double x = R.theta * R.theta;
    return R.orientation == SphereOrientation::HOutside ? noncentral_chisq_cdf(x, R.dim, x)
                                                        : noncentral_chisq_sf(x, R.dim, x);
  }
  const double mv = R.boundary_v(theta);
  auto f = [&](double u) { return normal_pdf(u - theta) * normal_upper(R.boundary_v(u) - mv); };
  const double lo = theta - cfg.u_window, hi = theta + cfg.u_window;
  if (lo < 0 && hi > 0) return integrate(outer, lo, 0.0, f) + integrate(outer, 0.0, hi, f);
  return integrate(outer, lo, hi, f);
}

double RegionOracle::Impl::selective_rejection_2d(const PValueFn& fn, double alpha, double theta) const {
  check_monotone(fn, theta);
  const double mv = R.boundary_v(theta);
  double num = 0, den = 0, warm = std::numeric_limits<double>::quiet_NaN();
  auto piece = [&](double lo, double hi) {
    if (!(hi > lo)) return;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
      double u = mid + half * outer.nodes[i];
      double vb = R.boundary_v(u);
      double vs = threshold(fn, alpha, u, warm);
      warm = vs - vb;
      double w = outer.weights[i] * half * normal_pdf(u - theta);
      num += w * normal_upper(vs - mv);
      den += w * normal_upper(vb - mv);
    }
  };
  const double lo = theta - cfg.u_window, hi = theta + cfg.u_window;
  if (lo < 0 && hi > 0) {
    piece(lo, 0.0);
    piece(0.0, hi);
  } else {
    piece(lo, hi);
  }
  return num / den;
}

double RegionOracle::Impl::selective_rejection_sphere(const PValueFn& fn, double alpha) const {
  // p increases towards H along the radius; rejection is the part of S
  // beyond the level-alpha radius.
  const bool outside = R.orientation == SphereOrientation::HOutside;
  const double th = R.theta;
  auto g = [&](double r) { return pvalue(fn, {r, 0.0}) - alpha; };
  const double x = th * th;
  const double sel = selection_prob_at(th);
  double rstar;
  if (outside) {
    double g0 = g(0.0), g1 = g(th);
    if (g0 >= 0) return 0.0;
    if (g1 <= 0) return 1.0;
    rstar = solve_bracket(g, 0.0, th, g0, g1, cfg.bisect_tol);
    return noncentral_chisq_cdf(rstar * rstar, R.dim, x) / sel;
  }
  double g0 = g(th);
  if (g0 <= 0) return 1.0;
  double hi = th + 1.0, ghi = g(hi);
  while (ghi > 0) {
    hi = th + 2.0 * (hi - th);
    if (hi > th + 1e4) return 0.0;
    ghi = g(hi);
  }
  rstar = solve_bracket(g, th, hi, g0, ghi, cfg.bisect_tol);
  return noncentral_chisq_sf(rstar * rstar, R.dim, x) / sel;
}

// ---------------------------------------------------------------- public

RegionOracle::RegionOracle(RegionSpec region, OracleConfig cfg, PipelineMethod method)
    : region_(region), cfg_(cfg), method_(std::move(method)) {
  region_.validate();
  cfg_.validate();
  impl_ = std::make_unique<Impl>(region_, cfg_, method_);
}

RegionOracle::~RegionOracle() = default;
RegionOracle::RegionOracle(RegionOracle&& o) noexcept
    : region_(o.region_), cfg_(o.cfg_), method_(std::move(o.method_)) {
  impl_ = std::make_unique<Impl>(region_, cfg_, method_);
}

double RegionOracle::bootstrap_prob(std::span<const double> y, double sigma2) const {
  return impl_->tails(impl_->to_pt(y), sigma2).h;
}

double RegionOracle::bootstrap_prob_2d(double u, double v, double sigma2) const {
  if (!impl_->is_2d()) throw std::logic_error("bootstrap_prob_2d on a sphere region");
  return impl_->tails({u, v}, sigma2).h;
}

double RegionOracle::bootstrap_prob_radial(double r, double sigma2) const {
  if (impl_->is_2d()) throw std::logic_error("bootstrap_prob_radial on a 2-D region");
  return impl_->tails({r, 0.0}, sigma2).h;
}

PValueReport RegionOracle::pipeline(std::span<const double> y, int k, const ScaleGrid* grid) const {
  return impl_->pipeline(impl_->to_pt(y), k, grid);
}

double RegionOracle::pvalue(const PValueFn& fn, std::span<const double> y) const {
  return impl_->pvalue(fn, impl_->to_pt(y));
}

std::vector<double> RegionOracle::project(std::span<const double> y, double* signed_distance) const {
  Pt p = impl_->to_pt(y);
  double t = 0;
  Pt q = impl_->project(p, &t);
  if (signed_distance) *signed_distance = t;
  if (impl_->is_2d()) return {q.u, q.v};
  std::vector<double> out(y.begin(), y.end());
  if (p.u > 0) {
    for (double& x : out) x *= region_.theta / p.u;
  } else {
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = region_.theta;
  }
  return out;
}

double RegionOracle::selection_probability(std::span<const double> mu) const {
  Pt p = impl_->to_pt(mu);
  if (impl_->is_2d()) {
    if (std::abs(p.v - region_.boundary_v(p.u)) > 1e-9)
      throw std::invalid_argument("selection_probability: mu is not on the boundary of H");
    return impl_->selection_prob_at(p.u);
  }
  if (std::abs(p.u - region_.theta) > 1e-9)
    throw std::invalid_argument("selection_probability: mu is not on the boundary of H");
  return impl_->selection_prob_at(p.u);
}

double RegionOracle::selective_rejection(const PValueFn& fn, double alpha, std::span<const double> mu) const {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must be in (0,1)");
  Pt p = impl_->to_pt(mu);
  if (impl_->is_2d()) {
    if (std::abs(p.v - region_.boundary_v(p.u)) > 1e-9)
      throw std::invalid_argument("selective_rejection: mu is not on the boundary of H");
    return impl_->selective_rejection_2d(fn, alpha, p.u);
  }
  if (std::abs(p.u - region_.theta) > 1e-9)
    throw std::invalid_argument("selective_rejection: mu is not on the boundary of H");
  return impl_->selective_rejection_sphere(fn, alpha);
}

double RegionOracle::selective_rejection_at(const PValueFn& fn, double alpha, double theta) const {
  auto mu = region_.boundary_point(theta);
  return selective_rejection(fn, alpha, mu);
}

double RegionOracle::average_absolute_bias(const PValueFn& fn, double alpha) const {
  if (!impl_->is_2d()) throw std::logic_error("average_absolute_bias is defined for 2-D regions");
  constexpr int M = 70;
  std::vector<double> dev(M + 1);
  parallel_for(dev.size(), cfg_.threads, [&](std::size_t j) {
    dev[j] = std::abs(selective_rejection_at(fn, alpha, 0.05 * static_cast<double>(j)) - alpha);
  });
  double s = 0;
  for (double d : dev) s += d;
  return s / (M + 1);
}

double RegionOracle::p_sdbp(std::span<const double> y) const { return impl_->p_sdbp(impl_->to_pt(y)); }
double RegionOracle::p_et_si(std::span<const double> y) const { return impl_->p_et_si(impl_->to_pt(y)); }

double RegionOracle::rejection_threshold(const PValueFn& fn, double alpha, double u) const {
  if (!impl_->is_2d()) throw std::logic_error("rejection_threshold is for 2-D regions");
  return impl_->threshold(fn, alpha, u, std::numeric_limits<double>::quiet_NaN());
}

// ---------------------------------------------------------------- free functions

double exact_bootstrap_prob(const RegionSpec& region, std::span<const double> y, double sigma2,
                            const OracleConfig& cfg) {
  return RegionOracle(region, cfg).bootstrap_prob(y, sigma2);
}

PValueReport exact_pvalue_pipeline(const RegionSpec& region, std::span<const double> y, const ScaleGrid& grid,
                                   const PipelineMethod& method, int k, const OracleConfig& cfg) {
  return RegionOracle(region, cfg, method).pipeline(y, k, &grid);
}

double selection_probability(const RegionSpec& region, std::span<const double> mu, const OracleConfig& cfg) {
  return RegionOracle(region, cfg).selection_probability(mu);
}

double selective_rejection_probability(const RegionSpec& region, const PValueFn& fn, double alpha,
                                       std::span<const double> mu, const OracleConfig& cfg) {
  return RegionOracle(region, cfg).selective_rejection(fn, alpha, mu);
}

double average_absolute_bias(const RegionSpec& region, const PValueFn& fn, double alpha, const OracleConfig& cfg) {
  return RegionOracle(region, cfg).average_absolute_bias(fn, alpha);
}

std::vector<double> sphere_curve(const PValueFn& fn, double minus_gamma, const std::vector<int>& dims, double alpha,
                                 const OracleConfig& cfg) {
  if (!(minus_gamma > 0)) throw std::invalid_argument("sphere_curve: -gamma must be > 0");
  std::vector<double> out(dims.size());
  parallel_for(dims.size(), cfg.threads, [&](std::size_t i) {
    int d = dims[i];
    if (d < 2) throw std::invalid_argument("sphere_curve: dimension must be >= 2");
    double theta = (d - 1) / (2.0 * minus_gamma);
    RegionOracle o(RegionSpec::sphere(theta, d, SphereOrientation::HOutside), cfg);
    out[i] = o.selective_rejection_at(fn, alpha, theta);
  });
  return out;
}

double p_sdbp(const RegionSpec& region, std::span<const double> y, const OracleConfig& cfg) {
  return RegionOracle(region, cfg).p_sdbp(y);
}

double p_et_si(const RegionSpec& region, std::span<const double> y, const OracleConfig& cfg) {
  return RegionOracle(region, cfg).p_et_si(y);
}

}  // namespace selboot
