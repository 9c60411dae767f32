// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/pvalues.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "selboot/core_stats.hpp"

namespace selboot {

std::string PValueFlags::str() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ',';
    s += name;
  };
  add(clamped_si, "clamped_si");
  add(degenerate_fit, "degenerate_fit");
  add(negative_signed_distance, "negative_signed_distance");
  add(bp_boundary, "bp_boundary");
  return s.empty() ? "-" : s;
}

nlohmann::json to_json(const PValueReport& r) {
  nlohmann::json j{{"z_H", r.z_H},     {"z_S", r.z_S},   {"t", r.t_hat}, {"gamma", r.gamma_hat},
                   {"bp", r.p_bp},     {"au", r.p_au},   {"si", r.p_si}, {"model", r.model}};
  j["flags"] = {{"clamped_si", r.flags.clamped_si},
                {"degenerate_fit", r.flags.degenerate_fit},
                {"negative_signed_distance", r.flags.negative_signed_distance},
                {"bp_boundary", r.flags.bp_boundary}};
  if (r.se_au) j["se_au"] = *r.se_au;
  if (r.se_si) j["se_si"] = *r.se_si;
  // infinities are not representable in JSON
  for (const char* key : {"z_H", "z_S", "t", "gamma"})
    if (!std::isfinite(j[key].get<double>())) j[key] = nullptr;
  return j;
}

PValueReport report_from_json(const nlohmann::json& j) {
  auto num = [&](const char* k) {
    return j.at(k).is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at(k).get<double>();
  };
  PValueReport r;
  r.z_H = num("z_H");
  r.z_S = num("z_S");
  r.t_hat = num("t");
  r.gamma_hat = num("gamma");
  r.p_bp = num("bp");
  r.p_au = num("au");
  r.p_si = num("si");
  r.model = j.at("model").get<std::string>();
  const auto& f = j.at("flags");
  r.flags.clamped_si = f.at("clamped_si").get<bool>();
  r.flags.degenerate_fit = f.at("degenerate_fit").get<bool>();
  r.flags.negative_signed_distance = f.at("negative_signed_distance").get<bool>();
  r.flags.bp_boundary = f.at("bp_boundary").get<bool>();
  if (j.contains("se_au")) r.se_au = j["se_au"].get<double>();
  if (j.contains("se_si")) r.se_si = j["se_si"].get<double>();
  return r;
}

double psi(double alpha, double sigma2) {
  if (!(sigma2 > 0)) throw std::domain_error("psi: sigma2 must be positive");
  if (alpha <= 0.0) return std::numeric_limits<double>::infinity();
  if (alpha >= 1.0) return -std::numeric_limits<double>::infinity();
  return std::sqrt(sigma2) * normal_upper_inv(alpha);
}

BootstrapProb p_bp(const CountTable& counts) {
  for (const auto& r : counts.rows) {
    if (std::abs(r.sigma2 - 1.0) <= 1e-9) {
      BootstrapProb b;
      b.p = static_cast<double>(r.C) / static_cast<double>(r.B);
      b.boundary = r.C == 0 || r.C == r.B;
      return b;
    }
  }
  throw std::invalid_argument("p_bp: no row at sigma2 = 1 (interpolating between scales is not supported)");
}

PValueReport report_from_z(double z_H, double z_S, double t_hat) {
  PValueReport r;
  r.z_H = z_H;
  r.z_S = z_S;
  r.t_hat = t_hat;
  r.gamma_hat = t_hat - z_H;
  r.p_au = normal_upper(z_H);
  double num = r.p_au;
  double den = normal_upper(z_H + z_S);
  if (den < 1e-12 && num < 1e-12) {
    r.p_si = 1.0;
    r.flags.degenerate_fit = true;
    r.flags.clamped_si = true;
  } else if (num >= den) {
    r.p_si = 1.0;
    r.flags.clamped_si = num > den;
  } else {
    r.p_si = num / den;
  }
  r.flags.negative_signed_distance = t_hat < 0;
  return r;
}

PValueReport p_values_A(const FitResult& fit_H, const FitResult& fit_S) {
  if (fit_H.spec.family == Family::Sing || fit_S.spec.family == Family::Sing)
    throw std::domain_error("procedure A cannot evaluate a sing model at sigma2 <= 0; use p_values_B");
  double zH = eval_model(fit_H.spec, fit_H.beta, -1.0);
  double zS = eval_model(fit_S.spec, fit_S.beta, 0.0);
  double t = eval_model(fit_H.spec, fit_H.beta, 0.0);
  auto r = report_from_z(zH, zS, t);
  r.p_bp = normal_upper(eval_model(fit_H.spec, fit_H.beta, 1.0));
  r.model = fit_H.spec.name();
  return r;
}

PValueReport p_values_B(const FitResult& fit_H, const FitResult& fit_S, int k, double s2m1, double s2z) {
  if (!(s2m1 > 0 && s2z > 0)) throw std::domain_error("p_values_B: expansion points must be positive");
  double zH = taylor_extrapolate(fit_H.spec, fit_H.beta, k, s2m1, -1.0);
  double zS = taylor_extrapolate(fit_S.spec, fit_S.beta, k, s2z, 0.0);
  double t = taylor_extrapolate(fit_H.spec, fit_H.beta, k, s2z, 0.0);
  auto r = report_from_z(zH, zS, t);
  r.p_bp = normal_upper(eval_model(fit_H.spec, fit_H.beta, 1.0));
  r.model = fit_H.spec.name();
  return r;
}

void add_standard_errors(PValueReport& r, const FitResult& fit_H, const FitResult& fit_S, bool procedure_b, int k,
                         double s2m1, double s2z, bool complement) {
  if (!fit_H.cov || (!complement && !fit_S.cov)) return;
  auto zfun = [&](const FitResult& f, double tau2, double target) {
    return procedure_b ? taylor_extrapolate(f.spec, f.beta, k, tau2, target) : eval_model(f.spec, f.beta, target);
  };
  // parameter vector: beta_H, then beta_S unless S is the complement
  std::vector<double> theta = fit_H.beta;
  if (!complement) theta.insert(theta.end(), fit_S.beta.begin(), fit_S.beta.end());
  const std::size_t pH = fit_H.beta.size();
  auto eval = [&](const std::vector<double>& th, double& au, double& si) {
    FitResult h = fit_H;
    h.beta.assign(th.begin(), th.begin() + pH);
    FitResult s = complement ? negate(h) : fit_S;
    if (!complement) s.beta.assign(th.begin() + pH, th.end());
    double zH = zfun(h, s2m1, -1.0), zS = zfun(s, s2z, 0.0);
    auto rep = report_from_z(zH, zS, 0.0);
    au = rep.p_au;
    si = rep.p_si;
  };
  const std::size_t P = theta.size();
  std::vector<double> gau(P), gsi(P);
  for (std::size_t i = 0; i < P; ++i) {
    double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
    auto tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    double ap, sp, am, sm;
    eval(tp, ap, sp);
    eval(tm, am, sm);
    gau[i] = (ap - am) / (2 * h);
    gsi[i] = (sp - sm) / (2 * h);
  }
  auto cov = [&](std::size_t i, std::size_t j) -> double {
    if (i < pH && j < pH) return (*fit_H.cov)[i * pH + j];
    if (complement || i < pH || j < pH) return 0.0;
    std::size_t pS = fit_S.beta.size();
    return (*fit_S.cov)[(i - pH) * pS + (j - pH)];
  };
  double va = 0.0, vs = 0.0;
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t j = 0; j < P; ++j) {
      va += gau[i] * cov(i, j) * gau[j];
      vs += gsi[i] * cov(i, j) * gsi[j];
    }
  r.se_au = std::sqrt(std::max(0.0, va));
  r.se_si = std::sqrt(std::max(0.0, vs));
}

double et_si_formula(double psi1_H, double zproj_H, double psi1_S, double zproj_S) {
  double a = psi1_H - 2.0 * zproj_H;
  double num = normal_upper(a);
  double den = normal_upper(a + psi1_S - zproj_S);
  if (den <= 0.0) return 1.0;
  return std::min(1.0, num / den);
}

std::string report_tsv_header() { return "cluster\tbp\tau\tsi\tt\tgamma\tmodel\tflags"; }

std::string report_tsv_row(const std::string& cluster, const PValueReport& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  auto put = [&](double x) -> std::ostream& {
    if (std::isfinite(x)) return os << x;
    return os << (std::isnan(x) ? "NA" : (x > 0 ? "Inf" : "-Inf"));
  };
  os << cluster;
  for (double x : {r.p_bp, r.p_au, r.p_si, r.t_hat, r.gamma_hat}) {
    os << '\t';
    put(x);
  }
  os << '\t' << r.model << '\t' << r.flags.str();
  return os.str();
}

}  // namespace selboot
