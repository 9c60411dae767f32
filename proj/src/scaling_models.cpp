// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/scaling_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "nelder_mead.hpp"
#include "selboot/core_stats.hpp"
#include "selboot/rng.hpp"

namespace selboot {

std::string ModelSpec::name() const { return (family == Family::Poly ? "poly." : "sing.") + std::to_string(k); }

void ModelSpec::validate() const {
  if (family == Family::Poly && k < 1) throw std::invalid_argument("poly.k needs k >= 1");
  if (family == Family::Sing && k < 3) throw std::invalid_argument("sing.k needs k >= 3");
}

ModelSpec ModelSpec::parse(const std::string& s) {
  auto dot = s.find('.');
  if (dot == std::string::npos) throw std::invalid_argument("bad model name '" + s + "'");
  std::string fam = s.substr(0, dot);
  ModelSpec m;
  if (fam == "poly")
    m.family = Family::Poly;
  else if (fam == "sing")
    m.family = Family::Sing;
  else
    throw std::invalid_argument("unknown model family '" + fam + "'");
  try {
    std::size_t pos = 0;
    m.k = std::stoi(s.substr(dot + 1), &pos);
    if (pos != s.size() - dot - 1) throw std::invalid_argument("");
  } catch (...) {
    throw std::invalid_argument("bad model order in '" + s + "'");
  }
  m.validate();
  return m;
}

std::vector<ModelSpec> default_candidates() {
  return {{Family::Poly, 1}, {Family::Poly, 2}, {Family::Poly, 3}, {Family::Sing, 3}};
}

nlohmann::json to_json(const FitResult& f) {
  nlohmann::json j{{"spec", f.spec.name()},    {"beta", f.beta},       {"loglik", f.loglik},
                   {"aic", f.aic},             {"converged", f.converged}, {"n_informative", f.n_informative}};
  if (f.cov) j["cov"] = *f.cov;
  return j;
}

FitResult negate(const FitResult& f) {
  FitResult g = f;
  std::size_t m = f.spec.family == Family::Sing ? f.beta.size() - 1 : f.beta.size();
  for (std::size_t i = 0; i < m; ++i) g.beta[i] = -f.beta[i];
  if (g.cov) {
    // flipping sign of a subset of coordinates flips the cross terms
    std::size_t p = f.beta.size();
    auto& c = *g.cov;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        if ((i < m) != (j < m)) c[i * p + j] = -c[i * p + j];
  }
  return g;
}

DegenerateFit::DegenerateFit(int n_informative, int npar, const std::string& model)
    : std::runtime_error(model + ": only " + std::to_string(n_informative) + " informative scales (0 < C < B), need " +
                         std::to_string(npar)),
      n_informative_(n_informative),
      npar_(npar) {}

namespace {

void check_beta(const ModelSpec& spec, std::span<const double> beta) {
  if (static_cast<int>(beta.size()) != spec.npar())
    throw std::invalid_argument(spec.name() + ": expected " + std::to_string(spec.npar()) + " coefficients");
}

}  // namespace

double eval_model(const ModelSpec& spec, std::span<const double> beta, double x) {
  check_beta(spec, beta);
  if (spec.family == Family::Poly) {
    double v = 0.0;
    for (int j = spec.k - 1; j >= 0; --j) v = v * x + beta[j];
    return v;
  }
  if (!(x > 0)) throw std::domain_error("sing model is undefined at sigma2 <= 0; use Taylor extrapolation");
  double num = 0.0;
  for (int j = spec.k - 2; j >= 1; --j) num = (num + beta[j]) * x;
  double c = beta[spec.k - 1];
  return beta[0] + num / (1.0 + c * (std::sqrt(x) - 1.0));
}

std::vector<double> model_derivatives(const ModelSpec& spec, std::span<const double> beta, double tau2, int order) {
  check_beta(spec, beta);
  if (!(tau2 > 0)) throw std::domain_error("model_derivatives: tau2 must be positive");
  std::vector<double> out(std::max(order, 0), 0.0);
  auto falling = [](double a, int i) {
    double r = 1.0;
    for (int l = 0; l < i; ++l) r *= (a - l);
    return r;
  };
  if (spec.family == Family::Poly) {
    for (int n = 0; n < order; ++n) {
      double v = 0.0;
      for (int j = n; j < spec.k; ++j) v += beta[j] * falling(j, n) * std::pow(tau2, j - n);
      out[n] = v;
    }
    return out;
  }
  // phi = beta0 + N(x) * R(x), R = 1/D, D = 1 - c + c sqrt(x)
  const int K = spec.k;
  const double c = beta[K - 1];
  std::vector<double> Nd(order), Dd(order), Rd(order);
  for (int i = 0; i < order; ++i) {
    double v = 0.0;
    for (int j = std::max(1, i); j <= K - 2; ++j) v += beta[j] * falling(j, i) * std::pow(tau2, j - i);
    Nd[i] = v;
    Dd[i] = i == 0 ? 1.0 - c + c * std::sqrt(tau2) : c * falling(0.5, i) * std::pow(tau2, 0.5 - i);
  }
  auto binom = [](int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  for (int n = 0; n < order; ++n) {
    if (n == 0) {
      Rd[0] = 1.0 / Dd[0];
      continue;
    }
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += binom(n, i) * Dd[i] * Rd[n - i];
    Rd[n] = -s / Dd[0];
  }
  for (int n = 0; n < order; ++n) {
    double v = n == 0 ? beta[0] : 0.0;
    for (int i = 0; i <= n; ++i) v += binom(n, i) * Nd[i] * Rd[n - i];
    out[n] = v;
  }
  return out;
}

double taylor_from_derivatives(std::span<const double> d, int k_terms, double tau2, double target) {
  double dx = target - tau2, term = 1.0, sum = 0.0;
  for (int j = 0; j < k_terms && j < static_cast<int>(d.size()); ++j) {
    sum += d[j] * term;
    term *= dx / (j + 1);
  }
  return sum;
}

double taylor_extrapolate(const ModelSpec& spec, std::span<const double> beta, int k_terms, double tau2,
                          double target) {
  auto d = model_derivatives(spec, beta, tau2, k_terms);
  return taylor_from_derivatives(d, k_terms, tau2, target);
}

double binomial_loglik(const CountTable& counts, const ModelSpec& spec, std::span<const double> beta) {
  double ll = 0.0;
  for (const auto& r : counts.rows) {
    double z = eval_model(spec, beta, r.sigma2) / std::sqrt(r.sigma2);
    if (!std::isfinite(z)) return -std::numeric_limits<double>::infinity();
    if (r.C > 0) ll += r.C * log_normal_upper(z);
    if (r.C < r.B) ll += (r.B - r.C) * log_normal_upper(-z);
  }
  return ll;
}

int count_informative(const CountTable& counts) {
  int n = 0;
  for (const auto& r : counts.rows)
    if (r.C > 0 && r.C < r.B) ++n;
  return n;
}

double fisher_weight(double alpha, double sigma2) {
  if (!(alpha > 0 && alpha < 1)) return 0.0;
  double z = normal_upper_inv(alpha);
  double phi = normal_pdf(z);
  return phi * phi / (sigma2 * alpha * (1.0 - alpha));
}

namespace {

double logistic(double e) { return 1.0 / (1.0 + std::exp(-e)); }
double logit(double c) {
  c = std::clamp(c, 1e-9, 1.0 - 1e-9);
  return std::log(c / (1.0 - c));
}

// Optimizer coordinates -> beta. Sing's last coefficient goes through a
// logistic map so that it stays in [0,1].
std::vector<double> to_beta(const ModelSpec& spec, const std::vector<double>& th) {
  std::vector<double> b = th;
  if (spec.family == Family::Sing) b.back() = logistic(th.back());
  return b;
}

std::vector<double> to_theta(const ModelSpec& spec, const std::vector<double>& beta) {
  std::vector<double> t = beta;
  if (spec.family == Family::Sing) t.back() = logit(beta.back());
  return t;
}

// Weighted LS of y on the columns of X (n x p); returns coefficients and RSS.
std::pair<std::vector<double>, double> wls_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                                 const Eigen::VectorXd& w) {
  Eigen::VectorXd sw = w.array().sqrt();
  Eigen::MatrixXd A = sw.asDiagonal() * X;
  Eigen::VectorXd b = sw.asDiagonal() * y;
  Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
  double rss = (A * coef - b).squaredNorm();
  return {std::vector<double>(coef.data(), coef.data() + coef.size()), rss};
}

// Linear part of the fit for a fixed sing constraint c (or the whole poly fit).
// Poly columns use powers of (x - center) for conditioning; the result is
// mapped back to plain powers of x.
std::pair<std::vector<double>, double> linear_fit(const ModelSpec& spec, std::span<const PsiPoint> pts, double c) {
  const std::size_t n = pts.size();
  Eigen::VectorXd y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = pts[i].psi;
    w[i] = pts[i].weight;
  }
  if (spec.family == Family::Poly) {
    double wsum = w.sum(), center = 0.0;
    for (std::size_t i = 0; i < n; ++i) center += w[i] * pts[i].sigma2;
    center = wsum > 0 ? center / wsum : 1.0;
    Eigen::MatrixXd X(n, spec.k);
    for (std::size_t i = 0; i < n; ++i)
      for (int j = 0; j < spec.k; ++j) X(i, j) = std::pow(pts[i].sigma2 - center, j);
    auto [g, rss] = wls_solve(X, y, w);
    // sum_j g_j (x - c)^j  ->  sum_m beta_m x^m
    std::vector<double> beta(spec.k, 0.0);
    for (int j = 0; j < spec.k; ++j) {
      double bin = 1.0;
      for (int m = 0; m <= j; ++m) {
        if (m > 0) bin = bin * (j - m + 1) / m;
        beta[m] += g[j] * bin * std::pow(-center, j - m);
      }
    }
    return {beta, rss};
  }
  Eigen::MatrixXd X(n, spec.k - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double x = pts[i].sigma2;
    double den = 1.0 + c * (std::sqrt(x) - 1.0);
    X(i, 0) = 1.0;
    for (int j = 1; j <= spec.k - 2; ++j) X(i, j) = std::pow(x, j) / den;
  }
  auto [g, rss] = wls_solve(X, y, w);
  g.push_back(c);
  return {g, rss};
}

double wrss(const ModelSpec& spec, std::span<const PsiPoint> pts, const std::vector<double>& beta) {
  double s = 0.0;
  for (const auto& p : pts) {
    double r = p.psi - eval_model(spec, beta, p.sigma2);
    s += p.weight * r * r;
  }
  return s;
}

// Least-squares start for both fitting modes; sing scans its constraint.
std::vector<double> wls_start(const ModelSpec& spec, std::span<const PsiPoint> pts) {
  if (spec.family == Family::Poly) return linear_fit(spec, pts, 0.0).first;
  std::vector<double> best;
  double best_rss = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 20; ++i) {
    double c = i / 20.0;
    auto [b, rss] = linear_fit(spec, pts, c);
    if (rss < best_rss) {
      best_rss = rss;
      best = b;
    }
  }
  return best;
}

std::vector<double> inverse_or_empty(const Eigen::MatrixXd& H) {
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) return {};
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(H.rows(), H.cols()));
  std::vector<double> out(H.size());
  for (int i = 0; i < H.rows(); ++i)
    for (int j = 0; j < H.cols(); ++j) out[i * H.cols() + j] = inv(i, j);
  return out;
}

// Observed information in beta coordinates by central differences.
std::optional<std::vector<double>> observed_cov(const CountTable& counts, const ModelSpec& spec,
                                                const std::vector<double>& beta) {
  const int p = spec.npar();
  Eigen::MatrixXd H(p, p);
  std::vector<double> h(p);
  for (int i = 0; i < p; ++i) h[i] = 1e-4 * std::max(1.0, std::abs(beta[i]));
  auto f = [&](std::vector<double> b) {
    if (spec.family == Family::Sing) {
      // the formula is smooth slightly past [0,1]; keep D > 0
      b.back() = std::clamp(b.back(), -0.5, 1.5);
    }
    return -binomial_loglik(counts, spec, b);
  };
  double f0 = f(beta);
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      std::vector<double> pp = beta, pm = beta, mp = beta, mm = beta;
      if (i == j) {
        pp[i] += h[i];
        mm[i] -= h[i];
        H(i, i) = (f(pp) - 2 * f0 + f(mm)) / (h[i] * h[i]);
      } else {
        pp[i] += h[i], pp[j] += h[j];
        pm[i] += h[i], pm[j] -= h[j];
        mp[i] -= h[i], mp[j] += h[j];
        mm[i] -= h[i], mm[j] -= h[j];
        H(i, j) = H(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * h[i] * h[j]);
      }
    }
  }
  auto inv = inverse_or_empty(H);
  if (inv.empty()) return std::nullopt;
  return inv;
}

}  // namespace

FitResult fit_mle(const CountTable& counts, const ModelSpec& spec) {
  spec.validate();
  counts.validate();
  FitResult res;
  res.spec = spec;
  res.n_informative = count_informative(counts);
  // A single informative scale says nothing about the scaling law, so even
  // poly.1 needs two.
  const int need = std::max(2, spec.npar());
  if (res.n_informative < need) throw DegenerateFit(res.n_informative, need, spec.name());

  std::vector<PsiPoint> pts;
  for (const auto& r : counts.rows) {
    if (!(r.C > 0 && r.C < r.B)) continue;
    double c = std::clamp(static_cast<double>(r.C), 0.5, r.B - 0.5);
    double a = c / r.B;
    double s = std::sqrt(r.sigma2);
    pts.push_back({r.sigma2, s * normal_upper_inv(a), r.B * fisher_weight(a, r.sigma2)});
  }
  std::vector<double> start = wls_start(spec, pts);

  auto objective = [&](const std::vector<double>& th) {
    double ll = binomial_loglik(counts, spec, to_beta(spec, th));
    return std::isfinite(ll) ? -ll : 1e300;
  };
  std::vector<double> th = to_theta(spec, start);
  auto step_for = [](const std::vector<double>& x, double scale) {
    std::vector<double> s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = scale * (0.1 + 0.1 * std::abs(x[i]));
    return s;
  };
  auto best = detail::nelder_mead(objective, th, step_for(th, 1.0));
  // Restarts from jittered copies of the best point so far.
  auto eng = substream(0x5eedf17ULL, static_cast<std::uint64_t>(spec.family), static_cast<std::uint64_t>(spec.k));
  std::normal_distribution<double> jit(0.0, 1.0);
  bool last_converged = best.converged;
  for (int r = 1; r < 5; ++r) {
    std::vector<double> x = best.x;
    for (auto& v : x) v += 0.05 * (1.0 + std::abs(v)) * jit(eng);
    auto run = detail::nelder_mead(objective, x, step_for(x, 0.5));
    if (run.f < best.f) best = run;
    last_converged = run.converged && std::abs(run.f - best.f) < 1e-6;
  }
  // Final polish from the winner with a small simplex.
  auto polish = detail::nelder_mead(objective, best.x, step_for(best.x, 0.01));
  if (polish.f <= best.f) best = polish;

  res.beta = to_beta(spec, best.x);
  res.loglik = -best.f;
  res.aic = -2.0 * res.loglik + 2.0 * spec.npar();
  res.converged = polish.converged || last_converged;
  res.cov = observed_cov(counts, spec, res.beta);
  return res;
}

namespace {

ModelSelection pick_best(std::vector<FitResult> fits, std::vector<std::string> rejected) {
  ModelSelection sel;
  sel.all = fits;
  sel.rejected = std::move(rejected);
  const FitResult* best = nullptr;
  bool any_conv = std::any_of(fits.begin(), fits.end(), [](const FitResult& f) { return f.converged; });
  for (const auto& f : sel.all) {
    if (any_conv && !f.converged) continue;
    if (!best) {
      best = &f;
      continue;
    }
    double d = f.aic - best->aic;
    if (d < -1e-9 || (std::abs(d) <= 1e-9 && f.spec.npar() < best->spec.npar())) best = &f;
  }
  sel.best = *best;
  return sel;
}

}  // namespace

ModelSelection select_model(const CountTable& counts, const std::vector<ModelSpec>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_model: no candidate models");
  std::vector<FitResult> fits;
  std::vector<std::string> rejected;
  int ninf = count_informative(counts);
  for (const auto& c : candidates) {
    try {
      fits.push_back(fit_mle(counts, c));
    } catch (const DegenerateFit& e) {
      rejected.push_back(e.what());
    }
  }
  if (fits.empty()) {
    int need = candidates.front().npar();
    for (const auto& c : candidates) need = std::min(need, c.npar());
    need = std::max(need, 2);
    throw DegenerateFit(ninf, need, "all candidates (report bootstrap probability only)");
  }
  return pick_best(std::move(fits), std::move(rejected));
}

FitResult fit_wls(std::span<const PsiPoint> pts, const ModelSpec& spec) {
  spec.validate();
  FitResult res;
  res.spec = spec;
  int usable = 0;
  for (const auto& p : pts)
    if (p.weight > 0 && std::isfinite(p.psi)) ++usable;
  res.n_informative = usable;
  if (usable < spec.npar()) throw DegenerateFit(usable, spec.npar(), spec.name());
  std::vector<PsiPoint> ok;
  for (const auto& p : pts)
    if (p.weight > 0 && std::isfinite(p.psi)) ok.push_back(p);

  std::vector<double> beta = wls_start(spec, ok);
  res.converged = true;
  if (spec.family == Family::Sing) {
    auto obj = [&](const std::vector<double>& th) { return wrss(spec, ok, to_beta(spec, th)); };
    auto th = to_theta(spec, beta);
    std::vector<double> step(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) step[i] = 0.05 * (1.0 + std::abs(th[i]));
    auto run = detail::nelder_mead(obj, th, step, 1e-14, 1e-9, 20000);
    auto cand = to_beta(spec, run.x);
    if (wrss(spec, ok, cand) <= wrss(spec, ok, beta)) beta = cand;
    res.converged = run.converged;
  }
  res.beta = beta;
  res.loglik = -0.5 * wrss(spec, ok, beta);
  res.aic = -2.0 * res.loglik + 2.0 * spec.npar();
  return res;
}

ModelSelection select_model_wls(std::span<const PsiPoint> pts, const std::vector<ModelSpec>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_model_wls: no candidate models");
  std::vector<FitResult> fits;
  std::vector<std::string> rejected;
  for (const auto& c : candidates) {
    try {
      fits.push_back(fit_wls(pts, c));
    } catch (const DegenerateFit& e) {
      rejected.push_back(e.what());
    }
  }
  if (fits.empty()) throw DegenerateFit(static_cast<int>(pts.size()), candidates.front().npar(), "all candidates");
  return pick_best(std::move(fits), std::move(rejected));
}

}  // namespace selboot
