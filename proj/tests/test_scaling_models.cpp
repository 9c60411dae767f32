#include <doctest.h>

#include <cmath>
#include <random>

#include "selboot/core_stats.hpp"
#include "selboot/scaling_models.hpp"
#include "test_util.hpp"

using namespace selboot;

namespace {

const ModelSpec poly1{Family::Poly, 1}, poly2{Family::Poly, 2}, poly3{Family::Poly, 3}, sing3{Family::Sing, 3};

CountTable expected_counts(const ModelSpec& spec, const std::vector<double>& beta, long B) {
  CountTable t;
  for (auto& e : default_scale_grid(916).entries) {
    double p = normal_upper(eval_model(spec, beta, e.sigma2) / std::sqrt(e.sigma2));
    t.rows.push_back({e.sigma2, e.nprime, B, std::lround(B * p)});
  }
  return t;
}

}  // namespace

TEST_CASE("model names") {
  CHECK(ModelSpec::parse("poly.3") == poly3);
  CHECK(ModelSpec::parse("sing.3") == sing3);
  CHECK(sing3.name() == "sing.3");
  CHECK(sing3.npar() == 3);
  CHECK_THROWS(ModelSpec::parse("sing.2"));
  CHECK_THROWS(ModelSpec::parse("poly.0"));
  CHECK_THROWS(ModelSpec::parse("spline.2"));
}

TEST_CASE("eval_model") {
  CHECK(eval_model(poly2, std::vector<double>{1.0, 0.5}, 2.0) == 2.0);
  std::vector<double> b{0.7, -0.3, 0.4};
  CHECK(eval_model(sing3, b, 1.0) == doctest::Approx(0.4));
  CHECK(eval_model(poly1, std::vector<double>{1.25}, -7.0) == 1.25);
  CHECK_THROWS_AS(eval_model(sing3, b, 0.0), std::domain_error);
  CHECK_THROWS_AS(eval_model(sing3, b, -1.0), std::domain_error);
}

TEST_CASE("model derivatives") {
  std::vector<double> b2{1.0, 0.5};
  auto d2 = model_derivatives(poly2, b2, 2.0, 2);
  CHECK(d2[0] == 2.0);
  CHECK(d2[1] == 0.5);
  std::vector<double> b3{0.3, -1.2, 0.7};
  auto d3 = model_derivatives(poly3, b3, 1.0, 3);
  CHECK(d3[0] == doctest::Approx(0.3 - 1.2 + 0.7));
  CHECK(d3[1] == doctest::Approx(-1.2 + 1.4));
  CHECK(d3[2] == doctest::Approx(1.4));
  std::vector<double> bs{1.1, 0.8, 0.35};
  auto ds = model_derivatives(sing3, bs, 1.0, 3);
  double h = 1e-5;
  auto f = [&](double x) { return eval_model(sing3, bs, x); };
  double fd1 = (f(1 + h) - f(1 - h)) / (2 * h);
  double fd2 = (f(1 + h) - 2 * f(1) + f(1 - h)) / (h * h);
  CHECK(ds[0] == doctest::Approx(f(1.0)).epsilon(1e-12));
  CHECK(ds[1] == doctest::Approx(fd1).epsilon(1e-6));
  CHECK(ds[2] == doctest::Approx(fd2).epsilon(1e-4));
  // same check away from tau2 = 1
  auto dt = model_derivatives(sing3, bs, 2.0, 2);
  CHECK(dt[1] == doctest::Approx((f(2 + h) - f(2 - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("taylor extrapolation") {
  std::vector<double> b2{1.0, 0.5};
  CHECK(taylor_extrapolate(poly2, b2, 2, 1.0, -1.0) == doctest::Approx(0.5));
  std::vector<double> b3{0.3, -1.2, 0.7};
  CHECK(taylor_extrapolate(poly3, b3, 2, 1.0, -1.0) == doctest::Approx(0.3 + 1.2 - 2.1));
  CHECK(taylor_extrapolate(poly3, b3, 3, 1.0, -1.0) == doctest::Approx(0.3 + 1.2 + 0.7));
  for (double t : {-1.0, 0.0, 0.5, 4.0})
    for (double tau : {0.5, 1.0, 3.0})
      CHECK(taylor_extrapolate(poly3, b3, 3, tau, t) == doctest::Approx(eval_model(poly3, b3, t)).epsilon(1e-12));
}

TEST_CASE("fit recovers a poly.2 generating model") {
  auto counts = expected_counts(poly2, {1.0, 0.5}, 1000000);
  auto f = fit_mle(counts, poly2);
  CHECK(f.converged);
  CHECK(std::abs(f.beta[0] - 1.0) < 1e-2);
  CHECK(std::abs(f.beta[1] - 0.5) < 1e-2);
  CHECK(f.aic == -2 * f.loglik + 2 * f.spec.npar());
}

TEST_CASE("fit recovers a sing.3 generating model") {
  std::vector<double> b{0.5, 1.0, 0.4};
  auto f = fit_mle(expected_counts(sing3, b, 1000000), sing3);
  CHECK(std::abs(f.beta[0] - b[0]) < 2e-2);
  CHECK(std::abs(f.beta[1] - b[1]) < 2e-2);
  CHECK(std::abs(f.beta[2] - b[2]) < 2e-2);
}

TEST_CASE("lung clusters pick the expected models") {
  auto s57 = select_model(lung_counts_H(57), default_candidates());
  CHECK(s57.best.spec == poly3);
  auto s62 = select_model(lung_counts_H(62), default_candidates());
  CHECK(s62.best.spec == poly2);
  auto s67 = select_model(lung_counts_H(67), default_candidates());
  CHECK(s67.best.spec == sing3);
  CHECK(s67.best.beta[2] >= 0);
  CHECK(s67.best.beta[2] <= 1);
  for (auto* s : {&s57, &s62, &s67})
    for (auto& f : s->all) CHECK(f.aic == -2 * f.loglik + 2 * f.spec.npar());
}

TEST_CASE("fit is a local maximum") {
  auto counts = lung_counts_H(57);
  auto f = fit_mle(counts, poly3);
  double ll = binomial_loglik(counts, poly3, f.beta);
  CHECK(ll == doctest::Approx(f.loglik).epsilon(1e-12));
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  for (int r = 0; r < 100; ++r) {
    std::vector<double> e(3);
    double norm = 0;
    for (auto& x : e) {
      x = nd(gen);
      norm += x * x;
    }
    double len = 0.1 * std::uniform_real_distribution<double>(0, 1)(gen) / std::sqrt(norm);
    auto b = f.beta;
    for (int j = 0; j < 3; ++j) b[j] += len * e[j];
    CHECK(binomial_loglik(counts, poly3, b) <= ll + 1e-9);
  }
}

TEST_CASE("flat counts prefer poly.1") {
  CountTable t;
  for (auto& e : default_scale_grid(916).entries) t.rows.push_back({e.sigma2, e.nprime, 10000, 5000});
  auto s = select_model(t, {poly1, poly2});
  CHECK(s.best.spec == poly1);
  CHECK(std::abs(s.best.beta[0]) < 1e-3);
}

TEST_CASE("degenerate tables") {
  CountTable t;
  for (auto& e : default_scale_grid(916).entries) t.rows.push_back({e.sigma2, e.nprime, 10000, 10000});
  t.rows[3].C = 9999;
  CHECK(count_informative(t) == 1);
  CHECK_THROWS_AS(fit_mle(t, poly2), DegenerateFit);
  CHECK_THROWS_AS(fit_mle(t, poly1), DegenerateFit);
  t.rows[5].C = 9990;
  CHECK(fit_mle(t, poly1).n_informative == 2);
  t.rows[3].C = 10000;
  t.rows[5].C = 10000;
  try {
    select_model(t, default_candidates());
    FAIL("expected DegenerateFit");
  } catch (const DegenerateFit& e) {
    CHECK(e.n_informative() == 0);
  }
}

TEST_CASE("single candidate is returned") {
  auto s = select_model(lung_counts_H(62), {sing3});
  CHECK(s.best.spec == sing3);
  CHECK(s.all.size() == 1);
}

TEST_CASE("weighted least squares recovers exact psi") {
  std::vector<PsiPoint> pts;
  for (auto& e : default_scale_grid(916).entries) {
    double psi = eval_model(poly3, std::vector<double>{0.2, 1.0, -0.1}, e.sigma2);
    // weights carry B = 1e4 replicates
    pts.push_back({e.sigma2, psi, 1e4 * fisher_weight(normal_upper(psi / std::sqrt(e.sigma2)), e.sigma2)});
  }
  auto f = fit_wls(pts, poly3);
  CHECK(f.beta[0] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(f.beta[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f.beta[2] == doctest::Approx(-0.1).epsilon(1e-9));
  auto s = select_model_wls(pts, default_candidates());
  CHECK(s.best.spec.k >= 3);
}

TEST_CASE("negated fit describes the complement") {
  auto f = fit_mle(lung_counts_H(67), sing3);
  auto g = negate(f);
  for (double s2 : {0.2, 1.0, 5.0}) CHECK(eval_model(g.spec, g.beta, s2) == doctest::Approx(-eval_model(f.spec, f.beta, s2)));
  auto j = to_json(f);
  CHECK(j["spec"] == "sing.3");
  CHECK(j["beta"].size() == 3);
}
