#include <doctest.h>

#include <cmath>
#include <limits>

#include "selboot/core_stats.hpp"
#include "selboot/pvalues.hpp"
#include "test_util.hpp"

using namespace selboot;

namespace {

FitResult fit_of(Family fam, std::vector<double> beta) {
  FitResult f;
  f.spec = {fam, int(beta.size())};
  f.beta = std::move(beta);
  f.converged = true;
  return f;
}

CountTable single_row(long B, long C) {
  CountTable t;
  t.rows = {{0.5, std::nullopt, B, 1}, {1.0, std::nullopt, B, C}, {2.0, std::nullopt, B, 1}};
  return t;
}

}  // namespace

TEST_CASE("psi") {
  CHECK(psi(0.5, 4.0) == doctest::Approx(0.0));
  CHECK(psi(normal_upper(1.0), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(psi(normal_upper(2.0), 4.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(psi(0.0, 1.0) == std::numeric_limits<double>::infinity());
  CHECK(psi(1.0, 1.0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("bootstrap probability") {
  CHECK(p_bp(single_row(10000, 5000)).p == 0.5);
  CHECK(p_bp(lung_counts_S(57)).p == doctest::Approx(0.6807).epsilon(1e-12));
  auto z = p_bp(single_row(10000, 0));
  CHECK(z.p == 0.0);
  CHECK(z.boundary);
  CountTable t;
  t.rows = {{0.5, std::nullopt, 100, 5}, {2.0, std::nullopt, 100, 50}};
  try {
    p_bp(t);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("interpolat") != std::string::npos);
  }
}

TEST_CASE("procedure A") {
  auto r = p_values_A(fit_of(Family::Poly, {0.0}), fit_of(Family::Poly, {0.0}));
  CHECK(r.p_au == doctest::Approx(0.5));
  CHECK(r.p_si == doctest::Approx(1.0));
  // flat boundary: psi(H) = t, psi(S) = -t at every scale
  double t = 1.3;
  auto flat = p_values_A(fit_of(Family::Poly, {t}), fit_of(Family::Poly, {-t}));
  CHECK(flat.p_si == doctest::Approx(2 * flat.p_au).epsilon(1e-14));
  CHECK(flat.p_au == doctest::Approx(normal_upper(t)).epsilon(1e-14));
  auto c57 = p_values_A(fit_of(Family::Poly, {1.583}), fit_of(Family::Poly, {-1.008}));
  CHECK(std::abs(c57.p_si - 0.2006) < 5e-4);
  CHECK_THROWS(p_values_A(fit_of(Family::Sing, {1.0, 0.5, 0.3}), fit_of(Family::Poly, {0.0})));
}

TEST_CASE("procedure B matches A on poly.2") {
  auto h = fit_of(Family::Poly, {1.1, 0.4}), s = fit_of(Family::Poly, {-0.9, -0.4});
  auto a = p_values_A(h, s);
  for (int k : {2, 3, 4}) {
    auto b = p_values_B(h, s, k);
    CHECK(b.z_H == doctest::Approx(a.z_H).epsilon(1e-14));
    CHECK(b.z_S == doctest::Approx(a.z_S).epsilon(1e-14));
    CHECK(b.p_si == doctest::Approx(a.p_si).epsilon(1e-14));
  }
}

TEST_CASE("lung clusters through procedure B") {
  struct Case {
    int id;
    double z_H, t;
  };
  for (auto c : {Case{37, 2.401, 1.934}, Case{57, 1.583, 1.008}, Case{62, 2.265, 2.011}, Case{67, 1.657, -0.322}}) {
    CAPTURE(c.id);
    auto counts = lung_counts_H(c.id);
    auto fit = select_model(counts, default_candidates()).best;
    auto r = p_values_B(fit, negate(fit), 3);
    CHECK(std::abs(r.z_H - c.z_H) < 0.03);
    CHECK(std::abs(r.t_hat - c.t) < 0.03);
    CHECK(r.p_si >= r.p_au);
    CHECK(r.p_si <= 1.0);
  }
  auto fit57 = select_model(lung_counts_H(57), default_candidates()).best;
  auto r57 = p_values_B(fit57, negate(fit57), 3);
  CHECK(std::abs((1 - r57.p_si) - 0.799) < 0.005);
  auto fit67 = select_model(lung_counts_H(67), default_candidates()).best;
  auto r67 = p_values_B(fit67, negate(fit67), 3);
  CHECK(r67.p_si == 1.0);
  CHECK(r67.flags.negative_signed_distance);
  CHECK(r67.flags.clamped_si);
}

TEST_CASE("complement fit gives opposite psi") {
  auto fH = select_model(lung_counts_H(62), default_candidates()).best;
  auto fS = select_model(lung_counts_S(62), default_candidates()).best;
  CHECK(fH.spec == fS.spec);
  for (double s2 : {0.5, 1.0, 2.0})
    CHECK(std::abs(eval_model(fH.spec, fH.beta, s2) + eval_model(fS.spec, fS.beta, s2)) < 1e-3);
}

TEST_CASE("monotone in z_H") {
  double prev_au = 2, prev_si = 2;
  for (double z = -3; z <= 5; z += 0.25) {
    auto r = report_from_z(z, -0.5, 0.0);
    CHECK(r.p_au < prev_au);
    if (r.p_si < 1) CHECK(r.p_si < prev_si);
    prev_au = r.p_au;
    prev_si = r.p_si;
  }
}

TEST_CASE("far tail clamping") {
  auto r = report_from_z(40.0, -39.0, 39.5);
  CHECK(r.p_si <= 1.0);
  auto both = report_from_z(40.0, 5.0, 39.0);
  CHECK(both.p_si == 1.0);
  CHECK(both.flags.degenerate_fit);
}

TEST_CASE("ET-SI formula") {
  // flat halfspace: zproj = 0, psi1(S) = -psi1(H)
  double t = 1.7;
  CHECK(et_si_formula(t, 0.0, -t, 0.0) == doctest::Approx(2 * normal_upper(t)).epsilon(1e-14));
  double v = et_si_formula(1.2, 0.3, -1.2, -0.3);
  CHECK(v == doctest::Approx(normal_upper(1.2 - 0.6) / normal_upper(1.2 - 0.6 - 1.2 + 0.3)).epsilon(1e-14));
}

TEST_CASE("standard errors and serialization") {
  auto counts = lung_counts_H(57);
  auto fit = select_model(counts, default_candidates()).best;
  REQUIRE(fit.cov);
  auto r = p_values_B(fit, negate(fit), 3);
  add_standard_errors(r, fit, negate(fit), true, 3, 1.0, 1.0, true);
  REQUIRE(r.se_au);
  CHECK(*r.se_au > 0);
  CHECK(*r.se_au < 0.05);
  r.p_bp = p_bp(counts).p;
  r.model = fit.spec.name();
  auto back = report_from_json(to_json(r));
  CHECK(back.p_au == r.p_au);
  CHECK(back.p_si == r.p_si);
  CHECK(back.model == r.model);
  CHECK(back.flags.str() == r.flags.str());
  CHECK(report_tsv_header().rfind("cluster\tbp\tau\tsi\tt\tgamma\tmodel\tflags", 0) == 0);
}
