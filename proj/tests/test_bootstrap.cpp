#include <doctest.h>

#include <cmath>
#include <sstream>

#include "selboot/bootstrap.hpp"
#include "selboot/core_stats.hpp"

using namespace selboot;

namespace {

DatasetMatrix small_data(std::size_t n, std::size_t p) {
  DatasetMatrix m;
  m.n = n;
  m.p = p;
  m.values.resize(n * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) m.at(i, j) = std::sin(1.0 + i * 0.7 + j * 1.3) + 0.01 * i;
  for (std::size_t i = 0; i < n; ++i) m.row_labels.push_back("r" + std::to_string(i));
  for (std::size_t j = 0; j < p; ++j) m.col_labels.push_back("c" + std::to_string(j));
  return m;
}

bool within(long C, long B, double p, double k = 3) {
  return std::abs(double(C) / B - p) <= k * std::sqrt(p * (1 - p) / B);
}

}  // namespace

TEST_CASE("default scale grid for n=916") {
  auto g = default_scale_grid(916);
  std::vector<long> want{8244, 5716, 3963, 2748, 1905, 1321, 916, 635, 440, 305, 211, 146, 101};
  REQUIRE(g.size() == 13);
  // stored by increasing sigma2, so n' decreases
  for (std::size_t i = 0; i < 13; ++i) {
    CHECK(*g.entries[i].nprime == want[i]);
    CHECK(g.entries[i].sigma2 == doctest::Approx(916.0 / want[i]).epsilon(1e-15));
  }
  CHECK(g.entries[6].sigma2 == 1.0);
}

TEST_CASE("default scale grid for n=13000") {
  auto g = default_scale_grid(13000);
  REQUIRE(g.size() == 13);
  for (std::size_t i = 0; i < 13; ++i) {
    double target = std::pow(9.0, (double(i) - 6) / 6);
    CHECK(std::abs(g.entries[i].sigma2 / target - 1) < 0.01);
    if (i) CHECK(*g.entries[i].nprime < *g.entries[i - 1].nprime);
  }
}

TEST_CASE("tiny n reports colliding n'") {
  try {
    default_scale_grid(5);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("collid") != std::string::npos);
  }
}

TEST_CASE("parametric counts") {
  auto grid = scale_grid_from_sigma2({0.5, 1.0, 2.0});
  std::vector<double> y0{0, 0}, y1{0, 1};
  long B = 20000;
  auto all = parametric_counts(y0, [](std::span<const double>) { return true; }, grid, B, 7);
  for (auto& r : all.rows) CHECK(r.C == B);
  auto half = [](std::span<const double> x) { return x[1] <= 0; };
  auto t0 = parametric_counts(y0, half, grid, B, 7);
  for (auto& r : t0.rows) CHECK(within(r.C, B, 0.5));
  auto t1 = parametric_counts(y1, half, scale_grid_from_sigma2({1.0}), B, 7);
  CHECK(within(t1.rows[0].C, B, normal_upper(1.0)));
}

TEST_CASE("parametric counts are thread independent") {
  auto grid = scale_grid_from_sigma2({0.25, 1.0, 4.0});
  std::vector<double> y{0.3, 0.8, -0.2};
  auto m = [](std::span<const double> x) { return x[0] + x[1] * x[1] < 1.0; };
  auto a = parametric_counts(y, m, grid, 5000, 99, 1);
  auto b = parametric_counts(y, m, grid, 5000, 99, 4);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].C == b.rows[i].C);
  auto c = parametric_counts(y, m, grid, 5000, 100, 1);
  bool differ = false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) differ |= a.rows[i].C != c.rows[i].C;
  CHECK(differ);
}

TEST_CASE("halfspace C/B decreases with 1/sigma") {
  auto grid = default_scale_grid(916);
  std::vector<double> y{0, 1.0};
  long B = 40000;
  auto t = parametric_counts(grid.entries.size() ? y : y, [](std::span<const double> x) { return x[1] <= 0; },
                             scale_grid_from_sigma2({1.0 / 9, 1.0 / 3, 1.0, 3.0, 9.0}), B, 3);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    double s = std::sqrt(t.rows[i].sigma2);
    CHECK(within(t.rows[i].C, B, normal_upper(1.0 / s), 4));
    if (i) CHECK(t.rows[i].C > t.rows[i - 1].C);
  }
}

TEST_CASE("nonparametric counts") {
  auto data = small_data(40, 4);
  auto grid = scale_grid_from_nprime(40, {80, 40, 20});
  long B = 8000;
  auto all = nonparametric_counts(data, [](const Replicate&) { return true; }, grid, B, 5);
  for (auto& r : all.rows) CHECK(r.C == B);
  // row 0 of the canonical ordering is the one with the smallest first value
  auto canon = canonical_row_order(data);
  double first = canon.at(0, 0);
  auto has_row0 = [first](const Replicate& r) {
    for (std::size_t i = 0; i < r.data->n; ++i)
      if (r.data->at(i, 0) == first && r.weights[i] > 0) return true;
    return false;
  };
  auto t = nonparametric_counts(data, has_row0, scale_grid_from_nprime(40, {40}), B, 5);
  CHECK(within(t.rows[0].C, B, 1 - std::pow(1 - 1.0 / 40, 40)));
}

TEST_CASE("nonparametric counts after canonical ordering ignore row order and thread count") {
  auto data = small_data(30, 3);
  auto perm = data;
  for (std::size_t i = 0; i < data.n; ++i)
    for (std::size_t j = 0; j < data.p; ++j) perm.at(i, j) = data.at(data.n - 1 - i, j);
  auto pred = [](const Replicate& r) {
    double s = 0;
    for (std::size_t i = 0; i < r.data->n; ++i) s += r.weights[i] * r.data->at(i, 1);
    return s / r.nprime > 0;
  };
  auto grid = scale_grid_from_nprime(30, {60, 30, 15});
  auto a = nonparametric_counts(canonical_row_order(data), pred, grid, 3000, 11, 1);
  auto b = nonparametric_counts(canonical_row_order(perm), pred, grid, 3000, 11, 3);
  auto c = nonparametric_counts(data, pred, grid, 3000, 11, 4);
  auto d = nonparametric_counts(data, pred, grid, 3000, 11, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.rows[i].C == b.rows[i].C);
    CHECK(c.rows[i].C == d.rows[i].C);
  }
}

TEST_CASE("replicate weights sum to n'") {
  auto data = small_data(10, 3);
  auto grid = scale_grid_from_nprime(10, {25, 7});
  nonparametric_counts(data, [](const Replicate& r) {
    double s = 0;
    for (double w : r.weights) s += w;
    CHECK(s == r.nprime);
    auto m = r.materialize();
    CHECK(m.n == std::size_t(r.nprime));
    return true;
  }, grid, 50, 1);
}

TEST_CASE("predicate failure policy") {
  auto data = small_data(10, 3);
  auto grid = scale_grid_from_nprime(10, {10});
  long calls = 0;
  auto flaky = [&calls](const Replicate&) -> bool {
    if (++calls % 4 == 0) throw std::runtime_error("boom");
    return true;
  };
  CHECK_THROWS_AS(nonparametric_counts(data, flaky, grid, 100, 1), ReplicateFailure);
  calls = 0;
  std::vector<long> failures;
  auto t = nonparametric_counts(data, flaky, grid, 100, 1, 1, FailurePolicy::SkipAndRecord, &failures);
  REQUIRE(failures.size() == 1);
  CHECK(failures[0] == 25);
  CHECK(t.rows[0].B == 75);
  CHECK(t.rows[0].C == 75);
}

TEST_CASE("count table round trips") {
  CountTable t;
  t.rows = {{0.5, 1832, 10000, 17}, {1.0, 916, 10000, 250}, {2.0, std::nullopt, 10000, 1500}};
  std::istringstream in(to_tsv(t));
  auto u = read_count_tsv(in);
  REQUIRE(u.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(u.rows[i].sigma2 == t.rows[i].sigma2);
    CHECK(u.rows[i].nprime == t.rows[i].nprime);
    CHECK(u.rows[i].C == t.rows[i].C);
  }
  auto v = count_table_from_json(to_json(t));
  CHECK(v.rows[2].C == 1500);
  auto c = complement(t);
  CHECK(c.rows[1].C == 9750);
}

TEST_CASE("count parse errors carry line numbers") {
  std::istringstream in("sigma2\tnprime\tB\tC\n1\t916\t100\t5\n2\t458\t100\t500\n");
  try {
    read_count_tsv(in, "counts.tsv");
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("counts.tsv") != std::string::npos);
  }
  std::istringstream bad("sigma2\tnprime\tB\tC\n1\t916\tx\t5\n");
  CHECK_THROWS_AS(read_count_tsv(bad), ParseError);
}

TEST_CASE("csv round trip") {
  auto d = small_data(5, 3);
  std::ostringstream out;
  write_csv(out, d);
  std::istringstream in(out.str());
  auto e = read_csv(in);
  CHECK(e.n == 5);
  CHECK(e.p == 3);
  CHECK(e.col_labels == d.col_labels);
  for (std::size_t k = 0; k < d.values.size(); ++k) CHECK(e.values[k] == doctest::Approx(d.values[k]).epsilon(1e-15));
  std::istringstream missing(",a,b,c\nr1,1,,3\nr2,1,2,3\n");
  CHECK_THROWS(read_csv(missing));
}
