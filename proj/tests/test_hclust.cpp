#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "selboot/hclust.hpp"
#include "test_util.hpp"

using namespace selboot;

namespace {

DistanceMatrix from_lower(std::size_t p, std::vector<double> lower) {
  DistanceMatrix d;
  d.p = p;
  d.lower = std::move(lower);
  return d;
}

DatasetMatrix gaussian_data(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  DatasetMatrix m;
  m.n = n;
  m.p = p;
  m.values.resize(n * p);
  for (auto& v : m.values) v = nd(gen);
  for (std::size_t j = 0; j < p; ++j) m.col_labels.push_back("t" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) m.row_labels.push_back("g" + std::to_string(i));
  return m;
}

// columns 0 and 1 share a strong signal, column 2 is noise
DatasetMatrix tight_pair(std::size_t n, double noise, std::uint64_t seed) {
  auto m = gaussian_data(n, 3, seed);
  std::mt19937_64 gen(seed + 1);
  std::normal_distribution<double> nd;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 2 * nd(gen);
    m.at(i, 0) = s + noise * m.at(i, 0);
    m.at(i, 1) = s + noise * m.at(i, 1);
  }
  return m;
}

}  // namespace

TEST_CASE("distances") {
  DatasetMatrix m;
  m.n = 1;
  m.p = 3;
  m.values = {0.0, 2.0, 2.0};
  auto d = distance(m, Metric::EuclidSqMean);
  CHECK(d(1, 0) == 4.0);
  CHECK(d(0, 1) == 4.0);
  CHECK(d(2, 1) == 0.0);
  CHECK(d(1, 1) == 0.0);
  auto r = gaussian_data(50, 4, 3);
  auto c = distance(r, Metric::Correlation);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      CHECK(c(i, j) >= 0);
      CHECK(c(i, j) <= 2);
    }
  r.at(0, 2) = 0;
  for (std::size_t i = 0; i < r.n; ++i) r.at(i, 2) = 1.5;
  try {
    distance(r, Metric::Correlation);
    FAIL("expected an error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("t2") != std::string::npos);
  }
  CHECK(parse_metric("correlation") == Metric::Correlation);
  CHECK_THROWS(parse_metric("manhattan"));
}

TEST_CASE("replicate distance with unit weights equals the plain distance") {
  auto r = gaussian_data(20, 5, 9);
  std::vector<double> w(20, 1.0);
  Replicate rep{&r, w, 20};
  for (auto metric : {Metric::EuclidSqMean, Metric::Correlation}) {
    auto a = distance(r, metric), b = distance(rep, metric);
    for (std::size_t k = 0; k < a.lower.size(); ++k) CHECK(b.lower[k] == doctest::Approx(a.lower[k]).epsilon(1e-12));
  }
}

TEST_CASE("average linkage by hand") {
  auto dend = average_linkage(from_lower(3, {1.0, 4.0, 5.0}));
  REQUIRE(dend.merges.size() == 2);
  CHECK(dend.merges[0].left == -1);
  CHECK(dend.merges[0].right == -2);
  CHECK(dend.merges[0].height == 1.0);
  CHECK(dend.merges[1].height == 4.5);
  CHECK(dend.members[1] == std::vector<std::size_t>{0, 1, 2});
  CHECK(dend.monotone);
  auto cl = clusters_of(dend);
  REQUIRE(cl.size() == 1);
  CHECK(cl[0] == ClusterId{0, 1});
}

TEST_CASE("ties are broken by smallest labels") {
  auto dend = average_linkage(from_lower(4, {1, 1, 1, 1, 1, 1}));
  CHECK(dend.members[0] == std::vector<std::size_t>{0, 1});
  // (min labels) pairs after the first merge: (0,2) < (0,3) < (2,3)
  CHECK(dend.members[1] == std::vector<std::size_t>{0, 1, 2});
  // mixture population at a = 1: d12 = d13 = 2.5, d23 = 3
  auto pop = average_linkage(from_lower(3, {2.5, 2.5, 3.0}));
  CHECK(pop.members[0] == std::vector<std::size_t>{0, 1});
}

TEST_CASE("clusters of a larger dendrogram") {
  auto data = gaussian_data(30, 73, 5);
  auto dend = average_linkage(distance(data, Metric::EuclidSqMean));
  auto cl = clusters_of(dend);
  CHECK(cl.size() == 71);
  std::set<ClusterId> seen;
  for (std::size_t i = 0; i < cl.size(); ++i) {
    CHECK(cl[i].size() >= 2);
    CHECK(cl[i].size() <= 72);
    CHECK(std::is_sorted(cl[i].begin(), cl[i].end()));
    CHECK(seen.insert(cl[i]).second);
  }
  // each merge joins two earlier nodes
  for (std::size_t k = 0; k < dend.merges.size(); ++k)
    for (int node : {dend.merges[k].left, dend.merges[k].right})
      if (node > 0) CHECK(std::size_t(node) <= k);
  for (std::size_t k = 1; k < dend.merges.size(); ++k) CHECK(dend.merges[k].height >= dend.merges[k - 1].height);
}

TEST_CASE("multiscale counts") {
  auto data = tight_pair(60, 0.3, 21);
  HclustConfig cfg;
  auto grid = scale_grid_from_nprime(60, {60});
  auto res = multiscale_cluster_counts(data, {{0, 1}, {1, 2}}, grid, 400, 3, cfg);
  REQUIRE(res.tables.size() == 2);
  CHECK(res.tables[0].rows[0].C >= 396);
  CHECK(res.tables[1].rows[0].C <= 4);
  // row order does not matter
  auto rev = data;
  for (std::size_t i = 0; i < data.n; ++i)
    for (std::size_t j = 0; j < 3; ++j) rev.at(i, j) = data.at(data.n - 1 - i, j);
  auto grid3 = scale_grid_from_nprime(60, {120, 60, 20});
  auto a = multiscale_cluster_counts(data, {{0, 2}}, grid3, 300, 8, cfg);
  cfg.threads = 3;
  auto b = multiscale_cluster_counts(rev, {{0, 2}}, grid3, 300, 8, cfg);
  for (std::size_t s = 0; s < 3; ++s) CHECK(a.tables[0].rows[s].C == b.tables[0].rows[s].C);
}

TEST_CASE("mixture data moments") {
  for (double a : {0.0, 1.0}) {
    std::size_t n = 4000;
    auto m = mixture_sim(a, n, 77);
    REQUIRE(m.p == 3);
    std::vector<double> want{a, a / 2, a / 2};
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += m.at(i, j);
      double sd = std::sqrt(1 + (j ? a * a / 4 : 0.0));
      CHECK(std::abs(s / n - want[j]) < 4 * sd / std::sqrt(double(n)));
    }
  }
  auto x = mixture_sim(0.5, 10, 1), y = mixture_sim(0.5, 10, 1);
  CHECK(x.values == y.values);
}

TEST_CASE("cluster selection partitions at a = 0") {
  long D = 900;
  std::map<ClusterId, long> hits;
  for (long d = 0; d < D; ++d) {
    auto data = mixture_sim(0.0, 100, 1000 + d);
    hits[clusters_of(average_linkage(distance(data, Metric::EuclidSqMean)))[0]]++;
  }
  long total = 0;
  double se = std::sqrt((1.0 / 3) * (2.0 / 3) / D);
  for (auto& [c, h] : hits) {
    total += h;
    CHECK(std::abs(double(h) / D - 1.0 / 3) < 3 * se);
  }
  CHECK(total == D);
  CHECK(hits.size() == 3);
}

TEST_CASE("cluster reports from fixture counts") {
  std::optional<FitResult> fit;
  auto r57 = cluster_report(lung_counts_S(57), 3, default_candidates(), &fit);
  REQUIRE(fit);
  CHECK(fit->spec.name() == "poly.3");
  CHECK(std::abs((1 - r57.p_si) - 0.799) < 0.01);
  CHECK(r57.p_bp == doctest::Approx(1 - 0.6807));
  auto r67 = cluster_report(lung_counts_S(67), 3, default_candidates(), &fit);
  CHECK(fit->spec.name() == "sing.3");
  CHECK(r67.p_si == 1.0);
  CountTable all;
  for (auto& e : default_scale_grid(916).entries) all.rows.push_back({e.sigma2, e.nprime, 1000, 1000});
  auto deg = cluster_report(all, 3, default_candidates(), &fit);
  CHECK_FALSE(fit);
  CHECK(deg.flags.degenerate_fit);
  CHECK(deg.p_bp == 0.0);
  CHECK(std::isnan(deg.p_au));
}

TEST_CASE("pvclust is invariant to relabelled column permutations") {
  auto data = gaussian_data(40, 5, 12);
  for (std::size_t i = 0; i < data.n; ++i) data.at(i, 3) += data.at(i, 1);
  auto grid = default_scale_grid(40 * 10);
  grid = scale_grid_from_nprime(40, {120, 80, 40, 20, 13});
  HclustConfig cfg;
  auto a = pvclust_run(data, grid, 200, 5, cfg);
  std::vector<std::size_t> perm{4, 2, 0, 3, 1};
  DatasetMatrix q = data;
  for (std::size_t j = 0; j < 5; ++j) {
    q.col_labels[j] = data.col_labels[perm[j]];
    for (std::size_t i = 0; i < data.n; ++i) q.at(i, j) = data.at(i, perm[j]);
  }
  auto b = pvclust_run(q, grid, 200, 5, cfg);
  std::map<std::set<std::string>, std::vector<long>> ca, cb;
  auto key = [](const ClusterReport& c, const std::vector<std::string>& labels) {
    std::set<std::string> s;
    for (auto i : c.cluster) s.insert(labels[i]);
    return s;
  };
  for (auto& c : a.clusters)
    for (auto& r : c.counts_S.rows) ca[key(c, a.labels)].push_back(r.C);
  for (auto& c : b.clusters)
    for (auto& r : c.counts_S.rows) cb[key(c, b.labels)].push_back(r.C);
  CHECK(ca == cb);
}

TEST_CASE("pvclust output and determinism") {
  auto data = mixture_sim(1.0, 300, 4);
  auto grid = default_scale_grid(300);
  HclustConfig cfg;
  auto a = pvclust_run(data, grid, 300, 9, cfg);
  cfg.threads = 4;
  auto b = pvclust_run(data, grid, 300, 9, cfg);
  CHECK(pvclust_tsv(a) == pvclust_tsv(b));
  CHECK(newick(a) == newick(b));
  CHECK(a.clusters.size() == 1);
  CHECK(pvclust_tsv(a).rfind("cluster_id\tmembers\tbp\tau\tsi\tt\tgamma\tmodel\tflags", 0) == 0);
  CHECK(newick(a).find('[') != std::string::npos);
  auto j = to_json(a);
  CHECK(j["clusters"].size() == 1);
}

TEST_CASE("mixture simulation is thread independent") {
  MixtureSimConfig cfg;
  cfg.n = 100;
  cfg.datasets = 30;
  cfg.B = 100;
  auto a = mixture_simulation(cfg, 5, 1), b = mixture_simulation(cfg, 5, 4);
  CHECK(to_tsv(a) == to_tsv(b));
  CHECK(a.selected > 0);
  CHECK(a.selected < 30);
  CHECK(a.methods.size() == a.rejections.size());
}
