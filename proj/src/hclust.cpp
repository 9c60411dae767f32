// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/hclust.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstdio>
#include <functional>
#include <mutex>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "selboot/core_stats.hpp"
#include "selboot/parallel.hpp"
#include "selboot/rng.hpp"
#include "selboot/simd.hpp"

namespace selboot {

Metric parse_metric(const std::string& s) {
  if (s == "euclid" || s == "euclidean" || s == "euclid_sq_mean") return Metric::EuclidSqMean;
  if (s == "correlation" || s == "cor") return Metric::Correlation;
  throw std::invalid_argument("unknown metric '" + s + "' (expected euclid or correlation)");
}

std::string metric_name(Metric m) { return m == Metric::EuclidSqMean ? "euclid" : "correlation"; }

double DistanceMatrix::operator()(std::size_t i, std::size_t j) const {
  if (i == j) return 0.0;
  if (i < j) std::swap(i, j);
  return lower[i * (i - 1) / 2 + j];
}

namespace {

// Weighted column distances; w == nullptr means unit weights.
DistanceMatrix column_distances(const DatasetMatrix& data, const double* w, double total, Metric metric,
                                const std::vector<std::string>& labels) {
  const std::size_t n = data.n, p = data.p;
  DistanceMatrix d;
  d.p = p;
  d.metric = metric;
  d.lower.resize(p * (p - 1) / 2);
  const std::vector<double> ones(n, 1.0);
  if (!w) w = ones.data();
  if (metric == Metric::EuclidSqMean) {
    for (std::size_t i = 1; i < p; ++i)
      for (std::size_t j = 0; j < i; ++j)
        d.lower[i * (i - 1) / 2 + j] = simd::weighted_sq_diff_sum(w, data.column(i), data.column(j), n) / total;
    return d;
  }
  // centred, scaled columns; then 1 - weighted inner product
  std::vector<double> z(n * p);
  std::vector<std::string> flat;
  for (std::size_t j = 0; j < p; ++j) {
    const double* x = data.column(j);
    double m = simd::weighted_dot(w, x, ones.data(), n) / total;
    double* zj = z.data() + j * n;
    for (std::size_t t = 0; t < n; ++t) zj[t] = x[t] - m;
    double v = simd::weighted_dot(w, zj, zj, n) / total;
    if (!(v > 0)) flat.push_back(j < labels.size() ? labels[j] : std::to_string(j + 1));
    double s = v > 0 ? 1.0 / std::sqrt(v) : 0.0;
    for (std::size_t t = 0; t < n; ++t) zj[t] *= s;
  }
  if (!flat.empty()) {
    std::string names;
    for (const auto& f : flat) names += (names.empty() ? "" : ", ") + f;
    throw std::domain_error("correlation distance: zero variance in column(s) " + names);
  }
  for (std::size_t i = 1; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      double r = simd::weighted_dot(w, z.data() + i * n, z.data() + j * n, n) / total;
      d.lower[i * (i - 1) / 2 + j] = std::max(0.0, 1.0 - r);
    }
  return d;
}

using Mask = std::vector<std::uint64_t>;

Mask to_mask(const ClusterId& c, std::size_t p) {
  Mask m((p + 63) / 64, 0);
  for (std::size_t i : c) m[i / 64] |= std::uint64_t{1} << (i % 64);
  return m;
}

std::string fmt(double x, const char* f = "%.4f") {
  if (!std::isfinite(x)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

}  // namespace

DistanceMatrix distance(const DatasetMatrix& data, Metric metric) {
  // one row is enough for a distance; the n >= 2 rule is for resampling
  if (data.n < 1 || data.p < 2 || data.values.size() != data.n * data.p)
    throw std::invalid_argument("distance: need an n x p matrix with n >= 1, p >= 2");
  for (double v : data.values)
    if (!std::isfinite(v)) throw std::invalid_argument("distance: missing or non-finite value");
  return column_distances(data, nullptr, static_cast<double>(data.n), metric, data.col_labels);
}

DistanceMatrix distance(const Replicate& rep, Metric metric) {
  return column_distances(*rep.data, rep.weights.data(), static_cast<double>(rep.nprime), metric,
                          rep.data->col_labels);
}

Dendrogram average_linkage(const DistanceMatrix& d) {
  const std::size_t p = d.p;
  if (p < 3) throw std::invalid_argument("average_linkage: need at least 3 items");
  std::vector<double> D(p * p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) D[i * p + j] = d(i, j);
  std::vector<char> active(p, 1);
  std::vector<std::size_t> size(p, 1), minlab(p);
  std::vector<int> node(p);
  std::vector<std::vector<std::size_t>> mem(p);
  for (std::size_t i = 0; i < p; ++i) {
    minlab[i] = i;
    node[i] = -static_cast<int>(i) - 1;
    mem[i] = {i};
  }
  Dendrogram out;
  out.p = p;
  for (std::size_t step = 0; step + 1 < p; ++step) {
    std::size_t bi = 0, bj = 0;
    auto best = std::make_tuple(std::numeric_limits<double>::infinity(), p, p);
    for (std::size_t i = 0; i < p; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < p; ++j) {
        if (!active[j]) continue;
        auto lo = std::min(minlab[i], minlab[j]), hi = std::max(minlab[i], minlab[j]);
        auto key = std::make_tuple(D[i * p + j], lo, hi);
        if (key < best) {
          best = key;
          bi = i;
          bj = j;
        }
      }
    }
    if (minlab[bj] < minlab[bi]) std::swap(bi, bj);
    Merge m{node[bi], node[bj], std::get<0>(best)};
    if (!out.merges.empty() && m.height < out.merges.back().height) out.monotone = false;
    out.merges.push_back(m);
    std::vector<std::size_t> joined = mem[bi];
    joined.insert(joined.end(), mem[bj].begin(), mem[bj].end());
    std::sort(joined.begin(), joined.end());
    out.members.push_back(joined);
    // Lance-Williams update for the unweighted average
    const double ni = static_cast<double>(size[bi]), nj = static_cast<double>(size[bj]);
    for (std::size_t k = 0; k < p; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      double v = (ni * D[bi * p + k] + nj * D[bj * p + k]) / (ni + nj);
      D[bi * p + k] = D[k * p + bi] = v;
    }
    active[bj] = 0;
    size[bi] += size[bj];
    minlab[bi] = std::min(minlab[bi], minlab[bj]);
    mem[bi] = std::move(joined);
    node[bi] = static_cast<int>(step) + 1;
  }
  return out;
}

std::vector<ClusterId> clusters_of(const Dendrogram& dend) {
  std::vector<ClusterId> out;
  for (std::size_t k = 0; k + 1 < dend.merges.size(); ++k) out.push_back(dend.members[k]);
  return out;
}

std::string cluster_members(const ClusterId& c, const std::vector<std::string>& labels) {
  std::string s;
  for (std::size_t i : c) {
    if (!s.empty()) s += ',';
    s += i < labels.size() ? labels[i] : std::to_string(i + 1);
  }
  return s;
}

NonparametricResult multiscale_cluster_counts(const DatasetMatrix& data_in, const std::vector<ClusterId>& targets,
                                              const ScaleGrid& grid, long B, std::uint64_t seed,
                                              const HclustConfig& cfg) {
  data_in.validate();
  DatasetMatrix data = canonical_row_order(data_in);
  const std::size_t p = data.p;
  std::vector<Mask> want;
  for (const auto& t : targets) {
    for (std::size_t i : t)
      if (i >= p) throw std::invalid_argument("target cluster refers to column " + std::to_string(i + 1));
    want.push_back(to_mask(t, p));
  }
  auto stat = [&](const Replicate& rep, std::vector<char>& hit) {
    Dendrogram dd = average_linkage(distance(rep, cfg.metric));
    std::vector<Mask> have;
    for (std::size_t k = 0; k + 1 < dd.members.size(); ++k) have.push_back(to_mask(dd.members[k], p));
    for (std::size_t t = 0; t < want.size(); ++t)
      hit[t] = std::find(have.begin(), have.end(), want[t]) != have.end() ? 1 : 0;
  };
  return nonparametric_multi_counts(data, stat, targets.size(), grid, B, seed, cfg.threads, cfg.policy);
}

DatasetMatrix mixture_sim(double a, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("mixture_sim: n must be >= 1");
  DatasetMatrix m;
  m.n = n;
  m.p = 3;
  m.values.resize(n * 3);
  m.col_labels = {"1", "2", "3"};
  auto eng = substream(seed, 0x6d697874u, 0);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    bool first = coin(eng);
    double mu[3] = {a, first ? a : 0.0, first ? 0.0 : a};
    for (std::size_t j = 0; j < 3; ++j) m.at(i, j) = mu[j] + z(eng);
  }
  return m;
}

PValueReport cluster_report(const CountTable& counts_S, int k, const std::vector<ModelSpec>& candidates,
                            std::optional<FitResult>* fit_out) {
  CountTable H = complement(counts_S);
  BootstrapProb bp = p_bp(H);
  PValueReport r;
  try {
    auto sel = select_model(H, candidates);
    FitResult fS = negate(sel.best);
    r = p_values_B(sel.best, fS, k, 1.0, 1.0);
    add_standard_errors(r, sel.best, fS, true, k, 1.0, 1.0, true);
    if (fit_out) *fit_out = sel.best;
  } catch (const DegenerateFit&) {
    if (fit_out) fit_out->reset();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.z_H = r.z_S = r.t_hat = r.gamma_hat = r.p_au = r.p_si = nan;
    r.model = "-";
    r.flags.degenerate_fit = true;
  }
  r.p_bp = bp.p;
  r.flags.bp_boundary = bp.boundary;
  return r;
}

PvclustResult pvclust_run(const DatasetMatrix& data, const ScaleGrid& grid, long B, std::uint64_t seed,
                          const HclustConfig& cfg) {
  data.validate();
  PvclustResult res;
  res.labels = data.col_labels;
  if (res.labels.size() != data.p) {
    res.labels.clear();
    for (std::size_t j = 0; j < data.p; ++j) res.labels.push_back(std::to_string(j + 1));
  }
  res.dendrogram = average_linkage(distance(data, cfg.metric));
  auto targets = clusters_of(res.dendrogram);
  auto counts = multiscale_cluster_counts(data, targets, grid, B, seed, cfg);
  res.failures = counts.failures;
  res.clusters.resize(targets.size());
  parallel_for(targets.size(), cfg.threads, [&](std::size_t i) {
    auto& c = res.clusters[i];
    c.number = i + 1;
    c.cluster = targets[i];
    c.members = cluster_members(targets[i], res.labels);
    c.counts_S = counts.tables[i];
    c.report = cluster_report(c.counts_S, cfg.k, cfg.candidates, &c.fit);
  });
  return res;
}

std::string pvclust_tsv(const PvclustResult& r) {
  std::ostringstream os;
  os << "cluster_id\tmembers\tbp\tau\tsi\tt\tgamma\tmodel\tflags\n";
  for (const auto& c : r.clusters) {
    const auto& p = c.report;
    os << c.number << '\t' << c.members << '\t' << fmt(p.p_bp) << '\t' << fmt(p.p_au) << '\t' << fmt(p.p_si) << '\t'
       << fmt(p.t_hat) << '\t' << fmt(p.gamma_hat) << '\t' << p.model << '\t' << p.flags.str() << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const PvclustResult& r) {
  nlohmann::json j;
  j["labels"] = r.labels;
  j["merges"] = nlohmann::json::array();
  for (const auto& m : r.dendrogram.merges)
    j["merges"].push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}});
  j["monotone"] = r.dendrogram.monotone;
  j["failures"] = r.failures;
  j["clusters"] = nlohmann::json::array();
  for (const auto& c : r.clusters) {
    nlohmann::json cj = {{"cluster_id", c.number}, {"members", c.members}, {"counts", to_json(c.counts_S)},
                         {"report", to_json(c.report)}};
    if (c.fit) cj["fit"] = to_json(*c.fit);
    j["clusters"].push_back(cj);
  }
  j["newick"] = newick(r);
  return j;
}

std::string newick(const PvclustResult& r) {
  const auto& d = r.dendrogram;
  auto pct = [](double p) { return std::isfinite(p) ? fmt(100.0 * (1.0 - p), "%.0f") : std::string("NA"); };
  std::function<std::string(int, double)> rec = [&](int node, double parent_h) -> std::string {
    if (node < 0) {
      std::size_t leaf = static_cast<std::size_t>(-node - 1);
      return r.labels[leaf] + ":" + fmt(parent_h, "%.6g");
    }
    std::size_t k = static_cast<std::size_t>(node - 1);
    const auto& m = d.merges[k];
    std::string s = "(" + rec(m.left, m.height) + "," + rec(m.right, m.height) + ")";
    if (k < r.clusters.size()) {
      const auto& p = r.clusters[k].report;
      s += "[" + pct(p.p_si) + "," + pct(p.p_au) + "," + pct(p.p_bp) + "]";
      s += ":" + fmt(parent_h - m.height, "%.6g");
    }
    return s;
  };
  return rec(static_cast<int>(d.merges.size()), 0.0) + ";";
}

std::vector<double> MixtureSimResult::rates() const {
  std::vector<double> out;
  for (long r : rejections) out.push_back(selected > 0 ? static_cast<double>(r) / selected : 0.0);
  return out;
}

MixtureSimResult mixture_simulation(const MixtureSimConfig& cfg, std::uint64_t seed, int threads,
                                    const std::function<void(const std::string&)>& progress) {
  if (cfg.datasets < 1 || cfg.B < 1) throw std::invalid_argument("mixture simulation: datasets and B must be >= 1");
  const int k = cfg.hclust.k;
  MixtureSimResult res;
  res.a = cfg.a;
  res.n = cfg.n;
  res.datasets = cfg.datasets;
  res.B = cfg.B;
  res.alpha = cfg.alpha;
  res.methods = {"bp", "au" + std::to_string(k), "2bp", "2au" + std::to_string(k), "si" + std::to_string(k)};
  const ScaleGrid grid = default_scale_grid(static_cast<long>(cfg.n));
  const ClusterId target{0, 1};
  // per dataset: selected, degenerate, then one flag per method
  const std::size_t stride = 2 + res.methods.size();
  std::vector<char> out(static_cast<std::size_t>(cfg.datasets) * stride, 0);
  std::atomic<long> done{0};
  std::mutex mu;
  HclustConfig hc = cfg.hclust;
  hc.threads = 1;
  parallel_for(static_cast<std::size_t>(cfg.datasets), threads, [&](std::size_t d) {
    std::uint64_t dseed = substream(seed, 0x64617461u, d)();
    DatasetMatrix data = mixture_sim(cfg.a, cfg.n, dseed);
    auto cl = clusters_of(average_linkage(distance(data, hc.metric)));
    char* o = &out[d * stride];
    if (std::find(cl.begin(), cl.end(), target) != cl.end()) {
      o[0] = 1;
      auto counts = multiscale_cluster_counts(data, {target}, grid, cfg.B, dseed, hc);
      PValueReport r = cluster_report(counts.tables[0], k, hc.candidates);
      o[1] = r.flags.degenerate_fit;
      const double a = cfg.alpha;
      o[2] = r.p_bp < a;
      o[3] = r.p_au < a;
      o[4] = 2 * r.p_bp < a;
      o[5] = 2 * r.p_au < a;
      o[6] = r.p_si < a;
    }
    long fin = ++done;
    if (progress && (fin % std::max<long>(1, cfg.datasets / 20) == 0 || fin == cfg.datasets)) {
      std::lock_guard<std::mutex> lock(mu);
      progress("mixture-sim: " + std::to_string(fin) + "/" + std::to_string(cfg.datasets));
    }
  });
  res.rejections.assign(res.methods.size(), 0);
  for (long d = 0; d < cfg.datasets; ++d) {
    const char* o = &out[static_cast<std::size_t>(d) * stride];
    res.selected += o[0];
    res.degenerate += o[1];
    for (std::size_t m = 0; m < res.methods.size(); ++m) res.rejections[m] += o[2 + m];
  }
  return res;
}

std::string to_tsv(const MixtureSimResult& r) {
  std::ostringstream os;
  os << "a\tn\tdatasets\tB\tselected\tmethod\trejections\tpercent\n";
  auto rates = r.rates();
  for (std::size_t m = 0; m < r.methods.size(); ++m)
    os << fmt(r.a, "%g") << '\t' << r.n << '\t' << r.datasets << '\t' << r.B << '\t' << r.selected << '\t'
       << r.methods[m] << '\t' << r.rejections[m] << '\t' << fmt(100.0 * rates[m], "%.2f") << '\n';
  return os.str();
}

nlohmann::json to_json(const MixtureSimResult& r) {
  nlohmann::json j = {{"a", r.a},
                      {"n", r.n},
                      {"datasets", r.datasets},
                      {"B", r.B},
                      {"alpha", r.alpha},
                      {"selected", r.selected},
                      {"selection_rate", static_cast<double>(r.selected) / static_cast<double>(r.datasets)},
                      {"degenerate", r.degenerate}};
  auto rates = r.rates();
  for (std::size_t m = 0; m < r.methods.size(); ++m)
    j["methods"][r.methods[m]] = {{"rejections", r.rejections[m]}, {"rate", rates[m]}};
  return j;
}

}  // namespace selboot
