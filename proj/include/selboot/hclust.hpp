// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selboot/bootstrap.hpp"
#include "selboot/pvalues.hpp"
#include "selboot/scaling_models.hpp"

namespace selboot {

enum class Metric { EuclidSqMean, Correlation };

Metric parse_metric(const std::string& s);  // "euclid", "correlation"
std::string metric_name(Metric m);

// Distances between the p columns (items). Lower triangle, row-wise:
// entry (i, j) with i > j sits at i*(i-1)/2 + j.
struct DistanceMatrix {
  std::size_t p = 0;
  std::vector<double> lower;
  Metric metric = Metric::EuclidSqMean;
  double operator()(std::size_t i, std::size_t j) const;
};

// euclid: (1/n) sum_t (x_ti - x_tj)^2. correlation: 1 - cor(x_i, x_j).
DistanceMatrix distance(const DatasetMatrix& data, Metric metric);
// Same on a resampled replicate, weighting rows by their multiplicities.
DistanceMatrix distance(const Replicate& rep, Metric metric);

// Node ids follow the usual convention: leaf i is -(i+1), the cluster made
// by merge k (0-based) is k+1.
struct Merge {
  int left = 0, right = 0;
  double height = 0.0;
};

struct Dendrogram {
  std::size_t p = 0;
  std::vector<Merge> merges;
  std::vector<std::vector<std::size_t>> members;  // sorted leaves per merge
  bool monotone = true;  // heights nondecreasing
};

// Average linkage (UPGMA). Ties go to the pair whose smallest member
// indices are lexicographically smallest.
Dendrogram average_linkage(const DistanceMatrix& d);

// Nontrivial clusters as sorted leaf-index sets, bottom to top.
using ClusterId = std::vector<std::size_t>;
std::vector<ClusterId> clusters_of(const Dendrogram& dend);

std::string cluster_members(const ClusterId& c, const std::vector<std::string>& labels);

struct HclustConfig {
  Metric metric = Metric::EuclidSqMean;
  int k = 3;
  std::vector<ModelSpec> candidates = default_candidates();
  int threads = 1;
  FailurePolicy policy = FailurePolicy::Error;
};

// C(G) per target cluster and scale. Rows are put in canonical order first
// so the counts do not depend on the input row order.
NonparametricResult multiscale_cluster_counts(const DatasetMatrix& data, const std::vector<ClusterId>& targets,
                                              const ScaleGrid& grid, long B, std::uint64_t seed,
                                              const HclustConfig& cfg);

// n x 3 draws from 0.5 N(mu1, I) + 0.5 N(mu2, I), mu1 = (a, a, 0),
// mu2 = (a, 0, a).
DatasetMatrix mixture_sim(double a, std::size_t n, std::uint64_t seed);

struct ClusterReport {
  std::size_t number = 0;  // 1-based, by merge height
  ClusterId cluster;
  std::string members;
  CountTable counts_S;  // replicates in which the cluster appears
  std::optional<FitResult> fit;  // fit of H = "cluster is not true"
  PValueReport report;           // p-values of H
};

struct PvclustResult {
  std::vector<std::string> labels;
  Dendrogram dendrogram;
  std::vector<ClusterReport> clusters;
  std::vector<long> failures;
};

// Per-cluster reports; a cluster that cannot be fitted keeps its bootstrap
// probability and the degenerate flag instead of aborting the run.
PValueReport cluster_report(const CountTable& counts_S, int k, const std::vector<ModelSpec>& candidates,
                            std::optional<FitResult>* fit_out = nullptr);

PvclustResult pvclust_run(const DatasetMatrix& data, const ScaleGrid& grid, long B, std::uint64_t seed,
                          const HclustConfig& cfg);

std::string pvclust_tsv(const PvclustResult& r);
nlohmann::json to_json(const PvclustResult& r);
// Newick with [si,au,bp] = (1-p)*100 on internal nodes.
std::string newick(const PvclustResult& r);

struct MixtureSimConfig {
  double a = 0.0;
  std::size_t n = 1000;
  long datasets = 2000;
  long B = 1000;
  double alpha = 0.1;
  HclustConfig hclust;
};

struct MixtureSimResult {
  double a = 0.0;
  std::size_t n = 0;
  long datasets = 0, B = 0;
  double alpha = 0.1;
  long selected = 0;  // datasets in which {1,2} appears
  long degenerate = 0;
  std::vector<std::string> methods;  // bp, au3, 2bp, 2au3, si3
  std::vector<long> rejections;
  std::vector<double> rates() const;  // rejections / selected
};

// Tests H: "cluster {1,2} is not true" whenever {1,2} appears.
MixtureSimResult mixture_simulation(const MixtureSimConfig& cfg, std::uint64_t seed, int threads,
                                    const std::function<void(const std::string&)>& progress = {});
std::string to_tsv(const MixtureSimResult& r);
nlohmann::json to_json(const MixtureSimResult& r);

}  // namespace selboot
