// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selboot/region_oracle.hpp"

namespace selboot {

struct SimTableRow {
  std::string key;    // "si3"
  std::string label;  // "SI (k=3)"
  std::vector<double> values;  // probabilities, one per theta
  std::optional<double> bias;
};

struct SimTable {
  std::string region;
  double alpha = 0.1;
  std::vector<double> thetas;
  std::vector<SimTableRow> rows;  // methods, then the selection probability row
};

using Progress = std::function<void(const std::string&)>;

std::vector<double> default_table_thetas();  // 0, 0.5, ..., 3.5

// Selective rejection probabilities on the boundary points theta, the bias
// column over theta_j = 0.05 j (j = 0..70) and the selection probability row.
// Cells run in parallel on cfg.threads workers.
SimTable run_region_table(const RegionSpec& region, const std::vector<PValueFn>& methods, double alpha,
                          const std::vector<double>& thetas, bool with_bias, const OracleConfig& cfg,
                          const Progress& progress = {});

// Percent with two decimals; the Bias column is "-" where not computed.
std::string to_tsv(const SimTable& t);
nlohmann::json to_json(const SimTable& t);

struct SphereCurve {
  std::string key, label;
  double minus_gamma = 0.0;
  std::vector<int> dims;
  std::vector<double> values;
};

std::vector<SphereCurve> run_sphere_curves(const std::vector<PValueFn>& methods,
                                           const std::vector<double>& minus_gammas, const std::vector<int>& dims,
                                           double alpha, const OracleConfig& cfg, const Progress& progress = {});
std::string to_tsv(const std::vector<SphereCurve>& c);
nlohmann::json to_json(const std::vector<SphereCurve>& c);

// Level-alpha threshold curves v*(u) for plotting rejection regions.
struct ContourSet {
  std::string region;
  double alpha = 0.1;
  std::vector<double> u;
  std::vector<double> boundary;
  std::vector<std::pair<std::string, std::vector<double>>> curves;
};

ContourSet run_contours(const RegionSpec& region, const std::vector<PValueFn>& methods, double alpha,
                        const std::vector<double>& u, const OracleConfig& cfg);
std::string to_tsv(const ContourSet& c);
nlohmann::json to_json(const ContourSet& c);

}  // namespace selboot
