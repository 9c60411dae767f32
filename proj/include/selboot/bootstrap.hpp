// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace selboot {

struct ScaleEntry {
  std::optional<long> nprime;
  double sigma2 = 1.0;
};

struct ScaleGrid {
  std::vector<ScaleEntry> entries;  // sorted by sigma2
  std::optional<long> n;
  std::size_t size() const { return entries.size(); }
};

// 13 scales, n' = floor(n / s) for s log-evenly spaced on [1/9, 9], and the
// realized sigma2 = n / n'. Throws with the colliding n' values when n is too
// small to keep them distinct.
ScaleGrid default_scale_grid(long n);

// Same rounding rule for arbitrary sigma2 targets.
ScaleGrid scale_grid_from_targets(long n, const std::vector<double>& sigma2_targets);
ScaleGrid scale_grid_from_nprime(long n, const std::vector<long>& nprime);
// Parametric grid: no sample size attached.
ScaleGrid scale_grid_from_sigma2(const std::vector<double>& sigma2);

struct CountRow {
  double sigma2 = 1.0;
  std::optional<long> nprime;
  long B = 0;
  long C = 0;
};

struct CountTable {
  std::vector<CountRow> rows;
  void validate() const;
};

// Counts of the complement region: C -> B - C.
CountTable complement(const CountTable& t);

std::string to_tsv(const CountTable& t);
// Header `sigma2\tnprime\tB\tC`; nprime may be "NA". Errors carry the line
// number and the source name.
CountTable read_count_tsv(std::istream& in, const std::string& source = "<input>");
nlohmann::json to_json(const CountTable& t);
CountTable count_table_from_json(const nlohmann::json& j);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, long line, const std::string& what);
  long line() const { return line_; }

 private:
  long line_;
};

// Column-major n x p matrix: rows are sampling units, columns are items.
struct DatasetMatrix {
  std::size_t n = 0, p = 0;
  std::vector<double> values;
  std::vector<std::string> row_labels, col_labels;

  double at(std::size_t i, std::size_t j) const { return values[j * n + i]; }
  double& at(std::size_t i, std::size_t j) { return values[j * n + i]; }
  const double* column(std::size_t j) const { return values.data() + j * n; }
  void validate() const;
};

// Header row holds the column labels; the first column of each line is the
// row label.
DatasetMatrix read_csv(std::istream& in, char delimiter = ',', const std::string& source = "<input>");
void write_csv(std::ostream& out, const DatasetMatrix& m, char delimiter = ',');

// Rows sorted lexicographically by value (labels follow). Used before
// resampling so that row order in the input does not affect counts.
DatasetMatrix canonical_row_order(const DatasetMatrix& m);

using Membership = std::function<bool(std::span<const double>)>;

// Y*_b ~ N(y, sigma2 I) per scale; one counter-keyed substream per
// (scale, replicate).
CountTable parametric_counts(std::span<const double> y, const Membership& member, const ScaleGrid& grid,
                             long B, std::uint64_t seed, int threads = 1);

// One resampled replicate, held as multiplicities of the original rows.
struct Replicate {
  const DatasetMatrix* data = nullptr;
  std::span<const double> weights;  // length n, sums to nprime
  long nprime = 0;
  DatasetMatrix materialize() const;
};

using ReplicatePredicate = std::function<bool(const Replicate&)>;
// Evaluates several predicates at once; writes one flag per target.
using ReplicateStatistic = std::function<void(const Replicate&, std::vector<char>& hits)>;

enum class FailurePolicy { Error, SkipAndRecord };

struct NonparametricResult {
  std::vector<CountTable> tables;    // one per target
  std::vector<long> failures;        // per scale, replicates skipped
};

// Thrown under FailurePolicy::Error when the predicate throws.
class ReplicateFailure : public std::runtime_error {
 public:
  ReplicateFailure(std::size_t scale, long replicate, const std::string& what);
};

NonparametricResult nonparametric_multi_counts(const DatasetMatrix& data, const ReplicateStatistic& stat,
                                               std::size_t targets, const ScaleGrid& grid, long B,
                                               std::uint64_t seed, int threads = 1,
                                               FailurePolicy policy = FailurePolicy::Error);

CountTable nonparametric_counts(const DatasetMatrix& data, const ReplicatePredicate& pred, const ScaleGrid& grid,
                                long B, std::uint64_t seed, int threads = 1,
                                FailurePolicy policy = FailurePolicy::Error,
                                std::vector<long>* failures = nullptr);

}  // namespace selboot
