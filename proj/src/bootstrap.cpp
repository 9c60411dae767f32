// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "selboot/parallel.hpp"
#include "selboot/rng.hpp"

namespace selboot {

namespace {

std::vector<double> log_even_targets() {
  std::vector<double> t(13);
  for (int i = 0; i < 13; ++i) t[i] = std::pow(9.0, (i - 6) / 6.0);
  return t;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

ScaleGrid scale_grid_from_targets(long n, const std::vector<double>& targets) {
  if (n < 1) throw std::invalid_argument("scale grid: n must be positive");
  std::vector<long> np;
  for (double s : targets) {
    if (!(s > 0)) throw std::invalid_argument("scale grid: sigma2 targets must be positive");
    // Truncated: n=916 gives 211, 146, 101 rather than
    // 212, 147, 102). The guard keeps exact multiples such as 9n intact.
    np.push_back(std::max(1L, static_cast<long>(std::floor(static_cast<double>(n) / s + 1e-9))));
  }
  std::map<long, int> seen;
  for (long v : np) seen[v]++;
  std::ostringstream coll;
  for (auto& [v, c] : seen)
    if (c > 1) coll << (coll.tellp() > 0 ? ", " : "") << v << " (x" << c << ")";
  if (coll.tellp() > 0)
    throw std::invalid_argument("scale grid: n=" + std::to_string(n) +
                                " is too small for distinct replicate sizes; colliding n': " + coll.str());
  return scale_grid_from_nprime(n, np);
}

ScaleGrid default_scale_grid(long n) { return scale_grid_from_targets(n, log_even_targets()); }

ScaleGrid scale_grid_from_nprime(long n, const std::vector<long>& nprime) {
  ScaleGrid g;
  g.n = n;
  for (long v : nprime) {
    if (v < 1) throw std::invalid_argument("scale grid: n' must be positive");
    g.entries.push_back({v, static_cast<double>(n) / static_cast<double>(v)});
  }
  std::sort(g.entries.begin(), g.entries.end(),
            [](const ScaleEntry& a, const ScaleEntry& b) { return a.sigma2 < b.sigma2; });
  for (std::size_t i = 1; i < g.entries.size(); ++i)
    if (g.entries[i].nprime == g.entries[i - 1].nprime)
      throw std::invalid_argument("scale grid: duplicate n' " + std::to_string(*g.entries[i].nprime));
  return g;
}

ScaleGrid scale_grid_from_sigma2(const std::vector<double>& sigma2) {
  ScaleGrid g;
  for (double s : sigma2) {
    if (!(s > 0)) throw std::invalid_argument("scale grid: sigma2 must be positive");
    g.entries.push_back({std::nullopt, s});
  }
  std::sort(g.entries.begin(), g.entries.end(),
            [](const ScaleEntry& a, const ScaleEntry& b) { return a.sigma2 < b.sigma2; });
  return g;
}

void CountTable::validate() const {
  std::set<double> seen;
  for (const auto& r : rows) {
    if (!(r.sigma2 > 0)) throw std::invalid_argument("count table: sigma2 must be positive");
    if (r.B < 1) throw std::invalid_argument("count table: B must be positive");
    if (r.C < 0 || r.C > r.B) throw std::invalid_argument("count table: need 0 <= C <= B");
    if (!seen.insert(r.sigma2).second) throw std::invalid_argument("count table: duplicate sigma2");
  }
}

CountTable complement(const CountTable& t) {
  CountTable out = t;
  for (auto& r : out.rows) r.C = r.B - r.C;
  return out;
}

std::string to_tsv(const CountTable& t) {
  std::ostringstream os;
  os << "sigma2\tnprime\tB\tC\n";
  for (const auto& r : t.rows) {
    os << fmt_double(r.sigma2) << '\t';
    if (r.nprime)
      os << *r.nprime;
    else
      os << "NA";
    os << '\t' << r.B << '\t' << r.C << '\n';
  }
  return os.str();
}

ParseError::ParseError(const std::string& source, long line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::vector<std::string> split(const std::string& s, char d) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == d) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& src, long line, const std::string& what) {
  std::string t = trim(s);
  try {
    std::size_t pos = 0;
    double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw ParseError(src, line, "bad " + what + " '" + t + "'");
  }
}

long parse_long(const std::string& s, const std::string& src, long line, const std::string& what) {
  std::string t = trim(s);
  try {
    std::size_t pos = 0;
    long v = std::stol(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw ParseError(src, line, "bad " + what + " '" + t + "'");
  }
}

}  // namespace

CountTable read_count_tsv(std::istream& in, const std::string& source) {
  std::string line;
  long lineno = 0;
  bool header = false;
  CountTable t;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || line[0] == '#') continue;
    auto f = split(line, '\t');
    if (!header) {
      if (f.size() != 4 || trim(f[0]) != "sigma2" || trim(f[1]) != "nprime" || trim(f[2]) != "B" ||
          trim(f[3]) != "C")
        throw ParseError(source, lineno, "expected header 'sigma2<TAB>nprime<TAB>B<TAB>C'");
      header = true;
      continue;
    }
    if (f.size() != 4) throw ParseError(source, lineno, "expected 4 fields, got " + std::to_string(f.size()));
    CountRow r;
    r.sigma2 = parse_double(f[0], source, lineno, "sigma2");
    std::string np = trim(f[1]);
    if (np != "NA" && !np.empty()) r.nprime = parse_long(np, source, lineno, "nprime");
    r.B = parse_long(f[2], source, lineno, "B");
    r.C = parse_long(f[3], source, lineno, "C");
    if (!(r.sigma2 > 0)) throw ParseError(source, lineno, "sigma2 must be positive");
    if (r.B < 1) throw ParseError(source, lineno, "B must be positive");
    if (r.C < 0 || r.C > r.B) throw ParseError(source, lineno, "C must lie in [0, B]");
    for (const auto& o : t.rows)
      if (o.sigma2 == r.sigma2) throw ParseError(source, lineno, "duplicate sigma2");
    t.rows.push_back(r);
  }
  if (!header) throw ParseError(source, lineno, "empty count table");
  std::sort(t.rows.begin(), t.rows.end(), [](const CountRow& a, const CountRow& b) { return a.sigma2 < b.sigma2; });
  return t;
}

nlohmann::json to_json(const CountTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json j{{"sigma2", r.sigma2}, {"B", r.B}, {"C", r.C}};
    j["nprime"] = r.nprime ? nlohmann::json(*r.nprime) : nlohmann::json(nullptr);
    rows.push_back(j);
  }
  return nlohmann::json{{"rows", rows}};
}

CountTable count_table_from_json(const nlohmann::json& j) {
  CountTable t;
  for (const auto& r : j.at("rows")) {
    CountRow row;
    row.sigma2 = r.at("sigma2").get<double>();
    row.B = r.at("B").get<long>();
    row.C = r.at("C").get<long>();
    if (r.contains("nprime") && !r["nprime"].is_null()) row.nprime = r["nprime"].get<long>();
    t.rows.push_back(row);
  }
  t.validate();
  return t;
}

void DatasetMatrix::validate() const {
  if (n < 2) throw std::invalid_argument("dataset: need at least 2 rows");
  if (p < 3) throw std::invalid_argument("dataset: need at least 3 columns");
  if (values.size() != n * p) throw std::invalid_argument("dataset: value count does not match n x p");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: missing or non-finite value");
}

DatasetMatrix read_csv(std::istream& in, char delim, const std::string& source) {
  std::string line;
  long lineno = 0;
  DatasetMatrix m;
  std::vector<std::vector<double>> rows;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(line, delim);
    if (!header) {
      if (f.size() < 2) throw ParseError(source, lineno, "header needs a row-label column and item columns");
      for (std::size_t j = 1; j < f.size(); ++j) m.col_labels.push_back(trim(f[j]));
      header = true;
      continue;
    }
    if (f.size() != m.col_labels.size() + 1)
      throw ParseError(source, lineno,
                       "expected " + std::to_string(m.col_labels.size() + 1) + " fields, got " +
                           std::to_string(f.size()));
    m.row_labels.push_back(trim(f[0]));
    std::vector<double> r;
    for (std::size_t j = 1; j < f.size(); ++j) {
      std::string cell = trim(f[j]);
      if (cell.empty() || cell == "NA" || cell == "NaN")
        throw ParseError(source, lineno, "missing value in column '" + m.col_labels[j - 1] + "'");
      r.push_back(parse_double(cell, source, lineno, "value"));
    }
    rows.push_back(std::move(r));
  }
  if (!header) throw ParseError(source, lineno, "empty file");
  m.n = rows.size();
  m.p = m.col_labels.size();
  m.values.resize(m.n * m.p);
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = 0; j < m.p; ++j) m.at(i, j) = rows[i][j];
  m.validate();
  return m;
}

void write_csv(std::ostream& out, const DatasetMatrix& m, char delim) {
  out << "row";
  for (const auto& c : m.col_labels) out << delim << c;
  out << '\n';
  for (std::size_t i = 0; i < m.n; ++i) {
    out << (i < m.row_labels.size() ? m.row_labels[i] : std::to_string(i + 1));
    for (std::size_t j = 0; j < m.p; ++j) out << delim << fmt_double(m.at(i, j));
    out << '\n';
  }
}

DatasetMatrix canonical_row_order(const DatasetMatrix& m) {
  // Columns are compared in label order, so relabelled column permutations
  // resample the same rows.
  std::vector<std::size_t> cols(m.p);
  std::iota(cols.begin(), cols.end(), 0);
  if (m.col_labels.size() == m.p)
    std::stable_sort(cols.begin(), cols.end(),
                     [&](std::size_t a, std::size_t b) { return m.col_labels[a] < m.col_labels[b]; });
  std::vector<std::size_t> idx(m.n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t j : cols) {
      double x = m.at(a, j), y = m.at(b, j);
      if (x != y) return x < y;
    }
    return false;
  });
  DatasetMatrix out = m;
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = 0; j < m.p; ++j) out.at(i, j) = m.at(idx[i], j);
    if (!m.row_labels.empty()) out.row_labels[i] = m.row_labels[idx[i]];
  }
  return out;
}

CountTable parametric_counts(std::span<const double> y, const Membership& member, const ScaleGrid& grid, long B,
                             std::uint64_t seed, int threads) {
  if (B < 1) throw std::invalid_argument("parametric_counts: B must be positive");
  const std::size_t S = grid.size();
  // Work items are (scale, block of replicates); each block owns its count.
  const long block = 4096;
  const long nblocks = (B + block - 1) / block;
  std::vector<long> hits(S * nblocks, 0);
  parallel_for(S * nblocks, threads, [&](std::size_t item) {
    std::size_t s = item / nblocks;
    long b0 = static_cast<long>(item % nblocks) * block;
    long b1 = std::min(B, b0 + block);
    double sd = std::sqrt(grid.entries[s].sigma2);
    std::vector<double> ystar(y.size());
    long c = 0;
    for (long b = b0; b < b1; ++b) {
      auto eng = substream(seed, s, static_cast<std::uint64_t>(b));
      std::normal_distribution<double> z(0.0, 1.0);
      for (std::size_t i = 0; i < y.size(); ++i) ystar[i] = y[i] + sd * z(eng);
      if (member(ystar)) ++c;
    }
    hits[item] = c;
  });
  CountTable t;
  for (std::size_t s = 0; s < S; ++s) {
    long c = 0;
    for (long k = 0; k < nblocks; ++k) c += hits[s * nblocks + k];
    t.rows.push_back({grid.entries[s].sigma2, grid.entries[s].nprime, B, c});
  }
  return t;
}

DatasetMatrix Replicate::materialize() const {
  DatasetMatrix m;
  m.p = data->p;
  m.n = static_cast<std::size_t>(nprime);
  m.col_labels = data->col_labels;
  m.values.resize(m.n * m.p);
  std::size_t r = 0;
  for (std::size_t i = 0; i < data->n; ++i) {
    long k = static_cast<long>(weights[i]);
    for (long c = 0; c < k; ++c, ++r)
      for (std::size_t j = 0; j < m.p; ++j) m.at(r, j) = data->at(i, j);
  }
  return m;
}

ReplicateFailure::ReplicateFailure(std::size_t scale, long replicate, const std::string& what)
    : std::runtime_error("replicate " + std::to_string(replicate) + " at scale index " + std::to_string(scale) +
                         " failed: " + what) {}

NonparametricResult nonparametric_multi_counts(const DatasetMatrix& data, const ReplicateStatistic& stat,
                                               std::size_t targets, const ScaleGrid& grid, long B,
                                               std::uint64_t seed, int threads, FailurePolicy policy) {
  if (B < 1) throw std::invalid_argument("nonparametric_counts: B must be positive");
  for (const auto& e : grid.entries)
    if (!e.nprime) throw std::invalid_argument("nonparametric_counts: every scale needs n'");
  const std::size_t S = grid.size();
  const long block = 256;
  const long nblocks = (B + block - 1) / block;
  const std::size_t items = S * nblocks;
  // per item: targets hit counts followed by one failure count
  std::vector<long> acc(items * (targets + 1), 0);
  parallel_for(items, threads, [&](std::size_t item) {
    std::size_t s = item / nblocks;
    long b0 = static_cast<long>(item % nblocks) * block;
    long b1 = std::min(B, b0 + block);
    long np = *grid.entries[s].nprime;
    std::vector<double> w(data.n);
    std::vector<char> hit(targets);
    long* out = &acc[item * (targets + 1)];
    std::uniform_int_distribution<std::size_t> pick(0, data.n - 1);
    for (long b = b0; b < b1; ++b) {
      auto eng = substream(seed, s, static_cast<std::uint64_t>(b));
      std::fill(w.begin(), w.end(), 0.0);
      for (long r = 0; r < np; ++r) w[pick(eng)] += 1.0;
      Replicate rep{&data, w, np};
      std::fill(hit.begin(), hit.end(), 0);
      try {
        stat(rep, hit);
      } catch (const std::exception& e) {
        if (policy == FailurePolicy::Error) throw ReplicateFailure(s, b, e.what());
        out[targets]++;
        continue;
      }
      for (std::size_t k = 0; k < targets; ++k) out[k] += hit[k] ? 1 : 0;
    }
  });
  NonparametricResult res;
  res.tables.resize(targets);
  res.failures.assign(S, 0);
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<long> c(targets + 1, 0);
    for (long k = 0; k < nblocks; ++k)
      for (std::size_t t = 0; t <= targets; ++t) c[t] += acc[(s * nblocks + k) * (targets + 1) + t];
    res.failures[s] = c[targets];
    for (std::size_t t = 0; t < targets; ++t)
      res.tables[t].rows.push_back({grid.entries[s].sigma2, grid.entries[s].nprime, B - c[targets], c[t]});
  }
  return res;
}

CountTable nonparametric_counts(const DatasetMatrix& data, const ReplicatePredicate& pred, const ScaleGrid& grid,
                                long B, std::uint64_t seed, int threads, FailurePolicy policy,
                                std::vector<long>* failures) {
  auto res = nonparametric_multi_counts(
      data, [&](const Replicate& r, std::vector<char>& hit) { hit[0] = pred(r) ? 1 : 0; }, 1, grid, B, seed, threads,
      policy);
  if (failures) *failures = res.failures;
  return res.tables[0];
}

}  // namespace selboot
