// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/tables.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>

#include "selboot/parallel.hpp"

namespace selboot {

namespace {

constexpr int kBiasSteps = 70;
constexpr double kBiasStep = 0.05;

std::string pct(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * p);
  return buf;
}

std::string num(double x, const char* fmt) {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

// Index on the bias grid when theta sits on it.
std::optional<int> grid_index(double theta) {
  double j = std::round(theta / kBiasStep);
  if (j >= 0 && j <= kBiasSteps && std::abs(theta - j * kBiasStep) < 1e-9) return static_cast<int>(j);
  return std::nullopt;
}

class Reporter {
 public:
  Reporter(const Progress& p, std::string what, std::size_t total) : p_(p), what_(std::move(what)), total_(total) {}
  void tick() {
    std::size_t d = ++done_;
    if (!p_) return;
    std::size_t step = std::max<std::size_t>(1, total_ / 20);
    if (d % step == 0 || d == total_) {
      std::lock_guard<std::mutex> lock(mu_);
      p_(what_ + ": " + std::to_string(d) + "/" + std::to_string(total_));
    }
  }

 private:
  const Progress& p_;
  std::string what_;
  std::size_t total_;
  std::atomic<std::size_t> done_{0};
  std::mutex mu_;
};

}  // namespace

std::vector<double> default_table_thetas() {
  std::vector<double> t;
  for (int i = 0; i <= 7; ++i) t.push_back(0.5 * i);
  return t;
}

SimTable run_region_table(const RegionSpec& region, const std::vector<PValueFn>& methods, double alpha,
                          const std::vector<double>& thetas, bool with_bias, const OracleConfig& cfg,
                          const Progress& progress) {
  if (region.kind == RegionKind::SphereShell) throw std::invalid_argument("tables are for 2-D regions");
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must be in (0,1)");
  OracleConfig inner_cfg = cfg;
  inner_cfg.threads = 1;
  RegionOracle oracle(region, inner_cfg);

  // every distinct theta any cell needs, bias grid first
  std::vector<double> pts;
  std::map<long, std::size_t> slot;  // key: theta in 1e-9 units
  auto add = [&](double th) {
    long key = std::lround(th * 1e9);
    if (!slot.count(key)) {
      slot[key] = pts.size();
      pts.push_back(th);
    }
    return slot[key];
  };
  if (with_bias)
    for (int j = 0; j <= kBiasSteps; ++j) add(j * kBiasStep);
  std::vector<std::size_t> shown;
  for (double th : thetas) shown.push_back(add(grid_index(th) ? *grid_index(th) * kBiasStep : th));

  const std::size_t nm = methods.size(), np = pts.size();
  std::vector<double> rate(nm * np), sel(np);
  Reporter rep(progress, region.name(), nm * np + np);
  parallel_for(nm * np + np, cfg.threads, [&](std::size_t idx) {
    if (idx < nm * np) {
      rate[idx] = oracle.selective_rejection_at(methods[idx / np], alpha, pts[idx % np]);
    } else {
      std::size_t i = idx - nm * np;
      sel[i] = oracle.selection_probability(region.boundary_point(pts[i]));
    }
    rep.tick();
  });

  SimTable t;
  t.region = region.name();
  t.alpha = alpha;
  t.thetas = thetas;
  for (std::size_t m = 0; m < nm; ++m) {
    SimTableRow row{methods[m].key(), methods[m].label(), {}, std::nullopt};
    for (std::size_t s : shown) row.values.push_back(rate[m * np + s]);
    if (with_bias) {
      double b = 0;
      for (int j = 0; j <= kBiasSteps; ++j) b += std::abs(rate[m * np + j] - alpha);
      row.bias = b / (kBiasSteps + 1);
    }
    t.rows.push_back(std::move(row));
  }
  SimTableRow srow{"selection", "P(Y in S)", {}, std::nullopt};
  for (std::size_t s : shown) srow.values.push_back(sel[s]);
  t.rows.push_back(std::move(srow));
  return t;
}

std::string to_tsv(const SimTable& t) {
  std::ostringstream os;
  os << "method";
  for (double th : t.thetas) os << "\ttheta=" << num(th, "%.2f");
  os << "\tBias\n";
  for (const auto& r : t.rows) {
    os << r.label;
    for (double v : r.values) os << '\t' << pct(v);
    os << '\t' << (r.bias ? pct(*r.bias) : std::string("-")) << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const SimTable& t) {
  nlohmann::json j;
  j["region"] = t.region;
  j["alpha"] = t.alpha;
  j["thetas"] = t.thetas;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row = {{"key", r.key}, {"label", r.label}, {"values", r.values}};
    row["bias"] = r.bias ? nlohmann::json(*r.bias) : nlohmann::json(nullptr);
    j["rows"].push_back(row);
  }
  return j;
}

std::vector<SphereCurve> run_sphere_curves(const std::vector<PValueFn>& methods,
                                           const std::vector<double>& minus_gammas, const std::vector<int>& dims,
                                           double alpha, const OracleConfig& cfg, const Progress& progress) {
  for (int d : dims)
    if (d < 2) throw std::invalid_argument("sphere dimensions must be >= 2");
  std::vector<SphereCurve> out;
  for (const auto& m : methods)
    for (double g : minus_gammas) out.push_back({m.key(), m.label(), g, dims, std::vector<double>(dims.size())});
  OracleConfig inner_cfg = cfg;
  inner_cfg.threads = 1;
  const std::size_t nd = dims.size();
  Reporter rep(progress, "sphere", out.size() * nd);
  parallel_for(out.size() * nd, cfg.threads, [&](std::size_t idx) {
    auto& c = out[idx / nd];
    std::size_t i = idx % nd;
    int d = dims[i];
    double theta = (d - 1) / (2.0 * c.minus_gamma);
    RegionOracle o(RegionSpec::sphere(theta, d, SphereOrientation::HOutside), inner_cfg);
    c.values[i] = o.selective_rejection_at(PValueFn::parse(c.key), alpha, theta);
    rep.tick();
  });
  return out;
}

std::string to_tsv(const std::vector<SphereCurve>& c) {
  std::ostringstream os;
  os << "method\tminus_gamma\tdim\tpercent\n";
  for (const auto& s : c)
    for (std::size_t i = 0; i < s.dims.size(); ++i)
      os << s.label << '\t' << num(s.minus_gamma, "%g") << '\t' << s.dims[i] << '\t' << pct(s.values[i]) << '\n';
  return os.str();
}

nlohmann::json to_json(const std::vector<SphereCurve>& c) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : c)
    j.push_back({{"key", s.key}, {"label", s.label}, {"minus_gamma", s.minus_gamma}, {"dims", s.dims},
                 {"values", s.values}});
  return j;
}

ContourSet run_contours(const RegionSpec& region, const std::vector<PValueFn>& methods, double alpha,
                        const std::vector<double>& u, const OracleConfig& cfg) {
  OracleConfig inner_cfg = cfg;
  inner_cfg.threads = 1;
  RegionOracle o(region, inner_cfg);
  ContourSet cs;
  cs.region = region.name();
  cs.alpha = alpha;
  cs.u = u;
  for (double x : u) cs.boundary.push_back(region.boundary_v(x));
  for (const auto& m : methods) cs.curves.push_back({m.label(), std::vector<double>(u.size())});
  parallel_for(methods.size() * u.size(), cfg.threads, [&](std::size_t idx) {
    std::size_t m = idx / u.size(), i = idx % u.size();
    cs.curves[m].second[i] = o.rejection_threshold(methods[m], alpha, u[i]);
  });
  return cs;
}

std::string to_tsv(const ContourSet& c) {
  std::ostringstream os;
  os << "u\tboundary";
  for (const auto& [label, _] : c.curves) os << '\t' << label;
  os << '\n';
  for (std::size_t i = 0; i < c.u.size(); ++i) {
    os << num(c.u[i], "%.6g") << '\t' << num(c.boundary[i], "%.10g");
    for (const auto& kv : c.curves) os << '\t' << num(kv.second[i], "%.10g");
    os << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const ContourSet& c) {
  nlohmann::json j = {{"region", c.region}, {"alpha", c.alpha}, {"u", c.u}, {"boundary", c.boundary}};
  j["curves"] = nlohmann::json::object();
  for (const auto& [label, v] : c.curves) j["curves"][label] = v;
  return j;
}

}  // namespace selboot
