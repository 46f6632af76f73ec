#include "learnsim/metrics/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "learnsim/core/binary_io.hpp"
#include "learnsim/core/errors.hpp"

namespace learnsim::metrics {

namespace {

void check_shapes(std::span<const double> pred, std::span<const double> truth, std::size_t width) {
  if (width == 0 || pred.size() != truth.size() || pred.size() % width != 0)
    throw DimensionError("metric inputs must have equal [samples, width] shapes");
  if (pred.empty()) throw DimensionError("metric needs at least one sample");
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth, std::size_t width) {
  check_shapes(pred, truth, width);
  double acc = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred[k] - truth[k];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size() / width));
}

RrmseResult rrmse(std::span<const double> pred, std::span<const double> truth, std::size_t width) {
  check_shapes(pred, truth, width);
  RrmseResult r;
  double acc = 0.0;
  for (std::size_t s = 0; s < pred.size() / width; ++s) {
    double err = 0.0, inf = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      const double d = pred[s * width + c] - truth[s * width + c];
      err += d * d;
      inf = std::max(inf, std::abs(truth[s * width + c]));
    }
    if (inf == 0.0) {
      ++r.excluded;
      continue;
    }
    acc += err / (inf * inf);
    ++r.used;
  }
  r.percent = r.used ? 100.0 * std::sqrt(acc / static_cast<double>(r.used)) : 0.0;
  return r;
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

void add_rollout(RolloutReport& report, const TrajectoryRollout& r, const std::vector<std::size_t>& horizons) {
  for (std::size_t h : horizons) {
    std::size_t eff = h;
    if (r.frames == 0 || h > r.frames - 1) {
      eff = r.frames == 0 ? 0 : r.frames - 1;
      report.warnings.push_back("trajectory " + r.trajectory_id + ": horizon " + std::to_string(h) + " clipped to " +
                                std::to_string(eff));
    }
    for (const auto& s : r.series) {
      ReportRow row{r.split, r.trajectory_id, s.variable, eff, 0.0, 0.0, r.diverged};
      if (r.diverged || eff == 0) {
        row.rmse = row.rrmse_percent = std::nan("");
        report.rows.push_back(row);
        continue;
      }
      const std::size_t stride = r.nodes * s.width;
      if (s.pred.size() < (eff + 1) * stride || s.truth.size() < (eff + 1) * stride)
        throw DimensionError("series '" + s.variable + "' shorter than the horizon");
      std::vector<double> p, t;
      for (std::size_t f = 1; f <= eff; ++f)
        for (std::size_t i = 0; i < r.nodes; ++i) {
          if (!s.node_mask.empty() && !s.node_mask[i]) continue;
          for (std::size_t c = 0; c < s.width; ++c) {
            p.push_back(s.pred[f * stride + i * s.width + c]);
            t.push_back(s.truth[f * stride + i * s.width + c]);
          }
        }
      row.rmse = rmse(p, t, s.width);
      const auto rr = rrmse(p, t, s.width);
      row.rrmse_percent = rr.percent;
      report.excluded_samples += rr.excluded;
      report.rows.push_back(row);
    }
  }
}

std::vector<Aggregate> RolloutReport::aggregates() const {
  std::map<std::tuple<std::string, std::string, std::size_t>, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::map<std::tuple<std::string, std::string, std::size_t>, std::size_t> div;
  std::vector<std::tuple<std::string, std::string, std::size_t>> order;
  for (const auto& row : rows) {
    auto key = std::make_tuple(row.split, row.variable, row.horizon);
    if (!groups.count(key) && !div.count(key)) order.push_back(key);
    if (row.diverged || !std::isfinite(row.rmse)) {
      ++div[key];
      groups[key];
      continue;
    }
    groups[key].first.push_back(row.rmse);
    groups[key].second.push_back(row.rrmse_percent);
  }
  std::vector<Aggregate> out;
  for (const auto& key : order) {
    const auto& [a, b] = groups[key];
    Aggregate g;
    std::tie(g.split, g.variable, g.horizon) = key;
    g.n = a.size();
    g.n_diverged = div.count(key) ? div.at(key) : 0;
    for (double x : a) g.rmse_mean += x;
    for (double x : b) g.rrmse_mean += x;
    if (g.n) {
      g.rmse_mean /= g.n;
      g.rrmse_mean /= g.n;
    } else {
      g.rmse_mean = g.rrmse_mean = std::nan("");
    }
    g.rmse_se = standard_error(a);
    g.rrmse_se = standard_error(b);
    out.push_back(g);
  }
  return out;
}

std::size_t RolloutReport::diverged_trajectories() const {
  std::map<std::pair<std::string, std::string>, bool> seen;
  for (const auto& row : rows)
    if (row.diverged) seen[{row.split, row.trajectory_id}] = true;
  return seen.size();
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  std::size_t used = 0;
  double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

}  // namespace

void write_csv(const RolloutReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "split,trajectory_id,variable,horizon,rmse,rrmse_percent,diverged\n";
  for (const auto& r : report.rows) {
    for (const auto* field : {&r.split, &r.trajectory_id, &r.variable})
      if (field->find_first_of(",\n\"") != std::string::npos)
        throw ContractError("CSV field contains a separator: " + *field);
    out << r.split << ',' << r.trajectory_id << ',' << r.variable << ',' << r.horizon << ',' << fmt(r.rmse) << ','
        << fmt(r.rrmse_percent) << ',' << (r.diverged ? std::to_string(*r.diverged) : "none") << '\n';
  }
}

RolloutReport read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "split,trajectory_id,variable,horizon,rmse,rrmse_percent,diverged")
    throw ValidationError("unexpected CSV header in " + path.string());
  RolloutReport rep;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw ValidationError("CSV line " + std::to_string(lineno) + ": expected 7 fields");
    try {
      ReportRow r{f[0], f[1], f[2], std::stoul(f[3]), parse_double(f[4]), parse_double(f[5]), std::nullopt};
      if (f[6] != "none") r.diverged = std::stoul(f[6]);
      rep.rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ValidationError("CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rep;
}

void write_summary_json(const RolloutReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["excluded_samples"] = report.excluded_samples;
  j["diverged_trajectories"] = report.diverged_trajectories();
  j["warnings"] = report.warnings;
  j["aggregates"] = nlohmann::json::array();
  for (const auto& a : report.aggregates()) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    j["aggregates"].push_back({{"split", a.split},
                               {"variable", a.variable},
                               {"horizon", a.horizon},
                               {"n", a.n},
                               {"n_diverged", a.n_diverged},
                               {"rmse_mean", num(a.rmse_mean)},
                               {"rmse_se", num(a.rmse_se)},
                               {"rrmse_percent_mean", num(a.rrmse_mean)},
                               {"rrmse_percent_se", num(a.rrmse_se)}});
  }
  write_json(path, j);
}

}  // namespace learnsim::metrics
