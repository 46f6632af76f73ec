#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace learnsim::metrics {

// Inputs are flat [samples, width] arrays; a sample is one node at one step.
double rmse(std::span<const double> pred, std::span<const double> truth, std::size_t width);

struct RrmseResult {
  double percent = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // samples whose truth has zero infinity norm
};

// Per sample: |y - y_hat|_2 / |y_hat|_inf with y_hat the ground truth.
RrmseResult rrmse(std::span<const double> pred, std::span<const double> truth, std::size_t width);

struct ReportRow {
  std::string split;
  std::string trajectory_id;
  std::string variable;
  std::size_t horizon = 0;
  double rmse = 0.0;
  double rrmse_percent = 0.0;
  std::optional<std::size_t> diverged;  // rollout step where values became non-finite

  bool operator==(const ReportRow&) const = default;
};

struct Aggregate {
  std::string split, variable;
  std::size_t horizon = 0;
  std::size_t n = 0;           // trajectories included
  std::size_t n_diverged = 0;  // excluded from the means
  double rmse_mean = 0.0, rmse_se = 0.0;
  double rrmse_mean = 0.0, rrmse_se = 0.0;
};

struct RolloutReport {
  std::vector<ReportRow> rows;
  std::vector<std::string> warnings;
  std::size_t excluded_samples = 0;

  std::vector<Aggregate> aggregates() const;
  std::size_t diverged_trajectories() const;
};

// One variable of one trajectory: frames [T, N, width] with frame 0 the initial state.
struct SeriesPair {
  std::string variable;
  std::size_t width = 1;
  std::vector<double> pred, truth;
  std::vector<bool> node_mask;  // optional; empty = all nodes
};

struct TrajectoryRollout {
  std::string split, trajectory_id;
  std::size_t frames = 0, nodes = 0;
  std::vector<SeriesPair> series;
  std::optional<std::size_t> diverged;
};

// Horizon h scores frames 1..h. Horizons beyond the trajectory are clipped with a warning.
void add_rollout(RolloutReport& report, const TrajectoryRollout& r, const std::vector<std::size_t>& horizons);

double standard_error(const std::vector<double>& values);

void write_csv(const RolloutReport& report, const std::filesystem::path& path);
RolloutReport read_csv(const std::filesystem::path& path);
void write_summary_json(const RolloutReport& report, const std::filesystem::path& path);

}  // namespace learnsim::metrics
