#pragma once

#include <functional>
#include <vector>

#include "learnsim/tignn/model.hpp"

namespace learnsim::tignn {

// One-step samples (trajectory, frame t) with the forward difference
// (z^{t+1} - z^t) / dt as the target.
struct SampleSet {
  std::vector<const data::TrajectoryBundle*> bundles;
  std::vector<std::vector<graph::NodeKind>> kinds;
  std::vector<std::vector<int>> fluid_rows;
  std::vector<std::pair<int, int>> samples;
};

SampleSet make_sample_set(const std::vector<data::TrajectoryBundle>& bundles);

struct Sample {
  FluidInputs inputs;  // raw
  nn::Tensor target;   // physical [N, 7]
  const std::vector<int>* rows = nullptr;
};

// Noise (noise_std times the per-dof state spread) goes on fluid rows before
// featurization; the target stays the clean forward difference.
Sample make_sample(const TignnModel& m, const SampleSet& set, std::size_t index, double noise_std, std::mt19937_64* rng);

// Feature statistics, derivative scale and state spread from the training set.
void fit_normalizers(TignnModel& m, const SampleSet& train);

struct LossParts {
  double total = 0.0, degeneracy = 0.0, data = 0.0;
};

struct TrainProgress {
  std::size_t epoch = 0;
  std::size_t step = 0;
  LossParts train, valid;  // train: mean over steps since the last report
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainOptions {
  unsigned jobs = 1;
  std::size_t max_steps = 0;
  bool keep_best = true;
  std::function<bool(const TrainProgress&)> on_eval;  // return false to stop
};

struct TrainResult {
  std::vector<TrainProgress> curve;
  std::size_t steps = 0;
  std::size_t best_step = 0;
  double best_valid = 0.0;
  double seconds = 0.0;
};

nn::Gradients batch_gradients(const TignnModel& m, const std::vector<Sample>& batch, unsigned jobs, LossParts* loss);
LossParts mean_loss(const TignnModel& m, const SampleSet& set, unsigned jobs);

// Uses m.config for lr schedule, epochs, batch, noise, lambda and seed. Passing
// a model loaded from a checkpoint (normalizers kept) is the fine-tune mode.
TrainResult train(TignnModel& m, const SampleSet& train_set, const SampleSet& valid_set, const TrainOptions& opt);

}  // namespace learnsim::tignn
