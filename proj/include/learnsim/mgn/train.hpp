#pragma once

#include <functional>
#include <random>
#include <vector>

#include "learnsim/mgn/model.hpp"
#include "learnsim/nn/adam.hpp"

namespace learnsim::mgn {

// One-step samples (trajectory, frame t -> t+1) over a set of solid bundles.
struct SampleSet {
  std::vector<const data::TrajectoryBundle*> bundles;
  std::vector<Topology> topo;
  std::vector<std::pair<int, int>> samples;
};

SampleSet make_sample_set(const std::vector<data::TrajectoryBundle>& bundles, double contact_radius);

struct Sample {
  StepInputs inputs;  // raw
  nn::Tensor target;  // raw [N, out_width]
  const std::vector<int>* loss_rows = nullptr;
};

// Noise is added to plate_free positions at frame t; the displacement target is
// measured from the noisy positions.
Sample make_sample(const SampleSet& set, std::size_t index, std::size_t out_width, double noise_std,
                   std::mt19937_64* rng);

// Statistics over the training samples with the same position noise the
// trainer applies (seeded from m.config.seed), so noise-only channels get a
// sensible scale instead of the floor.
void fit_normalizers(MgnModel& m, const SampleSet& train);
// Refit only the target statistics (used after grafting a new decoder).
void fit_target_normalizer(MgnModel& m, const SampleSet& train);

struct TrainProgress {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double train_loss = 0.0;  // mean over the steps since the last report
  double valid_loss = 0.0;
  double lr = 0.0;
};

struct TrainOptions {
  unsigned jobs = 1;
  std::size_t max_steps = 0;   // 0 = run all epochs
  std::size_t eval_every = 0;  // steps between validation passes; 0 = once per epoch
  bool keep_best = true;       // restore the best-validation parameters after training
  // Return false to stop early.
  std::function<bool(const TrainProgress&)> on_eval;
};

struct TrainResult {
  std::vector<TrainProgress> curve;
  std::size_t steps = 0;
  std::size_t best_step = 0;
  double best_valid = 0.0;
};

double mean_loss(const MgnModel& m, const SampleSet& set, unsigned jobs);

// Uses m.config for lr, batch, epochs, noise and seed. Frozen entries stay untouched.
TrainResult train(MgnModel& m, const SampleSet& train_set, const SampleSet& valid_set, const TrainOptions& opt);

// Average of per-sample gradients, reduced in sample order (independent of jobs).
nn::Gradients batch_gradients(const MgnModel& m, const std::vector<Sample>& batch, unsigned jobs, double* loss);

}  // namespace learnsim::mgn
