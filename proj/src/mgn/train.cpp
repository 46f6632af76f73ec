#include "learnsim/mgn/train.hpp"

#include <cmath>

#include "learnsim/core/errors.hpp"
#include "learnsim/core/parallel.hpp"
#include "learnsim/core/random.hpp"
#include "learnsim/oracle/dataset.hpp"

namespace learnsim::mgn {

using graph::Vec3;

SampleSet make_sample_set(const std::vector<data::TrajectoryBundle>& bundles, double contact_radius) {
  SampleSet s;
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    s.bundles.push_back(&bundles[b]);
    auto topo = topology_from_bundle(bundles[b]);
    topo.contact_radius = contact_radius;
    s.topo.push_back(std::move(topo));
    for (std::size_t t = 0; t + 1 < bundles[b].n_steps; ++t) s.samples.emplace_back(static_cast<int>(b), static_cast<int>(t));
  }
  return s;
}

Sample make_sample(const SampleSet& set, std::size_t index, std::size_t out_width, double noise_std,
                   std::mt19937_64* rng) {
  const auto [b, t] = set.samples.at(index);
  const auto& bundle = *set.bundles[b];
  const auto& topo = set.topo[b];
  auto qt = bundle.points_at("q", t);
  const auto qn = bundle.points_at("q", t + 1);
  if (rng && noise_std > 0)
    for (int i : topo.free)
      for (int d = 0; d < 3; ++d) qt[i][d] += noise_std * normal01(*rng);
  std::vector<Vec3> u(topo.n_nodes, Vec3{0, 0, 0});
  for (int a : topo.actuator) u[a] = graph::operator-(qn[a], qt[a]);
  Sample s;
  s.inputs = build_inputs(topo, qt, u);
  s.target = nn::Tensor::matrix(topo.n_nodes, out_width);
  const double* vm = bundle.step_data("sigma_vm", t + 1);
  const double* sig = out_width == 9 ? bundle.step_data("sigma", t + 1) : nullptr;
  for (int i : topo.plate) {
    for (int d = 0; d < 3; ++d) s.target.at(i, d) = qn[i][d] - qt[i][d];
    if (out_width == 4) {
      s.target.at(i, 3) = vm[i];
    } else {
      for (int c = 0; c < 6; ++c) s.target.at(i, 3 + c) = sig[i * 6 + c];
    }
  }
  s.loss_rows = &topo.plate;
  return s;
}

void fit_normalizers(MgnModel& m, const SampleSet& train) {
  if (train.samples.empty()) throw ConfigError("empty training set");
  m.node_norm = nn::Normalizer(kNodeFeatureWidth);
  m.mesh_norm = nn::Normalizer(8);
  m.contact_norm = nn::Normalizer(4);
  m.target_norm = nn::Normalizer(m.config.out_width);
  for (std::size_t k = 0; k < train.samples.size(); ++k) {
    std::mt19937_64 rng(oracle::trajectory_seed(m.config.seed ^ 0x4e0153ULL, k));
    const auto s = make_sample(train, k, m.config.out_width, m.config.noise_std, &rng);
    m.node_norm.accumulate(s.inputs.node);
    m.mesh_norm.accumulate(s.inputs.mesh);
    m.contact_norm.accumulate(s.inputs.contact);
    m.target_norm.accumulate(s.target, s.loss_rows);
  }
}

void fit_target_normalizer(MgnModel& m, const SampleSet& train) {
  if (train.samples.empty()) throw ConfigError("empty training set");
  m.target_norm = nn::Normalizer(m.config.out_width);
  for (std::size_t k = 0; k < train.samples.size(); ++k) {
    std::mt19937_64 rng(oracle::trajectory_seed(m.config.seed ^ 0x4e0153ULL, k));
    const auto s = make_sample(train, k, m.config.out_width, m.config.noise_std, &rng);
    m.target_norm.accumulate(s.target, s.loss_rows);
  }
}

nn::Gradients batch_gradients(const MgnModel& m, const std::vector<Sample>& batch, unsigned jobs, double* loss) {
  std::vector<nn::Gradients> per(batch.size());
  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), jobs, [&](std::size_t k) {
    nn::Tape tape;
    const auto in = normalize_inputs(m, batch[k].inputs);
    const auto target = m.target_norm.normalize(batch[k].target);
    const nn::Var l = step_loss(forward(m, tape, in), target, *batch[k].loss_rows);
    tape.backward(l);
    losses[k] = l.value().item();
    per[k] = tape.parameter_gradients();
  });
  nn::Gradients out = std::move(per[0]);
  for (std::size_t k = 1; k < per.size(); ++k)
    for (auto& [name, g] : out) {
      const auto& o = per[k].at(name);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o[i];
    }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& [name, g] : out)
    for (auto& v : g.values()) v *= inv;
  if (loss) {
    double acc = 0.0;
    for (double l : losses) acc += l;
    *loss = acc * inv;
  }
  return out;
}

double mean_loss(const MgnModel& m, const SampleSet& set, unsigned jobs) {
  if (set.samples.empty()) return 0.0;
  std::vector<double> losses(set.samples.size());
  parallel_for(set.samples.size(), jobs, [&](std::size_t k) {
    const auto s = make_sample(set, k, m.config.out_width, 0.0, nullptr);
    nn::Tape tape(false);
    const auto in = normalize_inputs(m, s.inputs);
    losses[k] = step_loss(forward(m, tape, in), m.target_norm.normalize(s.target), *s.loss_rows).value().item();
  });
  double acc = 0.0;
  for (double l : losses) acc += l;
  return acc / static_cast<double>(losses.size());
}

TrainResult train(MgnModel& m, const SampleSet& train_set, const SampleSet& valid_set, const TrainOptions& opt) {
  const auto& cfg = m.config;
  if (train_set.samples.empty()) throw ConfigError("empty training dataset");
  const std::size_t n = train_set.samples.size();
  const std::size_t per_epoch = (n + cfg.batch - 1) / cfg.batch;
  std::size_t total = per_epoch * cfg.epochs;
  if (opt.max_steps > 0) total = std::min(total, opt.max_steps);
  nn::AdamState adam;
  adam.config.learning_rate = cfg.lr;
  TrainResult res;
  nn::ParameterStore best = m.params;
  res.best_valid = std::numeric_limits<double>::infinity();
  std::mt19937_64 order_rng(oracle::trajectory_seed(cfg.seed, 0x5eed));
  double running = 0.0;
  std::size_t running_n = 0, step = 0;
  bool stop = false;
  auto evaluate = [&](std::size_t epoch) {
    TrainProgress p;
    p.epoch = epoch;
    p.step = step;
    p.train_loss = running_n ? running / running_n : 0.0;
    p.valid_loss = valid_set.samples.empty() ? p.train_loss : mean_loss(m, valid_set, opt.jobs);
    p.lr = adam.config.learning_rate;
    running = 0.0;
    running_n = 0;
    res.curve.push_back(p);
    if (p.valid_loss < res.best_valid) {
      res.best_valid = p.valid_loss;
      res.best_step = step;
      best = m.params;
    }
    if (opt.on_eval && !opt.on_eval(p)) stop = true;
  };
  for (std::size_t epoch = 0; epoch < cfg.epochs && !stop && step < total; ++epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    deterministic_shuffle(order, order_rng);
    for (std::size_t s0 = 0; s0 < n && step < total && !stop; s0 += cfg.batch) {
      std::vector<Sample> batch;
      for (std::size_t k = s0; k < std::min(n, s0 + cfg.batch); ++k) {
        // Noise stream keyed by (seed, epoch, sample) so it does not depend on batching or threads.
        std::mt19937_64 rng(oracle::trajectory_seed(cfg.seed ^ (0x9e37ULL * (epoch + 1)), order[k]));
        batch.push_back(make_sample(train_set, order[k], cfg.out_width, cfg.noise_std, &rng));
      }
      if (cfg.lr_final > 0 && total > 1)
        adam.config.learning_rate = cfg.lr * std::pow(cfg.lr_final / cfg.lr, static_cast<double>(step) / (total - 1));
      double loss = 0.0;
      const auto grads = batch_gradients(m, batch, opt.jobs, &loss);
      nn::adam_step(adam, m.params, grads);
      running += loss;
      ++running_n;
      ++step;
      if (opt.eval_every > 0 && step % opt.eval_every == 0) evaluate(epoch);
    }
    if (opt.eval_every == 0) evaluate(epoch);
  }
  if (running_n > 0 && !stop) evaluate(cfg.epochs ? cfg.epochs - 1 : 0);
  res.steps = step;
  if (opt.keep_best && !res.curve.empty()) m.params = best;
  return res;
}

}  // namespace learnsim::mgn
