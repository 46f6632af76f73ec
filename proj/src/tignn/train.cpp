#include "learnsim/tignn/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "learnsim/core/errors.hpp"
#include "learnsim/core/parallel.hpp"
#include "learnsim/core/random.hpp"
#include "learnsim/oracle/dataset.hpp"
#include "learnsim/nn/adam.hpp"
#include "learnsim/tignn/rollout.hpp"

namespace learnsim::tignn {

SampleSet make_sample_set(const std::vector<data::TrajectoryBundle>& bundles) {
  SampleSet s;
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    const auto& bundle = bundles[b];
    if (bundle.family != "fluid") throw DataError("tignn needs fluid bundles");
    s.bundles.push_back(&bundle);
    s.kinds.push_back(bundle.kinds());
    std::vector<int> rows;
    for (std::size_t i = 0; i < bundle.n_nodes; ++i)
      if (s.kinds.back()[i] == graph::NodeKind::fluid) rows.push_back(static_cast<int>(i));
    s.fluid_rows.push_back(std::move(rows));
    for (std::size_t t = 0; t + 1 < bundle.n_steps; ++t) s.samples.emplace_back(static_cast<int>(b), static_cast<int>(t));
  }
  return s;
}

Sample make_sample(const TignnModel& m, const SampleSet& set, std::size_t index, double noise_std, std::mt19937_64* rng) {
  const auto [b, t] = set.samples.at(index);
  const auto& bundle = *set.bundles[b];
  State z = state_at(bundle, t);
  const State zn = state_at(bundle, t + 1);
  Sample s;
  s.target = nn::Tensor::matrix(bundle.n_nodes, kDof);
  for (int i : set.fluid_rows[b])
    for (std::size_t d = 0; d < kDof; ++d) s.target.at(i, d) = (zn[i * kDof + d] - z[i * kDof + d]) / bundle.dt;
  if (rng && noise_std > 0)
    for (int i : set.fluid_rows[b])
      for (std::size_t d = 0; d < kDof; ++d) z[i * kDof + d] += noise_std * m.state_spread[d] * normal01(*rng);
  s.inputs = build_inputs(set.kinds[b], z, m.config.connectivity_radius);
  s.rows = &set.fluid_rows[b];
  return s;
}

void fit_normalizers(TignnModel& m, const SampleSet& train) {
  if (train.samples.empty()) throw ConfigError("empty training set");
  nn::Normalizer spread(kDof);
  std::vector<double> sq(kDof, 0.0);
  std::size_t n = 0;
  for (std::size_t k = 0; k < train.samples.size(); ++k) {
    const auto [b, t] = train.samples[k];
    const State z = state_at(*train.bundles[b], t);
    for (int i : train.fluid_rows[b]) spread.accumulate(z.data() + i * kDof);
  }
  const auto sd = spread.stddev();
  for (std::size_t d = 0; d < kDof; ++d) m.state_spread[d] = sd[d] > nn::Normalizer::kStdFloor ? sd[d] : 1.0;

  m.node_norm = nn::Normalizer(kNodeFeatureWidth);
  m.edge_norm = nn::Normalizer(kEdgeFeatureWidth);
  for (std::size_t k = 0; k < train.samples.size(); ++k) {
    std::mt19937_64 rng(oracle::trajectory_seed(m.config.seed ^ 0x7f1d5ULL, k));
    const auto s = make_sample(m, train, k, m.config.noise_std, &rng);
    m.node_norm.accumulate(s.inputs.node);
    m.edge_norm.accumulate(s.inputs.edge);
    for (int i : *s.rows)
      for (std::size_t d = 0; d < kDof; ++d) sq[d] += s.target.at(i, d) * s.target.at(i, d);
    n += s.rows->size();
  }
  for (std::size_t d = 0; d < kDof; ++d) {
    const double rms = std::sqrt(sq[d] / static_cast<double>(n));
    m.zdot_scale[d] = rms > 0 && std::isfinite(rms) ? rms : 1.0;
  }
}

namespace {

nn::Tensor scaled_target(const TignnModel& m, const nn::Tensor& target) {
  nn::Tensor t = target;
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t d = 0; d < kDof; ++d) t.at(r, d) /= m.zdot_scale[d];
  return t;
}

struct SampleLoss {
  nn::Var total;
  LossParts parts;
};

SampleLoss sample_loss(const TignnModel& m, nn::Tape& tape, const Sample& s) {
  const auto in = normalize_inputs(m, s.inputs);
  const auto terms = generic_heads(m, tape, in);
  const nn::Var deg = degeneracy_loss(terms, in.pairs);
  const nn::Var data = data_loss(generic_derivative(terms, in.pairs), scaled_target(m, s.target), *s.rows);
  SampleLoss out;
  out.total = total_loss(deg, data, m.config.lambda);
  out.parts = {out.total.value().item(), deg.value().item(), data.value().item()};
  return out;
}

void accumulate(LossParts& acc, const LossParts& x, double w) {
  acc.total += w * x.total;
  acc.degeneracy += w * x.degeneracy;
  acc.data += w * x.data;
}

}  // namespace

nn::Gradients batch_gradients(const TignnModel& m, const std::vector<Sample>& batch, unsigned jobs, LossParts* loss) {
  std::vector<nn::Gradients> per(batch.size());
  std::vector<LossParts> parts(batch.size());
  parallel_for(batch.size(), jobs, [&](std::size_t k) {
    nn::Tape tape;
    const auto l = sample_loss(m, tape, batch[k]);
    tape.backward(l.total);
    parts[k] = l.parts;
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
    *loss = {};
    for (const auto& p : parts) accumulate(*loss, p, inv);
  }
  return out;
}

LossParts mean_loss(const TignnModel& m, const SampleSet& set, unsigned jobs) {
  LossParts acc;
  if (set.samples.empty()) return acc;
  std::vector<LossParts> parts(set.samples.size());
  parallel_for(set.samples.size(), jobs, [&](std::size_t k) {
    nn::Tape tape(false);
    parts[k] = sample_loss(m, tape, make_sample(m, set, k, 0.0, nullptr)).parts;
  });
  for (const auto& p : parts) accumulate(acc, p, 1.0 / static_cast<double>(parts.size()));
  return acc;
}

TrainResult train(TignnModel& m, const SampleSet& train_set, const SampleSet& valid_set, const TrainOptions& opt) {
  const auto& cfg = m.config;
  if (train_set.samples.empty()) throw ConfigError("empty training dataset");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  const std::size_t n = train_set.samples.size();
  nn::AdamState adam;
  TrainResult res;
  res.best_valid = std::numeric_limits<double>::infinity();
  nn::ParameterStore best = m.params;
  std::mt19937_64 order_rng(oracle::trajectory_seed(cfg.seed, 0x5eed));
  std::size_t step = 0;
  bool stop = false;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    adam.config.learning_rate = cfg.lr_at_epoch(epoch);
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    deterministic_shuffle(order, order_rng);
    LossParts running;
    std::size_t running_n = 0;
    for (std::size_t s0 = 0; s0 < n && !stop; s0 += cfg.batch) {
      if (opt.max_steps > 0 && step >= opt.max_steps) {
        stop = true;
        break;
      }
      std::vector<Sample> batch;
      for (std::size_t k = s0; k < std::min(n, s0 + cfg.batch); ++k) {
        std::mt19937_64 rng(oracle::trajectory_seed(cfg.seed ^ (0x9e37ULL * (epoch + 1)), order[k]));
        batch.push_back(make_sample(m, train_set, order[k], cfg.noise_std, &rng));
      }
      LossParts l;
      const auto g = batch_gradients(m, batch, opt.jobs, &l);
      nn::adam_step(adam, m.params, g);
      accumulate(running, l, 1.0);
      ++running_n;
      ++step;
    }
    if (running_n == 0) break;
    TrainProgress p;
    p.epoch = epoch;
    p.step = step;
    accumulate(p.train, running, 1.0 / static_cast<double>(running_n));
    p.valid = valid_set.samples.empty() ? p.train : mean_loss(m, valid_set, opt.jobs);
    p.lr = adam.config.learning_rate;
    p.seconds = elapsed();
    res.curve.push_back(p);
    if (p.valid.total < res.best_valid) {
      res.best_valid = p.valid.total;
      res.best_step = step;
      best = m.params;
    }
    if (opt.on_eval && !opt.on_eval(p)) stop = true;
  }
  res.steps = step;
  res.seconds = elapsed();
  if (opt.keep_best && !res.curve.empty()) m.params = best;
  return res;
}

}  // namespace learnsim::tignn
