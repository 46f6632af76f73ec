// learnsim command line: gen, train, transfer, rollout, eval, inspect, export-csv.
#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "learnsim/core/errors.hpp"
#include "learnsim/data/bundle.hpp"
#include "learnsim/metrics/evaluate.hpp"
#include "learnsim/mgn/rollout.hpp"
#include "learnsim/mgn/train.hpp"
#include "learnsim/oracle/dataset.hpp"
#include "learnsim/tignn/rollout.hpp"
#include "learnsim/tignn/train.hpp"
#include "learnsim/transfer/graft.hpp"

using namespace learnsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kDiverged = 4 };

struct Global {
  std::optional<std::uint64_t> seed;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string config;
};

json load_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("cannot write " + path.string());
}

void snapshot(const fs::path& dir, const std::string& command, json resolved) {
  write_json({{"command", command}, {"config", std::move(resolved)}}, dir / "resolved_config.json");
}

// Bundles of one split, read from the dataset root.
std::vector<data::TrajectoryBundle> load_split(const fs::path& root, const std::string& split,
                                               std::vector<std::string>* names = nullptr) {
  const auto s = data::read_splits(root / "splits.json");
  const std::vector<std::string>* list = split == "train" ? &s.train
                                         : split == "valid" ? &s.valid
                                         : split == "test"  ? &s.test
                                         : split == "extra" ? &s.extra
                                                            : nullptr;
  if (!list) throw ConfigError("unknown split '" + split + "'");
  std::vector<data::TrajectoryBundle> out;
  for (const auto& n : *list) out.push_back(data::read_bundle(root / n));
  if (names) *names = *list;
  return out;
}

std::string checkpoint_model(const nn::Checkpoint& c) { return c.meta.value("model", std::string()); }

void write_curve(const fs::path& path, const std::vector<std::array<double, 5>>& rows) {
  std::ofstream out(path);
  out << "epoch,step,train_loss,valid_loss,lr\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.0f,%.0f,%.17g,%.17g,%.17g\n", r[0], r[1], r[2], r[3], r[4]);
    out << buf;
  }
}

// ---- gen

int cmd_gen(const Global& g, const std::string& family, std::optional<std::size_t> count,
            std::optional<std::size_t> extra, std::optional<std::size_t> steps, const std::string& out) {
  json cfg = load_json(g.config);
  if (!cfg.is_object()) throw ConfigError("gen config must be a JSON object");
  for (const auto& [k, v] : cfg.items())
    if (k != "family" && k != "count" && k != "extra" && k != "steps" && k != "seed" && k != "chain" &&
        k != "hole_scale" && k != "amplitude_scale")
      throw ConfigError("unknown gen config key '" + k + "'");
  oracle::GenerateOptions opt;
  try {
    opt.family = cfg.value("family", opt.family);
    opt.count = cfg.value("count", opt.count);
    opt.extra = cfg.value("extra", opt.extra);
    opt.n_steps = cfg.value("steps", opt.n_steps);
    opt.seed = cfg.value("seed", opt.seed);
    opt.ranges.hole_scale = cfg.value("hole_scale", opt.ranges.hole_scale);
    opt.ranges.amplitude_scale = cfg.value("amplitude_scale", opt.ranges.amplitude_scale);
    if (cfg.contains("chain")) opt.chain = oracle::ChainScenario::from_json(cfg["chain"]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad gen config: ") + e.what());
  }
  if (!family.empty()) opt.family = family;
  if (count) opt.count = *count;
  if (extra) opt.extra = *extra;
  if (steps) opt.n_steps = *steps;
  if (g.seed) opt.seed = *g.seed;
  opt.jobs = g.jobs;
  if (opt.family != "solid" && opt.family != "fluid") throw ConfigError("family must be solid or fluid");
  if (opt.family == "fluid") opt.chain.validate();

  const auto splits = oracle::generate_dataset(opt, out);
  snapshot(out, "gen",
           {{"family", opt.family}, {"count", opt.count}, {"extra", opt.extra}, {"steps", opt.n_steps},
            {"seed", opt.seed}, {"hole_scale", opt.ranges.hole_scale},
            {"amplitude_scale", opt.ranges.amplitude_scale}, {"chain", opt.chain.to_json()}});
  std::printf("wrote %zu train, %zu valid, %zu test, %zu extra bundles to %s\n", splits.train.size(),
              splits.valid.size(), splits.test.size(), splits.extra.size(), out.c_str());
  return kOk;
}

// ---- train

struct TrainArgs {
  std::string model, data, out, init;
  std::optional<std::size_t> epochs, max_steps;
  std::optional<double> lr;
};

int train_mgn(const Global& g, const TrainArgs& a, json cfg) {
  mgn::MgnModel m;
  if (!a.init.empty()) {
    m = mgn::from_checkpoint(nn::load_checkpoint(a.init));
    m.config = mgn::MgnConfig::from_json(cfg, m.config);
  } else {
    m.config = mgn::MgnConfig::from_json(cfg);
  }
  if (a.epochs) m.config.epochs = *a.epochs;
  if (a.lr) m.config.lr = *a.lr;
  if (g.seed) m.config.seed = *g.seed;
  m.config.validate();

  const auto train = load_split(a.data, "train"), valid = load_split(a.data, "valid");
  const auto ts = mgn::make_sample_set(train, m.config.contact_radius);
  const auto vs = mgn::make_sample_set(valid.empty() ? train : valid, m.config.contact_radius);
  if (a.init.empty()) {
    std::mt19937_64 rng(m.config.seed);
    const auto cfg_copy = m.config;
    m = mgn::mgn_init(cfg_copy, rng);
    mgn::fit_normalizers(m, ts);
  }
  std::vector<std::array<double, 5>> curve;
  mgn::TrainOptions opt;
  opt.jobs = g.jobs;
  if (a.max_steps) opt.max_steps = *a.max_steps;
  opt.on_eval = [&](const mgn::TrainProgress& p) {
    curve.push_back({double(p.epoch), double(p.step), p.train_loss, p.valid_loss, p.lr});
    std::printf("epoch %zu step %zu train %.6g valid %.6g lr %.3g\n", p.epoch, p.step, p.train_loss, p.valid_loss, p.lr);
    std::fflush(stdout);
    return true;
  };
  const auto res = mgn::train(m, ts, vs, opt);
  nn::save_checkpoint(mgn::to_checkpoint(m), fs::path(a.out) / "checkpoint");
  write_curve(fs::path(a.out) / "curve.csv", curve);
  json snap = m.config.to_json();
  snap["model"] = "mgn";
  snap["data"] = a.data;
  snap["init"] = a.init;
  snap["max_steps"] = opt.max_steps;
  snapshot(a.out, "train", snap);
  std::printf("best valid %.6g at step %zu of %zu\n", res.best_valid, res.best_step, res.steps);
  return kOk;
}

int train_tignn(const Global& g, const TrainArgs& a, json cfg) {
  tignn::TignnModel m;
  if (!a.init.empty()) {
    // fine-tune: weights and normalizers come from the checkpoint
    m = tignn::from_checkpoint(nn::load_checkpoint(a.init));
    m.config = tignn::TignnConfig::from_json(cfg, m.config);
  } else {
    m.config = tignn::TignnConfig::from_json(cfg);
  }
  if (a.epochs) m.config.epochs = *a.epochs;
  if (a.lr) m.config.lr = *a.lr;
  if (g.seed) m.config.seed = *g.seed;
  m.config.validate();

  const auto train = load_split(a.data, "train"), valid = load_split(a.data, "valid");
  const auto ts = tignn::make_sample_set(train);
  const auto vs = tignn::make_sample_set(valid.empty() ? train : valid);
  if (a.init.empty()) {
    std::mt19937_64 rng(m.config.seed);
    const auto cfg_copy = m.config;
    m = tignn::tignn_init(cfg_copy, rng);
    tignn::fit_normalizers(m, ts);
  }
  std::vector<std::array<double, 5>> curve;
  tignn::TrainOptions opt;
  opt.jobs = g.jobs;
  if (a.max_steps) opt.max_steps = *a.max_steps;
  opt.on_eval = [&](const tignn::TrainProgress& p) {
    curve.push_back({double(p.epoch), double(p.step), p.train.total, p.valid.total, p.lr});
    std::printf("epoch %zu step %zu train %.6g (degeneracy %.3g) valid %.6g (degeneracy %.3g) lr %.3g\n", p.epoch,
                p.step, p.train.total, p.train.degeneracy, p.valid.total, p.valid.degeneracy, p.lr);
    std::fflush(stdout);
    return true;
  };
  const auto res = tignn::train(m, ts, vs, opt);
  nn::save_checkpoint(tignn::to_checkpoint(m), fs::path(a.out) / "checkpoint");
  write_curve(fs::path(a.out) / "curve.csv", curve);
  json snap = m.config.to_json();
  snap["model"] = "tignn";
  snap["data"] = a.data;
  snap["init"] = a.init;
  snap["max_steps"] = opt.max_steps;
  snapshot(a.out, "train", snap);
  std::printf("best valid %.6g at step %zu of %zu\n", res.best_valid, res.best_step, res.steps);
  return kOk;
}

int cmd_train(const Global& g, const TrainArgs& a) {
  json cfg = load_json(g.config);
  if (!cfg.is_object()) throw ConfigError("train config must be a JSON object");
  std::string model = a.model.empty() ? cfg.value("model", std::string("mgn")) : a.model;
  cfg.erase("model");
  if (!a.init.empty()) {
    const auto kind = checkpoint_model(nn::load_checkpoint(a.init));
    if (kind != model) throw ConfigError("--init checkpoint holds a " + kind + " model, not " + model);
  }
  if (model == "mgn") return train_mgn(g, a, cfg);
  if (model == "tignn") return train_tignn(g, a, cfg);
  throw ConfigError("unknown model '" + model + "' (mgn or tignn)");
}

// ---- transfer

int cmd_transfer(const Global& g, const std::string& plan_path, const std::string& source, const std::string& data_dir,
                 const std::string& out, std::optional<std::size_t> s1, std::optional<std::size_t> s2) {
  json pj = load_json(plan_path.empty() ? g.config : plan_path);
  auto plan = transfer::GraftPlan::from_json(pj);
  if (!source.empty()) plan.source = source;
  if (s1) plan.stage1_epochs = *s1;
  if (s2) plan.stage2_epochs = *s2;
  if (g.seed) plan.seed = *g.seed;
  if (plan.source.empty()) throw ConfigError("graft plan needs a source checkpoint");
  const auto src = mgn::from_checkpoint(nn::load_checkpoint(plan.source));

  std::mt19937_64 rng(plan.seed);
  auto m = transfer::graft_decoder(src, plan.width, rng);
  const auto train = load_split(data_dir, "train"), valid = load_split(data_dir, "valid");
  const auto ts = mgn::make_sample_set(train, m.config.contact_radius);
  const auto vs = mgn::make_sample_set(valid.empty() ? train : valid, m.config.contact_radius);
  std::vector<std::array<double, 5>> curve;
  mgn::TrainOptions opt;
  opt.jobs = g.jobs;
  opt.on_eval = [&](const mgn::TrainProgress& p) {
    curve.push_back({double(p.epoch), double(p.step), p.train_loss, p.valid_loss, p.lr});
    std::printf("step %zu train %.6g valid %.6g lr %.3g\n", p.step, p.train_loss, p.valid_loss, p.lr);
    std::fflush(stdout);
    return true;
  };
  const auto r = transfer::two_stage_train(m, plan, ts, vs, opt);
  nn::save_checkpoint(mgn::to_checkpoint(m), fs::path(out) / "checkpoint");
  write_curve(fs::path(out) / "curve.csv", curve);
  json snap = plan.to_json();
  snap["data"] = data_dir;
  snapshot(out, "transfer", snap);
  std::printf("backbone %s during stage 1\n",
              r.backbone_hash_after_stage1 == r.backbone_hash_before ? "unchanged" : "CHANGED");
  return kOk;
}

// ---- rollout

int cmd_rollout(const std::string& ckpt_dir, const std::string& bundle_dir, std::size_t steps, const std::string& out) {
  const auto ckpt = nn::load_checkpoint(ckpt_dir);
  const auto b = data::read_bundle(bundle_dir);
  const std::size_t T = std::min(steps, b.n_steps - 1);
  data::TrajectoryBundle p;
  p.family = b.family;
  p.n_nodes = b.n_nodes;
  p.n_steps = T + 1;
  p.dt = b.dt;
  p.meta = {{"predicted_from", fs::path(bundle_dir).filename().string()}, {"model", checkpoint_model(ckpt)}};
  for (const auto& [name, a] : b.arrays)
    if (!a.per_step) p.set(name, a.shape, a.values, false);
  const std::size_t N = b.n_nodes;
  try {
    if (checkpoint_model(ckpt) == "mgn") {
      if (b.family != "solid") throw ConfigError("mgn checkpoint needs a solid bundle");
      const auto m = mgn::from_checkpoint(ckpt);
      const auto topo = mgn::topology_from_bundle(b);
      const auto r = mgn::rollout(m, topo, b.points_at("q", 0), mgn::schedule_from_bundle(topo, b), T);
      std::vector<double> q, u;
      for (const auto& f : r.q)
        for (std::size_t i = 0; i < N; ++i)
          for (int d = 0; d < 3; ++d) {
            q.push_back(f[i][d]);
            u.push_back(f[i][d] - r.q[0][i][d]);
          }
      p.set("q", {T + 1, N, 3}, q, true);
      p.set("u", {T + 1, N, 3}, u, true);
      if (m.config.out_width == 9) {
        // von Mises of the predicted tensor, sqrt(3/2 dev:dev)
        std::vector<double> vm((T + 1) * N);
        for (std::size_t k = 0; k < vm.size(); ++k) {
          const double* s = &r.stress[k * 6];
          const double p3 = (s[0] + s[1] + s[2]) / 3.0;
          const double d0 = s[0] - p3, d1 = s[1] - p3, d2 = s[2] - p3;
          vm[k] = std::sqrt(1.5 * (d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5])));
        }
        p.set("sigma", {T + 1, N, 6}, r.stress, true);
        p.set("sigma_vm", {T + 1, N}, vm, true);
        p.meta["sigma_vm_definition"] = "von Mises of the predicted tensor";
      } else {
        p.set("sigma_vm", {T + 1, N}, r.stress, true);
        p.set("sigma", {T + 1, N, 6}, std::vector<double>((T + 1) * N * 6, std::nan("")), true);
        p.meta["sigma_definition"] = "not predicted (NaN)";
      }
    } else if (checkpoint_model(ckpt) == "tignn") {
      if (b.family != "fluid") throw ConfigError("tignn checkpoint needs a fluid bundle");
      const auto m = tignn::from_checkpoint(ckpt);
      const auto r = tignn::rollout(m, b.kinds(), tignn::state_at(b, 0), T, b.dt);
      std::vector<double> z, zdot;
      for (const auto& f : r.z) z.insert(z.end(), f.begin(), f.end());
      // derivative the model applied at each frame: forward differences, and a fresh evaluation at the last one
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < N * 7; ++k) zdot.push_back((r.z[t + 1][k] - r.z[t][k]) / b.dt);
      const auto last = tignn::predict_derivative(m, b.kinds(), r.z[T]).zdot;
      zdot.insert(zdot.end(), last.values().begin(), last.values().end());
      p.set("z", {T + 1, N, 7}, z, true);
      p.set("zdot", {T + 1, N, 7}, zdot, true);
      json budget = json::array();
      for (const auto& s : r.budget)
        budget.push_back({{"internal_energy", s.internal_energy}, {"entropy_production", s.entropy_production},
                          {"entropy", s.entropy}, {"energy_rate", s.energy_rate}, {"degeneracy", s.degeneracy}});
      p.meta["thermo"] = budget;
    } else {
      throw VersionError("checkpoint model '" + checkpoint_model(ckpt) + "' is not known");
    }
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "rollout diverged: %s\n", e.what());
    return kDiverged;
  }
  data::write_bundle(p, out);
  snapshot(out, "rollout", {{"checkpoint", ckpt_dir}, {"bundle", bundle_dir}, {"steps", T}});
  std::printf("wrote %zu frames to %s\n", T + 1, out.c_str());
  return kOk;
}

// ---- eval

int cmd_eval(const std::string& ckpt_dir, const std::string& data_dir, const std::vector<std::string>& splits,
             std::vector<std::size_t> horizons, const std::string& out) {
  const auto ckpt = nn::load_checkpoint(ckpt_dir);
  const auto kind = checkpoint_model(ckpt);
  if (kind != "mgn" && kind != "tignn") throw VersionError("checkpoint model '" + kind + "' is not known");
  if (horizons.empty()) throw ConfigError("at least one horizon is required");
  std::sort(horizons.begin(), horizons.end());
  const std::size_t T = horizons.back();
  std::optional<mgn::MgnModel> solid;
  std::optional<tignn::TignnModel> fluid;
  if (kind == "mgn") solid = mgn::from_checkpoint(ckpt);
  else fluid = tignn::from_checkpoint(ckpt);

  metrics::RolloutReport report;
  for (const auto& split : splits) {
    std::vector<std::string> names;
    const auto bundles = load_split(data_dir, split, &names);
    for (std::size_t k = 0; k < bundles.size(); ++k) {
      const auto r = solid ? metrics::solid_rollout(*solid, bundles[k], split, names[k], T)
                           : metrics::fluid_rollout(*fluid, bundles[k], split, names[k], T);
      metrics::add_rollout(report, r, horizons);
    }
  }
  fs::create_directories(out);
  metrics::write_csv(report, fs::path(out) / "report.csv");
  metrics::write_summary_json(report, fs::path(out) / "summary.json");
  snapshot(out, "eval", {{"checkpoint", ckpt_dir}, {"data", data_dir}, {"splits", splits}, {"horizons", horizons}});
  for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const auto& a : report.aggregates())
    std::printf("%-6s %-9s h=%-4zu rmse %.4g  rrmse %.3f%% +- %.3f (n=%zu, diverged %zu)\n", a.split.c_str(),
                a.variable.c_str(), a.horizon, a.rmse_mean, a.rrmse_mean, a.rrmse_se, a.n, a.n_diverged);
  return report.diverged_trajectories() > 0 ? kDiverged : kOk;
}

// ---- inspect

int cmd_inspect(const std::string& what, const std::string& path) {
  json j;
  if (what == "bundle") {
    const auto b = data::read_bundle(path);
    j = {{"family", b.family}, {"n_nodes", b.n_nodes}, {"n_steps", b.n_steps}, {"dt", b.dt}, {"meta", b.meta}};
    for (const auto& [name, a] : b.arrays) j["arrays"][name] = {{"shape", a.shape}, {"per_step", a.per_step}};
  } else if (what == "checkpoint") {
    const auto c = nn::load_checkpoint(path);
    j = {{"meta", c.meta}};
    std::size_t total = 0;
    for (const auto& [name, e] : c.params.entries()) {
      j["params"][name] = e.value.shape();
      total += e.value.size();
    }
    j["n_parameters"] = total;
    for (const auto& [name, e] : c.buffers.entries()) j["buffers"][name] = e.value.shape();
  } else if (what == "report") {
    const auto rep = metrics::read_csv(path);
    for (const auto& a : rep.aggregates())
      j["aggregates"].push_back({{"split", a.split}, {"variable", a.variable}, {"horizon", a.horizon}, {"n", a.n},
                                 {"n_diverged", a.n_diverged}, {"rmse_mean", a.rmse_mean},
                                 {"rrmse_mean", a.rrmse_mean}, {"rrmse_se", a.rrmse_se}});
  } else {
    throw ConfigError("inspect target must be bundle, checkpoint or report");
  }
  std::cout << j.dump(2) << "\n";
  return kOk;
}

// ---- export-csv: one row per (step, node) of a bundle array

int cmd_export(const std::string& bundle_dir, const std::string& array, const std::string& out) {
  const auto b = data::read_bundle(bundle_dir);
  const auto& a = b.array(array);
  std::ofstream f(out);
  if (!f) throw DataError("cannot write " + out);
  const std::size_t rows = a.per_step ? b.n_steps : 1;
  const std::size_t per = rows ? a.size() / rows : 0;
  const std::size_t width = a.shape.size() >= (a.per_step ? 3u : 2u) ? a.shape.back() : 1;
  const std::size_t nodes = width ? per / width : 0;
  f << "step,node";
  for (std::size_t c = 0; c < width; ++c) f << "," << array << c;
  f << "\n";
  char buf[32];
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t i = 0; i < nodes; ++i) {
      f << t << "," << i;
      for (std::size_t c = 0; c < width; ++c) {
        std::snprintf(buf, sizeof buf, ",%.17g", a.values[t * per + i * width + c]);
        f << buf;
      }
      f << "\n";
    }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learned mesh and particle simulators"};
  app.require_subcommand(1);
  Global g;
  auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--seed", g.seed, "random seed");
    sub->add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--config", g.config, "JSON config file");
  };

  std::string family, out, data_dir, ckpt, bundle, plan, source, array, split_list = "test", what, target;
  std::optional<std::size_t> count, extra, steps, s1, s2;
  std::size_t roll_steps = 450;
  std::vector<std::size_t> horizons{50, 450};
  TrainArgs ta;

  auto* gen = app.add_subcommand("gen", "generate oracle trajectories");
  add_globals(gen);
  gen->add_option("--family", family)->check(CLI::IsMember({"solid", "fluid"}));
  gen->add_option("--count", count);
  gen->add_option("--extra", extra, "out-of-distribution trajectories (solid)");
  gen->add_option("--steps", steps);
  gen->add_option("--out", out)->required();

  auto* train = app.add_subcommand("train", "train a model");
  add_globals(train);
  train->add_option("--model", ta.model)->check(CLI::IsMember({"mgn", "tignn"}));
  train->add_option("--data", ta.data)->required();
  train->add_option("--out", ta.out)->required();
  train->add_option("--init", ta.init, "start from this checkpoint (fine-tune)");
  train->add_option("--epochs", ta.epochs);
  train->add_option("--max-steps", ta.max_steps);
  train->add_option("--lr", ta.lr);

  auto* tr = app.add_subcommand("transfer", "graft a new decoder and train it in two stages");
  add_globals(tr);
  tr->add_option("--plan", plan, "graft plan JSON");
  tr->add_option("--source", source, "source checkpoint");
  tr->add_option("--data", data_dir)->required();
  tr->add_option("--out", out)->required();
  tr->add_option("--stage1-epochs", s1);
  tr->add_option("--stage2-epochs", s2);

  auto* ro = app.add_subcommand("rollout", "roll a model out on one bundle");
  add_globals(ro);
  ro->add_option("--checkpoint", ckpt)->required();
  ro->add_option("--bundle", bundle)->required();
  ro->add_option("--steps", roll_steps);
  ro->add_option("--out", out)->required();

  auto* ev = app.add_subcommand("eval", "rollout errors over dataset splits");
  add_globals(ev);
  ev->add_option("--checkpoint", ckpt)->required();
  ev->add_option("--data", data_dir)->required();
  ev->add_option("--splits", split_list, "comma separated");
  ev->add_option("--horizons", horizons)->delimiter(',');
  ev->add_option("--out", out)->required();

  auto* in = app.add_subcommand("inspect", "print a summary of a bundle, checkpoint or report");
  add_globals(in);
  in->add_option("what", what)->required();
  in->add_option("path", target)->required();

  auto* ex = app.add_subcommand("export-csv", "dump one bundle array as CSV");
  add_globals(ex);
  ex->add_option("--bundle", bundle)->required();
  ex->add_option("--array", array)->required();
  ex->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen(g, family, count, extra, steps, out);
    if (*train) return cmd_train(g, ta);
    if (*tr) return cmd_transfer(g, plan, source, data_dir, out, s1, s2);
    if (*ro) return cmd_rollout(ckpt, bundle, roll_steps, out);
    if (*ev) {
      std::vector<std::string> splits;
      std::stringstream ss(split_list);
      for (std::string s; std::getline(ss, s, ',');)
        if (!s.empty()) splits.push_back(s);
      return cmd_eval(ckpt, data_dir, splits, horizons, out);
    }
    if (*in) return cmd_inspect(what, target);
    if (*ex) return cmd_export(bundle, array, out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kDiverged;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
