#include "learnsim/transfer/graft.hpp"

#include "learnsim/core/errors.hpp"

namespace learnsim::transfer {

using nlohmann::json;

json GraftPlan::to_json() const {
  return {{"source", source},       {"width", width},         {"stage1_epochs", stage1_epochs},
          {"stage1_lr", stage1_lr}, {"stage2_epochs", stage2_epochs}, {"stage2_lr", stage2_lr},
          {"seed", seed}};
}

GraftPlan GraftPlan::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("graft plan must be a JSON object");
  static const std::vector<std::string> known{"source", "width", "stage1_epochs", "stage1_lr",
                                              "stage2_epochs", "stage2_lr", "seed"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown graft plan key '" + k + "'");
  GraftPlan p;
  try {
    p.source = j.value("source", p.source);
    p.width = j.value("width", p.width);
    p.stage1_epochs = j.value("stage1_epochs", p.stage1_epochs);
    p.stage1_lr = j.value("stage1_lr", p.stage1_lr);
    p.stage2_epochs = j.value("stage2_epochs", p.stage2_epochs);
    p.stage2_lr = j.value("stage2_lr", p.stage2_lr);
    p.seed = j.value("seed", p.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad graft plan: ") + e.what());
  }
  p.validate();
  return p;
}

void GraftPlan::validate() const {
  if (width != 4 && width != 9) throw ConfigError("graft width must be 4 or 9");
  if (stage1_lr < 0 || !(stage2_lr > 0)) throw ConfigError("stage learning rates must be positive");
}

std::uint64_t backbone_hash(const mgn::MgnModel& m) {
  std::uint64_t h = 0;
  for (const auto& p : mgn::backbone_prefixes()) h = h * 0x100000001b3ULL ^ m.params.hash(p);
  return h;
}

mgn::MgnModel graft_decoder(const mgn::MgnModel& source, std::size_t width, std::mt19937_64& rng) {
  mgn::MgnConfig cfg = source.config;
  cfg.out_width = width;
  cfg.validate();
  mgn::MgnModel m;
  m.config = cfg;
  for (const auto& [name, e] : source.params.entries())
    if (name.rfind(mgn::kDecoderPrefix, 0) != 0) m.params.add(name, e.value);
  nn::mlp_init(m.decoder_spec(), mgn::kDecoderPrefix, m.params, rng);
  m.node_norm = source.node_norm;
  m.mesh_norm = source.mesh_norm;
  m.contact_norm = source.contact_norm;
  m.target_norm = nn::Normalizer(width);
  return m;
}

StageResult two_stage_train(mgn::MgnModel& m, const GraftPlan& plan, const mgn::SampleSet& train_set,
                            const mgn::SampleSet& valid_set, const mgn::TrainOptions& opt) {
  plan.validate();
  if (m.config.out_width == 9)
    for (const auto* set : {&train_set, &valid_set})
      for (const auto* b : set->bundles)
        if (!b->has("sigma")) throw DataError("training bundle has no stress tensor targets");
  mgn::fit_target_normalizer(m, train_set);

  StageResult r;
  const mgn::MgnConfig base = m.config;
  std::size_t offset = 0;
  mgn::TrainOptions o = opt;
  o.on_eval = [&](const mgn::TrainProgress& p) {
    if (!opt.on_eval) return true;
    mgn::TrainProgress q = p;
    q.step += offset;
    return opt.on_eval(q);
  };

  r.backbone_hash_before = backbone_hash(m);
  m.params.set_frozen_prefix(mgn::backbone_prefixes(), true);
  m.config.lr = plan.stage1_lr > 0 ? plan.stage1_lr : base.lr;
  m.config.lr_final = 0.0;
  m.config.epochs = plan.stage1_epochs;
  m.config.seed = plan.seed;
  if (plan.stage1_epochs > 0) r.stage1 = mgn::train(m, train_set, valid_set, o);
  r.backbone_hash_after_stage1 = backbone_hash(m);

  offset = r.stage1.steps;
  m.params.set_frozen_prefix(mgn::backbone_prefixes(), false);
  m.config.lr = plan.stage2_lr;
  m.config.epochs = plan.stage2_epochs;
  m.config.seed = plan.seed + 1;
  if (plan.stage2_epochs > 0) r.stage2 = mgn::train(m, train_set, valid_set, o);

  m.config.lr = base.lr;
  m.config.lr_final = base.lr_final;
  m.config.epochs = base.epochs;
  m.config.seed = base.seed;
  return r;
}

}  // namespace learnsim::transfer
