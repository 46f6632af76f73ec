#pragma once

#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "learnsim/mgn/train.hpp"

namespace learnsim::transfer {

struct GraftPlan {
  std::string source;  // checkpoint directory
  std::size_t width = 9;
  std::size_t stage1_epochs = 5;
  double stage1_lr = 0.0;  // 0 = the source model's lr
  std::size_t stage2_epochs = 2;
  double stage2_lr = 1e-5;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static GraftPlan from_json(const nlohmann::json& j);
  void validate() const;
};

// Backbone copied bit-exact, fresh decoder of the new width, feature
// normalizers kept. The target normalizer is reset to identity until
// two_stage_train refits it.
mgn::MgnModel graft_decoder(const mgn::MgnModel& source, std::size_t width, std::mt19937_64& rng);

struct StageResult {
  mgn::TrainResult stage1, stage2;
  std::uint64_t backbone_hash_before = 0, backbone_hash_after_stage1 = 0;
};

// Stage 1 trains the decoder with the backbone frozen, stage 2 trains
// everything at plan.stage2_lr. Both stages run at a constant learning rate.
// on_eval progress steps are counted across both stages.
StageResult two_stage_train(mgn::MgnModel& m, const GraftPlan& plan, const mgn::SampleSet& train_set,
                            const mgn::SampleSet& valid_set, const mgn::TrainOptions& opt);

std::uint64_t backbone_hash(const mgn::MgnModel& m);

}  // namespace learnsim::transfer
