#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "learnsim/data/bundle.hpp"
#include "learnsim/oracle/chain.hpp"
#include "learnsim/oracle/plate.hpp"

namespace learnsim::oracle {

struct BundleRef {
  std::string name;
  bool out_of_distribution = false;
};

// Seeded shuffle of the in-distribution bundles into train/valid/test in
// proportion 80:10:20; all out-of-distribution bundles go to extra.
data::SplitManifest make_splits(const std::vector<BundleRef>& bundles, std::uint64_t seed);

struct GenerateOptions {
  std::string family = "solid";  // solid | fluid
  std::size_t count = 10;        // in-distribution trajectories
  std::size_t extra = 0;         // out-of-distribution (solid only)
  std::uint64_t seed = 0;
  std::size_t n_steps = 60;      // solid: load steps; fluid: stored frames
  unsigned jobs = 1;
  ScenarioRanges ranges;
  ChainScenario chain;           // base scenario; seed is replaced per trajectory
};

std::uint64_t trajectory_seed(std::uint64_t seed, std::size_t index);

// Writes <out>/traj_XXX, <out>/extra_XXX bundle directories and <out>/splits.json.
data::SplitManifest generate_dataset(const GenerateOptions& opt, const std::filesystem::path& out);

}  // namespace learnsim::oracle
