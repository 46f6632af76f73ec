#include "learnsim/oracle/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "learnsim/core/errors.hpp"
#include "learnsim/core/parallel.hpp"
#include "learnsim/core/random.hpp"

namespace learnsim::oracle {

data::SplitManifest make_splits(const std::vector<BundleRef>& bundles, std::uint64_t seed) {
  std::vector<std::string> in;
  data::SplitManifest s;
  s.seed = seed;
  for (const auto& b : bundles) (b.out_of_distribution ? s.extra : in).push_back(b.name);
  const std::size_t n = in.size();
  const auto n_valid = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(n * 10.0 / 110.0)));
  const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(n * 20.0 / 110.0)));
  if (n < n_valid + n_test + 1)
    throw ConfigError("insufficient trajectories for a split: " + std::to_string(n) + " in-distribution bundles");
  std::mt19937_64 rng(seed);
  deterministic_shuffle(in, rng);
  s.valid.assign(in.begin(), in.begin() + n_valid);
  s.test.assign(in.begin() + n_valid, in.begin() + n_valid + n_test);
  s.train.assign(in.begin() + n_valid + n_test, in.end());
  return s;
}

std::uint64_t trajectory_seed(std::uint64_t seed, std::size_t index) {
  // splitmix64 over (seed, index)
  std::uint64_t x = seed * 0x9e3779b97f4a7c15ULL + index + 1;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

data::SplitManifest generate_dataset(const GenerateOptions& opt, const std::filesystem::path& out) {
  if (opt.family != "solid" && opt.family != "fluid") throw ConfigError("family must be solid or fluid");
  if (opt.family == "fluid" && opt.extra > 0) throw ConfigError("extra split is only defined for the solid family");
  const std::size_t total = opt.count + opt.extra;
  std::vector<BundleRef> refs(total);
  for (std::size_t i = 0; i < total; ++i) {
    const bool ood = i >= opt.count;
    char name[32];
    std::snprintf(name, sizeof name, "%s_%03zu", ood ? "extra" : "traj", ood ? i - opt.count : i);
    refs[i] = {name, ood};
  }
  std::filesystem::create_directories(out);
  parallel_for(total, opt.jobs, [&](std::size_t i) {
    std::mt19937_64 rng(trajectory_seed(opt.seed, i));
    data::TrajectoryBundle b;
    if (opt.family == "solid") {
      const auto sc = sample_plate_scenario(rng, refs[i].out_of_distribution, opt.ranges);
      b = gen_solid_trajectory(sc, opt.n_steps);
    } else {
      ChainScenario sc = opt.chain;
      sc.seed = rng();
      b = gen_fluid_trajectory(sc, opt.n_steps);
    }
    b.meta["split_role"] = refs[i].out_of_distribution ? "extra" : "in_distribution";
    data::write_bundle(b, out / refs[i].name);
  });
  auto s = make_splits(refs, opt.seed);
  data::write_splits(s, out / "splits.json");
  return s;
}

}  // namespace learnsim::oracle
