#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nearq/dataset.hpp"

namespace nearq::fixtures {

// Multi-stage dataset with continuous covariates and random early deaths.
// Rewards are smooth in (x, a) plus noise so that fitted Q-values are tie-free.
struct RandomDatasetOptions {
  std::size_t n_patients = 60;
  int horizon = 2;
  std::size_t feature_dim = 2;
  std::size_t n_actions = 3;
  double death_rate = 0.1;  // per stage, before the final stage
  bool integer_labels = false;  // labels 0..K-1 instead of spread reals
};

OfflineDataset random_dataset(std::uint64_t seed, const RandomDatasetOptions& opts = {});

// Two-patient, single-stage, two-action dataset used by validation tests.
OfflineDataset tiny_dataset();

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& file);

}  // namespace nearq::fixtures
