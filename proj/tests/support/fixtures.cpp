#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

namespace nearq::fixtures {

OfflineDataset random_dataset(std::uint64_t seed, const RandomDatasetOptions& opts) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::uniform_int_distribution<std::size_t> pick(0, opts.n_actions - 1);

  std::vector<double> labels;
  for (std::size_t k = 0; k < opts.n_actions; ++k) {
    labels.push_back(opts.integer_labels ? static_cast<double>(k)
                                         : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(opts.n_actions - 1));
  }

  OfflineDataset ds;
  ds.horizon = opts.horizon;
  const auto stages = static_cast<std::size_t>(opts.horizon) + 1;
  ds.action_spaces.assign(stages, ActionSpace(labels));
  ds.feature_dims.assign(stages, opts.feature_dim);
  for (std::size_t i = 0; i < opts.n_patients; ++i) {
    PatientTrajectory p;
    p.id = static_cast<std::int64_t>(100 + i);
    std::vector<double> x(opts.feature_dim);
    for (auto& v : x) v = unif(rng);
    for (int t = 0; t <= opts.horizon; ++t) {
      const std::size_t a = pick(rng);
      const double label = labels[a];
      double mean = 0.5 * static_cast<double>(t);
      for (std::size_t k = 0; k < x.size(); ++k) mean += (1.0 + 0.3 * static_cast<double>(k)) * x[k] * (0.5 + label);
      mean -= 0.4 * label * label;
      p.stages.push_back(StageRecord{x, a, mean + noise(rng)});
      if (t < opts.horizon && u01(rng) < opts.death_rate) break;
      for (auto& v : x) v = 0.7 * v + 0.3 * unif(rng) + 0.1 * label;
    }
    ds.patients.push_back(std::move(p));
  }
  return ds;
}

OfflineDataset tiny_dataset() {
  OfflineDataset ds;
  ds.horizon = 0;
  ds.fixed_horizon = true;
  ds.action_spaces = {ActionSpace({-1.0, 1.0})};
  ds.feature_dims = {2};
  ds.patients = {
      PatientTrajectory{1, {StageRecord{{0.25, -0.5}, 0, 1.5}}},
      PatientTrajectory{2, {StageRecord{{-0.75, 0.125}, 1, -2.0}}},
  };
  return ds;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("nearq-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string slurp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace nearq::fixtures
