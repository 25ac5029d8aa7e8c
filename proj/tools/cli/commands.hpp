#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nearq/near_equiv.hpp"
#include "nearq/regression.hpp"
#include "nearq/text_io.hpp"

namespace nearq::cli {

enum class Experiment { Itr, Cancer, Oracle };

std::string_view to_string(Experiment e);

struct RunConfig {
  Experiment experiment = Experiment::Itr;
  std::uint64_t seed = 2024;
  std::size_t n_train = 1000;
  std::size_t n_test = 2000;
  std::vector<double> epsilons;
  nearequiv::AdmissibilityMode mode = nearequiv::AdmissibilityMode::Absolute;
  regression::DesignSpec design;
  std::filesystem::path out_dir = "out";
  bool dry_run = false;

  std::size_t grid_resolution = 41;  // itr blip surface
  int oracle_horizon = 1;
  bool oracle_corrupt = false;  // test hook: perturb one reward after enumeration

  static RunConfig defaults(Experiment e);

  /// Throws std::invalid_argument describing the first invalid field.
  void check() const;

  KeyValues to_key_values() const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr double kOracleTolerance = 1e-8;

// Each command validates the config before doing any work, writes artifacts
// to a staging directory inside out_dir, re-reads them, and only then moves
// them into place. Messages go to `log`.
int cmd_itr(const RunConfig& cfg, std::ostream& log);
int cmd_cancer(const RunConfig& cfg, std::ostream& log);
int cmd_oracle(const RunConfig& cfg, std::ostream& log);

/// Parses argv (CLI11) and dispatches to a command.
int run(int argc, const char* const* argv, std::ostream& log);

std::string epsilon_tag(double epsilon);

}  // namespace nearq::cli
