#pragma once

#include <filesystem>
#include <iosfwd>

#include "nearq/dataset.hpp"

namespace nearq {

// Cohort CSV, one row per patient-stage:
//
//   patient_id,stage,cov_0,...,cov_{d-1},action_index,reward
//
// Horizon, action labels and the fixed-horizon flag live in a key=value
// sidecar next to the CSV (`<file>.meta`). Without a sidecar the horizon is
// the largest stage present and actions are integer codes 0..max index.

std::filesystem::path sidecar_path(const std::filesystem::path& csv);

void save_csv(const OfflineDataset& dataset, const std::filesystem::path& path);

/// Throws ParseError (with the 1-based row) on schema violations and
/// DatasetError when the parsed cohort fails validation.
OfflineDataset load_csv(const std::filesystem::path& path);

void write_cohort_csv(const OfflineDataset& dataset, std::ostream& out);

}  // namespace nearq
