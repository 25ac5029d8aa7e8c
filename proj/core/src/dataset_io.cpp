#include "nearq/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>

#include "nearq/text_io.hpp"

namespace nearq {

namespace {

std::size_t common_feature_dim(const OfflineDataset& dataset) {
  if (dataset.feature_dims.empty()) return 0;
  const auto d = dataset.feature_dims.front();
  if (std::any_of(dataset.feature_dims.begin(), dataset.feature_dims.end(),
                  [d](std::size_t x) { return x != d; })) {
    throw DatasetError("cohort CSV requires the same covariate dimension at every stage");
  }
  return d;
}

std::string join_labels(const ActionSpace& space) {
  std::string out;
  for (std::size_t k = 0; k < space.size(); ++k) {
    if (k) out += ';';
    out += format_double(space.value(k));
  }
  return out;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p += ".meta";
  return p;
}

void write_cohort_csv(const OfflineDataset& dataset, std::ostream& out) {
  const auto d = common_feature_dim(dataset);
  out << "patient_id,stage";
  for (std::size_t k = 0; k < d; ++k) out << ",cov_" << k;
  out << ",action_index,reward\n";
  for (const auto& traj : dataset.patients) {
    for (std::size_t t = 0; t < traj.stages.size(); ++t) {
      const auto& rec = traj.stages[t];
      out << traj.id << ',' << t;
      for (double c : rec.covariates) out << ',' << format_double(c);
      out << ',' << rec.action_index << ',' << format_double(rec.reward) << '\n';
    }
  }
}

void save_csv(const OfflineDataset& dataset, const std::filesystem::path& path) {
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_cohort_csv(dataset, out);
  }
  KeyValues meta;
  meta["format"] = "nearq-cohort 1";
  meta["horizon"] = std::to_string(dataset.horizon);
  meta["fixed_horizon"] = dataset.fixed_horizon ? "1" : "0";
  meta["feature_dim"] = std::to_string(common_feature_dim(dataset));
  for (std::size_t t = 0; t < dataset.action_spaces.size(); ++t) {
    meta["actions." + std::to_string(t)] = join_labels(dataset.action_spaces[t]);
  }
  write_key_values(sidecar_path(path), meta);
}

OfflineDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  if (header.size() < 4 || header[0] != "patient_id" || header[1] != "stage") {
    throw ParseError("header must start with patient_id,stage", 1);
  }
  if (header[header.size() - 2] != "action_index") {
    throw ParseError("header missing action_index column", 1);
  }
  if (header.back() != "reward") throw ParseError("header missing reward column", 1);
  const std::size_t d = header.size() - 4;
  for (std::size_t k = 0; k < d; ++k) {
    if (header[2 + k] != "cov_" + std::to_string(k)) {
      throw ParseError("expected column cov_" + std::to_string(k), 1);
    }
  }

  OfflineDataset dataset;
  std::map<long long, std::size_t> slot;
  int max_stage = -1;
  std::size_t max_action = 0;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       row);
    }
    try {
      const auto id = parse_int(fields[0]);
      const auto stage = parse_int(fields[1]);
      StageRecord rec;
      rec.covariates.reserve(d);
      for (std::size_t k = 0; k < d; ++k) rec.covariates.push_back(parse_double(fields[2 + k]));
      const auto action = parse_int(fields[2 + d]);
      if (action < 0) throw std::invalid_argument("negative action_index");
      rec.action_index = static_cast<std::size_t>(action);
      rec.reward = parse_double(fields[3 + d]);

      auto [it, inserted] = slot.try_emplace(id, dataset.patients.size());
      if (inserted) dataset.patients.push_back(PatientTrajectory{id, {}});
      auto& traj = dataset.patients[it->second];
      if (stage != static_cast<long long>(traj.stages.size())) {
        throw std::invalid_argument("stages of patient " + std::to_string(id) +
                                    " must be contiguous from 0");
      }
      traj.stages.push_back(std::move(rec));
      max_stage = std::max(max_stage, static_cast<int>(stage));
      max_action = std::max(max_action, static_cast<std::size_t>(action));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), row);
    }
  }

  const auto meta_path = sidecar_path(path);
  if (std::filesystem::exists(meta_path)) {
    const auto meta = read_key_values(meta_path);
    auto get = [&](const std::string& key) -> const std::string& {
      auto it = meta.find(key);
      if (it == meta.end()) throw DatasetError("sidecar missing key '" + key + "'");
      return it->second;
    };
    dataset.horizon = static_cast<int>(parse_int(get("horizon")));
    dataset.fixed_horizon = get("fixed_horizon") == "1";
    if (static_cast<std::size_t>(parse_int(get("feature_dim"))) != d) {
      throw DatasetError("sidecar feature_dim disagrees with CSV header");
    }
    for (int t = 0; t <= dataset.horizon; ++t) {
      std::vector<double> labels;
      for (auto tok : split(get("actions." + std::to_string(t)), ';')) {
        labels.push_back(parse_double(tok));
      }
      dataset.action_spaces.emplace_back(std::move(labels));
    }
  } else {
    dataset.horizon = std::max(max_stage, 0);
    for (int t = 0; t <= dataset.horizon; ++t) {
      dataset.action_spaces.push_back(ActionSpace::integer_codes(max_action + 1));
    }
  }
  dataset.feature_dims.assign(dataset.num_stages(), d);

  const auto report = validate(dataset);
  if (!report.ok()) {
    throw DatasetError("validation error in " + path.string() + ":\n" + report.to_string());
  }
  return dataset;
}

}  // namespace nearq
