#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "nearq/cancer.hpp"
#include "nearq/dataset.hpp"
#include "nearq/dataset_io.hpp"
#include "nearq/itr.hpp"
#include "nearq/rng.hpp"
#include "nearq/text_io.hpp"

using namespace nearq;
using nearq::fixtures::TempDir;

TEST(ActionSpace, RejectsEmptyDuplicateAndNonFinite) {
  EXPECT_THROW(ActionSpace({}), std::invalid_argument);
  EXPECT_THROW(ActionSpace({0.0, 0.5, 0.0}), std::invalid_argument);
  EXPECT_THROW(ActionSpace({0.0, std::nan("")}), std::invalid_argument);
}

TEST(ActionSpace, IndexLookupUsesTolerance) {
  const ActionSpace doses({0.0, 0.1, 0.2});
  EXPECT_EQ(doses.index_of(0.1 + 1e-12), 1u);
  EXPECT_FALSE(doses.index_of(0.15).has_value());
  EXPECT_EQ(ActionSpace::integer_codes(3).value(2), 2.0);
}

TEST(Validate, WellFormedDatasetHasEmptyReport) {
  const auto report = validate(fixtures::tiny_dataset());
  EXPECT_TRUE(report.empty()) << report.to_string();
}

TEST(Validate, ActionIndexEqualToKIsOutOfRange) {
  auto ds = fixtures::tiny_dataset();
  ds.patients[1].stages[0].action_index = 2;
  const auto report = validate(ds);
  EXPECT_FALSE(report.ok());
  EXPECT_TRUE(report.has("action out of range"));
}

TEST(Validate, SingleObservedActionIsOnlyAWarning) {
  auto ds = fixtures::tiny_dataset();
  ds.patients[1].stages[0].action_index = 0;
  const auto report = validate(ds);
  EXPECT_TRUE(report.ok());
  EXPECT_TRUE(report.has("degenerate action support"));
  EXPECT_EQ(report.count(Severity::Warning), 1u);
}

TEST(Validate, DimensionMismatchAndNonFinite) {
  auto ds = fixtures::tiny_dataset();
  ds.patients[0].stages[0].covariates.push_back(1.0);
  ds.patients[1].stages[0].reward = std::numeric_limits<double>::infinity();
  const auto report = validate(ds);
  EXPECT_TRUE(report.has("dimension mismatch"));
  EXPECT_TRUE(report.has("non-finite value"));
}

TEST(Validate, EmptyDatasetAndEmptyStage) {
  OfflineDataset empty;
  empty.action_spaces = {ActionSpace::integer_codes(2)};
  empty.feature_dims = {1};
  EXPECT_TRUE(validate(empty).has("empty dataset"));

  auto ds = fixtures::tiny_dataset();
  ds.horizon = 1;
  ds.fixed_horizon = false;
  ds.action_spaces.push_back(ActionSpace({-1.0, 1.0}));
  ds.feature_dims.push_back(2);
  EXPECT_TRUE(validate(ds).has("empty stage"));
}

TEST(Validate, StructuralCorruptionThrows) {
  auto ds = fixtures::tiny_dataset();
  ds.horizon = 3;
  EXPECT_THROW(validate(ds), DatasetError);
}

TEST(Validate, DoesNotMutateInput) {
  const auto ds = fixtures::random_dataset(3);
  const auto copy = ds;
  (void)validate(ds);
  EXPECT_EQ(ds, copy);
}

TEST(HistoryFeatures, MarkovConventionForCancerState) {
  envs::CancerState s;
  s.tumor = 1.3;
  s.toxicity = 0.8;
  PatientTrajectory p;
  for (int t = 0; t < 3; ++t) p.stages.push_back(StageRecord{envs::cancer_features(s), 0, 0.0});
  const auto h = history_features(p, 2);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0], 1.3);
  EXPECT_EQ(h[1], 0.8);
  EXPECT_THROW(history_features(p, 3), std::out_of_range);
}

TEST(HistoryFeatures, ItrStageHasTenCovariates) {
  const auto ds = envs::simulate_itr({5, 11, 1.0});
  for (const auto& p : ds.patients) {
    const auto h = history_features(p, 0);
    EXPECT_EQ(h.size(), 10u);
    EXPECT_EQ(std::vector<double>(h.begin(), h.end()), p.stages[0].covariates);
  }
}

TEST(TextIo, DoublesRoundTripExactly) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<double>(i % 20) - 10.0);
    EXPECT_EQ(parse_double(format_double(x)), x);
  }
  EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
  EXPECT_THROW(parse_int(""), std::invalid_argument);
}

TEST(CohortCsv, RoundTripThreePatients) {
  TempDir dir("csv3");
  fixtures::RandomDatasetOptions opts;
  opts.n_patients = 3;
  const auto ds = fixtures::random_dataset(17, opts);
  save_csv(ds, dir / "cohort.csv");
  EXPECT_EQ(load_csv(dir / "cohort.csv"), ds);
}

TEST(CohortCsv, RoundTripRandomDatasetsProperty) {
  TempDir dir("csvprop");
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    fixtures::RandomDatasetOptions opts;
    opts.n_patients = 5 + seed;
    opts.horizon = static_cast<int>(seed % 4);
    opts.feature_dim = 1 + seed % 3;
    opts.n_actions = 2 + seed % 4;
    opts.integer_labels = seed % 2 == 0;
    const auto ds = fixtures::random_dataset(seed, opts);
    const auto path = dir / ("d" + std::to_string(seed) + ".csv");
    save_csv(ds, path);
    EXPECT_EQ(load_csv(path), ds) << "seed " << seed;
  }
}

TEST(CohortCsv, WithoutSidecarHorizonIsMaxStage) {
  TempDir dir("nosidecar");
  auto ds = fixtures::random_dataset(4, {10, 2, 2, 3, 0.0, true});
  save_csv(ds, dir / "c.csv");
  std::filesystem::remove(sidecar_path(dir / "c.csv"));
  const auto back = load_csv(dir / "c.csv");
  EXPECT_EQ(back.horizon, 2);
  EXPECT_EQ(back.patients, ds.patients);
  EXPECT_EQ(back.actions(1), ActionSpace::integer_codes(3));
}

TEST(CohortCsv, MissingRewardColumnIsParseErrorOnHeaderRow) {
  TempDir dir("noreward");
  {
    std::ofstream out(dir / "bad.csv");
    out << "patient_id,stage,cov_0,action_index\n1,0,0.5,1\n";
  }
  try {
    (void)load_csv(dir / "bad.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
}

TEST(CohortCsv, MalformedRowReportsItsRowNumber) {
  TempDir dir("badrow");
  {
    std::ofstream out(dir / "bad.csv");
    out << "patient_id,stage,cov_0,action_index,reward\n1,0,0.5,1,2\n2,0,abc,0,1\n";
  }
  try {
    (void)load_csv(dir / "bad.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
}

TEST(CohortCsv, HorizonMismatchInFixedHorizonCohortFailsValidation) {
  TempDir dir("fixed");
  auto ds = fixtures::random_dataset(8, {6, 2, 2, 2, 0.0, false});
  ds.fixed_horizon = true;
  save_csv(ds, dir / "c.csv");
  {
    // Drop the last stage of the first patient.
    std::ifstream in(dir / "c.csv");
    std::ofstream out(dir / "cut.csv");
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
      if (row++ != 3) out << line << '\n';
    }
  }
  std::filesystem::copy_file(sidecar_path(dir / "c.csv"), sidecar_path(dir / "cut.csv"));
  try {
    (void)load_csv(dir / "cut.csv");
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("horizon mismatch"), std::string::npos) << e.what();
  }
}

TEST(Rng, StreamsAreKeyedAndReproducible) {
  auto a = make_stream(1, "x", 0);
  auto b = make_stream(1, "x", 0);
  auto c = make_stream(1, "x", 1);
  auto d = make_stream(1, "y", 0);
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Rng, Uniform01StaysInHalfOpenInterval) {
  auto e = make_stream(5, "u", 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(e);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}
