#include "emobias/biastests.hpp"

#include <numeric>

#include <gtest/gtest.h>

#include "emobias/error.hpp"
#include "emobias/synthkit.hpp"

namespace emobias {
namespace {

const EmotionHierarchy& parrott() {
  static const EmotionHierarchy h = build_parrott_hierarchy();
  return h;
}

std::vector<CorpusView> views_of(const SynthSuite& suite) {
  std::vector<CorpusView> out;
  for (const auto& d : suite.datasets) out.push_back(d.view());
  return out;
}

AuditConfig quick_audit(int epochs = 20) {
  AuditConfig cfg;
  cfg.train.epochs = epochs;
  return cfg;
}

TEST(PercentDrop, KnownCrossDatasetRows) {
  EXPECT_NEAR(percent_drop(78.74, {68.38, 49.76}), 24.98, 0.02);
  EXPECT_NEAR(percent_drop(84.81, {61.41, 69.22}), 22.99, 0.02);
  EXPECT_NEAR(percent_drop(77.72, {54.33, 64.28}), 23.69, 0.02);
}

TEST(PercentDrop, KnownNegativeBiasCells) {
  const std::vector<std::array<double, 3>> cells{
      {90.64, 78.98, 12.86}, {92.40, 83.56, 9.57}, {89.20, 82.07, 7.99}, {81.90, 61.35, 25.09},
      {83.90, 83.37, 0.63},  {82.97, 84.79, -2.19}, {89.89, 90.55, -0.73}};
  for (const auto& [self, other, drop] : cells) EXPECT_NEAR(percent_drop(self, {other}), drop, 0.02);
  EXPECT_NEAR(percent_drop(85.95, {80.77}), 6.05, 0.03);
}

TEST(PercentDrop, ScaleInvariantAndEdgeCases) {
  EXPECT_DOUBLE_EQ(percent_drop(0.7874, {0.6838, 0.4976}), percent_drop(78.74, {68.38, 49.76}));
  EXPECT_DOUBLE_EQ(percent_drop(50.0, {50.0}), 0.0);
  EXPECT_THROW(percent_drop(0.0, {1.0}), DivisionDomain);
  EXPECT_THROW(percent_drop(-3.0, {1.0}), DivisionDomain);
  EXPECT_THROW(percent_drop(10.0, std::span<const double>{}), InvalidConfig);
}

TEST(CrossGenMatrix, DerivedColumns) {
  CrossGenMatrix m{{"a", "b", "c"}, {{78.74, 68.38, 49.76}, {61.41, 84.81, 69.22}, {54.33, 64.28, 77.72}}, {}};
  EXPECT_NO_THROW(m.validate());
  EXPECT_NEAR(*m.mean_others(0), 59.07, 1e-9);
  EXPECT_NEAR(*m.percent_drop(1), 22.99, 0.02);
  CrossGenMatrix single{{"a"}, {{80.0}}, {}};
  EXPECT_FALSE(single.mean_others(0).has_value());
  EXPECT_FALSE(single.percent_drop(0).has_value());
  CrossGenMatrix ragged{{"a", "b"}, {{1.0, 2.0}, {3.0}}, {}};
  EXPECT_THROW(ragged.validate(), InvalidShape);
}

TEST(CrossGeneralization, ShiftedSourcesDegradeOffDiagonal) {
  SynthSpec spec;
  spec.dim = 16;
  spec.samples_per_leaf = 40;
  spec.datasets = {{"a", {}, 0.0}, {"b", {}, 12.0}, {"c", {}, 12.0}};
  const auto suite = generate_synthetic_suite(spec, parrott(), 8);
  const auto m = cross_generalization(views_of(suite), parrott(), quick_audit());
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.levels, (std::vector<int>{3, 3, 3}));
  double diag = 0, off = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) (a == b ? diag : off) += m.acc[a][b];
  }
  EXPECT_GT(diag / 3.0, off / 6.0);
  EXPECT_GT(diag / 3.0, 80.0);
}

TEST(CrossGeneralization, Deterministic) {
  SynthSpec spec;
  spec.dim = 8;
  spec.samples_per_leaf = 12;
  spec.datasets = {{"a", {}, 0.0}, {"b", {}, 3.0}};
  const auto suite = generate_synthetic_suite(spec, parrott(), 1);
  const auto x = cross_generalization(views_of(suite), parrott(), quick_audit(3));
  const auto y = cross_generalization(views_of(suite), parrott(), quick_audit(3));
  EXPECT_EQ(x.acc, y.acc);
}

TEST(TrainTestViews, FallsBackToStratifiedSplit) {
  SynthSpec spec;
  spec.dim = 4;
  spec.samples_per_leaf = 10;
  const auto suite = generate_synthetic_suite(spec, parrott(), 1);
  const auto tagged = suite.datasets[0].view();
  const auto [tr, te] = train_test_views(tagged, parrott(), 3, 0.5, 1);
  EXPECT_EQ(te.size(), 50u);
  auto records = tagged.records();
  for (auto& r : records) r.split.reset();
  const auto untagged = tagged.with_records(records);
  const auto [tr2, te2] = train_test_views(untagged, parrott(), 3, 0.5, 1);
  EXPECT_EQ(tr2.size(), 125u);
  EXPECT_EQ(te2.size(), 125u);
}

TEST(NameThatDataset, ShiftedSourcesAreSeparable) {
  SynthSpec spec;
  spec.dim = 16;
  spec.samples_per_leaf = 12;
  spec.datasets = {{"a", {}, 0.0}, {"b", std::vector<double>(16, 2.0), 0.0}};
  const auto suite = generate_synthetic_suite(spec, parrott(), 2);
  const auto r = name_that_dataset(views_of(suite), 100, 50, quick_audit());
  EXPECT_DOUBLE_EQ(r.chance, 50.0);
  EXPECT_EQ(r.confusion.total(), 100u);
  EXPECT_GE(r.accuracy, 90.0);
}

TEST(NameThatDataset, Errors) {
  SynthSpec spec;
  spec.dim = 4;
  spec.samples_per_leaf = 2;
  spec.datasets = {{"a", {}, 0.0}, {"b", {}, 0.0}};
  const auto suite = generate_synthetic_suite(spec, parrott(), 2);
  EXPECT_THROW(name_that_dataset(views_of(suite), 40, 20, quick_audit()), InsufficientSamples);
  EXPECT_THROW(name_that_dataset({views_of(suite)[0]}, 4, 2, quick_audit()), InvalidConfig);
}

TEST(NegativeBias, DrawsRequestedCounts) {
  SynthSpec spec;
  spec.dim = 8;
  spec.samples_per_leaf = 40;
  spec.datasets = {{"t", {}, 0.0}, {"o1", {}, 0.0}, {"o2", {}, 0.0}};
  const auto suite = generate_synthetic_suite(spec, parrott(), 3);
  const auto views = views_of(suite);
  const NegBiasCounts counts{60, 200, 40, 101};
  const auto r = negative_bias_test(views[0], {views[1], views[2]}, parrott(), "sadness", counts,
                                    quick_audit(5));
  EXPECT_EQ(r.emotion, "sadness");
  EXPECT_EQ(r.others_negatives, (std::vector<std::size_t>{51, 50}));
  EXPECT_NEAR(r.percent_drop, percent_drop(r.self_acc, {r.others_acc}), 1e-9);
  EXPECT_THROW(negative_bias_test(views[0], {views[1]}, parrott(), "glee", counts, quick_audit(5)),
               UnknownLabel);
  const NegBiasCounts greedy{300, 200, 40, 100};
  EXPECT_THROW(negative_bias_test(views[0], {views[1]}, parrott(), "sadness", greedy, quick_audit(5)),
               InsufficientSamples);
}

}  // namespace
}  // namespace emobias
