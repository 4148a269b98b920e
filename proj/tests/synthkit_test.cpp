#include "emobias/synthkit.hpp"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "emobias/entropy.hpp"
#include "emobias/error.hpp"
#include "test_util.hpp"

namespace emobias {
namespace {

const EmotionHierarchy& parrott() {
  static const EmotionHierarchy h = build_parrott_hierarchy();
  return h;
}

SynthSpec small_spec() {
  SynthSpec spec;
  spec.dim = 8;
  spec.samples_per_leaf = 40;
  return spec;
}

double distance(std::span<const float> a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

TEST(Synthkit, DeterministicInSeed) {
  const auto a = generate_synthetic_suite(small_spec(), parrott(), 5);
  const auto b = generate_synthetic_suite(small_spec(), parrott(), 5);
  const auto c = generate_synthetic_suite(small_spec(), parrott(), 6);
  EXPECT_EQ(a.datasets[0].features->values(), b.datasets[0].features->values());
  EXPECT_EQ(a.datasets[0].truth, b.datasets[0].truth);
  EXPECT_NE(a.datasets[0].features->values(), c.datasets[0].features->values());
}

TEST(Synthkit, ShapeAndSplits) {
  const auto suite = generate_synthetic_suite(small_spec(), parrott(), 1);
  const auto& d = suite.datasets.at(0);
  EXPECT_EQ(d.manifest.records.size(), 25u * 40u);
  EXPECT_EQ(d.features->dim(), 8u);
  std::map<std::string, std::size_t> tests;
  for (std::size_t i = 0; i < d.manifest.records.size(); ++i) {
    const auto& r = d.manifest.records[i];
    ASSERT_TRUE(r.split.has_value());
    if (*r.split == Split::kTest) ++tests[d.truth[i]];
    ASSERT_TRUE(r.concepts.has_value());
    EXPECT_EQ(r.caption->find(d.truth[i]), std::string::npos);
  }
  ASSERT_EQ(tests.size(), 25u);
  for (const auto& [leaf, n] : tests) EXPECT_EQ(n, 8u) << leaf;
}

TEST(Synthkit, LabelNoiseRateIsExact) {
  SynthSpec spec = small_spec();
  spec.label_noise = 0.2;
  const auto suite = generate_synthetic_suite(spec, parrott(), 2);
  const auto& d = suite.datasets[0];
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < d.truth.size(); ++i) {
    flipped += d.manifest.records[i].labels.at(3) != d.truth[i];
  }
  EXPECT_EQ(flipped, 200u);
  const auto truth = d.truth_view();
  for (std::size_t i = 0; i < truth.size(); ++i) EXPECT_EQ(truth.record(i).labels.at(3), d.truth[i]);
}

TEST(Synthkit, SiblingGeometry) {
  // Without noise, every sample should sit closer to its own leaf centroid
  // than leaves under a different level-1 parent do on average.
  SynthSpec spec = small_spec();
  spec.sigma = 0.01;
  spec.concepts.signature_norm = 0.0;
  const auto suite = generate_synthetic_suite(spec, parrott(), 3);
  const auto& d = suite.datasets[0];
  std::map<std::string, std::vector<double>> centroid;
  std::map<std::string, std::size_t> count;
  for (std::size_t i = 0; i < d.truth.size(); ++i) {
    auto& c = centroid[d.truth[i]];
    c.resize(8, 0.0);
    const auto row = d.features->row(i);
    for (std::size_t k = 0; k < 8; ++k) c[k] += row[k];
    ++count[d.truth[i]];
  }
  for (auto& [leaf, c] : centroid) {
    for (auto& v : c) v /= static_cast<double>(count[leaf]);
  }
  const auto& h = parrott();
  const auto& fine = h.labels(3);
  double same_l2 = 0, cross_l1 = 0;
  std::size_t n_same = 0, n_cross = 0;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    for (std::size_t j = i + 1; j < fine.size(); ++j) {
      std::vector<float> ci(centroid[fine[i]].begin(), centroid[fine[i]].end());
      const double dist = distance(ci, centroid[fine[j]]);
      if (h.map_index(3, i, 2) == h.map_index(3, j, 2)) {
        same_l2 += dist;
        ++n_same;
      } else if (h.map_index(3, i, 1) != h.map_index(3, j, 1)) {
        cross_l1 += dist;
        ++n_cross;
      }
    }
  }
  EXPECT_LT(same_l2 / static_cast<double>(n_same), cross_l1 / static_cast<double>(n_cross));
}

TEST(Synthkit, ValidateRejectsBadSpecs) {
  const auto& h = parrott();
  auto bad = [&](auto mutate) {
    SynthSpec s;
    mutate(s);
    EXPECT_THROW(s.validate(h), InvalidSpec);
  };
  bad([](SynthSpec& s) { s.dim = 0; });
  bad([](SynthSpec& s) { s.s2 = s.s1; });
  bad([](SynthSpec& s) { s.sigma = 0; });
  bad([](SynthSpec& s) { s.label_noise = 1.0; });
  bad([](SynthSpec& s) { s.datasets.push_back(s.datasets[0]); });
  bad([](SynthSpec& s) { s.datasets[0].shift = {1.0}; });
  bad([](SynthSpec& s) { s.concepts.shared = {"unicorn"}; });
  bad([](SynthSpec& s) { s.concepts.per_record = 7; });
  bad([](SynthSpec& s) { s.biases.push_back({3, "joy", "balloon"}); });
  EXPECT_NO_THROW(SynthSpec{}.validate(h));
}

TEST(Synthkit, JsonRoundTrip) {
  SynthSpec spec = small_spec();
  spec.label_noise = 0.1;
  spec.datasets = {{"x", std::vector<double>(8, 0.5), 0.0}, {"y", {}, 2.0}};
  spec = inject_negative_set_bias(spec, parrott(), "sadness", "balloon", 1);
  const auto back = synth_spec_from_json(synth_spec_to_json(spec));
  EXPECT_EQ(synth_spec_to_json(back), synth_spec_to_json(spec));
  EXPECT_EQ(back.biases.at(0).concept_name, "balloon");
  EXPECT_THROW(synth_spec_from_json(nlohmann::json{{"dim", "wide"}}), InvalidSpec);
}

TEST(Synthkit, VocabularyIsPadded) {
  SynthSpec spec;
  spec.concepts.object_vocabulary = 500;
  const auto v = concept_vocabulary(spec, ConceptKind::kObjects);
  EXPECT_EQ(v.size(), 500u);
  EXPECT_EQ(std::set<std::string>(v.begin(), v.end()).size(), 500u);
  EXPECT_EQ(v.front(), "balloon");
}

TEST(Synthkit, InjectedBiasZeroesConceptEntropy) {
  const auto& h = parrott();
  SynthSpec spec = inject_negative_set_bias(small_spec(), h, "sadness", "balloon");
  const auto suite = generate_synthetic_suite(spec, h, 4);
  const auto& recs = suite.datasets[0].manifest.records;
  const auto hist = conditional_entropy_analysis(std::span(recs), h, "sadness", ConceptKind::kObjects);
  bool found = false;
  for (const auto& r : hist.records) {
    if (r.name != "balloon") continue;
    found = true;
    EXPECT_EQ(r.entropy, 0.0);
    EXPECT_EQ(r.count_neg, 0u);
    EXPECT_GT(r.count_pos, 0u);
  }
  EXPECT_TRUE(found);
}

TEST(Synthkit, SharedConceptCarriesNoPolarityUnbiased) {
  const auto& h = parrott();
  const auto suite = generate_synthetic_suite(small_spec(), h, 4);
  const auto& recs = suite.datasets[0].manifest.records;
  const auto hist = conditional_entropy_analysis(std::span(recs), h, "positive", ConceptKind::kObjects);
  const double base = binary_entropy(hist.positives, hist.negatives);
  bool found = false;
  for (const auto& r : hist.records) {
    if (r.name != "balloon") continue;
    found = true;
    EXPECT_GE(r.entropy, 0.9);
    EXPECT_NEAR(r.entropy, base, 0.05);
  }
  EXPECT_TRUE(found);
}

TEST(Synthkit, InjectErrors) {
  const auto& h = parrott();
  EXPECT_THROW(inject_negative_set_bias(small_spec(), h, "glee", "balloon"), UnknownLabel);
  EXPECT_THROW(inject_negative_set_bias(small_spec(), h, "joy", "unicorn"), UnknownConcept);
}

TEST(Synthkit, WriteSuiteReloads) {
  const auto& h = parrott();
  SynthSpec spec = small_spec();
  spec.samples_per_leaf = 4;
  spec.test_fraction = 0.25;
  const auto suite = generate_synthetic_suite(spec, h, 9);
  testing::TempDir dir;
  write_suite(suite, dir.path());
  const auto& id = suite.datasets[0].manifest.dataset_id;
  const auto m = load_manifest(dir / (id + ".jsonl"), h);
  const auto fs = load_feature_store(dir / (id + ".features.json"));
  EXPECT_EQ(m.records.size(), 100u);
  EXPECT_EQ(fs.values(), suite.datasets[0].features->values());
  const std::string truth = testing::read_file(dir / (id + ".truth.jsonl"));
  EXPECT_EQ(std::count(truth.begin(), truth.end(), '\n'), 100);
  EXPECT_NO_THROW(align(m, std::make_shared<const FeatureStore>(fs)));
}

}  // namespace
}  // namespace emobias
