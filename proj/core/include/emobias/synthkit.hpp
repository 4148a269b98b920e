#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emobias/corpus.hpp"
#include "emobias/feature_store.hpp"
#include "emobias/hierarchy.hpp"

namespace emobias {

struct SynthDataset {
  std::string id;
  // Added to every feature vector of the dataset. Empty means zero unless
  // shift_norm is set, in which case a seeded random direction of that norm
  // is used.
  std::vector<double> shift;
  double shift_norm = 0.0;
};

struct ConceptModel {
  std::size_t object_vocabulary = 40;
  std::size_t scene_vocabulary = 30;
  // Concepts reserved for each leaf, per kind.
  std::size_t per_leaf = 6;
  // Leaf concepts drawn for each record, per kind.
  std::size_t per_record = 2;
  // Concepts any leaf may show, each present independently with
  // shared_prevalence. Must name vocabulary entries.
  std::vector<std::string> shared{"balloon", "park"};
  double shared_prevalence = 0.3;
  // Norm of the feature offset each concept adds to a record.
  double signature_norm = 2.0;
};

// The target dataset's negative set (records whose `emotion` ancestor differs
// from `emotion`) never carries `concept`.
struct NegativeSetBias {
  std::size_t dataset = 0;
  std::string emotion;
  std::string concept_name;
};

// Hierarchical Gaussian mixture: leaf mean = level-1 anchor + level-2 offset
// + level-3 offset, each a random direction with norm separation / sqrt(2) so
// that siblings sit about `separation` apart; isotropic noise sigma.
struct SynthSpec {
  std::size_t dim = 32;
  double s1 = 6.0;
  double s2 = 3.0;
  double s3 = 1.5;
  double sigma = 1.0;
  std::size_t samples_per_leaf = 200;
  // Fraction of records whose weak label is resampled to a different leaf.
  double label_noise = 0.0;
  double test_fraction = 0.2;
  std::vector<SynthDataset> datasets{{"synth-a", {}, 0.0}};
  ConceptModel concepts;
  std::vector<NegativeSetBias> biases;

  // Throws InvalidSpec.
  void validate(const EmotionHierarchy& h) const;
};

nlohmann::json synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

std::vector<std::string> concept_vocabulary(const SynthSpec& spec, ConceptKind kind);

struct SynthData {
  DatasetManifest manifest;
  std::shared_ptr<const FeatureStore> features;
  // True finest-level label per record, aligned with manifest.records.
  std::vector<std::string> truth;

  CorpusView view() const;
  // View whose records carry the true labels instead of the weak ones.
  CorpusView truth_view() const;
};

struct SynthSuite {
  std::vector<SynthData> datasets;
};

// Deterministic in (spec, seed). Throws InvalidSpec.
SynthSuite generate_synthetic_suite(const SynthSpec& spec, const EmotionHierarchy& h,
                                    std::uint64_t seed);

// Returns `spec` with a negative-set bias for `concept` on dataset `dataset`.
// Throws UnknownLabel / UnknownConcept.
SynthSpec inject_negative_set_bias(SynthSpec spec, const EmotionHierarchy& h,
                                   std::string_view emotion, std::string_view concept_name,
                                   std::size_t dataset = 0);

// Writes <id>.jsonl, <id>.features.json (+ .f32) and <id>.truth.jsonl for
// every dataset into `dir`.
void write_suite(const SynthSuite& suite, const std::filesystem::path& dir);

}  // namespace emobias
