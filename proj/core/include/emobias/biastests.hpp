#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emobias/feature_store.hpp"
#include "emobias/hierarchy.hpp"
#include "emobias/probe.hpp"

namespace emobias {

// 100 * (self - mean(others)) / self. Throws DivisionDomain when self <= 0
// and InvalidConfig when others is empty.
double percent_drop(double self_acc, std::span<const double> others);
double percent_drop(double self_acc, std::initializer_list<double> others);

// Train/test views from split tags when every record has one, otherwise a
// stratified split at `level` with the given train fraction.
std::pair<CorpusView, CorpusView> train_test_views(const CorpusView& view, const EmotionHierarchy& h,
                                                   int level, double train_fraction, std::uint64_t seed);

// Accuracies in percent; row = training set, column = test set.
struct CrossGenMatrix {
  std::vector<std::string> datasets;
  std::vector<std::vector<double>> acc;
  // Native label level each row was trained on.
  std::vector<int> levels;

  std::size_t size() const { return datasets.size(); }
  double self(std::size_t row) const { return acc.at(row).at(row); }
  std::optional<double> mean_others(std::size_t row) const;
  std::optional<double> percent_drop(std::size_t row) const;
  // Throws InvalidShape.
  void validate() const;
};

struct AuditConfig {
  TrainConfig train;
  // Empty = linear probe.
  std::vector<std::size_t> hidden_dims;
  // Used when a dataset carries no split tags.
  double train_fraction = 0.8;
};

struct NameThatDatasetResult {
  double accuracy = 0.0;  // percent
  double chance = 0.0;    // percent
  std::size_t n_train_per = 0;
  std::size_t n_test_per = 0;
  ConfusionMatrix confusion;
};

// Classes are the dataset ids. Throws InsufficientSamples.
NameThatDatasetResult name_that_dataset(const std::vector<CorpusView>& views,
                                        std::size_t n_train_per, std::size_t n_test_per,
                                        const AuditConfig& cfg);

// Trains on each dataset's native level and scores every test split at
// level 1. Throws MissingLabel, InvalidDirection.
CrossGenMatrix cross_generalization(const std::vector<CorpusView>& views, const EmotionHierarchy& h,
                                    const AuditConfig& cfg);

struct NegBiasCounts {
  std::size_t train_pos = 500;
  std::size_t train_neg = 2000;
  std::size_t test_pos = 200;
  std::size_t test_neg = 4000;
};

struct NegBiasResult {
  std::string emotion;
  double self_acc = 0.0;
  double others_acc = 0.0;
  double percent_drop = 0.0;
  NegBiasCounts counts;
  // Negatives drawn from each other view, in view order.
  std::vector<std::size_t> others_negatives;
};

// Positives are target records mapping to `emotion`. The probe trains on
// target positives and negatives; "self" tests on held-out target records,
// "others" on the same positives with negatives pooled evenly from
// other_views. Throws InsufficientSamples, UnknownLabel.
NegBiasResult negative_bias_test(const CorpusView& target, const std::vector<CorpusView>& other_views,
                                 const EmotionHierarchy& h, std::string_view emotion,
                                 const NegBiasCounts& counts, const AuditConfig& cfg);

}  // namespace emobias
