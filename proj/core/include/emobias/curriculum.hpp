#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "emobias/feature_store.hpp"
#include "emobias/hierarchy.hpp"
#include "emobias/probe.hpp"

namespace emobias {

// Ordered label-space schedule for curriculum training, coarse to fine.
struct StagePlan {
  std::vector<int> levels{1, 2, 3};
  // Epochs per stage. Empty: TrainConfig::epochs for every stage; a single
  // entry applies to all stages.
  std::vector<int> epochs;
  double lr_transition_factor = 0.1;

  // Throws InvalidConfig unless levels are non-empty, strictly increasing and
  // inside the hierarchy.
  void validate(const EmotionHierarchy& h) const;
  int epochs_for(std::size_t stage, const TrainConfig& cfg) const;
};

// "1,2,3" -> {1, 2, 3}
StagePlan parse_plan(std::string_view text);

struct StrategyConfig {
  TrainConfig train;
  std::vector<std::size_t> hidden_dims{64};
};

struct StageRecord {
  int level = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  History history;
};

struct DatasetScore {
  int level = 0;
  double accuracy = 0.0;
};

struct StrategyResult {
  std::string strategy;
  ProbeModel model;
  // One entry per curriculum stage or self-directed round.
  std::vector<StageRecord> stages;
  // Model at the end of each stage.
  std::vector<ProbeModel> stage_models;
  // dataset id -> accuracy of the final model at the evaluated level.
  std::map<std::string, DatasetScore> evaluation;

  // Self-directed only: retained-set size per refinement round and the
  // noisy-pool indices retained in the last scored round.
  std::vector<std::size_t> retained_sizes;
  std::vector<std::size_t> retained;
};

// Seed for stage `stage`; stage 0 uses the base seed unchanged.
std::uint64_t stage_seed(std::uint64_t base, std::size_t stage);

// Carries the hidden stack of `previous` over and attaches a freshly
// initialized head for `space`.
ProbeModel begin_stage(const ProbeModel& previous, LabelSpace space, std::uint64_t head_seed);

// Stage k trains on level plan.levels[k] with learning rate
// lr0 * factor^k; between stages the hidden stack is kept, the head is
// re-initialized and momentum restarts from zero.
StrategyResult curriculum_train(const CorpusView& train, const EmotionHierarchy& h,
                                const StagePlan& plan, const StrategyConfig& cfg);

// Single stage at the finest level.
StrategyResult direct_train(const CorpusView& train, const EmotionHierarchy& h,
                            const StrategyConfig& cfg);

struct SelfDirectedOptions {
  double tau = 0.5;
  int max_rounds = 3;
  // Stop once the retained set changes by less than this fraction.
  double min_change = 0.01;
};

// Trains on the clean seed, then repeatedly keeps noisy samples whose
// predicted class equals the weak label or whose weak-label probability is at
// least tau, and continues training on clean + retained.
StrategyResult self_directed_train(const CorpusView& clean_seed, const CorpusView& noisy,
                                   const EmotionHierarchy& h, const StrategyConfig& cfg,
                                   const SelfDirectedOptions& options = {});

// One shared stack with a head per hierarchy level (coarsest first, finest
// last); the loss is sum_k loss_weights[k] * CE_k. Empty weights = all ones.
StrategyResult joint_train(const CorpusView& train, const EmotionHierarchy& h,
                           const StrategyConfig& cfg, std::vector<double> loss_weights = {});

// Stratified draw of `total` records over the classes at `level`; per-class
// quotas follow largest remainders of the class proportions.
CorpusView draw_clean_seed(const CorpusView& view, const EmotionHierarchy& h, std::size_t total,
                           int level, std::uint64_t seed);

// Fills result.evaluation with the final model's accuracy at `level` on
// each view.
void evaluate_strategy(StrategyResult& result, const std::vector<CorpusView>& views,
                       const EmotionHierarchy& h, int level);

}  // namespace emobias
