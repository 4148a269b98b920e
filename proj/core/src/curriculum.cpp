#include "emobias/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "emobias/error.hpp"
#include "emobias/random.hpp"

namespace emobias {

void StagePlan::validate(const EmotionHierarchy& h) const {
  if (levels.empty()) throw InvalidConfig("stage plan is empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 1 || levels[i] > h.depth()) {
      throw InvalidConfig("stage level " + std::to_string(levels[i]) + " is not in the hierarchy");
    }
    if (i > 0 && levels[i] <= levels[i - 1]) {
      throw InvalidConfig("stage levels must be strictly increasing");
    }
  }
  if (epochs.size() > 1 && epochs.size() != levels.size()) {
    throw InvalidConfig("per-stage epochs must match the number of stages");
  }
  for (int e : epochs) {
    if (e < 0) throw InvalidConfig("stage epochs must be non-negative");
  }
  if (!(lr_transition_factor > 0.0)) throw InvalidConfig("lr_transition_factor must be positive");
}

int StagePlan::epochs_for(std::size_t stage, const TrainConfig& cfg) const {
  if (epochs.empty()) return cfg.epochs;
  if (epochs.size() == 1) return epochs.front();
  return epochs.at(stage);
}

StagePlan parse_plan(std::string_view text) {
  StagePlan plan;
  plan.levels.clear();
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int level = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      plan.levels.push_back(level);
    } catch (const std::exception&) {
      throw InvalidConfig("bad stage plan '" + std::string(text) + "'");
    }
  }
  if (plan.levels.empty()) throw InvalidConfig("stage plan is empty");
  return plan;
}

std::uint64_t stage_seed(std::uint64_t base, std::size_t stage) {
  return stage == 0 ? base : derive_seed(base, stage);
}

ProbeModel begin_stage(const ProbeModel& previous, LabelSpace space, std::uint64_t head_seed) {
  ProbeModel next;
  next.input_dim = previous.input_dim;
  next.hidden = previous.hidden;
  next.seed_lineage = previous.seed_lineage;
  next.seed_lineage.push_back(head_seed);
  next.heads.push_back(init_head(previous.feature_width(), std::move(space), head_seed));
  return next;
}

StrategyResult curriculum_train(const CorpusView& train, const EmotionHierarchy& h,
                                const StagePlan& plan, const StrategyConfig& cfg) {
  plan.validate(h);
  cfg.train.validate();
  if (train.empty()) throw InvalidShape("training view is empty");
  // Finest labels must exist for every record; coarser stages derive from them.
  for (const auto& r : train.records()) require_label_index(r, h, plan.levels.back());

  StrategyResult result;
  result.strategy = "curriculum";
  const double lr0 = cfg.train.learning_rate;
  for (std::size_t k = 0; k < plan.levels.size(); ++k) {
    const int level = plan.levels[k];
    const std::uint64_t seed = stage_seed(cfg.train.seed, k);
    if (k == 0) {
      result.model = init_model(train.dim(), cfg.hidden_dims, level_space(h, level), seed);
    } else {
      result.model = begin_stage(result.model, level_space(h, level),
                                 derive_seed(seed, hash_name("head")));
    }
    TrainConfig stage_cfg = cfg.train;
    stage_cfg.learning_rate = lr0 * std::pow(plan.lr_transition_factor, static_cast<double>(k));
    stage_cfg.epochs = plan.epochs_for(k, cfg.train);
    stage_cfg.seed = seed;
    StageRecord rec{level, stage_cfg.learning_rate, seed, train.size(), {}};
    rec.history = train_sgd(result.model, level_training_set(train, h, level), stage_cfg);
    result.stages.push_back(std::move(rec));
    result.stage_models.push_back(result.model);
  }
  return result;
}

StrategyResult direct_train(const CorpusView& train, const EmotionHierarchy& h,
                            const StrategyConfig& cfg) {
  StagePlan plan;
  plan.levels = {h.depth()};
  plan.lr_transition_factor = cfg.train.lr_transition_factor;
  StrategyResult result = curriculum_train(train, h, plan, cfg);
  result.strategy = "direct";
  return result;
}

namespace {

TrainingSet concat_sets(const TrainingSet& a, const TrainingSet& b,
                        std::span<const std::size_t> b_rows) {
  TrainingSet out = a;
  for (std::size_t i : b_rows) {
    out.inputs.push_back(b.inputs[i]);
    for (std::size_t h = 0; h < out.targets.size(); ++h) out.targets[h].push_back(b.targets[h][i]);
  }
  return out;
}

}  // namespace

StrategyResult self_directed_train(const CorpusView& clean_seed, const CorpusView& noisy,
                                   const EmotionHierarchy& h, const StrategyConfig& cfg,
                                   const SelfDirectedOptions& options) {
  if (clean_seed.empty()) throw EmptyCleanSet();
  if (options.max_rounds < 0) throw InvalidConfig("max_rounds must be non-negative");
  cfg.train.validate();
  const int level = h.depth();
  const TrainingSet clean = level_training_set(clean_seed, h, level);
  const TrainingSet pool = level_training_set(noisy, h, level);

  StrategyResult result;
  result.strategy = "self-directed";
  result.model = init_model(clean_seed.dim(), cfg.hidden_dims, level_space(h, level),
                            cfg.train.seed);
  {
    StageRecord rec{level, cfg.train.learning_rate, cfg.train.seed, clean.size(), {}};
    rec.history = train_sgd(result.model, clean, cfg.train);
    result.stages.push_back(std::move(rec));
    result.stage_models.push_back(result.model);
  }

  const auto& weak = pool.targets.front();
  std::size_t previous = 0;
  for (int round = 1; round <= options.max_rounds; ++round) {
    std::vector<std::size_t> kept;
    if (!pool.inputs.empty()) {
      const Matrix probs = forward(result.model, pool.inputs);
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto label = static_cast<std::size_t>(weak[i]);
        if (argmax(probs.row(i)) == label || probs(i, label) >= options.tau) kept.push_back(i);
      }
    }
    result.retained_sizes.push_back(kept.size());
    result.retained = kept;
    if (kept.empty()) break;
    if (round > 1) {
      const double change = std::abs(static_cast<double>(kept.size()) -
                                     static_cast<double>(previous));
      if (change < options.min_change * static_cast<double>(previous)) break;
    }
    previous = kept.size();

    TrainConfig round_cfg = cfg.train;
    round_cfg.seed = stage_seed(cfg.train.seed, static_cast<std::size_t>(round));
    const TrainingSet combined = concat_sets(clean, pool, kept);
    StageRecord rec{level, round_cfg.learning_rate, round_cfg.seed, combined.size(), {}};
    rec.history = train_sgd(result.model, combined, round_cfg);
    result.model.seed_lineage.push_back(round_cfg.seed);
    result.stages.push_back(std::move(rec));
    result.stage_models.push_back(result.model);
  }
  return result;
}

StrategyResult joint_train(const CorpusView& train, const EmotionHierarchy& h,
                           const StrategyConfig& cfg, std::vector<double> loss_weights) {
  cfg.train.validate();
  if (train.empty()) throw InvalidShape("training view is empty");
  const int depth = h.depth();
  if (loss_weights.empty()) loss_weights.assign(static_cast<std::size_t>(depth), 1.0);
  if (loss_weights.size() != static_cast<std::size_t>(depth)) {
    throw InvalidConfig("joint training needs one loss weight per hierarchy level");
  }

  StrategyResult result;
  result.strategy = "joint";
  // Same stack and finest head as direct_train would build for this seed.
  ProbeModel model = init_model(train.dim(), cfg.hidden_dims, level_space(h, depth), cfg.train.seed);
  std::vector<Head> heads;
  for (int level = 1; level < depth; ++level) {
    heads.push_back(init_head(model.feature_width(), level_space(h, level),
                              derive_seed(cfg.train.seed,
                                          hash_name("head-" + std::to_string(level)))));
  }
  heads.push_back(std::move(model.heads.back()));
  model.heads = std::move(heads);

  TrainingSet set;
  set.inputs = feature_rows(train);
  for (int level = 1; level <= depth; ++level) {
    std::vector<int> targets;
    targets.reserve(train.size());
    for (const auto& r : train.records()) {
      targets.push_back(static_cast<int>(require_label_index(r, h, level)));
    }
    set.targets.push_back(std::move(targets));
  }

  StageRecord rec{depth, cfg.train.learning_rate, cfg.train.seed, set.size(), {}};
  rec.history = train_sgd(model, set, cfg.train, loss_weights);
  result.model = std::move(model);
  result.stages.push_back(std::move(rec));
  result.stage_models.push_back(result.model);
  return result;
}

CorpusView draw_clean_seed(const CorpusView& view, const EmotionHierarchy& h, std::size_t total,
                           int level, std::uint64_t seed) {
  if (total > view.size()) throw InsufficientSamples("<all>", total, view.size());
  const std::size_t k = h.size(level);
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < view.size(); ++i) {
    by_class[require_label_index(view.record(i), h, level)].push_back(i);
  }
  // Largest-remainder apportionment of `total` over class sizes.
  std::vector<std::size_t> quota(k, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double exact = static_cast<double>(total) * static_cast<double>(by_class[c].size()) /
                         static_cast<double>(view.size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i) {
    const std::size_t c = remainders[i].second;
    if (quota[c] < by_class[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < k; ++c) {
    Rng rng(derive_seed(seed, c));
    for (std::size_t j : rng.choose(by_class[c].size(), quota[c])) {
      chosen.push_back(by_class[c][j]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return view.subset(chosen);
}

void evaluate_strategy(StrategyResult& result, const std::vector<CorpusView>& views,
                       const EmotionHierarchy& h, int level) {
  for (const auto& v : views) {
    result.evaluation[v.dataset_id()] = {level, evaluate(result.model, v, level, h).accuracy};
  }
}

}  // namespace emobias
