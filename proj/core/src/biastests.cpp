#include "emobias/biastests.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "emobias/corpus.hpp"
#include "emobias/error.hpp"
#include "emobias/random.hpp"

namespace emobias {

double percent_drop(double self_acc, std::span<const double> others) {
  if (!(self_acc > 0.0)) throw DivisionDomain("percent drop needs a positive self accuracy");
  if (others.empty()) throw InvalidConfig("percent drop needs at least one other accuracy");
  const double mean = std::accumulate(others.begin(), others.end(), 0.0) / static_cast<double>(others.size());
  return 100.0 * (self_acc - mean) / self_acc;
}

double percent_drop(double self_acc, std::initializer_list<double> others) {
  return percent_drop(self_acc, std::span<const double>(others.begin(), others.size()));
}

std::pair<CorpusView, CorpusView> train_test_views(const CorpusView& view, const EmotionHierarchy& h,
                                             int level, double fraction, std::uint64_t seed) {
  const auto& records = view.records();
  const bool tagged = !records.empty() && std::all_of(records.begin(), records.end(),
                                                      [](const SampleRecord& r) { return r.split.has_value(); });
  if (tagged) return {view.by_split(Split::kTrain), view.by_split(Split::kTest)};

  DatasetManifest m;
  m.dataset_id = view.dataset_id();
  m.records = records;
  const ManifestSplit split = stratified_split(m, h, fraction, level, seed);
  std::set<std::string> test_ids;
  for (const auto& r : split.test.records) test_ids.insert(r.id);
  std::vector<SampleRecord> retagged = records;
  for (auto& r : retagged) r.split = test_ids.count(r.id) ? Split::kTest : Split::kTrain;
  const CorpusView v = view.with_records(std::move(retagged));
  return {v.by_split(Split::kTrain), v.by_split(Split::kTest)};
}

std::optional<double> CrossGenMatrix::mean_others(std::size_t row) const {
  const auto& r = acc.at(row);
  if (r.size() < 2) return std::nullopt;
  double sum = 0.0;
  for (std::size_t c = 0; c < r.size(); ++c) {
    if (c != row) sum += r[c];
  }
  return sum / static_cast<double>(r.size() - 1);
}

std::optional<double> CrossGenMatrix::percent_drop(std::size_t row) const {
  const auto mean = mean_others(row);
  if (!mean || !(self(row) > 0.0)) return std::nullopt;
  const double m = *mean;
  return emobias::percent_drop(self(row), std::span<const double>(&m, 1));
}

void CrossGenMatrix::validate() const {
  if (acc.size() != datasets.size()) throw InvalidShape("cross-generalization matrix has wrong row count");
  for (const auto& row : acc) {
    if (row.size() != datasets.size()) throw InvalidShape("cross-generalization matrix is not square");
    for (double v : row) {
      if (!(v >= 0.0 && v <= 100.0)) throw InvalidShape("accuracy outside [0, 100]");
    }
  }
}

namespace {

ProbeModel train_probe(const TrainingSet& set, std::size_t dim, LabelSpace space,
                       const AuditConfig& cfg) {
  ProbeModel model = init_model(dim, cfg.hidden_dims, std::move(space), cfg.train.seed);
  train_sgd(model, set, cfg.train);
  return model;
}

}  // namespace

NameThatDatasetResult name_that_dataset(const std::vector<CorpusView>& views,
                                        std::size_t n_train_per, std::size_t n_test_per,
                                        const AuditConfig& cfg) {
  if (views.size() < 2) throw InvalidConfig("name-that-dataset needs at least two datasets");
  if (n_train_per == 0 || n_test_per == 0) throw InvalidConfig("sample counts must be positive");
  cfg.train.validate();

  std::vector<std::string> ids;
  TrainingSet train;
  train.targets.resize(1);
  std::vector<std::span<const float>> test_inputs;
  std::vector<std::size_t> test_truths;
  const std::uint64_t base = derive_seed(cfg.train.seed, hash_name("name-dataset"));
  for (std::size_t v = 0; v < views.size(); ++v) {
    const CorpusView& view = views[v];
    ids.push_back(view.dataset_id());
    const std::size_t need = n_train_per + n_test_per;
    if (view.size() < need) throw InsufficientSamples(view.dataset_id(), need, view.size());
    Rng rng(derive_seed(base, v));
    const auto picked = rng.choose(view.size(), need);
    for (std::size_t j = 0; j < need; ++j) {
      if (j < n_train_per) {
        train.inputs.push_back(view.features(picked[j]));
        train.targets[0].push_back(static_cast<int>(v));
      } else {
        test_inputs.push_back(view.features(picked[j]));
        test_truths.push_back(v);
      }
    }
  }

  const ProbeModel model = train_probe(train, views.front().dim(), LabelSpace{ids, std::nullopt}, cfg);
  Evaluation ev = evaluate(model, test_inputs, test_truths);
  NameThatDatasetResult out;
  out.accuracy = 100.0 * ev.accuracy;
  out.chance = 100.0 / static_cast<double>(views.size());
  out.n_train_per = n_train_per;
  out.n_test_per = n_test_per;
  out.confusion = std::move(ev.confusion);
  return out;
}

CrossGenMatrix cross_generalization(const std::vector<CorpusView>& views, const EmotionHierarchy& h,
                                    const AuditConfig& cfg) {
  cfg.train.validate();
  CrossGenMatrix out;
  std::vector<CorpusView> trains, tests;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const int level = native_level(views[v].records(), h);
    auto [tr, te] = train_test_views(views[v], h, level, cfg.train_fraction,
                               derive_seed(cfg.train.seed, hash_name("split:" + views[v].dataset_id())));
    out.datasets.push_back(views[v].dataset_id());
    out.levels.push_back(level);
    trains.push_back(std::move(tr));
    tests.push_back(std::move(te));
  }

  // Test-set truths at each dataset's native level, computed once.
  std::vector<std::vector<std::size_t>> truths(views.size());
  std::vector<std::vector<std::span<const float>>> test_inputs(views.size());
  for (std::size_t b = 0; b < views.size(); ++b) {
    for (std::size_t i = 0; i < tests[b].size(); ++i) {
      truths[b].push_back(require_label_index(tests[b].record(i), h, out.levels[b]));
    }
    test_inputs[b] = feature_rows(tests[b]);
  }

  out.acc.assign(views.size(), std::vector<double>(views.size(), 0.0));
  for (std::size_t a = 0; a < views.size(); ++a) {
    const int level = out.levels[a];
    const TrainingSet set = level_training_set(trains[a], h, level);
    const ProbeModel model = train_probe(set, trains[a].dim(), level_space(h, level), cfg);
    for (std::size_t b = 0; b < views.size(); ++b) {
      const Predictions p = predict(model, test_inputs[b]);
      const ConfusionMatrix cm = score_mapped(h, level, p.labels, out.levels[b], truths[b], 1);
      out.acc[a][b] = 100.0 * cm.accuracy();
    }
  }
  return out;
}

NegBiasResult negative_bias_test(const CorpusView& target, const std::vector<CorpusView>& other_views,
                                 const EmotionHierarchy& h, std::string_view emotion,
                                 const NegBiasCounts& counts, const AuditConfig& cfg) {
  cfg.train.validate();
  if (other_views.empty()) throw InvalidConfig("negative-bias test needs at least one other dataset");
  if (counts.train_pos == 0 || counts.train_neg == 0 || counts.test_pos == 0 || counts.test_neg == 0) {
    throw InvalidConfig("negative-bias counts must be positive");
  }
  const auto level = h.level_of(emotion);
  if (!level) throw UnknownLabel(std::string(emotion));
  const std::size_t target_index = h.require_index(*level, emotion);
  const std::string name(emotion);
  const std::string not_name = "non-" + name;

  auto pools = [&](const CorpusView& v) {
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto idx = label_index_at(v.record(i), h, *level);
      if (!idx) continue;
      (*idx == target_index ? out.first : out.second).push_back(i);
    }
    return out;
  };

  const std::uint64_t base = derive_seed(cfg.train.seed, hash_name("neg-bias"));
  Rng rng(derive_seed(base, hash_name(target.dataset_id())));
  const auto [pos, neg] = pools(target);
  const std::size_t need_pos = counts.train_pos + counts.test_pos;
  const std::size_t need_neg = counts.train_neg + counts.test_neg;
  if (pos.size() < need_pos) throw InsufficientSamples(target.dataset_id() + ":" + name, need_pos, pos.size());
  if (neg.size() < need_neg) throw InsufficientSamples(target.dataset_id() + ":" + not_name, need_neg, neg.size());
  const auto pos_pick = rng.choose(pos.size(), need_pos);
  const auto neg_pick = rng.choose(neg.size(), need_neg);

  TrainingSet train;
  train.targets.resize(1);
  std::vector<std::span<const float>> self_inputs, others_inputs;
  std::vector<std::size_t> self_truths, others_truths;
  for (std::size_t j = 0; j < need_pos; ++j) {
    const auto row = target.features(pos[pos_pick[j]]);
    if (j < counts.train_pos) {
      train.inputs.push_back(row);
      train.targets[0].push_back(1);
    } else {
      self_inputs.push_back(row);
      self_truths.push_back(1);
      others_inputs.push_back(row);
      others_truths.push_back(1);
    }
  }
  for (std::size_t j = 0; j < need_neg; ++j) {
    const auto row = target.features(neg[neg_pick[j]]);
    if (j < counts.train_neg) {
      train.inputs.push_back(row);
      train.targets[0].push_back(0);
    } else {
      self_inputs.push_back(row);
      self_truths.push_back(0);
    }
  }

  NegBiasResult out;
  out.emotion = name;
  out.counts = counts;
  const std::size_t k = other_views.size();
  for (std::size_t v = 0; v < k; ++v) {
    const std::size_t quota = counts.test_neg / k + (v < counts.test_neg % k ? 1 : 0);
    const auto other_neg = pools(other_views[v]).second;
    if (other_neg.size() < quota) {
      throw InsufficientSamples(other_views[v].dataset_id() + ":" + not_name, quota, other_neg.size());
    }
    Rng other_rng(derive_seed(base, hash_name("others:" + std::to_string(v) + ":" + other_views[v].dataset_id())));
    for (std::size_t j : other_rng.choose(other_neg.size(), quota)) {
      others_inputs.push_back(other_views[v].features(other_neg[j]));
      others_truths.push_back(0);
    }
    out.others_negatives.push_back(quota);
  }

  const ProbeModel model = train_probe(train, target.dim(), LabelSpace{{not_name, name}, std::nullopt}, cfg);
  out.self_acc = 100.0 * evaluate(model, self_inputs, self_truths).accuracy;
  out.others_acc = 100.0 * evaluate(model, others_inputs, others_truths).accuracy;
  const double others = out.others_acc;
  out.percent_drop = percent_drop(out.self_acc, std::span<const double>(&others, 1));
  return out;
}

}  // namespace emobias
