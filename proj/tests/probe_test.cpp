#include "emobias/probe.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "emobias/error.hpp"
#include "emobias/probe_io.hpp"
#include "emobias/random.hpp"
#include "test_util.hpp"

namespace emobias {
namespace {

const EmotionHierarchy& parrott() {
  static const EmotionHierarchy h = build_parrott_hierarchy();
  return h;
}

LabelSpace classes(std::size_t n) {
  LabelSpace s;
  for (std::size_t i = 0; i < n; ++i) s.classes.push_back("c" + std::to_string(i));
  return s;
}

// Keeps feature rows alive for the spans in `set`.
struct Data {
  std::vector<std::vector<float>> rows;
  TrainingSet set;

  void finish() {
    set.inputs.clear();
    for (const auto& r : rows) set.inputs.emplace_back(r);
  }
};

Data random_data(std::size_t n, std::size_t dim, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  Data d;
  d.set.targets.resize(1);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> row(dim);
    for (auto& x : row) x = static_cast<float>(rng.normal());
    d.rows.push_back(row);
    d.set.targets[0].push_back(static_cast<int>(rng.below(k)));
  }
  d.finish();
  return d;
}

// Two well separated blobs per class along distinct axes.
Data separable_data(std::size_t per_class, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  Data d;
  d.set.targets.resize(1);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<float> row(k);
      for (auto& x : row) x = static_cast<float>(0.1 * rng.normal());
      row[c] += 3.0f;
      d.rows.push_back(row);
      d.set.targets[0].push_back(static_cast<int>(c));
    }
  }
  d.finish();
  return d;
}

std::vector<double> flatten(const ProbeModel& m) {
  std::vector<double> out;
  auto add = [&](const DenseLayer& l) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  };
  for (const auto& l : m.hidden) add(l);
  for (const auto& hd : m.heads) add(hd.layer);
  return out;
}

TEST(Probe, ParameterCounts) {
  const std::vector<std::size_t> none;
  EXPECT_EQ(init_model(3, none, classes(2), 1).parameter_count(), 8u);
  const std::vector<std::size_t> one{5};
  EXPECT_EQ(init_model(3, one, classes(2), 1).parameter_count(), 3u * 5 + 5 + 5 * 2 + 2);
  const std::vector<std::size_t> two{16, 8};
  EXPECT_EQ(init_model(10, two, classes(25), 1).parameter_count(),
            10u * 16 + 16 + 16 * 8 + 8 + 8 * 25 + 25);
}

TEST(Probe, InitShapeErrors) {
  const std::vector<std::size_t> none;
  const std::vector<std::size_t> zero{0};
  EXPECT_THROW(init_model(0, none, classes(2), 1), InvalidShape);
  EXPECT_THROW(init_model(3, zero, classes(2), 1), InvalidShape);
  EXPECT_THROW(init_model(3, none, classes(0), 1), InvalidShape);
}

TEST(Probe, InitIsDeterministicAndBounded) {
  const std::vector<std::size_t> hidden{7};
  const auto a = init_model(9, hidden, classes(4), 11);
  const auto b = init_model(9, hidden, classes(4), 11);
  const auto c = init_model(9, hidden, classes(4), 12);
  EXPECT_EQ(flatten(a), flatten(b));
  EXPECT_NE(flatten(a), flatten(c));
  const double bound = 1.0 / std::sqrt(9.0);
  for (double w : a.hidden[0].weights) EXPECT_LE(std::abs(w), bound);
  for (double b0 : a.hidden[0].bias) EXPECT_EQ(b0, 0.0);
}

TEST(Probe, SoftmaxIsStable) {
  std::vector<double> big{1000.0, 1000.0};
  softmax_inplace(big);
  EXPECT_DOUBLE_EQ(big[0], 0.5);
  EXPECT_DOUBLE_EQ(big[1], 0.5);
  std::vector<double> mixed{-1000.0, 0.0, 1000.0};
  softmax_inplace(mixed);
  EXPECT_DOUBLE_EQ(mixed[2], 1.0);
  EXPECT_TRUE(std::isfinite(mixed[0]));
}

TEST(Probe, ZeroHeadGivesUniform) {
  const std::vector<std::size_t> none;
  auto m = init_model(4, none, classes(5), 3);
  std::fill(m.heads[0].layer.weights.begin(), m.heads[0].layer.weights.end(), 0.0);
  const auto d = random_data(10, 4, 5, 1);
  const Matrix p = forward(m, d.set.inputs);
  for (double v : p.data) EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(Probe, ProbabilityRowsSumToOne) {
  const std::vector<std::size_t> hidden{16, 8};
  const auto m = init_model(6, hidden, classes(25), 3);
  const auto d = random_data(50, 6, 25, 2);
  const Matrix p = forward(m, d.set.inputs);
  ASSERT_EQ(p.rows, 50u);
  ASSERT_EQ(p.cols, 25u);
  for (std::size_t r = 0; r < p.rows; ++r) {
    const auto row = p.row(r);
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Probe, ForwardRejectsWrongWidth) {
  const std::vector<std::size_t> none;
  const auto m = init_model(4, none, classes(2), 3);
  const auto d = random_data(3, 5, 2, 1);
  EXPECT_THROW(forward(m, d.set.inputs), DimMismatch);
}

TEST(Probe, ArgmaxPrefersLowestIndexOnTies) {
  const std::vector<double> v{0.2, 0.4, 0.4};
  EXPECT_EQ(argmax(v), 1u);
  const std::vector<double> flat{0.5, 0.5};
  EXPECT_EQ(argmax(flat), 0u);
}

TEST(Probe, LearnsSeparableData) {
  const auto d = separable_data(30, 3, 5);
  const std::vector<std::size_t> none;
  auto m = init_model(3, none, classes(3), 1);
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 30;
  const History h = train_sgd(m, d.set, cfg);
  ASSERT_EQ(h.size(), 30u);
  EXPECT_DOUBLE_EQ(h.back().accuracy, 1.0);
  EXPECT_LT(h.back().loss, h.front().loss);
}

TEST(Probe, ZeroEpochsLeavesModelUnchanged) {
  const auto d = random_data(20, 4, 3, 1);
  const std::vector<std::size_t> hidden{5};
  auto m = init_model(4, hidden, classes(3), 1);
  const auto before = flatten(m);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_TRUE(train_sgd(m, d.set, cfg).empty());
  EXPECT_EQ(flatten(m), before);
}

TEST(Probe, TrainingIsBitReproducible) {
  const auto d = random_data(100, 6, 4, 9);
  const std::vector<std::size_t> hidden{8};
  TrainConfig cfg;
  cfg.epochs = 3;
  auto a = init_model(6, hidden, classes(4), 2);
  auto b = init_model(6, hidden, classes(4), 2);
  const History ha = train_sgd(a, d.set, cfg);
  const History hb = train_sgd(b, d.set, cfg);
  EXPECT_EQ(flatten(a), flatten(b));
  for (std::size_t i = 0; i < ha.size(); ++i) EXPECT_EQ(ha[i].loss, hb[i].loss);
}

TEST(Probe, InvalidConfigRejected) {
  const auto d = random_data(5, 2, 2, 1);
  const std::vector<std::size_t> none;
  auto m = init_model(2, none, classes(2), 1);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train_sgd(m, d.set, cfg), InvalidConfig);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(train_sgd(m, d.set, cfg), InvalidConfig);
  cfg = {};
  cfg.momentum = 1.0;
  EXPECT_THROW(train_sgd(m, d.set, cfg), InvalidConfig);
}

TEST(Probe, DivergenceRaisesNonFiniteLoss) {
  auto d = random_data(20, 3, 2, 1);
  for (auto& r : d.rows) {
    for (auto& x : r) x = 1e30f;
  }
  d.finish();
  const std::vector<std::size_t> none;
  auto m = init_model(3, none, classes(2), 1);
  m.heads[0].layer.weights = {1e300, -1e300, -1e300, 1e300, 1e300, -1e300};
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train_sgd(m, d.set, cfg), NonFiniteLoss);
}

TEST(Probe, GradientsMatchFiniteDifferences) {
  const std::vector<std::vector<std::size_t>> stacks{{}, {5}, {16, 8}};
  std::uint64_t seed = 1;
  for (const auto& hidden : stacks) {
    for (std::size_t k : {2u, 6u, 25u}) {
      const auto d = random_data(12, 4, k, seed);
      const auto m = init_model(4, hidden, classes(k), seed++);
      EXPECT_LT(grad_check(m, d.set, 1e-5, 1e-3), 1e-4) << hidden.size() << " layers, " << k;
    }
  }
}

TEST(Probe, GradientOfZeroWeightedHeadVanishes) {
  const std::vector<std::size_t> hidden{5};
  auto m = init_model(4, hidden, classes(3), 1);
  m.heads.insert(m.heads.begin(), init_head(5, classes(2), 2));
  auto d = random_data(10, 4, 3, 3);
  d.set.targets.insert(d.set.targets.begin(), std::vector<int>(10, 1));
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), 0);
  const std::vector<double> weights{0.0, 1.0};
  ProbeModel g;
  objective(m, d.set, all, weights, 0.0, &g);
  for (double w : g.heads[0].layer.weights) EXPECT_EQ(w, 0.0);
  EXPECT_LT(grad_check(m, d.set, 1e-5, 0.0, weights), 1e-4);
}

TEST(ConfusionMatrix, CountsAndAccuracy) {
  ConfusionMatrix cm({"a", "b"});
  EXPECT_EQ(cm.accuracy(), 0.0);
  cm.add(0, 0, 3);
  cm.add(0, 1);
  cm.add(1, 1, 4);
  cm.add(1, 0, 2);
  EXPECT_EQ(cm.total(), 10u);
  EXPECT_EQ(cm.correct(), 7u);
  EXPECT_EQ(cm.row_total(1), 6u);
  EXPECT_EQ(cm.at(1, 0), 2u);
  EXPECT_DOUBLE_EQ(cm.accuracy(), 0.7);
}

TEST(ScoreMapped, CoarseningNeverLowersAccuracy) {
  const auto& h = parrott();
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> pred(40), truth(40);
    for (auto& p : pred) p = rng.below(25);
    for (auto& t : truth) t = rng.below(25);
    const double a3 = score_mapped(h, 3, pred, 3, truth, 3).accuracy();
    const double a2 = score_mapped(h, 3, pred, 3, truth, 2).accuracy();
    const double a1 = score_mapped(h, 3, pred, 3, truth, 1).accuracy();
    EXPECT_GE(a2, a3);
    EXPECT_GE(a1, a2);
  }
}

TEST(ScoreMapped, RejectsFinerEvaluation) {
  const std::vector<std::size_t> p{0};
  EXPECT_THROW(score_mapped(parrott(), 2, p, 3, p, 3), InvalidDirection);
}

TEST(Evaluate, MapsFinePredictionsToCoarseLevel) {
  const auto& h = parrott();
  const auto& fine = h.labels(3);
  DatasetManifest m;
  m.dataset_id = "d";
  std::vector<std::string> ids;
  std::vector<float> values;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    SampleRecord r;
    r.id = "r" + std::to_string(i);
    r.dataset_id = "d";
    r.labels[3] = fine[i];
    r.feature_id = r.id;
    m.records.push_back(r);
    ids.push_back(r.id);
    values.push_back(1.0f);
  }
  auto store = std::make_shared<const FeatureStore>(1, ids, values);
  const CorpusView view = align(m, store);
  // A constant model predicts the first fine label for every record.
  const std::vector<std::size_t> none;
  auto model = init_model(1, none, level_space(h, 3), 1);
  std::fill(model.heads[0].layer.weights.begin(), model.heads[0].layer.weights.end(), 0.0);
  model.heads[0].layer.bias[0] = 1.0;
  const Evaluation e3 = evaluate(model, view, 3, h);
  EXPECT_DOUBLE_EQ(e3.accuracy, 1.0 / 25.0);
  const auto target = h.map_index(3, 0, 1);
  std::size_t same = 0;
  for (std::size_t i = 0; i < fine.size(); ++i) same += h.map_index(3, i, 1) == target;
  const Evaluation e1 = evaluate(model, view, 1, h);
  EXPECT_DOUBLE_EQ(e1.accuracy, static_cast<double>(same) / 25.0);
  EXPECT_EQ(e1.confusion.size(), 2u);
}

TEST(ProbeIo, CheckpointRoundTrip) {
  const std::vector<std::size_t> hidden{6, 3};
  auto m = init_model(5, hidden, level_space(parrott(), 2), 17);
  m.seed_lineage = {17, 99};
  std::stringstream buf;
  save_model(m, buf);
  const ProbeModel back = load_model(buf);
  EXPECT_EQ(flatten(back), flatten(m));
  EXPECT_EQ(back.input_dim, 5u);
  EXPECT_EQ(back.primary().space.classes, m.primary().space.classes);
  EXPECT_EQ(back.primary().space.level, std::optional<int>(2));
  EXPECT_EQ(back.seed_lineage, m.seed_lineage);

  testing::TempDir dir;
  save_model(m, dir / "m.bin");
  EXPECT_EQ(flatten(load_model(dir / "m.bin")), flatten(m));
}

TEST(ProbeIo, RejectsForeignAndTruncatedFiles) {
  std::stringstream junk("not a checkpoint at all");
  EXPECT_THROW(load_model(junk), IoError);
  const std::vector<std::size_t> none;
  std::stringstream buf;
  save_model(init_model(3, none, classes(2), 1), buf);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 4);
  std::stringstream cut(bytes);
  EXPECT_THROW(load_model(cut), IoError);
}

TEST(ProbeIo, HistoryCsv) {
  std::ostringstream out;
  write_history_csv({{1, 0.5, 0.25}, {2, 0.125, 0.75}}, out);
  EXPECT_EQ(out.str().substr(0, 21), "epoch,loss,accuracy\n1");
}

}  // namespace
}  // namespace emobias
