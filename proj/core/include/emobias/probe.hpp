#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emobias/feature_store.hpp"
#include "emobias/hierarchy.hpp"

namespace emobias {

// Fully connected layer; weights are inputs x outputs, row-major.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& w(std::size_t i, std::size_t o) { return weights[i * outputs + o]; }
  double w(std::size_t i, std::size_t o) const { return weights[i * outputs + o]; }
  std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

// Classes a head predicts. `level` is set when the space is a full hierarchy
// level, which enables coarsened evaluation through the hierarchy.
struct LabelSpace {
  std::vector<std::string> classes;
  std::optional<int> level;
};

LabelSpace level_space(const EmotionHierarchy& h, int level);

struct Head {
  LabelSpace space;
  DenseLayer layer;
};

// Softmax classifier over an optional stack of ReLU layers. Several heads may
// share the stack; the last head is the one used for prediction.
struct ProbeModel {
  std::size_t input_dim = 0;
  std::vector<DenseLayer> hidden;
  std::vector<Head> heads;
  // Seeds that produced the current parameters, oldest first.
  std::vector<std::uint64_t> seed_lineage;

  // Width of the representation the heads read.
  std::size_t feature_width() const { return hidden.empty() ? input_dim : hidden.back().outputs; }
  const Head& primary() const { return heads.back(); }
  std::size_t parameter_count() const;
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
DenseLayer init_dense(std::size_t inputs, std::size_t outputs, std::uint64_t seed);
Head init_head(std::size_t width, LabelSpace space, std::uint64_t seed);

// Throws InvalidShape for d == 0, zero-width hidden layers or no classes.
ProbeModel init_model(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                      LabelSpace classes, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t batch_size = 24;
  int epochs = 10;
  std::uint64_t seed = 7;
  double lr_transition_factor = 0.1;

  // Throws InvalidConfig.
  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};
using History = std::vector<EpochStats>;

// Feature rows with one target vector per model head (targets[h][i] indexes
// heads[h].space.classes).
struct TrainingSet {
  std::vector<std::span<const float>> inputs;
  std::vector<std::vector<int>> targets;

  std::size_t size() const { return inputs.size(); }
};

// Training set for a single head predicting hierarchy level `level`.
// Throws MissingLabel.
TrainingSet level_training_set(const CorpusView& view, const EmotionHierarchy& h, int level);

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

// In-place softmax with max subtraction.
void softmax_inplace(std::span<double> logits);

// Class probabilities of head `head` (default: primary). Throws DimMismatch.
Matrix forward(const ProbeModel& model, std::span<const std::span<const float>> inputs);
Matrix forward(const ProbeModel& model, std::span<const std::span<const float>> inputs,
               std::size_t head);

// Argmax (lowest index on ties) and its probability.
struct Predictions {
  std::vector<std::size_t> labels;
  std::vector<double> confidences;
};
Predictions predict(const ProbeModel& model, std::span<const std::span<const float>> inputs);
std::size_t argmax(std::span<const double> values);

// Mean cross-entropy per head weighted by head_weights (empty = all ones),
// plus weight_decay * 0.5 * sum of squared weights (biases excluded), over
// the samples listed in `batch`. If `grads` is non-null it receives the exact
// gradient, shaped like the model. `correct` counts primary-head hits.
double objective(const ProbeModel& model, const TrainingSet& set,
                 std::span<const std::size_t> batch, std::span<const double> head_weights,
                 double weight_decay, ProbeModel* grads = nullptr, std::size_t* correct = nullptr);

// Mini-batch SGD with momentum. Velocities start at zero for every call.
// Throws NonFiniteLoss, DimMismatch, InvalidConfig.
History train_sgd(ProbeModel& model, const TrainingSet& set, const TrainConfig& cfg,
                  std::span<const double> head_weights = {});

// Convenience: trains the primary head on labels at `level`.
History train_sgd(ProbeModel& model, const CorpusView& view, const EmotionHierarchy& h, int level,
                  const TrainConfig& cfg);

// Max relative error between analytic and central-difference gradients of
// the regularized objective over the whole set.
double grad_check(const ProbeModel& model, const TrainingSet& batch, double eps = 1e-5,
                  double weight_decay = 0.0, std::span<const double> head_weights = {});

// Rows are ground truth, columns predictions.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> classes);

  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);

  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return classes_.size(); }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_.size() + predicted];
  }
  std::uint64_t row_total(std::size_t truth) const;
  std::uint64_t total() const;
  std::uint64_t correct() const;
  // Fraction in [0, 1]; 0 for an empty matrix.
  double accuracy() const;

 private:
  std::vector<std::string> classes_;
  std::vector<std::uint64_t> counts_;
};

struct Evaluation {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

// Scores predictions made at pred_level against truths at truth_level after
// mapping both to eval_level. Throws InvalidDirection.
ConfusionMatrix score_mapped(const EmotionHierarchy& h, int pred_level,
                             std::span<const std::size_t> predictions, int truth_level,
                             std::span<const std::size_t> truths, int eval_level);

// Primary-head evaluation against explicit truth indices.
Evaluation evaluate(const ProbeModel& model, std::span<const std::span<const float>> inputs,
                    std::span<const std::size_t> truths);

// Primary-head evaluation at `eval_level`; predictions and ground truth are
// both mapped through the hierarchy when eval_level is coarser than the head.
Evaluation evaluate(const ProbeModel& model, const CorpusView& view, int eval_level,
                    const EmotionHierarchy& h);

}  // namespace emobias
