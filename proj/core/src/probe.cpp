#include "emobias/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emobias/error.hpp"
#include "emobias/random.hpp"

namespace emobias {

LabelSpace level_space(const EmotionHierarchy& h, int level) {
  return LabelSpace{h.labels(level), level};
}

std::size_t ProbeModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : hidden) n += l.parameter_count();
  for (const auto& hd : heads) n += hd.layer.parameter_count();
  return n;
}

DenseLayer init_dense(std::size_t inputs, std::size_t outputs, std::uint64_t seed) {
  DenseLayer layer;
  layer.inputs = inputs;
  layer.outputs = outputs;
  layer.weights.resize(inputs * outputs);
  layer.bias.assign(outputs, 0.0);
  const double limit = 1.0 / std::sqrt(static_cast<double>(inputs));
  Rng rng(seed);
  for (double& w : layer.weights) w = rng.uniform(-limit, limit);
  return layer;
}

Head init_head(std::size_t width, LabelSpace space, std::uint64_t seed) {
  if (space.classes.empty()) throw InvalidShape("label space has no classes");
  Head head;
  head.layer = init_dense(width, space.classes.size(), seed);
  head.space = std::move(space);
  return head;
}

ProbeModel init_model(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                      LabelSpace classes, std::uint64_t seed) {
  if (input_dim == 0) throw InvalidShape("input dimension must be positive");
  if (classes.classes.empty()) throw InvalidShape("label space has no classes");
  ProbeModel model;
  model.input_dim = input_dim;
  std::size_t width = input_dim;
  for (std::size_t l = 0; l < hidden_dims.size(); ++l) {
    if (hidden_dims[l] == 0) throw InvalidShape("hidden layer width must be positive");
    model.hidden.push_back(init_dense(width, hidden_dims[l], derive_seed(seed, l)));
    width = hidden_dims[l];
  }
  model.heads.push_back(init_head(width, std::move(classes), derive_seed(seed, hash_name("head"))));
  model.seed_lineage.push_back(seed);
  return model;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidConfig("learning_rate must be positive");
  }
  if (batch_size < 1) throw InvalidConfig("batch_size must be at least 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidConfig("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InvalidConfig("weight_decay must be non-negative");
  if (epochs < 0) throw InvalidConfig("epochs must be non-negative");
  if (!(lr_transition_factor > 0.0)) throw InvalidConfig("lr_transition_factor must be positive");
}

TrainingSet level_training_set(const CorpusView& view, const EmotionHierarchy& h, int level) {
  TrainingSet set;
  set.inputs = feature_rows(view);
  set.targets.emplace_back();
  auto& targets = set.targets.back();
  targets.reserve(view.size());
  for (const auto& r : view.records()) {
    targets.push_back(static_cast<int>(require_label_index(r, h, level)));
  }
  return set;
}

void softmax_inplace(std::span<double> logits) {
  if (logits.empty()) return;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - mx);
    sum += z;
  }
  for (double& z : logits) z /= sum;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

void check_inputs(const ProbeModel& model, std::span<const std::span<const float>> inputs) {
  for (const auto& x : inputs) {
    if (x.size() != model.input_dim) {
      throw DimMismatch("input has width " + std::to_string(x.size()) + ", model expects " +
                        std::to_string(model.input_dim));
    }
  }
}

// out(b, :) = bias + in(b, :) * W
void affine(const DenseLayer& layer, const Matrix& in, Matrix& out) {
  out = Matrix(in.rows, layer.outputs);
  for (std::size_t b = 0; b < in.rows; ++b) {
    double* o = out.data.data() + b * layer.outputs;
    std::copy(layer.bias.begin(), layer.bias.end(), o);
    const double* a = in.data.data() + b * in.cols;
    for (std::size_t i = 0; i < layer.inputs; ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;
      const double* w = layer.weights.data() + i * layer.outputs;
      for (std::size_t j = 0; j < layer.outputs; ++j) o[j] += ai * w[j];
    }
  }
}

void relu_inplace(Matrix& m) {
  for (double& v : m.data) v = v > 0.0 ? v : 0.0;
}

// activations[0] = inputs; activations[l + 1] = relu(hidden l).
std::vector<Matrix> run_stack(const ProbeModel& model,
                              std::span<const std::span<const float>> inputs,
                              std::span<const std::size_t> rows) {
  std::vector<Matrix> acts(model.hidden.size() + 1);
  const std::size_t n = rows.empty() ? inputs.size() : rows.size();
  acts[0] = Matrix(n, model.input_dim);
  for (std::size_t b = 0; b < n; ++b) {
    const auto& x = inputs[rows.empty() ? b : rows[b]];
    std::copy(x.begin(), x.end(), acts[0].data.begin() + static_cast<std::ptrdiff_t>(b * model.input_dim));
  }
  for (std::size_t l = 0; l < model.hidden.size(); ++l) {
    affine(model.hidden[l], acts[l], acts[l + 1]);
    relu_inplace(acts[l + 1]);
  }
  return acts;
}

ProbeModel zeros_like(const ProbeModel& model) {
  ProbeModel z = model;
  for (auto& l : z.hidden) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  for (auto& h : z.heads) {
    std::fill(h.layer.weights.begin(), h.layer.weights.end(), 0.0);
    std::fill(h.layer.bias.begin(), h.layer.bias.end(), 0.0);
  }
  return z;
}

// Every parameter tensor in a fixed order, flagged when weight decay applies.
struct TensorRef {
  std::vector<double>* values;
  bool decays;
};

std::vector<TensorRef> tensors(ProbeModel& model) {
  std::vector<TensorRef> out;
  for (auto& l : model.hidden) {
    out.push_back({&l.weights, true});
    out.push_back({&l.bias, false});
  }
  for (auto& h : model.heads) {
    out.push_back({&h.layer.weights, true});
    out.push_back({&h.layer.bias, false});
  }
  return out;
}

std::vector<double> resolve_head_weights(const ProbeModel& model,
                                         std::span<const double> head_weights) {
  if (head_weights.empty()) return std::vector<double>(model.heads.size(), 1.0);
  if (head_weights.size() != model.heads.size()) {
    throw InvalidConfig("expected " + std::to_string(model.heads.size()) + " head weights, got " +
                        std::to_string(head_weights.size()));
  }
  return {head_weights.begin(), head_weights.end()};
}

void check_set(const ProbeModel& model, const TrainingSet& set) {
  if (model.heads.empty()) throw InvalidShape("model has no head");
  if (set.targets.size() != model.heads.size()) {
    throw InvalidShape("training set has " + std::to_string(set.targets.size()) +
                       " target columns for " + std::to_string(model.heads.size()) + " heads");
  }
  check_inputs(model, set.inputs);
  for (std::size_t h = 0; h < set.targets.size(); ++h) {
    if (set.targets[h].size() != set.inputs.size()) {
      throw InvalidShape("target count differs from input count");
    }
    const auto k = static_cast<int>(model.heads[h].space.classes.size());
    for (int t : set.targets[h]) {
      if (t < 0 || t >= k) throw InvalidShape("target index outside the head's label space");
    }
  }
}

double squared_weights(const ProbeModel& model) {
  double s = 0.0;
  for (const auto& l : model.hidden) {
    for (double w : l.weights) s += w * w;
  }
  for (const auto& h : model.heads) {
    for (double w : h.layer.weights) s += w * w;
  }
  return s;
}

}  // namespace

Matrix forward(const ProbeModel& model, std::span<const std::span<const float>> inputs) {
  return forward(model, inputs, model.heads.size() - 1);
}

Matrix forward(const ProbeModel& model, std::span<const std::span<const float>> inputs,
               std::size_t head) {
  if (head >= model.heads.size()) throw InvalidShape("no such head");
  check_inputs(model, inputs);
  auto acts = run_stack(model, inputs, {});
  Matrix probs;
  affine(model.heads[head].layer, acts.back(), probs);
  for (std::size_t b = 0; b < probs.rows; ++b) softmax_inplace(probs.row(b));
  return probs;
}

Predictions predict(const ProbeModel& model, std::span<const std::span<const float>> inputs) {
  const Matrix probs = forward(model, inputs);
  Predictions out;
  out.labels.resize(probs.rows);
  out.confidences.resize(probs.rows);
  for (std::size_t b = 0; b < probs.rows; ++b) {
    out.labels[b] = argmax(probs.row(b));
    out.confidences[b] = probs(b, out.labels[b]);
  }
  return out;
}

double objective(const ProbeModel& model, const TrainingSet& set,
                 std::span<const std::size_t> batch, std::span<const double> head_weights,
                 double weight_decay, ProbeModel* grads, std::size_t* correct) {
  const auto lambdas = resolve_head_weights(model, head_weights);
  const std::size_t n = batch.size();
  const std::size_t depth = model.hidden.size();
  auto acts = run_stack(model, set.inputs, batch);
  const Matrix& top = acts.back();
  const std::size_t width = model.feature_width();

  if (grads) *grads = zeros_like(model);
  Matrix d_top;
  if (grads) d_top = Matrix(n, width);

  double total = 0.0;
  if (correct) *correct = 0;
  const double inv_n = n ? 1.0 / static_cast<double>(n) : 0.0;
  for (std::size_t h = 0; h < model.heads.size(); ++h) {
    const bool is_primary = h + 1 == model.heads.size();
    if (lambdas[h] == 0.0 && !(is_primary && correct)) continue;
    const DenseLayer& layer = model.heads[h].layer;
    Matrix logits;
    affine(layer, top, logits);
    double ce = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      auto z = logits.row(b);
      const auto target = static_cast<std::size_t>(set.targets[h][batch[b]]);
      if (is_primary && correct) *correct += argmax(z) == target;
      const double mx = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - mx);
      const double lse = mx + std::log(sum);
      ce += lse - z[target];
      // z becomes dL/dz for this head: lambda * (p - y) / n
      for (std::size_t c = 0; c < z.size(); ++c) {
        z[c] = std::exp(z[c] - lse) * lambdas[h] * inv_n;
      }
      z[target] -= lambdas[h] * inv_n;
    }
    total += lambdas[h] * ce * inv_n;
    if (!grads || lambdas[h] == 0.0) continue;

    DenseLayer& g = grads->heads[h].layer;
    for (std::size_t b = 0; b < n; ++b) {
      const double* a = top.data.data() + b * width;
      const double* dz = logits.data.data() + b * layer.outputs;
      double* da = d_top.data.data() + b * width;
      for (std::size_t c = 0; c < layer.outputs; ++c) g.bias[c] += dz[c];
      for (std::size_t i = 0; i < width; ++i) {
        const double* w = layer.weights.data() + i * layer.outputs;
        double* gw = g.weights.data() + i * layer.outputs;
        double acc = 0.0;
        for (std::size_t c = 0; c < layer.outputs; ++c) {
          gw[c] += a[i] * dz[c];
          acc += w[c] * dz[c];
        }
        da[i] += acc;
      }
    }
  }

  total += 0.5 * weight_decay * squared_weights(model);
  if (!grads) return total;

  // Back through the ReLU stack.
  Matrix d_act = std::move(d_top);
  for (std::size_t l = depth; l-- > 0;) {
    const DenseLayer& layer = model.hidden[l];
    const Matrix& out = acts[l + 1];
    const Matrix& in = acts[l];
    DenseLayer& g = grads->hidden[l];
    Matrix d_in;
    if (l > 0) d_in = Matrix(n, layer.inputs);
    for (std::size_t b = 0; b < n; ++b) {
      double* dz = d_act.data.data() + b * layer.outputs;
      const double* o = out.data.data() + b * layer.outputs;
      for (std::size_t j = 0; j < layer.outputs; ++j) {
        if (o[j] <= 0.0) dz[j] = 0.0;
        g.bias[j] += dz[j];
      }
      const double* a = in.data.data() + b * layer.inputs;
      double* da = l > 0 ? d_in.data.data() + b * layer.inputs : nullptr;
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        const double* w = layer.weights.data() + i * layer.outputs;
        double* gw = g.weights.data() + i * layer.outputs;
        double acc = 0.0;
        for (std::size_t j = 0; j < layer.outputs; ++j) {
          gw[j] += a[i] * dz[j];
          acc += w[j] * dz[j];
        }
        if (da) da[i] = acc;
      }
    }
    d_act = std::move(d_in);
  }

  if (weight_decay != 0.0) {
    auto add_decay = [weight_decay](const DenseLayer& layer, DenseLayer& g) {
      for (std::size_t i = 0; i < layer.weights.size(); ++i) {
        g.weights[i] += weight_decay * layer.weights[i];
      }
    };
    for (std::size_t l = 0; l < depth; ++l) add_decay(model.hidden[l], grads->hidden[l]);
    for (std::size_t h = 0; h < model.heads.size(); ++h) {
      add_decay(model.heads[h].layer, grads->heads[h].layer);
    }
  }
  return total;
}

History train_sgd(ProbeModel& model, const TrainingSet& set, const TrainConfig& cfg,
                  std::span<const double> head_weights) {
  cfg.validate();
  History history;
  if (cfg.epochs == 0) return history;
  check_set(model, set);
  const auto lambdas = resolve_head_weights(model, head_weights);
  const std::size_t n = set.size();
  if (n == 0) throw InvalidShape("training set is empty");

  ProbeModel velocity = zeros_like(model);
  ProbeModel grads;
  auto params = tensors(model);
  auto vel = tensors(velocity);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(cfg.seed, hash_name("shuffle")));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_no) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      std::span<const std::size_t> batch(order.data() + start, stop - start);
      std::size_t correct = 0;
      const double loss = objective(model, set, batch, lambdas, cfg.weight_decay, &grads, &correct);
      if (!std::isfinite(loss)) throw NonFiniteLoss(epoch, batch_no);
      loss_sum += loss * static_cast<double>(batch.size());
      hits += correct;
      auto gts = tensors(grads);
      for (std::size_t t = 0; t < params.size(); ++t) {
        auto& w = *params[t].values;
        auto& v = *vel[t].values;
        const auto& g = *gts[t].values;
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = cfg.momentum * v[i] - cfg.learning_rate * g[i];
          w[i] += v[i];
        }
      }
    }
    history.push_back({epoch + 1, loss_sum / static_cast<double>(n),
                       static_cast<double>(hits) / static_cast<double>(n)});
  }
  return history;
}

History train_sgd(ProbeModel& model, const CorpusView& view, const EmotionHierarchy& h, int level,
                  const TrainConfig& cfg) {
  if (model.heads.size() != 1) throw InvalidShape("level training expects a single-head model");
  const auto& space = model.primary().space;
  if (space.level != level || space.classes.size() != h.size(level)) {
    throw InvalidShape("model head does not predict hierarchy level " + std::to_string(level));
  }
  return train_sgd(model, level_training_set(view, h, level), cfg);
}

double grad_check(const ProbeModel& model, const TrainingSet& batch, double eps,
                  double weight_decay, std::span<const double> head_weights) {
  check_set(model, batch);
  std::vector<std::size_t> all(batch.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  ProbeModel analytic;
  objective(model, batch, all, head_weights, weight_decay, &analytic);

  ProbeModel probe = model;
  auto params = tensors(probe);
  auto grads = tensors(analytic);
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& w = *params[t].values;
    const auto& g = *grads[t].values;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + eps;
      const double up = objective(probe, batch, all, head_weights, weight_decay);
      w[i] = saved - eps;
      const double down = objective(probe, batch, all, head_weights, weight_decay);
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(g[i]), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(g[i] - numeric) / denom);
    }
  }
  return worst;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
  if (truth >= classes_.size() || predicted >= classes_.size()) {
    throw InvalidShape("confusion matrix index out of range");
  }
  counts_[truth * classes_.size() + predicted] += n;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < classes_.size(); ++p) s += at(truth, p);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::correct() const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < classes_.size(); ++c) s += at(c, c);
  return s;
}

double ConfusionMatrix::accuracy() const {
  const auto t = total();
  return t ? static_cast<double>(correct()) / static_cast<double>(t) : 0.0;
}

ConfusionMatrix score_mapped(const EmotionHierarchy& h, int pred_level,
                             std::span<const std::size_t> predictions, int truth_level,
                             std::span<const std::size_t> truths, int eval_level) {
  if (predictions.size() != truths.size()) {
    throw InvalidShape("prediction and truth counts differ");
  }
  if (eval_level > pred_level) throw InvalidDirection(pred_level, eval_level);
  if (eval_level > truth_level) throw InvalidDirection(truth_level, eval_level);
  const auto pred_map = h.projection(pred_level, eval_level);
  const auto truth_map = h.projection(truth_level, eval_level);
  ConfusionMatrix cm(h.labels(eval_level));
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    cm.add(truth_map.at(truths[i]), pred_map.at(predictions[i]));
  }
  return cm;
}

Evaluation evaluate(const ProbeModel& model, std::span<const std::span<const float>> inputs,
                    std::span<const std::size_t> truths) {
  if (inputs.size() != truths.size()) throw InvalidShape("input and truth counts differ");
  const auto pred = predict(model, inputs);
  Evaluation ev{0.0, ConfusionMatrix(model.primary().space.classes)};
  for (std::size_t i = 0; i < truths.size(); ++i) ev.confusion.add(truths[i], pred.labels[i]);
  ev.accuracy = ev.confusion.accuracy();
  return ev;
}

Evaluation evaluate(const ProbeModel& model, const CorpusView& view, int eval_level,
                    const EmotionHierarchy& h) {
  const auto& space = model.primary().space;
  if (!space.level) throw InvalidConfig("model label space is not a hierarchy level");
  const int native = *space.level;
  if (eval_level > native || eval_level < 1) throw InvalidDirection(native, eval_level);
  const auto rows = feature_rows(view);
  const auto pred = predict(model, rows);
  std::vector<std::size_t> truths;
  truths.reserve(view.size());
  for (const auto& r : view.records()) truths.push_back(require_label_index(r, h, eval_level));
  Evaluation ev;
  ev.confusion = score_mapped(h, native, pred.labels, eval_level, truths, eval_level);
  ev.accuracy = ev.confusion.accuracy();
  return ev;
}

}  // namespace emobias
