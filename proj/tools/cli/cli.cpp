#include "cli/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emobias/biastests.hpp"
#include "emobias/corpus.hpp"
#include "emobias/curriculum.hpp"
#include "emobias/entropy.hpp"
#include "emobias/error.hpp"
#include "emobias/feature_store.hpp"
#include "emobias/hierarchy.hpp"
#include "emobias/probe_io.hpp"
#include "emobias/random.hpp"
#include "emobias/report.hpp"
#include "emobias/synthkit.hpp"

namespace emobias::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kOutDirEnv = "EMOBIAS_OUT_DIR";

// --config reader: nested objects select subcommands, e.g.
// {"seed": 3, "audit": {"name-dataset": {"train-per": 200}}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return dump(app, default_also).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("invalid JSON config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("JSON config must be an object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void flatten(const json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        flatten(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }

  static json dump(const CLI::App* app, bool default_also) {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->get_configurable() == false) continue;
      const std::string& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& r = opt->results();
        j[name] = r.size() == 1 ? json(r.front()) : json(r);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      json s = dump(sub, default_also);
      if (!s.empty()) j[sub->get_name()] = std::move(s);
    }
    return j;
  }
};

struct Globals {
  std::uint64_t seed = 7;
  std::string format = "table";
  std::string taxonomy;
};

struct TrainOptions {
  TrainConfig train;
  std::vector<std::size_t> hidden;
};

// Result of one command: the report plus any extra files to write next to it.
struct Outcome {
  Report report;
  std::vector<std::pair<fs::path, std::string>> files;
};

EmotionHierarchy load_taxonomy(const Globals& g) {
  return g.taxonomy.empty() ? build_parrott_hierarchy() : load_hierarchy(g.taxonomy);
}

json global_json(const Globals& g, const EmotionHierarchy& h) {
  return {{"seed", g.seed},
          {"format", g.format},
          {"taxonomy", g.taxonomy.empty() ? "builtin" : g.taxonomy},
          {"taxonomy_version", h.version()}};
}

json train_json(const TrainConfig& t, const std::vector<std::size_t>& hidden) {
  return {{"learning_rate", t.learning_rate},
          {"momentum", t.momentum},
          {"weight_decay", t.weight_decay},
          {"batch_size", t.batch_size},
          {"epochs", t.epochs},
          {"seed", t.seed},
          {"lr_transition_factor", t.lr_transition_factor},
          {"hidden_dims", hidden}};
}

void add_train_options(CLI::App* app, TrainOptions& o, std::vector<std::size_t> default_hidden) {
  o.hidden = std::move(default_hidden);
  app->add_option("--lr", o.train.learning_rate, "Initial learning rate")->capture_default_str();
  app->add_option("--momentum", o.train.momentum, "SGD momentum")->capture_default_str();
  app->add_option("--weight-decay", o.train.weight_decay, "L2 weight decay")->capture_default_str();
  app->add_option("--batch", o.train.batch_size, "Mini-batch size")->capture_default_str();
  app->add_option("--epochs", o.train.epochs, "Epochs per stage")->capture_default_str();
  app->add_option("--lr-factor", o.train.lr_transition_factor,
                  "Learning-rate multiplier applied at each stage transition")
      ->capture_default_str();
  app->add_option("--hidden", o.hidden, "Hidden layer widths (omit for a linear probe)")
      ->expected(0, CLI::detail::expected_max_vector_size);
}

// Relative output paths land under $EMOBIAS_OUT_DIR when it is set.
fs::path resolve_out(const std::string& path) {
  fs::path p(path);
  const char* dir = std::getenv(kOutDirEnv);
  if (p.is_relative() && dir != nullptr && *dir != '\0') return fs::path(dir) / p;
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<CorpusView> load_views(const std::vector<std::string>& manifests,
                                   const std::vector<std::string>& features,
                                   const EmotionHierarchy& h) {
  if (manifests.size() != features.size()) {
    throw InvalidConfig("--manifests and --features must have the same number of entries");
  }
  std::vector<CorpusView> views;
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    DatasetManifest m = load_manifest(manifests[i], h);
    auto store = std::make_shared<const FeatureStore>(load_feature_store(features[i]));
    views.push_back(align(m, std::move(store)));
  }
  return views;
}

json history_json(const History& history) {
  json out = json::array();
  for (const auto& e : history) out.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}});
  return out;
}

// ---- audit ---------------------------------------------------------------

struct DropArgs {
  double self = 0.0;
  std::vector<double> others;
};

Outcome run_drop(const Globals& g, const DropArgs& a) {
  json config{{"seed", g.seed}, {"format", g.format}, {"self", a.self}, {"others", a.others}};
  return {drop_report(a.self, a.others, std::move(config)), {}};
}

struct DatasetArgs {
  std::vector<std::string> manifests;
  std::vector<std::string> features;
  TrainOptions train;
};

json dataset_json(const DatasetArgs& a) { return {{"manifests", a.manifests}, {"features", a.features}}; }

struct NameDatasetArgs : DatasetArgs {
  std::size_t train_per = 500;
  std::size_t test_per = 100;
};

Outcome run_name_dataset(const Globals& g, const NameDatasetArgs& a) {
  const EmotionHierarchy h = load_taxonomy(g);
  const auto views = load_views(a.manifests, a.features, h);
  AuditConfig cfg{a.train.train, a.train.hidden, 0.8};
  cfg.train.seed = g.seed;
  const auto result = name_that_dataset(views, a.train_per, a.test_per, cfg);
  std::vector<std::string> ids;
  for (const auto& v : views) ids.push_back(v.dataset_id());
  json config = global_json(g, h);
  config["inputs"] = dataset_json(a);
  config["train"] = train_json(cfg.train, cfg.hidden_dims);
  config["train_per"] = a.train_per;
  config["test_per"] = a.test_per;
  return {name_dataset_report(result, ids, std::move(config)), {}};
}

struct CrossGenArgs : DatasetArgs {
  double train_fraction = 0.8;
};

Outcome run_cross_gen(const Globals& g, const CrossGenArgs& a) {
  const EmotionHierarchy h = load_taxonomy(g);
  const auto views = load_views(a.manifests, a.features, h);
  AuditConfig cfg{a.train.train, a.train.hidden, a.train_fraction};
  cfg.train.seed = g.seed;
  const CrossGenMatrix m = cross_generalization(views, h, cfg);
  json config = global_json(g, h);
  config["inputs"] = dataset_json(a);
  config["train"] = train_json(cfg.train, cfg.hidden_dims);
  config["train_fraction"] = a.train_fraction;
  config["eval_level"] = 1;
  return {cross_gen_report(m, std::move(config)), {}};
}

struct NegBiasArgs : DatasetArgs {
  std::size_t target = 0;
  std::string emotion;
  NegBiasCounts counts;
};

Outcome run_neg_bias(const Globals& g, const NegBiasArgs& a) {
  const EmotionHierarchy h = load_taxonomy(g);
  const auto views = load_views(a.manifests, a.features, h);
  if (a.target >= views.size()) throw InvalidConfig("--target is out of range");
  std::vector<CorpusView> others;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (i != a.target) others.push_back(views[i]);
  }
  AuditConfig cfg{a.train.train, a.train.hidden, 0.8};
  cfg.train.seed = g.seed;
  const NegBiasResult r = negative_bias_test(views[a.target], others, h, a.emotion, a.counts, cfg);
  json config = global_json(g, h);
  config["inputs"] = dataset_json(a);
  config["train"] = train_json(cfg.train, cfg.hidden_dims);
  config["target"] = views[a.target].dataset_id();
  config["emotion"] = a.emotion;
  config["counts"] = {{"train_pos", a.counts.train_pos},
                      {"train_neg", a.counts.train_neg},
                      {"test_pos", a.counts.test_pos},
                      {"test_neg", a.counts.test_neg}};
  return {neg_bias_report(r, std::move(config)), {}};
}

struct EntropyArgs {
  std::string manifest;
  std::string emotion;
  std::string kind = "objects";
  std::size_t top_k = 200;
  std::uint64_t min_count = 5;
};

Outcome run_entropy(const Globals& g, const EntropyArgs& a, const std::string& out_path) {
  const EmotionHierarchy h = load_taxonomy(g);
  const DatasetManifest m = load_manifest(a.manifest, h);
  const ConceptKind kind = parse_concept_kind(a.kind);
  const EntropyHistogram hist = conditional_entropy_analysis(std::span<const SampleRecord>(m.records), h,
                                                             a.emotion, kind, a.top_k, a.min_count);
  json config = global_json(g, h);
  config["manifest"] = a.manifest;
  config["emotion"] = a.emotion;
  config["kind"] = a.kind;
  config["top_k"] = a.top_k;
  config["min_count"] = a.min_count;
  Outcome o{entropy_report(hist, std::move(config)), {}};
  if (!out_path.empty()) {
    fs::path side = resolve_out(out_path);
    side.replace_extension(".hist.csv");
    o.files.emplace_back(side, render_csv(entropy_histogram_table(hist)));
  }
  return o;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string strategy = "curriculum";
  std::string plan = "1,2,3";
  std::string manifest;
  std::string features;
  std::vector<std::string> eval_manifests;
  std::vector<std::string> eval_features;
  std::optional<int> eval_level;
  double train_fraction = 0.8;
  std::size_t clean_size = 500;
  SelfDirectedOptions self_directed;
  std::vector<double> loss_weights;
  std::string model_out;
  std::string history_out;
  TrainOptions train;
};

Outcome run_train(const Globals& g, const TrainArgs& a) {
  const EmotionHierarchy h = load_taxonomy(g);
  const auto views = load_views({a.manifest}, {a.features}, h);
  const int depth = h.depth();
  StrategyConfig cfg{a.train.train, a.train.hidden};
  cfg.train.seed = g.seed;

  auto [train, test] = train_test_views(views.front(), h, depth, a.train_fraction,
                                  derive_seed(g.seed, hash_name("split")));
  StagePlan plan;
  StrategyResult result;
  if (a.strategy == "curriculum") {
    plan = parse_plan(a.plan);
    plan.lr_transition_factor = cfg.train.lr_transition_factor;
    result = curriculum_train(train, h, plan, cfg);
  } else if (a.strategy == "direct") {
    result = direct_train(train, h, cfg);
  } else if (a.strategy == "self-directed") {
    const CorpusView clean = draw_clean_seed(train, h, a.clean_size, depth, derive_seed(g.seed, hash_name("clean")));
    result = self_directed_train(clean, train, h, cfg, a.self_directed);
  } else {
    result = joint_train(train, h, cfg, a.loss_weights);
  }

  const int level = a.eval_level.value_or(result.model.primary().space.level.value_or(depth));
  std::vector<CorpusView> eval_views;
  eval_views.push_back(test);
  if (!a.eval_manifests.empty()) {
    auto extra = load_views(a.eval_manifests, a.eval_features, h);
    eval_views.insert(eval_views.end(), extra.begin(), extra.end());
  }
  evaluate_strategy(result, eval_views, h, level);

  json config = global_json(g, h);
  config["strategy"] = a.strategy;
  if (a.strategy == "curriculum") config["plan"] = plan.levels;
  config["manifest"] = a.manifest;
  config["features"] = a.features;
  config["eval_manifests"] = a.eval_manifests;
  config["eval_features"] = a.eval_features;
  config["eval_level"] = level;
  config["train_fraction"] = a.train_fraction;
  config["train"] = train_json(cfg.train, cfg.hidden_dims);
  if (a.strategy == "self-directed") {
    config["clean_size"] = a.clean_size;
    config["tau"] = a.self_directed.tau;
    config["max_rounds"] = a.self_directed.max_rounds;
    config["min_change"] = a.self_directed.min_change;
  }
  if (a.strategy == "joint") config["loss_weights"] = a.loss_weights;

  Report r;
  r.kind = "train";
  r.config = std::move(config);
  json stages = json::array();
  Table stage_table{"Stages", {"Stage", "Level", "LR", "Samples", "Final loss", "Train acc"}, {}};
  for (std::size_t i = 0; i < result.stages.size(); ++i) {
    const auto& s = result.stages[i];
    stages.push_back({{"level", s.level},
                      {"learning_rate", s.learning_rate},
                      {"seed", s.seed},
                      {"samples", s.samples},
                      {"history", history_json(s.history)}});
    const bool has = !s.history.empty();
    stage_table.rows.push_back({std::to_string(i), std::to_string(s.level), format_fixed(s.learning_rate, 6),
                                std::to_string(s.samples), has ? format_fixed(s.history.back().loss, 4) : "-",
                                has ? format_fixed(100.0 * s.history.back().accuracy) : "-"});
  }
  json evaluation = json::object();
  Table eval_table{"Held-out accuracy", {"Dataset", "Level", "Accuracy"}, {}};
  r.csv.header = {"dataset", "level", "accuracy"};
  for (const auto& [id, score] : result.evaluation) {
    evaluation[id] = {{"level", score.level}, {"accuracy", 100.0 * score.accuracy}};
    eval_table.rows.push_back({id, std::to_string(score.level), format_fixed(100.0 * score.accuracy)});
    r.csv.rows.push_back({id, std::to_string(score.level), format_fixed(100.0 * score.accuracy, 4)});
  }
  r.results = {{"strategy", result.strategy},
               {"parameter_count", result.model.parameter_count()},
               {"stages", stages},
               {"evaluation", evaluation},
               {"retained_sizes", result.retained_sizes}};
  r.tables = {stage_table, eval_table};

  Outcome o{std::move(r), {}};
  if (!a.model_out.empty()) {
    std::ostringstream bytes;
    save_model(result.model, bytes);
    o.files.emplace_back(resolve_out(a.model_out), bytes.str());
  }
  if (!a.history_out.empty()) {
    History all;
    for (const auto& s : result.stages) all.insert(all.end(), s.history.begin(), s.history.end());
    std::ostringstream csv;
    write_history_csv(all, csv);
    o.files.emplace_back(resolve_out(a.history_out), csv.str());
  }
  return o;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string spec;
  std::string out_dir = "synth";
  std::string bias_emotion;
  std::string bias_concept;
  std::size_t bias_dataset = 0;
};

Outcome run_synth(const Globals& g, const SynthArgs& a) {
  const EmotionHierarchy h = load_taxonomy(g);
  SynthSpec spec;
  if (!a.spec.empty()) {
    std::ifstream in(a.spec);
    if (!in) throw IoError("cannot read " + a.spec);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ParseError(a.spec, 0, e.what());
    }
    spec = synth_spec_from_json(j);
  }
  if (!a.bias_emotion.empty() || !a.bias_concept.empty()) {
    if (a.bias_emotion.empty() || a.bias_concept.empty()) {
      throw InvalidConfig("--bias-emotion and --bias-concept go together");
    }
    spec = inject_negative_set_bias(spec, h, a.bias_emotion, a.bias_concept, a.bias_dataset);
  }
  const SynthSuite suite = generate_synthetic_suite(spec, h, g.seed);
  const fs::path dir = resolve_out(a.out_dir);
  write_suite(suite, dir);

  json config = global_json(g, h);
  config["spec"] = synth_spec_to_json(spec);
  config["spec_file"] = a.spec;
  config["out_dir"] = a.out_dir;
  Report r;
  r.kind = "synth";
  r.config = std::move(config);
  json datasets = json::array();
  Table t{"Synthetic datasets", {"Dataset", "Records", "Dim", "Noisy labels"}, {}};
  r.csv.header = {"dataset", "records", "dim", "noisy_labels"};
  for (const auto& d : suite.datasets) {
    std::size_t noisy = 0;
    for (std::size_t i = 0; i < d.truth.size(); ++i) {
      noisy += d.manifest.records[i].labels.rbegin()->second != d.truth[i];
    }
    const std::string& id = d.manifest.dataset_id;
    datasets.push_back({{"id", id},
                        {"records", d.manifest.records.size()},
                        {"dim", d.features->dim()},
                        {"noisy_labels", noisy},
                        {"manifest", id + ".jsonl"},
                        {"features", id + ".features.json"},
                        {"truth", id + ".truth.jsonl"}});
    std::vector<std::string> row{id, std::to_string(d.manifest.records.size()), std::to_string(d.features->dim()),
                                 std::to_string(noisy)};
    t.rows.push_back(row);
    r.csv.rows.push_back(row);
  }
  r.results = {{"datasets", datasets}};
  r.tables.push_back(std::move(t));
  return {std::move(r), {}};
}

// ---- corpus ---------------------------------------------------------------

struct CorpusArgs {
  std::string manifest;
  std::string output;
  bool filter_tags = false;
  double fraction = 0.8;
  std::optional<int> level;
};

Report stats_report(const std::string& kind, const DatasetManifest& m, const EmotionHierarchy& h,
                    json config) {
  const ManifestStats s = compute_stats(m, h);
  Report r;
  r.kind = kind;
  r.config = std::move(config);
  json per_level = json::object();
  Table t{"Label counts", {"Level", "Label", "Count"}, {}};
  r.csv.header = {"level", "label", "count"};
  for (const auto& [level, counts] : s.class_counts) {
    json lj = json::object();
    for (const auto& [label, n] : counts) {
      lj[label] = n;
      t.rows.push_back({std::to_string(level), label, std::to_string(n)});
      r.csv.rows.push_back({std::to_string(level), label, std::to_string(n)});
    }
    per_level[std::to_string(level)] = lj;
  }
  r.results = {{"dataset_id", m.dataset_id},
               {"records", s.records},
               {"native_level", s.native_level},
               {"with_caption", s.with_caption},
               {"with_tags", s.with_tags},
               {"with_concepts", s.with_concepts},
               {"train", s.train},
               {"test", s.test},
               {"label_counts", per_level}};
  r.tables.push_back({"Manifest " + m.dataset_id, {"Records", "Native level", "Train", "Test"},
                      {{std::to_string(s.records), std::to_string(s.native_level), std::to_string(s.train),
                        std::to_string(s.test)}}});
  r.tables.push_back(std::move(t));
  return r;
}

Outcome run_corpus(const Globals& g, const std::string& action, const CorpusArgs& a) {
  const EmotionHierarchy h = load_taxonomy(g);
  DatasetManifest m = load_manifest(a.manifest, h);
  json config = global_json(g, h);
  config["manifest"] = a.manifest;
  config["output"] = a.output;
  Outcome o;
  if (action == "stats") {
    o.report = stats_report("corpus-stats", m, h, std::move(config));
    return o;
  }
  if (action == "dedup") {
    const std::size_t before = m.records.size();
    config["filter_tags"] = a.filter_tags;
    if (a.filter_tags) m = filter_non_english_tags(m);
    m = dedup_by_metadata(m);
    o.report = stats_report("corpus-dedup", m, h, std::move(config));
    o.report.results["input_records"] = before;
    o.report.results["removed"] = before - m.records.size();
  } else {
    const int level = a.level.value_or(native_level(m.records, h));
    config["fraction"] = a.fraction;
    config["level"] = level;
    const ManifestSplit s = stratified_split(m, h, a.fraction, level, g.seed);
    std::map<std::string, Split> tag;
    for (const auto& r : s.train.records) tag[r.id] = Split::kTrain;
    for (const auto& r : s.test.records) tag[r.id] = Split::kTest;
    for (auto& r : m.records) r.split = tag.at(r.id);
    o.report = stats_report("corpus-split", m, h, std::move(config));
  }
  if (!a.output.empty()) {
    std::ostringstream text;
    write_manifest(m, text);
    o.files.emplace_back(resolve_out(a.output), text.str());
  }
  return o;
}

const CLI::App* deepest(const CLI::App* app) {
  for (const CLI::App* sub : app->get_subcommands()) return deepest(sub);
  return app;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dataset-bias audits and hierarchical emotion training on precomputed features", "emobias"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option overrides");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--format", g.format, "Standard output format")
      ->check(CLI::IsMember({"json", "csv", "table"}))
      ->capture_default_str();
  app.add_option("--taxonomy", g.taxonomy, "Hierarchy JSON (default: built-in Parrott 2-6-25)")
      ->check(CLI::ExistingFile);
  std::string out_path;
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", out_path, "Report file (.json or .csv); relative to $EMOBIAS_OUT_DIR if set");
  };

  std::function<Outcome()> action;

  // audit
  CLI::App* audit = app.add_subcommand("audit", "Dataset bias tests");
  audit->require_subcommand(1);

  DropArgs drop;
  CLI::App* drop_cmd = audit->add_subcommand("drop", "Relative accuracy drop from self to others");
  drop_cmd->add_option("--self", drop.self, "Self accuracy")->required();
  drop_cmd->add_option("--others", drop.others, "Accuracies on other datasets")->required();
  add_out(drop_cmd);
  drop_cmd->callback([&] { action = [&] { return run_drop(g, drop); }; });

  auto add_datasets = [](CLI::App* sub, DatasetArgs& d) {
    sub->add_option("--manifests", d.manifests, "Manifest JSONL files")->required()->check(CLI::ExistingFile);
    sub->add_option("--features", d.features, "Feature stores, one per manifest")->required();
  };

  NameDatasetArgs nd;
  CLI::App* nd_cmd = audit->add_subcommand("name-dataset", "Classify which dataset a sample comes from");
  add_datasets(nd_cmd, nd);
  nd_cmd->add_option("--train-per", nd.train_per, "Training samples per dataset")->capture_default_str();
  nd_cmd->add_option("--test-per", nd.test_per, "Test samples per dataset")->capture_default_str();
  add_train_options(nd_cmd, nd.train, {});
  add_out(nd_cmd);
  nd_cmd->callback([&] { action = [&] { return run_name_dataset(g, nd); }; });

  CrossGenArgs cg;
  CLI::App* cg_cmd = audit->add_subcommand("cross-gen", "Binary cross-dataset generalization");
  add_datasets(cg_cmd, cg);
  cg_cmd->add_option("--train-fraction", cg.train_fraction, "Train share when a manifest has no split tags")
      ->capture_default_str();
  add_train_options(cg_cmd, cg.train, {});
  add_out(cg_cmd);
  cg_cmd->callback([&] { action = [&] { return run_cross_gen(g, cg); }; });

  NegBiasArgs nb;
  CLI::App* nb_cmd = audit->add_subcommand("neg-bias", "Negative set bias test");
  add_datasets(nb_cmd, nb);
  nb_cmd->add_option("--target", nb.target, "Index of the target dataset")->capture_default_str();
  nb_cmd->add_option("--emotion", nb.emotion, "Emotion defining the positive set")->required();
  nb_cmd->add_option("--train-pos", nb.counts.train_pos)->capture_default_str();
  nb_cmd->add_option("--train-neg", nb.counts.train_neg)->capture_default_str();
  nb_cmd->add_option("--test-pos", nb.counts.test_pos)->capture_default_str();
  nb_cmd->add_option("--test-neg", nb.counts.test_neg)->capture_default_str();
  add_train_options(nb_cmd, nb.train, {});
  add_out(nb_cmd);
  nb_cmd->callback([&] { action = [&] { return run_neg_bias(g, nb); }; });

  EntropyArgs en;
  CLI::App* en_cmd = audit->add_subcommand("entropy", "Conditional entropy of concept categories");
  en_cmd->add_option("--manifest", en.manifest, "Manifest with concept annotations")
      ->required()
      ->check(CLI::ExistingFile);
  en_cmd->add_option("--emotion", en.emotion, "Emotion defining the positive set")->required();
  en_cmd->add_option("--kind", en.kind, "Concept kind")
      ->check(CLI::IsMember({"objects", "scenes"}))
      ->capture_default_str();
  en_cmd->add_option("--top-k", en.top_k, "Most frequent categories taken from each set")->capture_default_str();
  en_cmd->add_option("--min-count", en.min_count, "Minimum occurrences of a category")->capture_default_str();
  add_out(en_cmd);
  en_cmd->callback([&] { action = [&] { return run_entropy(g, en, out_path); }; });

  // train
  TrainArgs tr;
  CLI::App* tr_cmd = app.add_subcommand("train", "Train a probe with a hierarchical strategy");
  tr_cmd->add_option("--strategy", tr.strategy, "Training strategy")
      ->check(CLI::IsMember({"curriculum", "direct", "self-directed", "joint"}))
      ->capture_default_str();
  tr_cmd->add_option("--plan", tr.plan, "Curriculum levels, coarse to fine")->capture_default_str();
  tr_cmd->add_option("--manifest", tr.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--features", tr.features, "Feature store for the manifest")->required();
  tr_cmd->add_option("--eval-manifests", tr.eval_manifests, "Extra evaluation manifests")
      ->check(CLI::ExistingFile);
  tr_cmd->add_option("--eval-features", tr.eval_features, "Feature stores for the evaluation manifests");
  tr_cmd->add_option("--eval-level", tr.eval_level, "Evaluation level (default: the final head's level)");
  tr_cmd->add_option("--train-fraction", tr.train_fraction, "Train share when the manifest has no split tags")
      ->capture_default_str();
  tr_cmd->add_option("--clean-size", tr.clean_size, "Clean seed size for self-directed training")
      ->capture_default_str();
  tr_cmd->add_option("--tau", tr.self_directed.tau, "Retention threshold on the weak-label probability")
      ->capture_default_str();
  tr_cmd->add_option("--rounds", tr.self_directed.max_rounds, "Self-directed refinement rounds")
      ->capture_default_str();
  tr_cmd->add_option("--min-change", tr.self_directed.min_change, "Stop when the retained set changes less")
      ->capture_default_str();
  tr_cmd->add_option("--loss-weights", tr.loss_weights, "Joint loss weights, coarse to fine");
  tr_cmd->add_option("--model", tr.model_out, "Write the trained model checkpoint");
  tr_cmd->add_option("--history", tr.history_out, "Write per-epoch loss/accuracy CSV");
  add_train_options(tr_cmd, tr.train, {64});
  add_out(tr_cmd);
  tr_cmd->callback([&] { action = [&] { return run_train(g, tr); }; });

  // synth
  SynthArgs sy;
  CLI::App* synth = app.add_subcommand("synth", "Synthetic benchmark corpora");
  synth->require_subcommand(1);
  CLI::App* gen = synth->add_subcommand("generate", "Generate manifests, feature stores and truth tables");
  gen->add_option("--spec", sy.spec, "Synthetic spec JSON (default: built-in spec)")->check(CLI::ExistingFile);
  gen->add_option("--out-dir", sy.out_dir, "Output directory; relative to $EMOBIAS_OUT_DIR if set")
      ->capture_default_str();
  gen->add_option("--bias-emotion", sy.bias_emotion, "Inject a negative set bias for this emotion");
  gen->add_option("--bias-concept", sy.bias_concept, "Concept missing from the negative set");
  gen->add_option("--bias-dataset", sy.bias_dataset, "Index of the biased dataset")->capture_default_str();
  add_out(gen);
  gen->callback([&] { action = [&] { return run_synth(g, sy); }; });

  // corpus
  CorpusArgs co;
  std::string corpus_action;
  CLI::App* corpus = app.add_subcommand("corpus", "Manifest utilities");
  corpus->require_subcommand(1);
  CLI::App* dedup = corpus->add_subcommand("dedup", "Drop duplicate records by caption and top-5 tags");
  CLI::App* split = corpus->add_subcommand("split", "Stratified train/test split tags");
  CLI::App* stats = corpus->add_subcommand("stats", "Manifest statistics");
  for (CLI::App* sub : {dedup, split, stats}) {
    sub->add_option("--manifest", co.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
    add_out(sub);
    const std::string name = sub->get_name();
    sub->callback([&, name] {
      corpus_action = name;
      action = [&] { return run_corpus(g, corpus_action, co); };
    });
  }
  dedup->add_option("--output", co.output, "Deduplicated manifest");
  dedup->add_flag("--filter-tags", co.filter_tags, "Drop tags outside basic Latin first");
  split->add_option("--output", co.output, "Manifest with split tags");
  split->add_option("--fraction", co.fraction, "Train share per class")->capture_default_str();
  split->add_option("--level", co.level, "Stratification level (default: native level)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    const CLI::App* sub = deepest(&app);
    if (sub != &app) err << sub->help();
    return kUsageError;
  }
  if (!action) {
    err << app.help();
    return kUsageError;
  }

  try {
    const Outcome o = action();
    out << render_report(o.report, parse_format(g.format));
    fs::path report_path;
    if (!out_path.empty()) {
      report_path = resolve_out(out_path);
    } else if (const char* dir = std::getenv(kOutDirEnv); dir != nullptr && *dir != '\0') {
      report_path = fs::path(dir) / (o.report.kind + ".json");
    }
    if (!report_path.empty()) {
      const ReportFormat f = report_path.extension() == ".csv" ? ReportFormat::kCsv : ReportFormat::kJson;
      write_text(report_path, render_report(o.report, f));
    }
    for (const auto& [path, text] : o.files) write_text(path, text);
  } catch (const InvalidConfig& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const UnsupportedFormat& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

}  // namespace emobias::cli
