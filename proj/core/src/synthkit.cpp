#include "emobias/synthkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "emobias/error.hpp"
#include "emobias/random.hpp"

namespace emobias {

namespace {

const std::vector<std::string>& object_names() {
  static const std::vector<std::string> names = {
      "balloon", "candy store", "parachute", "dog",    "cake",    "car",     "bicycle",
      "candle",  "gift",        "flower",    "clock",  "mask",    "boat",    "umbrella",
      "guitar",  "teddy bear",  "kite",      "bench",  "tractor", "lantern", "wreath",
      "syringe", "pistol",      "crutch",    "window", "mirror",  "coffin",  "trophy",
  };
  return names;
}

const std::vector<std::string>& scene_names() {
  static const std::vector<std::string> names = {
      "park",     "amusement park", "beach",    "cemetery",   "hospital room", "kitchen",
      "street",   "forest",         "stadium",  "church",     "playground",    "desert",
      "office",   "bedroom",        "highway",  "ballroom",   "alley",         "harbor",
      "library",  "junkyard",       "mountain", "classroom",  "ruins",         "market",
  };
  return names;
}

std::vector<std::string> make_vocabulary(const std::vector<std::string>& named, std::size_t n,
                                         const char* prefix) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < named.size()) {
      out.push_back(named[i]);
    } else {
      std::string idx = std::to_string(i);
      out.push_back(std::string(prefix) + "-" + std::string(3 - std::min<std::size_t>(3, idx.size()), '0') + idx);
    }
  }
  return out;
}

std::vector<double> random_direction(Rng& rng, std::size_t dim, double norm) {
  std::vector<double> v(dim);
  double s = 0.0;
  do {
    s = 0.0;
    for (double& x : v) {
      x = rng.normal();
      s += x * x;
    }
  } while (s == 0.0);
  const double scale = norm / std::sqrt(s);
  for (double& x : v) x *= scale;
  return v;
}

void add_to(std::vector<double>& acc, const std::vector<double>& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

}  // namespace

std::vector<std::string> concept_vocabulary(const SynthSpec& spec, ConceptKind kind) {
  return kind == ConceptKind::kObjects
             ? make_vocabulary(object_names(), spec.concepts.object_vocabulary, "object")
             : make_vocabulary(scene_names(), spec.concepts.scene_vocabulary, "scene");
}

void SynthSpec::validate(const EmotionHierarchy& h) const {
  if (dim == 0) throw InvalidSpec("dim must be positive");
  if (!(s1 > s2 && s2 > s3 && s3 >= 0.0)) throw InvalidSpec("separations must satisfy s1 > s2 > s3 >= 0");
  if (!(sigma > 0.0)) throw InvalidSpec("sigma must be positive");
  if (samples_per_leaf == 0) throw InvalidSpec("samples_per_leaf must be positive");
  if (!(label_noise >= 0.0 && label_noise < 1.0)) throw InvalidSpec("label_noise must lie in [0, 1)");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidSpec("test_fraction must lie in [0, 1)");
  }
  if (datasets.empty()) throw InvalidSpec("at least one dataset is required");
  std::set<std::string> ids;
  for (const auto& d : datasets) {
    if (d.id.empty() || !ids.insert(d.id).second) throw InvalidSpec("dataset ids must be unique");
    if (!d.shift.empty() && d.shift.size() != dim) {
      throw InvalidSpec("shift of dataset '" + d.id + "' must have " + std::to_string(dim) +
                        " entries");
    }
    if (d.shift_norm < 0.0) throw InvalidSpec("shift_norm must be non-negative");
  }
  const auto& c = concepts;
  const auto objects = concept_vocabulary(*this, ConceptKind::kObjects);
  const auto scenes = concept_vocabulary(*this, ConceptKind::kScenes);
  std::size_t shared_objects = 0, shared_scenes = 0;
  for (const auto& s : c.shared) {
    const bool is_object = std::find(objects.begin(), objects.end(), s) != objects.end();
    const bool is_scene = std::find(scenes.begin(), scenes.end(), s) != scenes.end();
    if (!is_object && !is_scene) throw InvalidSpec("shared concept '" + s + "' is not in the vocabulary");
    shared_objects += is_object;
    shared_scenes += is_scene;
  }
  if (c.per_leaf + shared_objects > c.object_vocabulary ||
      c.per_leaf + shared_scenes > c.scene_vocabulary) {
    throw InvalidSpec("per_leaf exceeds the non-shared vocabulary");
  }
  if (c.per_record > c.per_leaf) throw InvalidSpec("per_record exceeds per_leaf");
  if (!(c.shared_prevalence >= 0.0 && c.shared_prevalence <= 1.0)) {
    throw InvalidSpec("shared_prevalence must lie in [0, 1]");
  }
  if (!(c.signature_norm >= 0.0)) throw InvalidSpec("signature_norm must be non-negative");
  for (const auto& b : biases) {
    if (b.dataset >= datasets.size()) throw InvalidSpec("bias targets a missing dataset");
    if (!h.level_of(b.emotion)) throw InvalidSpec("bias emotion '" + b.emotion + "' is unknown");
    const bool known = std::find(objects.begin(), objects.end(), b.concept_name) != objects.end() ||
                       std::find(scenes.begin(), scenes.end(), b.concept_name) != scenes.end();
    if (!known) throw InvalidSpec("bias concept '" + b.concept_name + "' is unknown");
  }
  if (h.depth() < 1) throw InvalidSpec("hierarchy has no levels");
}

nlohmann::json synth_spec_to_json(const SynthSpec& s) {
  nlohmann::json j;
  j["dim"] = s.dim;
  j["s1"] = s.s1;
  j["s2"] = s.s2;
  j["s3"] = s.s3;
  j["sigma"] = s.sigma;
  j["samples_per_leaf"] = s.samples_per_leaf;
  j["label_noise"] = s.label_noise;
  j["test_fraction"] = s.test_fraction;
  j["datasets"] = nlohmann::json::array();
  for (const auto& d : s.datasets) {
    nlohmann::json dj{{"id", d.id}};
    if (!d.shift.empty()) dj["shift"] = d.shift;
    if (d.shift_norm != 0.0) dj["shift_norm"] = d.shift_norm;
    j["datasets"].push_back(dj);
  }
  const auto& c = s.concepts;
  j["concepts"] = {{"object_vocabulary", c.object_vocabulary},
                   {"scene_vocabulary", c.scene_vocabulary},
                   {"per_leaf", c.per_leaf},
                   {"per_record", c.per_record},
                   {"shared", c.shared},
                   {"shared_prevalence", c.shared_prevalence},
                   {"signature_norm", c.signature_norm}};
  j["biases"] = nlohmann::json::array();
  for (const auto& b : s.biases) {
    j["biases"].push_back({{"dataset", b.dataset}, {"emotion", b.emotion}, {"concept", b.concept_name}});
  }
  return j;
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    s.dim = j.value("dim", s.dim);
    s.s1 = j.value("s1", s.s1);
    s.s2 = j.value("s2", s.s2);
    s.s3 = j.value("s3", s.s3);
    s.sigma = j.value("sigma", s.sigma);
    s.samples_per_leaf = j.value("samples_per_leaf", s.samples_per_leaf);
    s.label_noise = j.value("label_noise", s.label_noise);
    s.test_fraction = j.value("test_fraction", s.test_fraction);
    if (j.contains("datasets")) {
      s.datasets.clear();
      for (const auto& dj : j.at("datasets")) {
        SynthDataset d;
        d.id = dj.at("id").get<std::string>();
        d.shift = dj.value("shift", std::vector<double>{});
        d.shift_norm = dj.value("shift_norm", 0.0);
        s.datasets.push_back(std::move(d));
      }
    }
    if (j.contains("concepts")) {
      const auto& cj = j.at("concepts");
      auto& c = s.concepts;
      c.object_vocabulary = cj.value("object_vocabulary", c.object_vocabulary);
      c.scene_vocabulary = cj.value("scene_vocabulary", c.scene_vocabulary);
      c.per_leaf = cj.value("per_leaf", c.per_leaf);
      c.per_record = cj.value("per_record", c.per_record);
      c.shared = cj.value("shared", c.shared);
      c.shared_prevalence = cj.value("shared_prevalence", c.shared_prevalence);
      c.signature_norm = cj.value("signature_norm", c.signature_norm);
    }
    if (j.contains("biases")) {
      for (const auto& bj : j.at("biases")) {
        s.biases.push_back({bj.value("dataset", std::size_t{0}), bj.at("emotion").get<std::string>(),
                            bj.at("concept").get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec(std::string("malformed synthetic spec: ") + e.what());
  }
  return s;
}

CorpusView SynthData::view() const { return align(manifest, features); }

CorpusView SynthData::truth_view() const {
  CorpusView v = view();
  std::vector<SampleRecord> records = v.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int finest = records[i].labels.rbegin()->first;
    records[i].labels = {{finest, truth[i]}};
  }
  return v.with_records(std::move(records));
}

namespace {

struct ConceptTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> signatures;
  std::vector<std::size_t> shared;                  // indices into names
  std::vector<std::vector<std::size_t>> leaf_vocab;  // per leaf
};

ConceptTable build_concepts(const SynthSpec& spec, ConceptKind kind, std::size_t leaves, Rng& rng) {
  ConceptTable t;
  t.names = concept_vocabulary(spec, kind);
  for (std::size_t i = 0; i < t.names.size(); ++i) {
    t.signatures.push_back(random_direction(rng, spec.dim, spec.concepts.signature_norm));
  }
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < t.names.size(); ++i) {
    const bool is_shared = std::find(spec.concepts.shared.begin(), spec.concepts.shared.end(),
                                     t.names[i]) != spec.concepts.shared.end();
    (is_shared ? t.shared : pool).push_back(i);
  }
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    std::vector<std::size_t> vocab;
    for (std::size_t j : rng.choose(pool.size(), spec.concepts.per_leaf)) vocab.push_back(pool[j]);
    t.leaf_vocab.push_back(std::move(vocab));
  }
  return t;
}

}  // namespace

SynthSuite generate_synthetic_suite(const SynthSpec& spec, const EmotionHierarchy& h,
                                    std::uint64_t seed) {
  spec.validate(h);
  const int depth = h.depth();
  const std::size_t leaves = h.size(depth);
  const std::size_t d = spec.dim;

  // Geometry and concept tables are shared by all datasets.
  Rng geo(derive_seed(seed, hash_name("geometry")));
  const double separations[] = {spec.s1, spec.s2, spec.s3};
  std::vector<std::vector<std::vector<double>>> offsets(static_cast<std::size_t>(depth));
  for (int level = 1; level <= depth; ++level) {
    const double sep = separations[std::min(level, 3) - 1];
    for (std::size_t c = 0; c < h.size(level); ++c) {
      offsets[static_cast<std::size_t>(level - 1)].push_back(
          random_direction(geo, d, sep / std::sqrt(2.0)));
    }
  }
  std::vector<std::vector<double>> leaf_means(leaves, std::vector<double>(d, 0.0));
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    for (int level = 1; level <= depth; ++level) {
      const std::size_t a = h.map_index(depth, leaf, level);
      add_to(leaf_means[leaf], offsets[static_cast<std::size_t>(level - 1)][a]);
    }
  }
  const ConceptTable objects = build_concepts(spec, ConceptKind::kObjects, leaves, geo);
  const ConceptTable scenes = build_concepts(spec, ConceptKind::kScenes, leaves, geo);

  SynthSuite suite;
  for (std::size_t di = 0; di < spec.datasets.size(); ++di) {
    const SynthDataset& ds = spec.datasets[di];
    Rng rng(derive_seed(seed, hash_name("dataset:" + ds.id)));
    std::vector<double> shift = ds.shift;
    if (shift.empty()) {
      shift.assign(d, 0.0);
      if (ds.shift_norm > 0.0) shift = random_direction(rng, d, ds.shift_norm);
    }

    // Biases that apply to this dataset: (ancestor level, ancestor index, concept name).
    struct Omit {
      int level;
      std::size_t emotion;
      std::string name;
    };
    std::vector<Omit> omits;
    for (const auto& b : spec.biases) {
      if (b.dataset != di) continue;
      const int level = *h.level_of(b.emotion);
      omits.push_back({level, h.require_index(level, b.emotion), b.concept_name});
    }
    auto omitted = [&](std::size_t leaf, const std::string& name) {
      for (const auto& o : omits) {
        if (o.name == name && h.map_index(depth, leaf, o.level) != o.emotion) return true;
      }
      return false;
    };

    const std::size_t n = leaves * spec.samples_per_leaf;
    std::vector<std::string> ids;
    std::vector<float> values;
    ids.reserve(n);
    values.reserve(n * d);
    SynthData data;
    data.manifest.dataset_id = ds.id;
    data.manifest.provenance = "synthkit seed=" + std::to_string(seed);

    // Per-leaf test membership.
    std::vector<bool> is_test(n, false);
    for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
      const auto n_test = static_cast<std::size_t>(
          std::llround(spec.test_fraction * static_cast<double>(spec.samples_per_leaf)));
      for (std::size_t j : rng.choose(spec.samples_per_leaf, n_test)) {
        is_test[leaf * spec.samples_per_leaf + j] = true;
      }
    }

    std::vector<double> x(d);
    for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
      for (std::size_t s = 0; s < spec.samples_per_leaf; ++s) {
        const std::size_t i = leaf * spec.samples_per_leaf + s;
        for (std::size_t k = 0; k < d; ++k) {
          x[k] = leaf_means[leaf][k] + shift[k] + spec.sigma * rng.normal();
        }
        Concepts concepts;
        auto draw = [&](const ConceptTable& t, std::vector<std::string>& out) {
          const auto& vocab = t.leaf_vocab[leaf];
          for (std::size_t j : rng.choose(vocab.size(), spec.concepts.per_record)) {
            const std::size_t c = vocab[j];
            if (omitted(leaf, t.names[c])) continue;
            out.push_back(t.names[c]);
            add_to(x, t.signatures[c]);
          }
          for (std::size_t c : t.shared) {
            const bool present = rng.uniform() < spec.concepts.shared_prevalence;
            if (!present || omitted(leaf, t.names[c])) continue;
            out.push_back(t.names[c]);
            add_to(x, t.signatures[c]);
          }
        };
        draw(objects, concepts.objects);
        draw(scenes, concepts.scenes);

        SampleRecord r;
        r.id = ds.id + "-" + std::to_string(i);
        r.dataset_id = ds.id;
        r.labels[depth] = h.labels(depth)[leaf];
        r.caption = "synthetic image " + r.id;
        r.tags = concepts.objects;
        r.tags.insert(r.tags.end(), concepts.scenes.begin(), concepts.scenes.end());
        r.concepts = std::move(concepts);
        r.split = is_test[i] ? Split::kTest : Split::kTrain;
        r.feature_id = r.id;
        ids.push_back(r.id);
        for (double v : x) values.push_back(static_cast<float>(v));
        data.truth.push_back(r.labels[depth]);
        data.manifest.records.push_back(std::move(r));
      }
    }

    // Exactly round(label_noise * n) weak labels move to a different leaf.
    if (leaves > 1) {
      const auto n_noisy = static_cast<std::size_t>(
          std::llround(spec.label_noise * static_cast<double>(n)));
      for (std::size_t i : rng.choose(n, n_noisy)) {
        const std::size_t leaf = i / spec.samples_per_leaf;
        std::size_t other = rng.below(leaves - 1);
        if (other >= leaf) ++other;
        data.manifest.records[i].labels[depth] = h.labels(depth)[other];
      }
    }
    data.features = std::make_shared<const FeatureStore>(d, std::move(ids), std::move(values));
    suite.datasets.push_back(std::move(data));
  }
  return suite;
}

SynthSpec inject_negative_set_bias(SynthSpec spec, const EmotionHierarchy& h,
                                   std::string_view emotion, std::string_view concept_name,
                                   std::size_t dataset) {
  if (!h.level_of(emotion)) throw UnknownLabel(std::string(emotion));
  const auto objects = concept_vocabulary(spec, ConceptKind::kObjects);
  const auto scenes = concept_vocabulary(spec, ConceptKind::kScenes);
  const std::string name(concept_name);
  if (std::find(objects.begin(), objects.end(), name) == objects.end() &&
      std::find(scenes.begin(), scenes.end(), name) == scenes.end()) {
    throw UnknownConcept(name);
  }
  if (dataset >= spec.datasets.size()) throw InvalidSpec("bias targets a missing dataset");
  spec.biases.push_back({dataset, std::string(emotion), name});
  return spec;
}

void write_suite(const SynthSuite& suite, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& data : suite.datasets) {
    const std::string& id = data.manifest.dataset_id;
    save_manifest(data.manifest, dir / (id + ".jsonl"));
    write_feature_store(*data.features, dir / (id + ".features.json"));
    std::ofstream truth(dir / (id + ".truth.jsonl"), std::ios::binary);
    if (!truth) throw IoError("cannot write truth table for " + id);
    for (std::size_t i = 0; i < data.truth.size(); ++i) {
      truth << nlohmann::json{{"id", data.manifest.records[i].id}, {"label", data.truth[i]}}.dump()
            << '\n';
    }
  }
}

}  // namespace emobias
