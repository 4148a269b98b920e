#include "emobias/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "emobias/error.hpp"
#include "emobias/random.hpp"

namespace emobias {

std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

std::string_view to_string(ConceptKind kind) {
  return kind == ConceptKind::kObjects ? "objects" : "scenes";
}

ConceptKind parse_concept_kind(std::string_view s) {
  if (s == "objects" || s == "object") return ConceptKind::kObjects;
  if (s == "scenes" || s == "scene") return ConceptKind::kScenes;
  throw InvalidConfig("concept kind must be 'objects' or 'scenes', got '" + std::string(s) + "'");
}

std::optional<std::size_t> label_index_at(const SampleRecord& record, const EmotionHierarchy& h,
                                          int level) {
  // Finest label at or below the requested granularity.
  for (auto it = record.labels.rbegin(); it != record.labels.rend(); ++it) {
    if (it->first < level) break;
    const std::size_t idx = h.require_index(it->first, it->second);
    return h.map_index(it->first, idx, level);
  }
  return std::nullopt;
}

std::size_t require_label_index(const SampleRecord& record, const EmotionHierarchy& h, int level) {
  auto idx = label_index_at(record, h, level);
  if (!idx) throw MissingLabel(record.id, level);
  return *idx;
}

int native_level(const std::vector<SampleRecord>& records, const EmotionHierarchy& h) {
  if (records.empty()) return 0;
  int level = h.depth();
  for (const auto& r : records) {
    const int finest = r.labels.empty() ? 0 : r.labels.rbegin()->first;
    level = std::min(level, finest);
  }
  return level;
}

namespace {

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

SampleRecord record_from_json(const nlohmann::json& j, const EmotionHierarchy& h) {
  if (!j.is_object()) throw Error("record must be a JSON object");
  SampleRecord r;
  r.id = j.at("id").get<std::string>();
  if (r.id.empty()) throw Error("record id must be non-empty");
  r.dataset_id = j.value("dataset_id", std::string());
  if (j.contains("labels")) {
    for (const auto& [key, value] : j.at("labels").items()) {
      int level = 0;
      try {
        level = std::stoi(key);
      } catch (const std::exception&) {
        throw Error("label level key '" + key + "' is not an integer");
      }
      r.labels[level] = value.get<std::string>();
    }
  }
  if (j.contains("label")) {
    const auto name = j.at("label").get<std::string>();
    auto level = h.level_of(name);
    if (!level) throw UnknownLabel(name);
    r.labels[*level] = name;
  }
  if (r.labels.empty()) throw Error("record '" + r.id + "' carries no label");
  for (const auto& [level, name] : r.labels) {
    if (!h.contains(Label{name, level})) throw UnknownLabel(name);
  }
  if (j.contains("caption") && !j.at("caption").is_null()) {
    r.caption = j.at("caption").get<std::string>();
  }
  r.tags = string_list(j, "tags");
  if (j.contains("concepts") && !j.at("concepts").is_null()) {
    const auto& c = j.at("concepts");
    r.concepts = Concepts{string_list(c, "objects"), string_list(c, "scenes")};
  }
  if (j.contains("split") && !j.at("split").is_null()) {
    const auto s = j.at("split").get<std::string>();
    if (s == "train") {
      r.split = Split::kTrain;
    } else if (s == "test") {
      r.split = Split::kTest;
    } else {
      throw Error("split must be 'train' or 'test', got '" + s + "'");
    }
  }
  r.feature_id = j.value("feature_id", r.id);
  return r;
}

nlohmann::json record_to_json(const SampleRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["dataset_id"] = r.dataset_id;
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [level, name] : r.labels) labels[std::to_string(level)] = name;
  j["labels"] = labels;
  if (r.caption) j["caption"] = *r.caption;
  if (!r.tags.empty()) j["tags"] = r.tags;
  if (r.concepts) j["concepts"] = {{"objects", r.concepts->objects}, {"scenes", r.concepts->scenes}};
  if (r.split) j["split"] = std::string(to_string(*r.split));
  if (r.feature_id != r.id) j["feature_id"] = r.feature_id;
  return j;
}

DatasetManifest parse_manifest(std::istream& in, const EmotionHierarchy& h,
                               const std::string& source) {
  DatasetManifest m;
  m.provenance = source;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SampleRecord r;
    try {
      r = record_from_json(nlohmann::json::parse(line), h);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const UnknownLabel&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, line_no, e.what());
    }
    if (!seen.insert(r.id).second) throw DuplicateId(r.id);
    if (m.records.empty() && m.dataset_id.empty()) m.dataset_id = r.dataset_id;
    if (r.dataset_id.empty()) r.dataset_id = m.dataset_id;
    if (r.dataset_id != m.dataset_id) {
      throw ParseError(source, line_no,
                       "dataset_id '" + r.dataset_id + "' differs from '" + m.dataset_id + "'");
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path, const EmotionHierarchy& h) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  DatasetManifest m = parse_manifest(in, h, path.string());
  if (m.dataset_id.empty()) {
    m.dataset_id = path.stem().string();
    for (auto& r : m.records) r.dataset_id = m.dataset_id;
  }
  return m;
}

void write_manifest(const DatasetManifest& m, std::ostream& out) {
  for (const auto& r : m.records) out << record_to_json(r).dump() << '\n';
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  write_manifest(m, out);
}

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string normalize_caption(std::string_view caption) {
  std::string out;
  bool pending_space = false;
  for (char c : caption) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (space) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return ascii_lower(out);
}

DatasetManifest with_records(const DatasetManifest& m, std::vector<SampleRecord> records) {
  DatasetManifest out;
  out.dataset_id = m.dataset_id;
  out.provenance = m.provenance;
  out.records = std::move(records);
  return out;
}

}  // namespace

std::optional<std::string> dedup_key(const SampleRecord& record) {
  if (!record.caption && record.tags.empty()) return std::nullopt;
  std::string key = record.caption ? normalize_caption(*record.caption) : std::string();
  const std::size_t n = std::min<std::size_t>(record.tags.size(), 5);
  for (std::size_t i = 0; i < n; ++i) {
    key.push_back('\x1f');
    key += ascii_lower(record.tags[i]);
  }
  return key;
}

DatasetManifest dedup_by_metadata(const DatasetManifest& m) {
  std::unordered_set<std::string> seen;
  std::vector<SampleRecord> kept;
  kept.reserve(m.records.size());
  for (const auto& r : m.records) {
    auto key = dedup_key(r);
    if (key && !seen.insert(*key).second) continue;
    kept.push_back(r);
  }
  return with_records(m, std::move(kept));
}

bool is_basic_latin_tag(std::string_view tag) {
  for (unsigned char c : tag) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == ' ';
    if (!ok) return false;
  }
  return true;
}

DatasetManifest filter_non_english_tags(const DatasetManifest& m, const TagPredicate& accept) {
  std::vector<SampleRecord> kept;
  for (const auto& r : m.records) {
    if (std::all_of(r.tags.begin(), r.tags.end(), accept)) kept.push_back(r);
  }
  return with_records(m, std::move(kept));
}

ManifestSplit stratified_split(const DatasetManifest& m, const EmotionHierarchy& h,
                               double train_fraction, int level, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidConfig("train fraction must lie in (0, 1)");
  }
  const std::size_t k = h.size(level);
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    by_class[require_label_index(m.records[i], h, level)].push_back(i);
  }
  std::vector<bool> is_train(m.records.size(), false);
  for (std::size_t c = 0; c < k; ++c) {
    auto& members = by_class[c];
    Rng rng(derive_seed(seed, c));
    rng.shuffle(members);
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < n_train; ++i) is_train[members[i]] = true;
  }
  ManifestSplit out{with_records(m, {}), with_records(m, {})};
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    SampleRecord r = m.records[i];
    r.split = is_train[i] ? Split::kTrain : Split::kTest;
    (is_train[i] ? out.train : out.test).records.push_back(std::move(r));
  }
  return out;
}

ManifestSplit partition_by_split_tag(const DatasetManifest& m) {
  ManifestSplit out{with_records(m, {}), with_records(m, {})};
  for (const auto& r : m.records) {
    if (!r.split) continue;
    (*r.split == Split::kTrain ? out.train : out.test).records.push_back(r);
  }
  return out;
}

DatasetManifest sample_per_class(const DatasetManifest& m, const EmotionHierarchy& h,
                                 const std::map<std::string, std::size_t>& counts, int level,
                                 std::uint64_t seed) {
  std::unordered_map<std::size_t, std::size_t> wanted;  // class index -> count
  for (const auto& [name, count] : counts) wanted[h.require_index(level, name)] = count;

  std::unordered_map<std::size_t, std::vector<std::size_t>> pools;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    auto idx = label_index_at(m.records[i], h, level);
    if (idx && wanted.count(*idx)) pools[*idx].push_back(i);
  }
  std::vector<bool> take(m.records.size(), false);
  for (const auto& [name, count] : counts) {
    const std::size_t cls = h.require_index(level, name);
    const auto& pool = pools[cls];
    if (count > pool.size()) throw InsufficientSamples(name, count, pool.size());
    Rng rng(derive_seed(seed, hash_name(name)));
    for (std::size_t j : rng.choose(pool.size(), count)) take[pool[j]] = true;
  }
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    if (take[i]) out.push_back(m.records[i]);
  }
  return with_records(m, std::move(out));
}

ManifestStats compute_stats(const DatasetManifest& m, const EmotionHierarchy& h) {
  ManifestStats s;
  s.records = m.records.size();
  s.native_level = native_level(m.records, h);
  for (const auto& r : m.records) {
    s.with_caption += r.caption.has_value();
    s.with_tags += !r.tags.empty();
    s.with_concepts += r.concepts.has_value();
    if (r.split) (*r.split == Split::kTrain ? s.train : s.test) += 1;
    for (int level = 1; level <= h.depth(); ++level) {
      if (auto idx = label_index_at(r, h, level)) ++s.class_counts[level][h.labels(level)[*idx]];
    }
  }
  return s;
}

}  // namespace emobias
