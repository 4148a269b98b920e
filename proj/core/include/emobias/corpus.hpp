#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emobias/hierarchy.hpp"

namespace emobias {

enum class Split { kTrain, kTest };

std::string_view to_string(Split split);

// Externally predicted concept categories, most confident first.
struct Concepts {
  std::vector<std::string> objects;
  std::vector<std::string> scenes;
};

enum class ConceptKind { kObjects, kScenes };

std::string_view to_string(ConceptKind kind);
ConceptKind parse_concept_kind(std::string_view s);

struct SampleRecord {
  std::string id;
  std::string dataset_id;
  // Weak labels keyed by hierarchy level; at least one present.
  std::map<int, std::string> labels;
  std::optional<std::string> caption;
  // Source order is preserved; dedup keys on the first five.
  std::vector<std::string> tags;
  std::optional<Concepts> concepts;
  std::optional<Split> split;
  std::string feature_id;
};

struct DatasetManifest {
  std::string dataset_id;
  std::vector<SampleRecord> records;
  std::string provenance;
};

// Index into h.labels(level) of the record's label, derived from the finest
// label it carries at or below `level`. nullopt if it only has coarser labels.
std::optional<std::size_t> label_index_at(const SampleRecord& record, const EmotionHierarchy& h,
                                          int level);
// Throws MissingLabel.
std::size_t require_label_index(const SampleRecord& record, const EmotionHierarchy& h, int level);

// Finest level at which every record has a label (0 for an empty manifest).
int native_level(const std::vector<SampleRecord>& records, const EmotionHierarchy& h);

SampleRecord record_from_json(const nlohmann::json& j, const EmotionHierarchy& h);
nlohmann::json record_to_json(const SampleRecord& record);

// JSON Lines, one SampleRecord per line. Unknown fields are ignored.
DatasetManifest parse_manifest(std::istream& in, const EmotionHierarchy& h,
                               const std::string& source = "<stream>");
DatasetManifest load_manifest(const std::filesystem::path& path, const EmotionHierarchy& h);
void write_manifest(const DatasetManifest& m, std::ostream& out);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

// Normalized caption plus the first five lowercased tags. nullopt when the
// record has neither caption nor tags.
std::optional<std::string> dedup_key(const SampleRecord& record);
// Keeps the first record of every duplicate group, in input order.
DatasetManifest dedup_by_metadata(const DatasetManifest& m);

using TagPredicate = std::function<bool(std::string_view)>;
// True when the tag holds only ASCII letters, digits, hyphens and spaces.
bool is_basic_latin_tag(std::string_view tag);
// Drops records with any tag failing `accept`.
DatasetManifest filter_non_english_tags(const DatasetManifest& m,
                                        const TagPredicate& accept = is_basic_latin_tag);

struct ManifestSplit {
  DatasetManifest train;
  DatasetManifest test;
};

// Per class at `level`, round(train_fraction * n_class) records go to train.
// Output keeps input order and tags each record with its split.
ManifestSplit stratified_split(const DatasetManifest& m, const EmotionHierarchy& h,
                               double train_fraction, int level, std::uint64_t seed);

// Partitions by existing split tags; untagged records are dropped.
ManifestSplit partition_by_split_tag(const DatasetManifest& m);

// Exactly counts[c] records of every requested class c (at `level`), chosen
// uniformly without replacement; output keeps input order.
DatasetManifest sample_per_class(const DatasetManifest& m, const EmotionHierarchy& h,
                                 const std::map<std::string, std::size_t>& counts, int level,
                                 std::uint64_t seed);

struct ManifestStats {
  std::size_t records = 0;
  std::size_t with_caption = 0;
  std::size_t with_tags = 0;
  std::size_t with_concepts = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  int native_level = 0;
  // per level: class name -> count (classes at levels finer than a record's
  // labels are not counted for that record)
  std::map<int, std::map<std::string, std::size_t>> class_counts;
};

ManifestStats compute_stats(const DatasetManifest& m, const EmotionHierarchy& h);

}  // namespace emobias
