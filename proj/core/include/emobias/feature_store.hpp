#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emobias/corpus.hpp"

namespace emobias {

// n x d row-major matrix of 32-bit features keyed by feature id.
class FeatureStore {
 public:
  // Throws DimMismatch on shape errors, DuplicateId on repeated ids and Error
  // on non-finite values.
  FeatureStore(std::size_t dim, std::vector<std::string> ids, std::vector<float> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<float>& values() const noexcept { return values_; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::optional<std::size_t> find(std::string_view id) const;

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// On-disk layout: a JSON header {n, d, dtype: "f32", layout: "row-major",
// ids: [...], payload: "<file>"} next to a raw little-endian f32 payload.
// write_feature_store(fs, "x.json") writes x.json and x.f32.
void write_feature_store(const FeatureStore& fs, const std::filesystem::path& header_path);

// Reads either a header (.json) or a CSV file (id column followed by d value
// columns, optional header row).
FeatureStore load_feature_store(const std::filesystem::path& path);
FeatureStore read_feature_csv(const std::filesystem::path& path);

// Records of one dataset paired with their feature rows. The store is shared,
// never copied.
class CorpusView {
 public:
  CorpusView() = default;
  CorpusView(std::string dataset_id, std::shared_ptr<const FeatureStore> store,
             std::vector<SampleRecord> records, std::vector<std::size_t> rows);

  const std::string& dataset_id() const noexcept { return dataset_id_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t dim() const noexcept { return store_ ? store_->dim() : 0; }

  const SampleRecord& record(std::size_t i) const { return records_[i]; }
  const std::vector<SampleRecord>& records() const noexcept { return records_; }
  std::span<const float> features(std::size_t i) const { return store_->row(rows_[i]); }
  const std::shared_ptr<const FeatureStore>& store() const noexcept { return store_; }

  CorpusView subset(std::span<const std::size_t> indices) const;
  // Same rows with replaced records (e.g. relabeled with ground truth).
  CorpusView with_records(std::vector<SampleRecord> records) const;
  // Records whose split tag matches.
  CorpusView by_split(Split split) const;

 private:
  std::string dataset_id_;
  std::shared_ptr<const FeatureStore> store_;
  std::vector<SampleRecord> records_;
  std::vector<std::size_t> rows_;
};

// Throws MissingFeature listing every record whose feature_id is absent.
CorpusView align(const DatasetManifest& m, std::shared_ptr<const FeatureStore> store);

// Feature rows of a view, for handing to the probe.
std::vector<std::span<const float>> feature_rows(const CorpusView& view);

}  // namespace emobias
