#include "emobias/feature_store.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emobias/error.hpp"

namespace emobias {

FeatureStore::FeatureStore(std::size_t dim, std::vector<std::string> ids,
                           std::vector<float> values)
    : dim_(dim), ids_(std::move(ids)), values_(std::move(values)) {
  if (dim_ == 0) throw DimMismatch("feature dimension must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw DimMismatch("feature payload holds " + std::to_string(values_.size()) +
                      " values, expected " + std::to_string(ids_.size()) + " x " +
                      std::to_string(dim_));
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) throw DuplicateId(ids_[i]);
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error("non-finite feature value for id '" + ids_[i / dim_] + "'");
    }
  }
}

std::optional<std::size_t> FeatureStore::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::filesystem::path payload_path_for(const std::filesystem::path& header_path) {
  auto p = header_path;
  p.replace_extension(".f32");
  return p;
}

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) | (v >> 24);
  }
  return v;
}

}  // namespace

void write_feature_store(const FeatureStore& fs, const std::filesystem::path& header_path) {
  const auto payload = payload_path_for(header_path);
  nlohmann::json header;
  header["n"] = fs.size();
  header["d"] = fs.dim();
  header["dtype"] = "f32";
  header["layout"] = "row-major";
  header["ids"] = fs.ids();
  header["payload"] = payload.filename().string();
  {
    std::ofstream out(header_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + header_path.string());
    out << header.dump(2) << '\n';
  }
  std::ofstream out(payload, std::ios::binary);
  if (!out) throw IoError("cannot write " + payload.string());
  std::vector<std::uint32_t> words(fs.values().size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    words[i] = to_little_endian(std::bit_cast<std::uint32_t>(fs.values()[i]));
  }
  out.write(reinterpret_cast<const char*>(words.data()),
            static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  if (!out) throw IoError("short write to " + payload.string());
}

namespace {

FeatureStore read_binary_store(const std::filesystem::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw IoError("cannot open feature header " + header_path.string());
  nlohmann::json header;
  try {
    in >> header;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(header_path.string(), 1, e.what());
  }
  std::size_t n = 0, d = 0;
  std::vector<std::string> ids;
  std::filesystem::path payload;
  try {
    n = header.at("n").get<std::size_t>();
    d = header.at("d").get<std::size_t>();
    ids = header.at("ids").get<std::vector<std::string>>();
    if (header.value("dtype", std::string("f32")) != "f32") {
      throw DimMismatch("unsupported dtype in " + header_path.string());
    }
    if (header.value("layout", std::string("row-major")) != "row-major") {
      throw DimMismatch("unsupported layout in " + header_path.string());
    }
    payload = header.contains("payload")
                  ? header_path.parent_path() / header.at("payload").get<std::string>()
                  : payload_path_for(header_path);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(header_path.string(), 1, e.what());
  }
  if (ids.size() != n) {
    throw DimMismatch("header lists " + std::to_string(ids.size()) + " ids but n = " +
                      std::to_string(n));
  }
  std::ifstream bin(payload, std::ios::binary | std::ios::ate);
  if (!bin) throw IoError("cannot open feature payload " + payload.string());
  const auto bytes = static_cast<std::size_t>(bin.tellg());
  if (bytes != n * d * sizeof(float)) {
    throw DimMismatch("payload " + payload.string() + " has " + std::to_string(bytes) +
                      " bytes, expected " + std::to_string(n * d * sizeof(float)));
  }
  bin.seekg(0);
  std::vector<std::uint32_t> words(n * d);
  bin.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
  std::vector<float> values(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    values[i] = std::bit_cast<float>(to_little_endian(words[i]));
  }
  return FeatureStore(d, std::move(ids), std::move(values));
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_float(std::string_view s, float& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

FeatureStore read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature CSV " + path.string());
  std::vector<std::string> ids;
  std::vector<float> values;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (fields.size() < 2) throw ParseError(path.string(), line_no, "expected id and values");
    std::vector<float> row(fields.size() - 1);
    bool numeric = true;
    for (std::size_t i = 1; i < fields.size() && numeric; ++i) {
      numeric = parse_float(fields[i], row[i - 1]);
    }
    if (!numeric) {
      if (ids.empty() && dim == 0) {
        dim = fields.size() - 1;  // header row
        continue;
      }
      throw ParseError(path.string(), line_no, "non-numeric feature value");
    }
    if (dim == 0) dim = row.size();
    if (row.size() != dim) {
      throw DimMismatch(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(dim) + " values, found " + std::to_string(row.size()));
    }
    for (float v : row) {
      if (!std::isfinite(v)) throw ParseError(path.string(), line_no, "non-finite feature value");
    }
    ids.emplace_back(fields[0]);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (dim == 0) throw DimMismatch(path.string() + ": no feature rows");
  return FeatureStore(dim, std::move(ids), std::move(values));
}

FeatureStore load_feature_store(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".csv") return read_feature_csv(path);
  if (ext == ".json") return read_binary_store(path);
  // Bare prefix: look for the header next to it.
  auto header = path;
  header += ".json";
  return read_binary_store(header);
}

CorpusView::CorpusView(std::string dataset_id, std::shared_ptr<const FeatureStore> store,
                       std::vector<SampleRecord> records, std::vector<std::size_t> rows)
    : dataset_id_(std::move(dataset_id)),
      store_(std::move(store)),
      records_(std::move(records)),
      rows_(std::move(rows)) {
  if (records_.size() != rows_.size()) throw DimMismatch("view records and rows differ in size");
  if (!store_ && !records_.empty()) throw DimMismatch("view has records but no feature store");
}

CorpusView CorpusView::subset(std::span<const std::size_t> indices) const {
  std::vector<SampleRecord> records;
  std::vector<std::size_t> rows;
  records.reserve(indices.size());
  rows.reserve(indices.size());
  for (std::size_t i : indices) {
    records.push_back(records_.at(i));
    rows.push_back(rows_[i]);
  }
  return CorpusView(dataset_id_, store_, std::move(records), std::move(rows));
}

CorpusView CorpusView::with_records(std::vector<SampleRecord> records) const {
  return CorpusView(dataset_id_, store_, std::move(records), rows_);
}

CorpusView CorpusView::by_split(Split split) const {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].split == split) keep.push_back(i);
  }
  return subset(keep);
}

CorpusView align(const DatasetManifest& m, std::shared_ptr<const FeatureStore> store) {
  if (!store) throw DimMismatch("no feature store");
  std::vector<std::size_t> rows;
  std::vector<std::string> missing;
  rows.reserve(m.records.size());
  for (const auto& r : m.records) {
    auto row = store->find(r.feature_id);
    if (!row) {
      missing.push_back(r.feature_id);
      continue;
    }
    rows.push_back(*row);
  }
  if (!missing.empty()) throw MissingFeature(std::move(missing));
  return CorpusView(m.dataset_id, std::move(store), m.records, std::move(rows));
}

std::vector<std::span<const float>> feature_rows(const CorpusView& view) {
  std::vector<std::span<const float>> rows;
  rows.reserve(view.size());
  for (std::size_t i = 0; i < view.size(); ++i) rows.push_back(view.features(i));
  return rows;
}

}  // namespace emobias
