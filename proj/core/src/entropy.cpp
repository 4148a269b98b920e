#include "emobias/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "emobias/error.hpp"

namespace emobias {

double binary_entropy(std::uint64_t count_pos, std::uint64_t count_neg) {
  if (count_pos == 0 || count_neg == 0) return 0.0;
  const double n = static_cast<double>(count_pos) + static_cast<double>(count_neg);
  const double p = static_cast<double>(count_pos) / n;
  const double q = static_cast<double>(count_neg) / n;
  const double h = -(p * std::log2(p) + q * std::log2(q));
  return std::clamp(h, 0.0, 1.0);
}

double EntropyHistogram::zero_fraction() const {
  return records.empty() ? 0.0 : static_cast<double>(zero_entropy) / static_cast<double>(records.size());
}

namespace {

const std::vector<std::string>& concepts_of(const Concepts& c, ConceptKind kind) {
  return kind == ConceptKind::kObjects ? c.objects : c.scenes;
}

std::set<std::string> top_names(const std::map<std::string, std::uint64_t>& counts, std::size_t k) {
  std::vector<std::pair<std::string, std::uint64_t>> v(counts.begin(), counts.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<std::string> out;
  for (std::size_t i = 0; i < v.size() && i < k; ++i) out.insert(v[i].first);
  return out;
}

}  // namespace

EntropyHistogram conditional_entropy_analysis(std::span<const SampleRecord> records,
                                              const EmotionHierarchy& h, std::string_view emotion,
                                              ConceptKind kind, std::size_t top_k,
                                              std::uint64_t min_count) {
  const auto level = h.level_of(emotion);
  if (!level) throw UnknownLabel(std::string(emotion));
  const std::size_t target = h.require_index(*level, emotion);

  EntropyHistogram out;
  out.emotion = std::string(emotion);
  out.kind = kind;
  out.top_k = top_k;
  out.min_count = min_count;

  // A concept is counted once per record.
  std::map<std::string, std::uint64_t> pos, neg;
  bool any_annotation = false;
  for (const auto& r : records) {
    const auto idx = label_index_at(r, h, *level);
    if (!idx || !r.concepts) continue;
    any_annotation = true;
    const bool positive = *idx == target;
    ++(positive ? out.positives : out.negatives);
    std::set<std::string> seen(concepts_of(*r.concepts, kind).begin(),
                               concepts_of(*r.concepts, kind).end());
    for (const auto& c : seen) ++(positive ? pos : neg)[c];
  }
  if (!any_annotation) {
    throw NoConcepts("no records carry " + std::string(to_string(kind)) + " annotations");
  }

  std::set<std::string> candidates = top_names(pos, top_k);
  candidates.merge(top_names(neg, top_k));
  for (const auto& name : candidates) {
    EntropyRecord rec;
    rec.name = name;
    if (auto it = pos.find(name); it != pos.end()) rec.count_pos = it->second;
    if (auto it = neg.find(name); it != neg.end()) rec.count_neg = it->second;
    if (rec.count_pos + rec.count_neg < min_count) continue;
    rec.entropy = binary_entropy(rec.count_pos, rec.count_neg);
    out.records.push_back(std::move(rec));
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const EntropyRecord& a, const EntropyRecord& b) { return a.entropy < b.entropy; });
  for (const auto& rec : out.records) {
    if (rec.entropy == 0.0) ++out.zero_entropy;
    auto bin = static_cast<std::size_t>(rec.entropy * EntropyHistogram::kBins);
    ++out.bins[std::min(bin, EntropyHistogram::kBins - 1)];
  }
  return out;
}

EntropyHistogram conditional_entropy_analysis(const CorpusView& view, const EmotionHierarchy& h,
                                              std::string_view emotion, ConceptKind kind,
                                              std::size_t top_k, std::uint64_t min_count) {
  return conditional_entropy_analysis(std::span<const SampleRecord>(view.records()), h, emotion, kind,
                                      top_k, min_count);
}

}  // namespace emobias
