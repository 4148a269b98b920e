#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace emobias {

// A label name together with the hierarchy level (1 = coarsest) it lives on.
struct Label {
  std::string name;
  int level = 0;

  friend bool operator==(const Label&, const Label&) = default;
};

// Multi-level label taxonomy with a total child->parent map between adjacent
// levels. Levels are 1-based: level 1 is the coarsest label space.
//
// Construction never throws on structural problems so that malformed
// taxonomies can be inspected with validate_hierarchy(); mapping through a
// broken parent link throws InvalidHierarchy instead. Instances are immutable.
class EmotionHierarchy {
 public:
  EmotionHierarchy(std::string version, std::vector<std::vector<std::string>> levels,
                   std::map<std::string, std::string> parents, std::string notes = {});

  const std::string& version() const noexcept { return version_; }
  const std::string& notes() const noexcept { return notes_; }
  int depth() const noexcept { return static_cast<int>(levels_.size()); }

  const std::vector<std::string>& labels(int level) const;
  std::size_t size(int level) const { return labels(level).size(); }
  const std::vector<std::vector<std::string>>& levels() const noexcept { return levels_; }
  const std::map<std::string, std::string>& parents() const noexcept { return parents_; }

  bool contains(const Label& label) const;
  // Finest level holding `name`, if any.
  std::optional<int> level_of(std::string_view name) const;
  std::optional<std::size_t> index_of(int level, std::string_view name) const;
  // Same as index_of but throws UnknownLabel.
  std::size_t require_index(int level, std::string_view name) const;

  // Ancestor of class `index` at `level`, expressed as an index into
  // labels(target_level). Identity when target_level == level.
  std::size_t map_index(int level, std::size_t index, int target_level) const;
  // ancestor index at target_level for every class at `level`.
  std::vector<std::size_t> projection(int level, int target_level) const;

 private:
  void check_level(int level) const;

  std::string version_;
  std::string notes_;
  std::vector<std::vector<std::string>> levels_;
  std::map<std::string, std::string> parents_;
  std::vector<std::unordered_map<std::string, std::size_t>> index_;
  // parent_index_[k][i]: parent of labels(k + 1)[i] as an index into labels(k),
  // or -1 when unresolved. parent_index_[0] is empty.
  std::vector<std::vector<std::ptrdiff_t>> parent_index_;
};

// Parrott's three-level tree: 2 primary, 6 secondary and 25 fine-grained
// emotion categories.
EmotionHierarchy build_parrott_hierarchy();

// Unique ancestor of `label` at `target_level`.
// Throws UnknownLabel if the label is not in `h` and InvalidDirection if
// target_level is finer than the label (or below 1).
Label map_label(const EmotionHierarchy& h, const Label& label, int target_level);

enum class IssueKind {
  kLevelCount,
  kLevelSize,
  kBadName,
  kDuplicateName,
  kMissingParent,
  kUnknownParent,
  kParentLevel,
  kStrayParent,
};

std::string_view to_string(IssueKind kind);

struct ValidationIssue {
  IssueKind kind;
  std::string label;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const noexcept { return issues.empty(); }
  std::size_t count(IssueKind kind) const;
};

struct ValidationOptions {
  // Enforce the 3-level 2/6/25 shape with positive/negative at level 1.
  // Disable to audit alternative emotion wheels.
  bool require_parrott_shape = true;
};

ValidationReport validate_hierarchy(const EmotionHierarchy& h, const ValidationOptions& options = {});

// Taxonomy file: {"version": ..., "levels": [[...], ...], "parents": {child: parent}}
// plus an optional free-text "notes" field.
EmotionHierarchy hierarchy_from_json(const nlohmann::json& j);
nlohmann::json hierarchy_to_json(const EmotionHierarchy& h);

// Loads and validates; throws InvalidHierarchy listing every issue.
EmotionHierarchy load_hierarchy(const std::filesystem::path& path,
                                const ValidationOptions& options = {});
void save_hierarchy(const EmotionHierarchy& h, const std::filesystem::path& path);

}  // namespace emobias
