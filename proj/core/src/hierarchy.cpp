#include "emobias/hierarchy.hpp"

#include <fstream>
#include <set>
#include <utility>

#include "emobias/error.hpp"

namespace emobias {

EmotionHierarchy::EmotionHierarchy(std::string version,
                                   std::vector<std::vector<std::string>> levels,
                                   std::map<std::string, std::string> parents, std::string notes)
    : version_(std::move(version)),
      notes_(std::move(notes)),
      levels_(std::move(levels)),
      parents_(std::move(parents)) {
  index_.resize(levels_.size());
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    for (std::size_t i = 0; i < levels_[k].size(); ++i) {
      index_[k].emplace(levels_[k][i], i);  // first occurrence wins
    }
  }
  parent_index_.resize(levels_.size());
  for (std::size_t k = 1; k < levels_.size(); ++k) {
    parent_index_[k].assign(levels_[k].size(), -1);
    for (std::size_t i = 0; i < levels_[k].size(); ++i) {
      auto p = parents_.find(levels_[k][i]);
      if (p == parents_.end()) continue;
      auto q = index_[k - 1].find(p->second);
      if (q != index_[k - 1].end()) parent_index_[k][i] = static_cast<std::ptrdiff_t>(q->second);
    }
  }
}

void EmotionHierarchy::check_level(int level) const {
  if (level < 1 || level > depth()) {
    throw InvalidHierarchy("level " + std::to_string(level) + " outside 1.." +
                           std::to_string(depth()));
  }
}

const std::vector<std::string>& EmotionHierarchy::labels(int level) const {
  check_level(level);
  return levels_[static_cast<std::size_t>(level - 1)];
}

bool EmotionHierarchy::contains(const Label& label) const {
  return index_of(label.level, label.name).has_value();
}

std::optional<int> EmotionHierarchy::level_of(std::string_view name) const {
  for (int k = depth(); k >= 1; --k) {
    if (index_of(k, name)) return k;
  }
  return std::nullopt;
}

std::optional<std::size_t> EmotionHierarchy::index_of(int level, std::string_view name) const {
  if (level < 1 || level > depth()) return std::nullopt;
  const auto& idx = index_[static_cast<std::size_t>(level - 1)];
  auto it = idx.find(std::string(name));
  if (it == idx.end()) return std::nullopt;
  return it->second;
}

std::size_t EmotionHierarchy::require_index(int level, std::string_view name) const {
  auto idx = index_of(level, name);
  if (!idx) throw UnknownLabel(std::string(name));
  return *idx;
}

std::size_t EmotionHierarchy::map_index(int level, std::size_t index, int target_level) const {
  check_level(level);
  if (target_level > level || target_level < 1) throw InvalidDirection(level, target_level);
  if (index >= levels_[static_cast<std::size_t>(level - 1)].size()) {
    throw UnknownLabel("#" + std::to_string(index) + "@" + std::to_string(level));
  }
  std::size_t cur = index;
  for (int k = level; k > target_level; --k) {
    const std::ptrdiff_t parent = parent_index_[static_cast<std::size_t>(k - 1)][cur];
    if (parent < 0) {
      throw InvalidHierarchy("label '" + levels_[static_cast<std::size_t>(k - 1)][cur] +
                             "' has no resolvable parent");
    }
    cur = static_cast<std::size_t>(parent);
  }
  return cur;
}

std::vector<std::size_t> EmotionHierarchy::projection(int level, int target_level) const {
  const std::size_t n = size(level);
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = map_index(level, i, target_level);
  return out;
}

namespace {

struct Group {
  const char* secondary;
  const char* primary;
  std::vector<std::string> fine;
};

const std::vector<Group>& parrott_groups() {
  static const std::vector<Group> groups = {
      {"anger", "negative", {"irritation", "exasperation", "rage", "disgust", "envy", "torment"}},
      {"fear", "negative", {"horror", "nervousness"}},
      {"joy",
       "positive",
       {"cheerfulness", "zest", "contentment", "pride", "optimism", "enthrallment", "relief"}},
      {"love", "positive", {"affection", "lust", "longing"}},
      {"sadness",
       "negative",
       {"suffering", "sorrow", "disappointment", "shame", "neglect", "sympathy"}},
      {"surprise", "positive", {"amazement"}},
  };
  return groups;
}

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (unsigned char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
                    c == ' ';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

EmotionHierarchy build_parrott_hierarchy() {
  std::vector<std::vector<std::string>> levels(3);
  std::map<std::string, std::string> parents;
  levels[0] = {"positive", "negative"};
  for (const auto& g : parrott_groups()) {
    levels[1].emplace_back(g.secondary);
    parents[g.secondary] = g.primary;
    for (const auto& f : g.fine) {
      levels[2].push_back(f);
      parents[f] = g.secondary;
    }
  }
  return EmotionHierarchy(
      "parrott-2-6-25/1", std::move(levels), std::move(parents),
      "Fine-grained roster follows Parrott's secondary emotions. The secondary emotions that "
      "share a name with their primary group (surprise, sadness) are listed as 'amazement' and "
      "'sorrow' so that names stay unique across levels.");
}

Label map_label(const EmotionHierarchy& h, const Label& label, int target_level) {
  auto idx = h.index_of(label.level, label.name);
  if (!idx) throw UnknownLabel(label.name);
  if (target_level > label.level || target_level < 1) {
    throw InvalidDirection(label.level, target_level);
  }
  const std::size_t up = h.map_index(label.level, *idx, target_level);
  return Label{h.labels(target_level)[up], target_level};
}

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::kLevelCount: return "level count";
    case IssueKind::kLevelSize: return "level size";
    case IssueKind::kBadName: return "bad name";
    case IssueKind::kDuplicateName: return "duplicate name";
    case IssueKind::kMissingParent: return "missing parent";
    case IssueKind::kUnknownParent: return "unknown parent";
    case IssueKind::kParentLevel: return "parent on wrong level";
    case IssueKind::kStrayParent: return "stray parent entry";
  }
  return "unknown";
}

std::size_t ValidationReport::count(IssueKind kind) const {
  std::size_t n = 0;
  for (const auto& i : issues) n += (i.kind == kind);
  return n;
}

ValidationReport validate_hierarchy(const EmotionHierarchy& h, const ValidationOptions& options) {
  ValidationReport report;
  auto add = [&](IssueKind kind, const std::string& label, std::string msg) {
    report.issues.push_back({kind, label, std::move(msg)});
  };

  const auto& levels = h.levels();
  if (levels.empty()) {
    add(IssueKind::kLevelCount, "", "hierarchy has no levels");
    return report;
  }
  if (options.require_parrott_shape) {
    static constexpr std::size_t kSizes[] = {2, 6, 25};
    if (levels.size() != 3) {
      add(IssueKind::kLevelCount, "",
          "expected 3 levels, found " + std::to_string(levels.size()));
    } else {
      for (std::size_t k = 0; k < 3; ++k) {
        if (levels[k].size() != kSizes[k]) {
          add(IssueKind::kLevelSize, "",
              "level " + std::to_string(k + 1) + " has " + std::to_string(levels[k].size()) +
                  " labels, expected " + std::to_string(kSizes[k]));
        }
      }
      const std::set<std::string> basic(levels[0].begin(), levels[0].end());
      if (basic != std::set<std::string>{"positive", "negative"}) {
        add(IssueKind::kLevelSize, "", "level 1 must be {positive, negative}");
      }
    }
  }
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k].empty()) {
      add(IssueKind::kLevelSize, "", "level " + std::to_string(k + 1) + " is empty");
    }
  }

  // Name checks.
  std::map<std::string, std::vector<int>> where;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    for (const auto& name : levels[k]) {
      if (!valid_name(name)) add(IssueKind::kBadName, name, "label names must be lowercase ASCII");
      where[name].push_back(static_cast<int>(k + 1));
    }
  }
  for (const auto& [name, lv] : where) {
    if (lv.size() > 1) {
      std::string at;
      for (std::size_t i = 0; i < lv.size(); ++i) at += (i ? "," : "") + std::to_string(lv[i]);
      add(IssueKind::kDuplicateName, name, "'" + name + "' appears at levels " + at);
    }
  }

  // Parent links. Names duplicated across levels are reported once above and
  // skipped here since a name-keyed parent map cannot disambiguate them.
  const auto& parents = h.parents();
  for (std::size_t k = 1; k < levels.size(); ++k) {
    std::set<std::string> previous(levels[k - 1].begin(), levels[k - 1].end());
    for (const auto& name : levels[k]) {
      if (where[name].size() > 1) continue;
      auto p = parents.find(name);
      if (p == parents.end()) {
        add(IssueKind::kMissingParent, name, "'" + name + "' has no parent");
        continue;
      }
      if (previous.count(p->second)) continue;
      if (where.count(p->second)) {
        add(IssueKind::kParentLevel, name,
            "parent '" + p->second + "' of '" + name + "' is not on level " + std::to_string(k));
      } else {
        add(IssueKind::kUnknownParent, name,
            "parent '" + p->second + "' of '" + name + "' is not a label");
      }
    }
  }
  for (const auto& [child, parent] : parents) {
    auto w = where.find(child);
    const bool below_top = w != where.end() && w->second.back() > 1;
    if (!below_top) {
      add(IssueKind::kStrayParent, child,
          "parent entry '" + child + "' -> '" + parent + "' does not name a non-root label");
    }
  }
  return report;
}

EmotionHierarchy hierarchy_from_json(const nlohmann::json& j) {
  try {
    std::string version = j.value("version", std::string("unversioned"));
    std::string notes = j.value("notes", std::string());
    auto levels = j.at("levels").get<std::vector<std::vector<std::string>>>();
    std::map<std::string, std::string> parents;
    if (j.contains("parents")) parents = j.at("parents").get<std::map<std::string, std::string>>();
    return EmotionHierarchy(std::move(version), std::move(levels), std::move(parents),
                            std::move(notes));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidHierarchy(std::string("malformed taxonomy: ") + e.what());
  }
}

nlohmann::json hierarchy_to_json(const EmotionHierarchy& h) {
  nlohmann::json j;
  j["version"] = h.version();
  if (!h.notes().empty()) j["notes"] = h.notes();
  j["levels"] = h.levels();
  j["parents"] = h.parents();
  return j;
}

EmotionHierarchy load_hierarchy(const std::filesystem::path& path,
                                const ValidationOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open taxonomy file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidHierarchy(path.string() + ": " + e.what());
  }
  EmotionHierarchy h = hierarchy_from_json(j);
  const ValidationReport report = validate_hierarchy(h, options);
  if (!report.ok()) {
    std::string msg = path.string() + ": invalid taxonomy";
    for (const auto& issue : report.issues) msg += "\n  " + issue.message;
    throw InvalidHierarchy(msg);
  }
  return h;
}

void save_hierarchy(const EmotionHierarchy& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << hierarchy_to_json(h).dump(2) << '\n';
}

}  // namespace emobias
