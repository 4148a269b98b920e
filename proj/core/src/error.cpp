#include "emobias/error.hpp"

#include <utility>

namespace emobias {

InvalidDirection::InvalidDirection(int from_level, int to_level)
    : Error("cannot map a level-" + std::to_string(from_level) + " label down to level " +
            std::to_string(to_level)) {}

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

MissingLabel::MissingLabel(const std::string& record_id, int level)
    : Error("record '" + record_id + "' has no label at level " + std::to_string(level)) {}

InsufficientSamples::InsufficientSamples(const std::string& cls, std::size_t requested,
                                         std::size_t available)
    : Error("class '" + cls + "' has " + std::to_string(available) + " samples, " +
            std::to_string(requested) + " requested"),
      class_(cls),
      requested_(requested),
      available_(available) {}

namespace {
std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  const std::size_t shown = ids.size() < 10 ? ids.size() : 10;
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (shown < ids.size()) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}
}  // namespace

MissingFeature::MissingFeature(std::vector<std::string> ids)
    : Error("feature store lacks ids: " + join_ids(ids)), ids_(std::move(ids)) {}

NonFiniteLoss::NonFiniteLoss(int epoch, std::size_t batch)
    : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
            std::to_string(batch)),
      epoch_(epoch),
      batch_(batch) {}

}  // namespace emobias
