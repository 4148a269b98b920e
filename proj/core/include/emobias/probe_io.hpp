#pragma once

#include <filesystem>
#include <iosfwd>

#include "emobias/probe.hpp"

namespace emobias {

// Checkpoint layout: 8-byte magic "EMBPROBE", u32 format version, u64 header
// length, JSON header (shapes, label spaces, seed lineage), then every
// parameter as little-endian f64 in tensor order (hidden W, b ..., head W, b ...).
void save_model(const ProbeModel& model, std::ostream& out);
void save_model(const ProbeModel& model, const std::filesystem::path& path);
ProbeModel load_model(std::istream& in);
ProbeModel load_model(const std::filesystem::path& path);

// CSV with columns epoch,loss,accuracy.
void write_history_csv(const History& history, std::ostream& out);

}  // namespace emobias
