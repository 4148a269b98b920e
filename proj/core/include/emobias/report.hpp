#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emobias/biastests.hpp"
#include "emobias/entropy.hpp"

namespace emobias {

enum class ReportFormat { kJson, kCsv, kTable };

// Throws UnsupportedFormat.
ReportFormat parse_format(std::string_view name);
std::string_view to_string(ReportFormat format);

struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  std::string kind;
  // Full effective configuration, defaults and seed included.
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
  // Human-readable tables.
  std::vector<Table> tables;
  // Flat rows, one per measured cell.
  Table csv;
};

// JSON output is key-sorted and newline-terminated, so identical reports
// render to identical bytes.
std::string render_report(const Report& report, ReportFormat format);
std::string render_table(const Table& table);
std::string render_csv(const Table& table);

// Two-decimal fixed formatting.
std::string format_fixed(double value, int digits = 2);

Report drop_report(double self_acc, const std::vector<double>& others, nlohmann::json config);
Report cross_gen_report(const CrossGenMatrix& m, nlohmann::json config);
Report name_dataset_report(const NameThatDatasetResult& r, const std::vector<std::string>& datasets,
                           nlohmann::json config);
Report neg_bias_report(const NegBiasResult& r, nlohmann::json config);
Report entropy_report(const EntropyHistogram& hist, nlohmann::json config);

// (bin_low, bin_high, count) rows; the zero-entropy bucket comes first with
// bin_low = bin_high = 0.
Table entropy_histogram_table(const EntropyHistogram& hist);

}  // namespace emobias
