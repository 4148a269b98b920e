#include "emobias/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "emobias/error.hpp"

namespace emobias {

ReportFormat parse_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "table") return ReportFormat::kTable;
  throw UnsupportedFormat(std::string(name));
}

std::string_view to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: return "json";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kTable: return "table";
  }
  return "json";
}

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  std::string s(buf);
  // Avoid "-0.00".
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_csv(const Table& table) {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_field(cells[i]);
    out << '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
  return out.str();
}

std::string render_table(const Table& table) {
  std::vector<std::size_t> width(table.header.size(), 0);
  auto widen = [&](const std::vector<std::string>& cells) {
    if (cells.size() > width.size()) width.resize(cells.size(), 0);
    for (std::size_t i = 0; i < cells.size(); ++i) width[i] = std::max(width[i], cells[i].size());
  };
  widen(table.header);
  for (const auto& row : table.rows) widen(row);

  std::ostringstream out;
  if (!table.title.empty()) out << table.title << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < cells.size() ? cells[i] : "";
      if (i) s += "  ";
      s += cell + std::string(width[i] - cell.size(), ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out << s << '\n';
  };
  line(table.header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
  for (const auto& row : table.rows) line(row);
  return out.str();
}

std::string render_report(const Report& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: {
      nlohmann::json j{{"kind", report.kind}, {"config", report.config}, {"results", report.results}};
      return j.dump(2) + "\n";
    }
    case ReportFormat::kCsv:
      return render_csv(report.csv);
    case ReportFormat::kTable: {
      std::string out;
      for (std::size_t i = 0; i < report.tables.size(); ++i) {
        if (i) out += '\n';
        out += render_table(report.tables[i]);
      }
      return out;
    }
  }
  throw UnsupportedFormat("unknown");
}

Report drop_report(double self_acc, const std::vector<double>& others, nlohmann::json config) {
  Report r;
  r.kind = "drop";
  r.config = std::move(config);
  const double drop = percent_drop(self_acc, others);
  double mean = 0.0;
  for (double o : others) mean += o;
  mean /= static_cast<double>(others.size());
  r.results = {{"self", self_acc}, {"others", others}, {"mean_others", mean}, {"percent_drop", drop}};
  r.tables.push_back({"", {"Self", "Mean Others", "% Drop"},
                      {{format_fixed(self_acc), format_fixed(mean), format_fixed(drop)}}});
  r.csv = {"", {"self", "mean_others", "percent_drop"},
           {{format_fixed(self_acc, 4), format_fixed(mean, 4), format_fixed(drop, 4)}}};
  return r;
}

Report cross_gen_report(const CrossGenMatrix& m, nlohmann::json config) {
  Report r;
  r.kind = "cross-gen";
  r.config = std::move(config);
  nlohmann::json rows = nlohmann::json::array();
  Table t{"Binary cross-dataset generalization (rows: train, columns: test; [x] = Self)", {"Train \\ Test"}, {}};
  for (const auto& id : m.datasets) t.header.push_back(id);
  t.header.insert(t.header.end(), {"Self", "Mean Others", "% Drop"});
  r.csv.header = {"train", "test", "accuracy", "self"};
  for (std::size_t a = 0; a < m.size(); ++a) {
    const auto mean = m.mean_others(a);
    const auto drop = m.percent_drop(a);
    nlohmann::json row{{"train", m.datasets[a]},
                       {"level", m.levels.empty() ? 0 : m.levels[a]},
                       {"accuracy", m.acc[a]},
                       {"self", m.self(a)},
                       {"mean_others", mean ? nlohmann::json(*mean) : nlohmann::json(nullptr)},
                       {"percent_drop", drop ? nlohmann::json(*drop) : nlohmann::json(nullptr)}};
    rows.push_back(row);
    std::vector<std::string> cells{m.datasets[a]};
    for (std::size_t b = 0; b < m.size(); ++b) {
      const std::string v = format_fixed(m.acc[a][b]);
      cells.push_back(a == b ? "[" + v + "]" : v);
      r.csv.rows.push_back({m.datasets[a], m.datasets[b], format_fixed(m.acc[a][b], 4), a == b ? "1" : "0"});
    }
    cells.push_back(format_fixed(m.self(a)));
    cells.push_back(mean ? format_fixed(*mean) : "-");
    cells.push_back(drop ? format_fixed(*drop) : "-");
    t.rows.push_back(std::move(cells));
  }
  r.results = {{"datasets", m.datasets}, {"rows", rows}};
  r.tables.push_back(std::move(t));
  return r;
}

Report name_dataset_report(const NameThatDatasetResult& res, const std::vector<std::string>& datasets,
                           nlohmann::json config) {
  Report r;
  r.kind = "name-dataset";
  r.config = std::move(config);
  nlohmann::json confusion = nlohmann::json::array();
  Table cm{"Confusion (rows: true dataset, columns: predicted)", {"True \\ Predicted"}, {}};
  for (const auto& id : datasets) cm.header.push_back(id);
  r.csv.header = {"true", "predicted", "count"};
  for (std::size_t i = 0; i < res.confusion.size(); ++i) {
    std::vector<std::uint64_t> row;
    std::vector<std::string> cells{datasets[i]};
    for (std::size_t j = 0; j < res.confusion.size(); ++j) {
      row.push_back(res.confusion.at(i, j));
      cells.push_back(std::to_string(res.confusion.at(i, j)));
      r.csv.rows.push_back({datasets[i], datasets[j], std::to_string(res.confusion.at(i, j))});
    }
    confusion.push_back(row);
    cm.rows.push_back(std::move(cells));
  }
  r.results = {{"datasets", datasets},
               {"accuracy", res.accuracy},
               {"chance", res.chance},
               {"n_train_per", res.n_train_per},
               {"n_test_per", res.n_test_per},
               {"confusion", confusion}};
  r.tables.push_back({"Name that dataset", {"Datasets", "Accuracy", "Chance"},
                      {{std::to_string(datasets.size()), format_fixed(res.accuracy), format_fixed(res.chance)}}});
  r.tables.push_back(std::move(cm));
  return r;
}

Report neg_bias_report(const NegBiasResult& res, nlohmann::json config) {
  Report r;
  r.kind = "neg-bias";
  r.config = std::move(config);
  r.results = {{"emotion", res.emotion},
               {"self", res.self_acc},
               {"others", res.others_acc},
               {"percent_drop", res.percent_drop},
               {"counts",
                {{"train_pos", res.counts.train_pos},
                 {"train_neg", res.counts.train_neg},
                 {"test_pos", res.counts.test_pos},
                 {"test_neg", res.counts.test_neg}}},
               {"others_negatives", res.others_negatives}};
  r.tables.push_back({"Negative set bias", {"Emotion", "Self", "Others", "% Drop"},
                      {{res.emotion, format_fixed(res.self_acc), format_fixed(res.others_acc),
                        format_fixed(res.percent_drop)}}});
  r.csv = {"", {"emotion", "self", "others", "percent_drop"},
           {{res.emotion, format_fixed(res.self_acc, 4), format_fixed(res.others_acc, 4),
             format_fixed(res.percent_drop, 4)}}};
  return r;
}

Table entropy_histogram_table(const EntropyHistogram& hist) {
  Table t{"Conditional entropy histogram", {"bin_low", "bin_high", "count"}, {}};
  t.rows.push_back({"0.0", "0.0", std::to_string(hist.zero_entropy)});
  for (std::size_t i = 0; i < EntropyHistogram::kBins; ++i) {
    t.rows.push_back({format_fixed(EntropyHistogram::bin_low(i), 1), format_fixed(EntropyHistogram::bin_high(i), 1),
                      std::to_string(hist.bins[i])});
  }
  return t;
}

Report entropy_report(const EntropyHistogram& hist, nlohmann::json config) {
  Report r;
  r.kind = "entropy";
  r.config = std::move(config);
  nlohmann::json records = nlohmann::json::array();
  r.csv.header = {"name", "count_pos", "count_neg", "entropy"};
  for (const auto& rec : hist.records) {
    records.push_back({{"name", rec.name}, {"count_pos", rec.count_pos}, {"count_neg", rec.count_neg},
                       {"entropy", rec.entropy}});
    r.csv.rows.push_back({rec.name, std::to_string(rec.count_pos), std::to_string(rec.count_neg),
                          format_fixed(rec.entropy, 6)});
  }
  nlohmann::json bins = nlohmann::json::array();
  for (std::size_t i = 0; i < EntropyHistogram::kBins; ++i) {
    bins.push_back({{"bin_low", EntropyHistogram::bin_low(i)},
                    {"bin_high", EntropyHistogram::bin_high(i)},
                    {"count", hist.bins[i]}});
  }
  r.results = {{"emotion", hist.emotion},
               {"kind", std::string(to_string(hist.kind))},
               {"positives", hist.positives},
               {"negatives", hist.negatives},
               {"categories", hist.total()},
               {"zero_entropy", hist.zero_entropy},
               {"zero_fraction", hist.zero_fraction()},
               {"histogram", bins},
               {"records", records}};
  r.tables.push_back({"Conditional entropy: " + hist.emotion + " / " + std::string(to_string(hist.kind)),
                      {"Categories", "Zero entropy", "Zero fraction"},
                      {{std::to_string(hist.total()), std::to_string(hist.zero_entropy),
                        format_fixed(hist.zero_fraction(), 3)}}});
  r.tables.push_back(entropy_histogram_table(hist));
  return r;
}

}  // namespace emobias
