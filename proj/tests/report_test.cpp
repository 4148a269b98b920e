#include "emobias/report.hpp"

#include <gtest/gtest.h>

#include "emobias/error.hpp"

namespace emobias {
namespace {

TEST(Report, FormatParsing) {
  EXPECT_EQ(parse_format("json"), ReportFormat::kJson);
  EXPECT_EQ(parse_format("csv"), ReportFormat::kCsv);
  EXPECT_EQ(parse_format("table"), ReportFormat::kTable);
  EXPECT_EQ(to_string(ReportFormat::kCsv), "csv");
  EXPECT_THROW(parse_format("xml"), UnsupportedFormat);
}

TEST(Report, FormatFixed) {
  EXPECT_EQ(format_fixed(24.9847), "24.98");
  EXPECT_EQ(format_fixed(-0.001), "0.00");
  EXPECT_EQ(format_fixed(-2.19), "-2.19");
  EXPECT_EQ(format_fixed(0.5, 4), "0.5000");
}

TEST(Report, TableAlignment) {
  const Table t{"T", {"a", "bbb"}, {{"xx", "y"}}};
  EXPECT_EQ(render_table(t), "T\na   bbb\n-------\nxx  y\n");
}

TEST(Report, CsvQuoting) {
  const Table t{"", {"name", "v"}, {{"a,b", "1"}, {"say \"hi\"", "2"}}};
  EXPECT_EQ(render_csv(t), "name,v\n\"a,b\",1\n\"say \"\"hi\"\"\",2\n");
}

TEST(Report, DropReport) {
  const Report r = drop_report(78.74, {68.38, 49.76}, {{"seed", 7}});
  EXPECT_EQ(r.kind, "drop");
  EXPECT_NEAR(r.results["percent_drop"].get<double>(), 24.98, 0.01);
  const std::string table = render_report(r, ReportFormat::kTable);
  EXPECT_NE(table.find("24.98"), std::string::npos);
  EXPECT_NE(table.find("Mean Others"), std::string::npos);
  EXPECT_EQ(render_report(r, ReportFormat::kCsv).substr(0, 25), "self,mean_others,percent_");
}

TEST(Report, JsonIsStableAndTerminated) {
  const Report a = drop_report(90.0, {80.0}, {{"z", 1}, {"a", 2}});
  const Report b = drop_report(90.0, {80.0}, {{"a", 2}, {"z", 1}});
  const std::string ja = render_report(a, ReportFormat::kJson);
  EXPECT_EQ(ja, render_report(b, ReportFormat::kJson));
  EXPECT_EQ(ja.back(), '\n');
  const auto parsed = nlohmann::json::parse(ja);
  EXPECT_EQ(parsed["kind"], "drop");
  EXPECT_EQ(parsed["config"]["z"], 1);
}

TEST(Report, CrossGenMarksSelfCells) {
  const CrossGenMatrix m{{"a", "b"}, {{80.0, 60.0}, {50.0, 70.0}}, {3, 2}};
  const Report r = cross_gen_report(m, {});
  const std::string table = render_report(r, ReportFormat::kTable);
  EXPECT_NE(table.find("[80.00]"), std::string::npos);
  EXPECT_NE(table.find("[70.00]"), std::string::npos);
  EXPECT_NE(table.find("% Drop"), std::string::npos);
  EXPECT_NE(table.find("25.00"), std::string::npos);
  EXPECT_EQ(r.csv.rows.size(), 4u);
  EXPECT_EQ(r.results["rows"][1]["level"], 2);
}

TEST(Report, CrossGenSingleDatasetHasNoDrop) {
  const CrossGenMatrix m{{"a"}, {{80.0}}, {3}};
  const Report r = cross_gen_report(m, {});
  EXPECT_TRUE(r.results["rows"][0]["percent_drop"].is_null());
  EXPECT_NE(render_report(r, ReportFormat::kTable).find(" -"), std::string::npos);
}

TEST(Report, EmptyEntropyCsvIsHeaderOnly) {
  EntropyHistogram hist;
  hist.emotion = "joy";
  const Report r = entropy_report(hist, {});
  EXPECT_EQ(render_report(r, ReportFormat::kCsv), "name,count_pos,count_neg,entropy\n");
  const Table bins = entropy_histogram_table(hist);
  ASSERT_EQ(bins.rows.size(), 11u);
  EXPECT_EQ(bins.rows[0], (std::vector<std::string>{"0.0", "0.0", "0"}));
  EXPECT_EQ(bins.rows[10][1], "1.0");
}

TEST(Report, NegBiasAndNameDataset) {
  NegBiasResult nb;
  nb.emotion = "sadness";
  nb.self_acc = 90.64;
  nb.others_acc = 78.98;
  nb.percent_drop = percent_drop(90.64, {78.98});
  EXPECT_NE(render_report(neg_bias_report(nb, {}), ReportFormat::kTable).find("12.86"), std::string::npos);

  NameThatDatasetResult nd;
  nd.accuracy = 75.0;
  nd.chance = 50.0;
  nd.confusion = ConfusionMatrix({"a", "b"});
  nd.confusion.add(0, 0, 3);
  nd.confusion.add(1, 0);
  const Report r = name_dataset_report(nd, {"a", "b"}, {});
  EXPECT_EQ(r.csv.rows.size(), 4u);
  EXPECT_NE(render_report(r, ReportFormat::kTable).find("75.00"), std::string::npos);
}

}  // namespace
}  // namespace emobias
