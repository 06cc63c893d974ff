#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <functional>

#include "spectemp/pipeline.hpp"

using namespace spectemp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("spectemp_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Io;
}

}  // namespace

TEST(Config, RoundTripsThroughJson) {
  pipeline::Config c;
  c.seed = 7;
  c.beam.n_trials = 11;
  c.softmax.eta = 0.125;
  c.models = {"gnb", "softmax"};
  const auto back = pipeline::from_json(pipeline::to_json(c));
  EXPECT_EQ(pipeline::to_json(back), pipeline::to_json(c));
  EXPECT_EQ(pipeline::config_hash(back), pipeline::config_hash(c));
  EXPECT_NE(pipeline::config_hash(c), pipeline::config_hash(pipeline::Config{}));
}

TEST(Config, FileOverlaysDefaultsAndRejectsUnknownKeys) {
  const auto c = pipeline::from_json(nlohmann::json::parse(R"({"classify": {"epochs": 12}})"));
  EXPECT_EQ(c.softmax.epochs, 12);
  EXPECT_EQ(c.softmax.eta, pipeline::Config{}.softmax.eta);
  EXPECT_EQ(c.base.timesteps, 24u);
  EXPECT_EQ(c.base.start_row, 4000u);
  EXPECT_EQ(c.win_dur_ratio, 0.04);
  EXPECT_EQ(c.base.sampling_ratio, 0.3);
  EXPECT_EQ(c.n_splits, 5u);
  EXPECT_EQ(kind_of([] { pipeline::from_json(nlohmann::json::parse(R"({"classify": {"epoch": 1}})")); }),
            ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { pipeline::from_json(nlohmann::json::parse(R"({"extra": {}})")); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { pipeline::from_json(nlohmann::json::parse(R"({"classify": {"eta": "x"}})")); }),
            ErrorKind::InvalidConfig);
  pipeline::Config bad;
  bad.models = {"svm"};
  EXPECT_EQ(kind_of([&] { pipeline::validate(bad); }), ErrorKind::InvalidConfig);
}

TEST(Io, SignalCsvRoundTripIsExact) {
  const auto dir = scratch("csv");
  TimeSeries s;
  s.t = {0.0, 0.1, 0.30000000000000004, 1e-300};
  s.t[3] = 0.5;
  s.u = {1.0 / 3.0, -2.5e-17, 123456.789, -0.0};
  io::write_signal_csv(dir / "a.csv", s, "# note\n");
  const auto r = io::read_signal_csv(dir / "a.csv");
  EXPECT_EQ(r.t, s.t);
  EXPECT_EQ(r.u, s.u);
  EXPECT_FALSE(fs::exists(dir / "a.csv.tmp"));
  io::atomic_write(dir / "bad.csv", "t,v\n0,1\n");
  EXPECT_EQ(kind_of([&] { io::read_signal_csv(dir / "bad.csv"); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { io::read_signal_csv(dir / "missing.csv"); }), ErrorKind::Io);
  fs::remove_all(dir);
}

TEST(Io, DatasetRoundTripThroughManifest) {
  const auto dir = scratch("ds");
  pipeline::Config c;
  c.beam.n_trials = 5;
  c.beam.duration = 1.0;
  const auto signals = pipeline::generate(c);
  pipeline::write_dataset(dir, signals, c);
  const auto back = io::load_dataset(dir);
  ASSERT_EQ(back.size(), signals.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].u, signals[i].u);
    EXPECT_EQ(back[i].label, signals[i].label);
    EXPECT_EQ(back[i].source_id, signals[i].source_id);
  }
  EXPECT_TRUE(fs::exists(dir / "genconfig.json"));
  const auto echo = io::read_json(dir / "genconfig.json");
  EXPECT_EQ(echo.at("config_hash"), pipeline::config_hash(c));
  fs::remove_all(dir);
}

TEST(TauSpec, ResolvesNamesAndNumbers) {
  const auto doc = nlohmann::json::parse(R"({"tau_common_best": 0.02, "tau_common_knee": 0.009})");
  EXPECT_EQ(pipeline::resolve_tau("common_best", &doc), 0.02);
  EXPECT_EQ(pipeline::resolve_tau("common_knee", &doc), 0.009);
  EXPECT_EQ(pipeline::resolve_tau("0.0125", nullptr), 0.0125);
  EXPECT_EQ(kind_of([] { pipeline::resolve_tau("common_best", nullptr); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { pipeline::resolve_tau("-1", nullptr); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { pipeline::resolve_tau("0.01x", nullptr); }), ErrorKind::InvalidArgument);
}

TEST(Results, CsvParsesBackAndRanks) {
  std::vector<classify::FoldResult> rows;
  for (std::size_t f = 0; f < 5; ++f) {
    rows.push_back({"softmax", "base", f, 0.5 + 0.05 * f, 0.45, 0.7});
    rows.push_back({"softmax", "hstf(0.00956)", f, 0.97, 0.97, 0.99});
    rows.push_back({"gnb", "hstf(0.00956)", f, 0.93, 0.92, 0.99});
    rows.push_back({"gnb", "base", f, 0.6, 0.55, 0.75});
  }
  const pipeline::Stamp stamp{pipeline::Config{}};
  const auto parsed = pipeline::parse_results_csv(pipeline::results_csv(rows, stamp));
  ASSERT_EQ(parsed.size(), rows.size());
  EXPECT_EQ(parsed[3].model, "gnb");
  EXPECT_DOUBLE_EQ(parsed[4].accuracy, 0.55);
  const auto st = pipeline::stability(parsed);
  ASSERT_EQ(st.size(), 2u);
  const auto line = pipeline::ranking_line(st);
  EXPECT_EQ(line.rfind("ranking (mean balanced score): hstf(0.00956)", 0), 0u) << line;
  EXPECT_NE(line.find(" > base"), std::string::npos);
  EXPECT_EQ(kind_of([] { pipeline::parse_results_csv("model,method\n"); }), ErrorKind::InvalidArgument);
}

TEST(Results, EveryArtifactCarriesTheStamp) {
  pipeline::Config c;
  const pipeline::Stamp stamp(c);
  std::vector<classify::FoldResult> rows = {{"softmax", "base", 0, 0.5, 0.5, 0.5}, {"softmax", "base", 1, 0.5, 0.5, 0.5}};
  const std::string line = "# config_hash=" + pipeline::config_hash(c) + " seed=42\n";
  EXPECT_EQ(pipeline::results_csv(rows, stamp).rfind(line, 0), 0u);
  EXPECT_EQ(pipeline::summary_csv(rows, stamp).rfind(line, 0), 0u);
  const auto j = pipeline::stability_json(pipeline::stability(rows), stamp);
  EXPECT_EQ(j.at("config_hash"), pipeline::config_hash(c));
  EXPECT_EQ(j.at("seed"), 42);
}
