#include "ltcar/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "ltcar/errors.hpp"

namespace ltcar::io {
namespace {

TEST(Hash, KnownFnvVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hash_hex(0xabcULL), "0000000000000abc");
}

TEST(Format, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

trajopt::Curve sample_curve() {
  trajopt::Curve c;
  c.dt = 0.01;
  for (int k = 0; k < 4; ++k) {
    Vec6 x;
    x << k * 0.2, 0.1 / 3.0, 0.01 * k, 20.0, -0.1, 0.05;
    c.x.push_back(x);
    c.u.push_back(Vec3(0.01, -0.002 * k, 0.0));
  }
  return c;
}

TEST(Csv, CurveRoundTrips) {
  const trajopt::Curve c = sample_curve();
  const TrajectoryTable t = parse_trajectory_csv(curve_csv(c, {{"extra", {1, 2, 3, 4}}}));
  ASSERT_EQ(t.t.size(), 4u);
  EXPECT_TRUE(t.has_input[0] && t.has_input[1] && t.has_input[2]);
  const trajopt::Curve back = table_to_curve(t);
  EXPECT_DOUBLE_EQ(back.dt, 0.01);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(back.x[k], c.x[k]);
    EXPECT_EQ(back.u[k], c.u[k]);
  }
  EXPECT_THROW(curve_csv(c, {{"short", {1.0}}}), std::invalid_argument);
}

TEST(Csv, ColumnsAreFoundByName) {
  const TrajectoryTable t = parse_trajectory_csv(
      "psidot,vy,vx,psi,y,x,t,kappa_r\n6,5,4,3,2,1,0,0.5\n");
  EXPECT_EQ(t.x[0], (Vec6() << 1, 2, 3, 4, 5, 6).finished());
  EXPECT_FALSE(t.has_input[0]);
  EXPECT_TRUE(t.has_input[1]);
  EXPECT_EQ(t.u[0], Vec3(0, 0.5, 0));
}

void expect_io_error(const std::string& text, const std::string& fragment) {
  try {
    parse_trajectory_csv(text, "f.csv");
    FAIL() << "expected IoError for: " << text;
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(Csv, MalformedInputIsReportedWithItsLine) {
  expect_io_error("", "empty file");
  expect_io_error("t,x,y,psi,vx,vy\n", "missing required column 'psidot'");
  expect_io_error("t,x,x,y,psi,vx,vy,psidot\n", "duplicate column 'x'");
  expect_io_error("t,x,y,psi,vx,vy,psidot\n", "no data rows");
  expect_io_error("t,x,y,psi,vx,vy,psidot\n0,0,0,0,1,0,0\n0.1,0,0,0,1,0\n",
                  "f.csv:3: expected 7 fields, found 6");
  expect_io_error("t,x,y,psi,vx,vy,psidot\n0,0,0,0,abc,0,0\n",
                  "f.csv:2: 'abc' is not a number");
  expect_io_error("t,x,y,psi,vx,vy,psidot\n0,0,0,0,1,0,0\n0,0,0,0,1,0,0\n",
                  "f.csv:3: time is not strictly increasing");
  expect_io_error("t,x,y,psi,vx,vy,psidot\n0,0,0,0,nan,0,0\n", "non-finite");
  EXPECT_THROW(read_trajectory_csv("/nonexistent/ltcar.csv"), IoError);
}

TEST(Csv, NonUniformGridIsRejected) {
  const TrajectoryTable t = parse_trajectory_csv(
      "t,x,y,psi,vx,vy,psidot\n0,0,0,0,1,0,0\n0.1,0,0,0,1,0,0\n0.25,0,0,0,1,0,0\n");
  EXPECT_THROW(table_to_curve(t), IoError);
}

class Writer : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("ltcar_io_" + std::string(::testing::UnitTest::GetInstance()
                                          ->current_test_info()
                                          ->name()));
    std::filesystem::remove_all(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(Writer, SidecarRecordsHashAndMetadata) {
  OutputWriter w(dir_, "h1", false);
  const auto p = w.write("a.csv", "x\n1\n", R"({"kind":"test"})");
  EXPECT_TRUE(std::filesystem::exists(p));
  std::ifstream in(dir_ / "a.csv.meta.json");
  const auto meta = nlohmann::json::parse(in);
  EXPECT_EQ(meta["config_hash"], "h1");
  EXPECT_EQ(meta["file"], "a.csv");
  EXPECT_EQ(meta["kind"], "test");
}

TEST_F(Writer, OverwriteNeedsMatchingHashOrForce) {
  OutputWriter(dir_, "h1", false).write("a.csv", "one");
  EXPECT_NO_THROW(OutputWriter(dir_, "h1", false).write("a.csv", "two"));
  EXPECT_THROW(OutputWriter(dir_, "h2", false).write("a.csv", "three"), IoError);
  EXPECT_NO_THROW(OutputWriter(dir_, "h2", true).write("a.csv", "four"));
  std::ifstream in(dir_ / "a.csv");
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "four");
  // A file without a sidecar is not ours: refuse as well.
  std::ofstream(dir_ / "b.csv") << "foreign";
  EXPECT_THROW(OutputWriter(dir_, "h2", false).write("b.csv", "x"), IoError);
}

TEST(IterateLog, OneObjectPerLine) {
  std::vector<trajopt::IterateRecord> log(2);
  log[0].iter = 0;
  log[0].cost = 2.0;
  log[1].iter = 1;
  log[1].cost = 1.0;
  log[1].gamma = 0.5;
  const std::string s = iterate_log_jsonl(log);
  const auto nl = s.find('\n');
  ASSERT_NE(nl, std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(s.substr(0, nl))["cost"], 2.0);
  EXPECT_EQ(nlohmann::json::parse(s.substr(nl + 1))["gamma"], 0.5);
}

}  // namespace
}  // namespace ltcar::io
