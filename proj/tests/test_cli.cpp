#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "diffverify/cli.hpp"
#include "support.hpp"

using namespace diffverify;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "diffverify");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("diffverify_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir);
    data = DIFFVERIFY_DATA_DIR;
  }
  void TearDown() override { fs::remove_all(dir); }

  std::vector<std::string> example_verify(const std::string& eps) {
    return {"verify",   "--net1",  data + "/example_f.nnet", "--net2", data + "/example_f_rounded.nnet", "--region",
            data + "/example_region.json", "--epsilon", eps, "--threads", "2"};
  }

  fs::path dir;
  std::string data;
};

}  // namespace

TEST_F(CliTest, VerifyExitCodesFollowStatus) {
  auto r = run(example_verify("7"));
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parse_report(r.out).status, Status::Verified);
  r = run(example_verify("0.4"));
  EXPECT_EQ(r.code, 1) << r.err;
  auto args = example_verify("5");
  args.insert(args.end(), {"--max-depth", "1"});
  r = run(args);
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_EQ(parse_report(r.out).status, Status::Unknown);
}

TEST_F(CliTest, ReportFileRoundTrips) {
  auto args = example_verify("0.4");
  const fs::path report = dir / "report.json";
  args.insert(args.end(), {"--report", report.string(), "--seed", "17"});
  const auto r = run(args);
  ASSERT_EQ(r.code, 1) << r.err;
  const std::string text = read_file(report);
  const Verdict v = parse_report(text);
  EXPECT_EQ(v.status, Status::Falsified);
  ASSERT_TRUE(v.witness.has_value());
  const auto a = eval_concrete(dvtest::example_f(), v.witness->x);
  const auto b = eval_concrete(dvtest::example_f_rounded(), v.witness->x);
  EXPECT_EQ(v.witness->delta[0], b[0] - a[0]);
  const json doc = json::parse(text);
  EXPECT_EQ(doc["query"]["seed"], 17);
  EXPECT_EQ(doc["query"]["mode"], "delta");
  EXPECT_EQ(exit_code(v.status), r.code);
}

TEST_F(CliTest, ReportParseMatchesVerdict) {
  VerificationQuery q;
  q.pair = NetworkPair(dvtest::example_f(), dvtest::example_f_rounded());
  q.region = dvtest::example_region();
  q.epsilon = 5.0;
  q.threads = 1;
  const Verdict v = verify(q);
  const Verdict back = parse_report(make_report(q, v).dump());
  EXPECT_EQ(back.status, v.status);
  EXPECT_EQ(back.witness.has_value(), v.witness.has_value());
  EXPECT_EQ(back.stats.hull, v.stats.hull);
  EXPECT_EQ(back.stats.first_pass, v.stats.first_pass);
  EXPECT_EQ(back.stats.regions, v.stats.regions);
  EXPECT_EQ(back.stats.splits, v.stats.splits);
  EXPECT_EQ(back.stats.max_depth, v.stats.max_depth);
  EXPECT_THROW(parse_report("{}"), ReportError);
}

TEST_F(CliTest, BaselineModeRuns) {
  auto args = example_verify("7");
  args.insert(args.end(), {"--mode", "composed-baseline", "--max-depth", "3"});
  const auto r = run(args);
  EXPECT_LE(r.code, 2) << r.err;
  EXPECT_EQ(json::parse(r.out)["query"]["mode"], "composed-baseline");
}

TEST_F(CliTest, UsageAndIoErrors) {
  auto args = example_verify("1");
  args[6] = (dir / "missing.json").string();
  auto r = run(args);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("missing.json"), std::string::npos);
  EXPECT_EQ(run({"verify", "--net1", "x"}).code, 3);
  EXPECT_EQ(run({}).code, 3);
  EXPECT_EQ(run({"bogus"}).code, 3);
  args = example_verify("-1");
  EXPECT_EQ(run(args).code, 3);
  args = example_verify("1");
  args.insert(args.end(), {"--mode", "nonsense"});
  EXPECT_EQ(run(args).code, 3);
  std::ofstream(dir / "bad.json") << "[[1, 0]]";
  args = example_verify("1");
  args[6] = (dir / "bad.json").string();
  EXPECT_EQ(run(args).code, 3);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, TruncateWritesBinary16Network) {
  const fs::path in = dir / "f.nnet", out = dir / "f16.nnet", again = dir / "f16b.nnet";
  save_nnet(in.string(), make_random_network({3, 8, 2}, 4));
  ASSERT_EQ(run({"truncate", in.string(), out.string()}).code, 0);
  EXPECT_EQ(load_nnet(out.string()), truncate_f16(load_nnet(in.string())));
  ASSERT_EQ(run({"truncate", out.string(), again.string()}).code, 0);
  EXPECT_EQ(read_file(out), read_file(again));
}

TEST_F(CliTest, TruncateWithDecimals) {
  const fs::path out = dir / "rounded.nnet";
  ASSERT_EQ(run({"truncate", data + "/example_f.nnet", out.string(), "--decimals", "0"}).code, 0);
  const Network r = load_nnet(out.string());
  EXPECT_EQ(r.weights[0](0, 0), 2.0);
  EXPECT_EQ(r, dvtest::example_f_rounded());
  EXPECT_EQ(run({"truncate", "/nonexistent.nnet", out.string()}).code, 3);
}

TEST_F(CliTest, CompareIdenticalNetworks) {
  const auto r = run({"compare", "--net1", data + "/example_f.nnet", "--net2", data + "/example_f.nnet", "--region",
                      data + "/example_region.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header.rfind("query,delta_width,baseline_width", 0), 0u);
  // delta width 0, baseline width positive
  std::vector<std::string> cells;
  std::stringstream rs(row);
  for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
  ASSERT_GE(cells.size(), 3u);
  EXPECT_EQ(std::stod(cells[1]), 0.0);
  EXPECT_GT(std::stod(cells[2]), 0.0);
}

TEST_F(CliTest, CompareRandomBatch) {
  const fs::path csv = dir / "cmp.csv";
  const auto r = run({"compare", "--random", "4", "--hidden-layers", "2", "--width", "10", "--csv", csv.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("median width ratio"), std::string::npos);
  std::istringstream in(read_file(csv));
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 5u);
}
