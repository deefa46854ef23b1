#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dmdkit/cli.hpp"

namespace dmdkit {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dmdkit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  fs::path dir_;
};

std::size_t data_rows(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line.rfind("index", 0) != 0) ++rows;
  return rows;
}

// Rows of a prediction CSV as numbers, header dropped.
std::vector<std::vector<double>> prediction_rows(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

TEST_F(Cli, DemoFamiliesProduceExpectedRowCounts) {
  auto linear = run_cli({"demo", "linear", "--eigs", "0.9,0.5", "--steps", "8"});
  ASSERT_EQ(linear.code, 0) << linear.err;
  EXPECT_EQ(data_rows(linear.out), 9u);
  EXPECT_EQ(linear.out.rfind("# dmdkit demo", 0), 0u);

  auto slow = run_cli({"demo", "slowmanifold", "--lambda", "0.9", "--mu", "0.5", "--steps", "20"});
  EXPECT_EQ(data_rows(slow.out), 21u);

  auto a = run_cli({"demo", "randomwalk", "--sigma", "0.01", "--seed", "7", "--steps", "200"});
  auto b = run_cli({"demo", "randomwalk", "--sigma", "0.01", "--seed", "7", "--steps", "200"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(data_rows(a.out), 201u);
  EXPECT_NE(a.out.find("mt19937_64"), std::string::npos);

  EXPECT_EQ(run_cli({"demo", "linear", "--steps", "3"}).code, 2);
  EXPECT_EQ(run_cli({"demo", "pendulum"}).code, 2);
}

TEST_F(Cli, FitReportsTheGeneratorSpectrum) {
  run_cli({"demo", "linear", "--eigs", "0.9,0.5", "--steps", "8", "-o", path("lin.csv")});
  auto r = run_cli({"fit", "-i", path("lin.csv"), "--rank", "fixed:2", "-o", path("lin.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("r=2"), std::string::npos);
  EXPECT_NE(r.out.find("stability: stable"), std::string::npos);
  EXPECT_NE(r.out.find("fit residual:"), std::string::npos);
  EXPECT_EQ(r.out.find("warning"), std::string::npos);

  const auto file = model_file::load(path("lin.json"));
  const auto& l = file.dmd().eigenvalues;
  EXPECT_NEAR(std::abs(l(0) - 0.9), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(l(1) - 0.5), 0.0, 1e-8);
  EXPECT_EQ(file.provenance.inputs.at(0).sha256.size(), 64u);
  EXPECT_EQ(file.provenance.rank_policy, "fixed:2");
}

TEST_F(Cli, SlowManifoldWithMonomialsFindsTheSquaredRate) {
  run_cli({"demo", "slowmanifold", "--x0", "1,0.5", "--steps", "30", "-o", path("sm.csv")});
  auto r = run_cli({"fit", "-i", path("sm.csv"), "--dict", "monomial:2", "--rank", "fixed:5", "-o", path("sm.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("model: koopman"), std::string::npos);
  const auto& l = model_file::load(path("sm.json")).dmd().eigenvalues;
  double best = 1.0;
  for (Eigen::Index i = 0; i < l.size(); ++i) best = std::min(best, std::abs(l(i) - 0.81));
  EXPECT_LE(best, 1e-6);
}

TEST_F(Cli, InputErrorsExitWithTwo) {
  const auto gap = write("gap.csv", "index,x1\n0,1\n0.5,2\n1,3\n2,5\n");
  auto r = run_cli({"fit", "-i", gap, "-o", path("m.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--select-indices"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  EXPECT_FALSE(fs::exists(path("m.json")));

  const auto bad = write("bad.csv", "index,x1\n0,1\n1,oops\n");
  EXPECT_EQ(run_cli({"fit", "-i", bad, "-o", path("m.json")}).code, 2);
  EXPECT_EQ(run_cli({"fit", "-i", path("missing.csv"), "-o", path("m.json")}).code, 2);
  EXPECT_EQ(run_cli({"fit", "-i", gap, "--rank", "fixed:0", "-o", path("m.json")}).code, 2);
  EXPECT_EQ(run_cli({"nonsense"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST_F(Cli, RankFailureIsNumerical) {
  run_cli({"demo", "linear", "--eigs", "0.9,0.5", "--steps", "8", "-o", path("lin.csv")});
  auto r = run_cli({"fit", "-i", path("lin.csv"), "--rank", "fixed:5", "-o", path("m.json")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(Cli, PredictMatchesInMemoryModelBitwise) {
  run_cli({"demo", "linear", "--eigs", "0.9,0.5", "--steps", "8", "--dt", "0.5", "-o", path("lin.csv")});
  ASSERT_EQ(run_cli({"fit", "-i", path("lin.csv"), "--rank", "fixed:2", "-o", path("m.json")}).code, 0);
  auto r = run_cli({"predict", path("m.json"), "--at", "0,3.5,-1", "-o", path("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());

  std::istringstream in(slurp(path("lin.csv")));
  const auto model = fit(csv::assemble(csv::read_trajectories(in, "lin.csv")), FixedRank{2}, ModeKind::ExactWithFallback);
  const auto rows = prediction_rows(slurp(path("p.csv")));
  ASSERT_EQ(rows.size(), 3u);
  const double steps[] = {0, 7, -2};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto p = predict_discrete(model, steps[i]);
    EXPECT_EQ(rows[i][1], p.state(0));
    EXPECT_EQ(rows[i][2], p.state(1));
  }
  EXPECT_NEAR(rows[0][1], 1.0, 1e-12);

  auto off_grid = run_cli({"predict", path("m.json"), "--at", "3.3"});
  EXPECT_EQ(off_grid.code, 2);
  EXPECT_NE(off_grid.err.find("continuous"), std::string::npos);
  auto cont = run_cli({"predict", path("m.json"), "--at", "3.3", "--mode", "continuous"});
  EXPECT_EQ(cont.code, 0);
  EXPECT_EQ(cont.out.rfind("index,x1,x2,imag_residual\n", 0), 0u);
}

TEST_F(Cli, BranchWarningGoesToStderrOnly) {
  run_cli({"demo", "linear", "--eigs", "-0.8,0.3", "--steps", "8", "-o", path("neg.csv")});
  ASSERT_EQ(run_cli({"fit", "-i", path("neg.csv"), "--rank", "fixed:2", "-o", path("m.json")}).code, 0);
  auto r = run_cli({"predict", path("m.json"), "--at", "2", "--mode", "continuous"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_EQ(r.out.find("warning"), std::string::npos);
}

TEST_F(Cli, SelectIndicesWorkflowsAgree) {
  // Samples of a continuous rotation-decay system at spacing 0.5 on [0, 5].
  run_cli({"demo", "continuous", "--matrix", "-0.1,-0.3;0.3,-0.1", "--x0", "1,0", "--steps", "10", "--dt", "0.5",
           "-o", path("c.csv")});
  ASSERT_EQ(run_cli({"fit", "-i", path("c.csv"), "--rank", "fixed:2", "--select-indices", "0,0.5,1,1.5,2", "-o",
                     path("half.json")})
                .code,
            0);
  ASSERT_EQ(run_cli({"fit", "-i", path("c.csv"), "--rank", "fixed:2", "--select-indices", "0,1,2,3,4,5", "-o",
                     path("unit.json")})
                .code,
            0);
  const auto w1 = prediction_rows(run_cli({"predict", path("half.json"), "--at", "2.5,8"}).out);
  const auto w2 = prediction_rows(run_cli({"predict", path("unit.json"), "--at", "2.5,8", "--mode", "continuous"}).out);
  ASSERT_EQ(w1.size(), 2u);
  ASSERT_EQ(w2.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t c = 1; c <= 2; ++c) EXPECT_NEAR(w1[i][c], w2[i][c], 1e-6);
}

TEST_F(Cli, SpectrumTableAndPlot) {
  run_cli({"demo", "linear", "--eigs", "0.9,0.5", "--steps", "8", "-o", path("lin.csv")});
  run_cli({"fit", "-i", path("lin.csv"), "--rank", "fixed:2", "-o", path("m.json")});
  auto r = run_cli({"spectrum", path("m.json"), "--svg", path("s.svg")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("i,re,im,abs,arg,abs_minus_1,omega_re,omega_im\n", 0), 0u);
  EXPECT_NE(r.out.find("stability: stable"), std::string::npos);
  EXPECT_NE(r.err.find("warning"), std::string::npos);  // past conditioning note
  const auto svg_text = slurp(path("s.svg"));
  std::size_t markers = 0;
  for (auto p = svg_text.find("class=\"eigenvalue\""); p != std::string::npos;
       p = svg_text.find("class=\"eigenvalue\"", p + 1))
    ++markers;
  EXPECT_EQ(markers, 2u);
  EXPECT_EQ(run_cli({"spectrum", path("nope.json")}).code, 2);
}

}  // namespace
}  // namespace dmdkit
