#include <gtest/gtest.h>

#include <sstream>

#include "dmdkit/csv.hpp"
#include "dmdkit/systems.hpp"

namespace dmdkit::csv {
namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected dmdkit::Error";
  return ErrorCode::IoError;
}

std::vector<RawTrajectory> read(const std::string& text) {
  std::istringstream in(text);
  return read_trajectories(in, "test.csv");
}

TEST(ReadTrajectories, BlankLinesSeparateRuns) {
  const auto runs = read(
      "# two runs\n"
      "index,x1,x2\n"
      "0,1,2\n"
      "1,3,4\n"
      "\n"
      "0, 5 ,6\n"
      "1,7,8\n"
      "2,9,10\n");
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0].indices, (std::vector<double>{0, 1}));
  EXPECT_EQ(runs[1].rows[0], (std::vector<double>{5, 6}));
  const auto set = assemble(runs);
  EXPECT_EQ(set.trajectories.size(), 2u);
  EXPECT_EQ(set.delta_k, 1.0);
  EXPECT_EQ(set.start_index, 0.0);
}

TEST(ReadTrajectories, Malformed) {
  for (const char* text : {"", "time,x1\n0,1\n", "index,x1\n0,1,2\n", "index,x1\n0,abc\n", "index,x1\n0,nan\n",
                           "index,x1\n1,1\n1,2\n", "index,x1\n"}) {
    EXPECT_EQ(code_of([&] { read(text); }), ErrorCode::MalformedInput) << text;
  }
}

TEST(Assemble, SpacingAndOffsets) {
  const auto offset = assemble(read("index,x1\n2.5,1\n3,2\n3.5,4\n"));
  EXPECT_EQ(offset.delta_k, 0.5);
  EXPECT_EQ(offset.start_index, 2.5);

  try {
    assemble(read("index,x1\n0,1\n1,2\n3,4\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IrregularSpacing);
    EXPECT_NE(std::string(e.what()).find("--select-indices"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { assemble(read("index,x1\n0,1\n")); }), ErrorCode::TrajectoryTooShort);
}

TEST(SelectIndices, RepairsIrregularGrid) {
  const auto runs = read("index,x1\n0,1\n1,2\n2,4\n2.5,9\n3,8\n");
  EXPECT_THROW(assemble(runs), Error);
  const auto set = assemble(select_indices(runs, {0, 1, 2, 3}));
  EXPECT_EQ(set.trajectories.front().length(), 4u);
  EXPECT_EQ(set.trajectories.front().state(3)(0), 8.0);
}

TEST(WriteTrajectories, RoundTripsBitwise) {
  const auto data = systems::generate(
      {systems::NoisyRandomWalk{0.37, 9}, RealVector::Constant(3, 1.0 / 3.0), 25, 0.1, -0.7});
  std::ostringstream out;
  write_trajectories(out, data);
  std::istringstream in(out.str());
  const auto back = assemble(read_trajectories(in, "mem"));
  EXPECT_EQ(back.trajectories.front().states, data.trajectories.front().states);
  EXPECT_NEAR(back.delta_k, 0.1, 1e-15);
  EXPECT_EQ(back.start_index, -0.7);
}

TEST(WritePredictions, HeaderAndRows) {
  std::ostringstream out;
  RealVector s(2);
  s << 0.5, -2;
  write_predictions(out, {{1.5, s, 0.0}}, 2);
  EXPECT_EQ(out.str(), "index,x1,x2,imag_residual\n1.5,0.5,-2,0\n");
}

}  // namespace
}  // namespace dmdkit::csv
