#include <gtest/gtest.h>

#include <sstream>

#include "sacheck/csv.hpp"
#include "sacheck/error.hpp"
#include "sacheck/scenario.hpp"

using namespace sacheck;

namespace {

std::string io_message(const std::string& text) {
  std::istringstream in(text);
  try {
    read_dataset_csv(in);
  } catch (const IoError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
  Rng r(1);
  const auto d = Scenario(ScenarioId::Sc2, 0.25, 1).generate(50, r);
  std::stringstream io;
  write_dataset_csv(io, d);
  const auto back = read_dataset_csv(io);
  EXPECT_EQ(back.X, d.X);
  EXPECT_EQ(back.y1, d.y1);
  EXPECT_EQ(back.y2, d.y2);
}

TEST(Csv, HeaderNamesColumns) {
  Rng r(2);
  const auto d = Scenario(ScenarioId::Sc1).generate(3, r);
  std::ostringstream out;
  write_dataset_csv(out, d);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "x1,x2,y1,y2");
}

TEST(Csv, AcceptsBomCrlfAndArbitraryCovariateNames) {
  std::istringstream in("\xEF\xBB\xBF" "age,dose,y1,y2\r\n1,2,3,4\r\n\r\n5,6,7,8\r\n");
  const auto d = read_dataset_csv(in);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.X(1, 1), 6.0);
  EXPECT_EQ(d.y2[1], 8.0);
}

TEST(Csv, ErrorsNameTheLine) {
  EXPECT_NE(io_message("x1,y1,y2\n1,2,3\n1,2\n").find("line 3"), std::string::npos);
  EXPECT_NE(io_message("x1,y1,y2\n1,2,3\n1,abc,3\n").find("line 3"), std::string::npos);
  EXPECT_NE(io_message("x1,y1,y2\n1,2,3x\n").find("line 2"), std::string::npos);
  EXPECT_NE(io_message("x1,a,b\n1,2,3\n").find("line 1"), std::string::npos);
  EXPECT_FALSE(io_message("x1,y1,y2\n").empty());
  EXPECT_FALSE(io_message("").empty());
}

TEST(Csv, MissingFileIsIoError) { EXPECT_THROW(read_dataset_csv(std::string("/nonexistent/file.csv")), IoError); }
