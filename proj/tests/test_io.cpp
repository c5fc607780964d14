#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gdchaos/io.hpp"

using namespace gdchaos;

namespace {

io::StateTable sample_table() {
  return {2, {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::nextafter(1.0, 2.0), -0.0}};
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
  const io::StateTable t = sample_table();
  std::stringstream ss;
  io::write_csv(ss, t);
  const io::StateTable r = io::read_csv(ss);
  EXPECT_EQ(r.dim, t.dim);
  EXPECT_EQ(r.values, t.values);
}

TEST(Csv, OrbitIndexCountsSteps) {
  const MapSpec map = MapSpec::gd(MultiscaleObjective(MacroFunction::quadratic()), 0.5);
  const Orbit o = iterate(map, map.initial_state(Vec{1.0}), 6, 10, 2, 0);
  std::stringstream ss;
  io::write_csv(ss, o);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "index,x1");
  std::getline(ss, line);
  EXPECT_EQ(line.substr(0, 3), "10,");
  std::getline(ss, line);
  EXPECT_EQ(line.substr(0, 3), "12,");
}

TEST(Csv, RejectsMalformedInput) {
  std::stringstream empty, header("a,b\n1,2\n"), ragged("index,x1,x2\n0,1\n");
  EXPECT_THROW(io::read_csv(empty), std::runtime_error);
  EXPECT_THROW(io::read_csv(header), std::runtime_error);
  EXPECT_THROW(io::read_csv(ragged), std::runtime_error);
}

TEST(Binary, RoundTripIsExact) {
  const io::StateTable t = sample_table();
  std::stringstream ss;
  io::write_binary(ss, t);
  EXPECT_EQ(ss.str().size(), 4 + 4 + 4 + 8 + 8 * t.values.size());
  const io::StateTable r = io::read_binary(ss);
  EXPECT_EQ(r.dim, 2u);
  EXPECT_EQ(r.values, t.values);
  EXPECT_TRUE(std::signbit(r.values[5]));
}

TEST(Binary, RejectsBadMagicAndTruncation) {
  std::stringstream ss;
  io::write_binary(ss, sample_table());
  std::string s = ss.str();
  std::string bad = s;
  bad[0] = 'X';
  std::stringstream b1(bad), b2(s.substr(0, s.size() - 3));
  EXPECT_THROW(io::read_binary(b1), std::runtime_error);
  EXPECT_THROW(io::read_binary(b2), std::runtime_error);
}

TEST(Files, WriteCreatesParents) {
  const auto dir = std::filesystem::temp_directory_path() / "gdchaos_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  io::write_file(dir / "f.txt", "hello\n");
  std::ifstream in(dir / "f.txt");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "hello");
  std::filesystem::remove_all(dir.parent_path());
}
