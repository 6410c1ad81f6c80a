#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "gridfuse/pgm.hpp"

using namespace gridfuse;

TEST(Pgm, RoundTripWithinQuantisation) {
  const GridSpec s(37, 21, 0.05, -1.25, 3.5);
  ProbabilityGrid p(s, 0.0);
  std::mt19937_64 g(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < p.size(); ++k) p.at_linear(k) = u(g);
  const auto path = std::filesystem::temp_directory_path() / "gridfuse_roundtrip.pgm";
  write_pgm(path, p);
  const ProbabilityGrid q = read_pgm(path);
  EXPECT_EQ(q.spec(), s);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(q.at_linear(k), p.at_linear(k), 0.5 / 65535.0 + 1e-15);
  std::filesystem::remove(path);
  std::filesystem::remove(pgm_sidecar(path));
}

TEST(Pgm, TopRowIsNorth) {
  const GridSpec s(2, 2, 1.0);
  ProbabilityGrid p(s, 0.0);
  p[{0, 1}] = 1.0;
  const auto path = std::filesystem::temp_directory_path() / "gridfuse_north.pgm";
  write_pgm(path, p);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w, h, mx;
  in >> magic >> w >> h >> mx;
  in.get();
  unsigned char px[2];
  in.read(reinterpret_cast<char*>(px), 2);
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(px[0], 0xff);
  EXPECT_EQ(px[1], 0xff);
  std::filesystem::remove(path);
  std::filesystem::remove(pgm_sidecar(path));
}

TEST(Pgm, RejectsOtherFormats) {
  const auto path = std::filesystem::temp_directory_path() / "gridfuse_bad.pgm";
  std::ofstream(path) << "P2\n1 1\n255\n0\n";
  EXPECT_THROW((void)read_pgm(path), ParseError);
  std::filesystem::remove(path);
}
