#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rrforge/error.hpp"
#include "rrforge/recording.hpp"
#include "test_signals.hpp"

using namespace rrforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "rrforge_test_recording";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(WristCsv, RoundTrip) {
  WristRecording rec;
  rec.ppg = {rrforge::testing::gaussian(641, 1.0, 1), 20.0, 0.0};
  rec.acc = {rrforge::testing::gaussian(641, 1.0, 2), rrforge::testing::gaussian(641, 1.0, 3),
             rrforge::testing::gaussian(641, 1.0, 4), 20.0};
  rec.gyr = {rrforge::testing::gaussian(641, 1.0, 5), rrforge::testing::gaussian(641, 1.0, 6),
             rrforge::testing::gaussian(641, 1.0, 7), 20.0};
  const auto path = scratch("wrist.csv");
  write_wrist_csv(path, rec);
  const auto back = read_wrist_csv(path);
  EXPECT_NEAR(back.ppg.rate, 20.0, 1e-9);
  ASSERT_EQ(back.ppg.size(), 641u);
  for (std::size_t i = 0; i < 641; ++i) {
    EXPECT_NEAR(back.ppg.samples[i], rec.ppg.samples[i], 1e-6 * (1.0 + std::abs(rec.ppg.samples[i])));
    EXPECT_NEAR(back.gyr.z[i], rec.gyr.z[i], 1e-6 * (1.0 + std::abs(rec.gyr.z[i])));
  }
}

TEST(ChestCsv, RoundTripAndRate) {
  ChestRecording rec;
  rec.acc = {rrforge::testing::tone(0.25, 512.0, 2048), rrforge::testing::tone(0.3, 512.0, 2048),
             std::vector<double>(2048, 1.0), 512.0};
  const auto path = scratch("chest.csv");
  write_chest_csv(path, rec);
  const auto back = read_chest_csv(path);
  EXPECT_NEAR(back.acc.rate, 512.0, 1e-6);
  EXPECT_EQ(back.acc.size(), 2048u);
  EXPECT_DOUBLE_EQ(back.acc.z[100], 1.0);
}

TEST(ChestCsv, RejectsWrongHeader) {
  const auto path = scratch("bad_header.csv");
  write_text(path, "time,x,y,z\n0,1,2,3\n0.1,1,2,3\n");
  EXPECT_THROW(read_chest_csv(path), Error);
}

TEST(ChestCsv, RejectsNonMonotonicTime) {
  const auto path = scratch("bad_time.csv");
  write_text(path, "t,acc_x,acc_y,acc_z\n0,1,2,3\n0.1,1,2,3\n0.1,1,2,3\n");
  try {
    read_chest_csv(path);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_argument);
  }
}

TEST(ChestCsv, RejectsGarbageAndMissingFile) {
  const auto path = scratch("garbage.csv");
  write_text(path, "t,acc_x,acc_y,acc_z\n0,1,x,3\n0.1,1,2,3\n");
  EXPECT_THROW(read_chest_csv(path), Error);
  EXPECT_THROW(read_chest_csv(scratch("does_not_exist.csv")), Error);
}
