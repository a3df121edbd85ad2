#pragma once

#include <filesystem>

#include "rrforge/signal.hpp"

namespace rrforge {

/// Wrist watch channels as stored in `t,ppg,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z` CSV files.
struct WristRecording {
  SampledSignal ppg;
  TriaxialWindow acc;
  TriaxialWindow gyr;
};

/// Chest band accelerometer as stored in `t,acc_x,acc_y,acc_z` CSV files.
struct ChestRecording {
  TriaxialWindow acc;
  double start_time = 0.0;
};

// The sample rate is inferred from the time column, which must be strictly
// increasing. Spacing is assumed uniform.
WristRecording read_wrist_csv(const std::filesystem::path& path);
ChestRecording read_chest_csv(const std::filesystem::path& path);

void write_wrist_csv(const std::filesystem::path& path, const WristRecording& rec);
void write_chest_csv(const std::filesystem::path& path, const ChestRecording& rec);

}  // namespace rrforge
