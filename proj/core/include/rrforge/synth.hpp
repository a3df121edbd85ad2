#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rrforge/recording.hpp"

namespace rrforge::synth {

/// Parameters of one generated recording. Depths are relative to a unit
/// systolic pulse; IMU values are in g (ACC) or arbitrary rate units (GYR).
struct SynthSpec {
  double rr = 15.0;  // brpm, [6, 30]
  double hr = 70.0;  // bpm, [40, 180]
  double am_depth = 0.2;
  double bw_depth = 0.2;
  double fm_depth = 0.05;
  double noise_std = 0.02;          // PPG white noise
  double mayer_depth = 0.0;         // ~0.1 Hz vasomotor modulation of pulse rate and amplitude
  double ppg_wander_std = 0.0;      // 0.05-0.7 Hz Gaussian baseline wander on the PPG
  double ibi_jitter_s = 0.0;        // white beat-time jitter, s
  double motion_burst_prob = 0.0;   // chance the recording carries 3-8 Hz motion bursts
  double imu_resp_gain = 0.02;      // respiration amplitude on the wrist IMU
  double imu_motion_std = 0.0;      // 0.05-0.7 Hz Gaussian arm motion, random direction
  double imu_noise_std = 0.002;     // broadband IMU noise per axis
  double chest_noise_std = 0.005;
  double duration_s = 32.0;
  double wrist_rate = 20.0;
  double chest_rate = 512.0;
  std::uint64_t seed = 0;

  /// Throws invalid-config when a field leaves its range.
  void validate() const;
};

struct Burst {
  double start = 0.0;  // s
  double length = 0.0;
};

struct SynthSegment {
  WristRecording wrist;
  ChestRecording chest;
  double rr_truth = 0.0;  // 60 * injected respiration frequency
  std::vector<double> beat_times;
  std::vector<Burst> bursts;
  bool corrupted() const noexcept { return !bursts.empty(); }
};

/// Deterministic in `spec` (including its seed).
SynthSegment gen_segment(const SynthSpec& spec);

struct CorpusSpec {
  std::size_t n_subjects = 12;
  std::size_t segments_per_subject = 200;
  double rr_low = 8.0, rr_high = 25.0;
  double hr_low = 55.0, hr_high = 100.0;
  double depth_low = 0.05, depth_high = 0.3;  // AM and BW depths, per subject
  double fm_low = 0.01, fm_high = 0.08;
  double noise_low = 0.01, noise_high = 0.08;
  double mayer_low = 0.0, mayer_high = 0.0;
  double wander_low = 0.0, wander_high = 0.0;
  double jitter_low = 0.0, jitter_high = 0.0;
  double imu_resp_gain_low = 0.01, imu_resp_gain_high = 0.03;
  double imu_motion_low = 0.0, imu_motion_high = 0.03;
  double corruption_fraction = 0.0;
  double duration_s = 32.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ManifestRow {
  std::string subject_id;
  std::string segment_id;
  SynthSpec spec;
  double rr_truth = 0.0;
  bool corrupted = false;
};

/// Per-segment specs of a corpus; the segment seeds derive from the corpus seed.
/// Exactly round(corruption_fraction * total) segments carry motion bursts.
std::vector<ManifestRow> plan_corpus(const CorpusSpec& spec);

/// Writes `<dir>/<subject>/<segment>.wrist.csv`, `.chest.csv` and
/// `<dir>/manifest.json`; returns the manifest rows. `extra_meta` pairs are
/// copied verbatim into the manifest's top level (for the config hash and seed).
std::vector<ManifestRow> gen_corpus(const CorpusSpec& spec, const std::filesystem::path& dir,
                                    const std::vector<std::pair<std::string, std::string>>& extra_meta = {});

std::vector<ManifestRow> read_manifest(const std::filesystem::path& manifest_path);

std::string to_json(const CorpusSpec& spec);
CorpusSpec corpus_spec_from_json(const std::string& text);

}  // namespace rrforge::synth
