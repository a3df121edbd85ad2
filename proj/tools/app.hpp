#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rrforge/error.hpp"
#include "rrforge/groundtruth.hpp"
#include "rrforge/metrics.hpp"
#include "rrforge/model.hpp"
#include "rrforge/pipeline.hpp"
#include "rrforge/quality.hpp"
#include "rrforge/respiration.hpp"
#include "rrforge/trainer.hpp"

namespace rrforge::app {

namespace fs = std::filesystem;

/// Everything a run depends on. Component seeds are derived from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;
  model::ModelConfig model;
  model::TrainConfig train;
  quality::TrainOptions quality;
  std::size_t quality_max_windows = 3000;
  gt::KalmanParams groundtruth;
  resp::IcaOptions ica;
  double window_s = kWindowSeconds;
  double stride_s = kWindowSeconds;
  std::size_t random_windows = 0;
  std::vector<std::string> val_subjects;   // empty: the last training subject
  std::vector<std::string> test_subjects;  // held out of training entirely
  struct Paths {
    std::string corpus, model, reports;
  } paths;

  /// Copies of the component configs with their derived seeds filled in.
  model::ModelConfig model_config() const;
  model::TrainConfig train_config() const;
  pipeline::PrepareOptions prepare_options() const;
  std::uint64_t gate_seed() const;
};

RunConfig run_config_from_json(const std::string& text);
std::string to_json(const RunConfig& cfg);
RunConfig load_run_config(const fs::path& path);
/// FNV-1a of the canonical JSON form.
std::uint64_t config_hash(const RunConfig& cfg);

// ---- synth

struct SynthResult {
  std::size_t rows = 0;
  std::uint64_t manifest_hash = 0;
};
SynthResult synth(const fs::path& spec_path, const fs::path& out_dir, std::optional<std::uint64_t> seed);

// ---- prepare / filter

struct PrepareStats {
  std::size_t recordings = 0;
  std::size_t windows = 0;
  std::size_t accepted = 0;
  std::size_t labelled = 0;
  double acceptance_rate = 0.0;
};

/// Writes segments.bin, labels.csv, rejected.csv, quality_model.json and
/// stats.json into `out_dir`. Without `quality_model` the gate is fitted on
/// the windows the corpus manifest marks clean.
PrepareStats prepare(const fs::path& corpus, const fs::path& out_dir, const RunConfig& cfg,
                     const std::optional<fs::path>& quality_model = std::nullopt);

/// Quality verdict for every window of a corpus, as `subject_id,segment_id,score,accept`.
std::size_t filter(const fs::path& corpus, const fs::path& out_csv, const RunConfig& cfg,
                   const std::optional<fs::path>& quality_model);

// ---- single recordings

/// Selected ACC and GYR respiration components per window of one wrist CSV.
std::size_t extract_resp(const fs::path& wrist_csv, const fs::path& out_csv, const RunConfig& cfg);
/// Chest reference RR per window: `segment_id,rr_ref,confidence`.
std::size_t gt_extract(const fs::path& chest_csv, const fs::path& out_csv, const RunConfig& cfg);

// ---- train / estimate / evaluate

struct Split {
  std::vector<SegmentBundle> train, val, test;
};
/// Labelled bundles split by subject: test subjects are dropped, validation
/// subjects go to `val`. Throws invalid-split when the lists overlap or name
/// unknown subjects, invalid-training-set when nothing is labelled.
Split split_bundles(std::vector<SegmentBundle> bundles, const RunConfig& cfg);

/// `data` is a segments.bin file or a prepare output directory.
std::vector<SegmentBundle> load_prepared(const fs::path& data);

model::History train(const fs::path& data, const fs::path& model_out, const std::optional<fs::path>& history_csv,
                     const RunConfig& cfg, const std::optional<fs::path>& val_data = std::nullopt, bool verbose = false);

struct Estimate {
  std::string subject_id;
  std::string segment_id;
  double rr = 0.0;  // NaN when unavailable
  double quality = 0.0;
  std::string method;
};

/// CNN estimates for every bundle.
std::vector<Estimate> estimate_cnn(const fs::path& model_path, const std::vector<SegmentBundle>& bundles);
/// Baseline estimates for every bundle, recomputed from the raw corpus windows.
std::vector<Estimate> estimate_baseline(const fs::path& corpus, const std::vector<SegmentBundle>& bundles,
                                        const RunConfig& cfg);

void write_estimates(const fs::path& path, const std::vector<Estimate>& rows, const RunConfig& cfg);
std::vector<Estimate> read_estimates(const fs::path& path);

struct EvaluateOptions {
  std::optional<std::string> method;
  std::optional<fs::path> per_subject_csv;
  std::optional<fs::path> plot_dir;
  std::optional<fs::path> model_path;  // adds the parameter count
};

/// Joins estimates with reference labels on segment id and writes report.json.
metrics::EvalReport evaluate(const fs::path& est_csv, const fs::path& ref_csv, const fs::path& report_json,
                             const RunConfig& cfg, const EvaluateOptions& opts = {});

/// Stable process exit code for a library error category.
int exit_code(Errc code) noexcept;

}  // namespace rrforge::app
