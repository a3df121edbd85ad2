#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "app.hpp"
#include "rrforge/error.hpp"
#include "rrforge/hash.hpp"

namespace {

using namespace rrforge;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Run config JSON (defaults apply to absent keys)");
  sub->add_option("--seed", c.seed, "Override the run seed");
}

app::RunConfig load(const Common& c) {
  auto cfg = c.config.empty() ? app::RunConfig{} : app::load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

std::string pick(const std::string& flag, const std::string& from_config, const char* name) {
  const auto& v = flag.empty() ? from_config : flag;
  require(!v.empty(), Errc::invalid_argument, std::string("missing ") + name + " (flag or config paths)");
  return v;
}

std::optional<fs::path> opt_path(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<fs::path>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"rrforge: wrist PPG + IMU respiratory-rate pipeline"};
  cli.require_subcommand(1);
  Common common;

  // synth
  std::string spec_file, out;
  auto* synth = cli.add_subcommand("synth", "Generate a synthetic corpus from a corpus spec JSON");
  synth->add_option("--spec", spec_file, "Corpus spec JSON")->required();
  synth->add_option("--out", out, "Output corpus directory (parent must exist)")->required();
  synth->add_option("--seed", common.seed, "Override the spec seed");

  // prepare
  std::string corpus, quality_model;
  std::size_t random_windows = 0;
  auto* prepare = cli.add_subcommand("prepare", "Window, gate, extract respiration and label a corpus");
  prepare->add_option("--corpus", corpus, "Corpus directory");
  prepare->add_option("--out", out, "Output directory for segments.bin, labels.csv, rejected.csv, stats.json")
      ->required();
  prepare->add_option("--quality-model", quality_model, "Use this gate instead of fitting one on clean windows");
  prepare->add_option("--random-windows", random_windows, "Windows per recording at seeded random offsets");
  add_common(prepare, common);

  // filter
  auto* filter = cli.add_subcommand("filter", "Quality verdict per window: subject_id,segment_id,score,accept");
  filter->add_option("--corpus", corpus, "Corpus directory");
  filter->add_option("--out", out, "Output CSV")->required();
  filter->add_option("--quality-model", quality_model, "Gate JSON; fitted on clean windows when absent");
  add_common(filter, common);

  // extract-resp
  std::string input;
  auto* extract = cli.add_subcommand("extract-resp", "ICA respiration components of one wrist CSV");
  extract->add_option("--wrist", input, "Wrist CSV (t,ppg,acc_x..gyr_z)")->required();
  extract->add_option("--out", out, "Output CSV")->required();
  add_common(extract, common);

  // gt-extract
  auto* gt = cli.add_subcommand("gt-extract", "Reference RR per window of one chest CSV");
  gt->add_option("--chest", input, "Chest CSV (t,acc_x,acc_y,acc_z)")->required();
  gt->add_option("--out", out, "Output CSV: segment_id,rr_ref,confidence")->required();
  add_common(gt, common);

  // train
  std::string data, model_path, history, val_data;
  bool quiet = false;
  auto* train = cli.add_subcommand("train", "Train the CNN on prepared segments");
  train->add_option("--data", data, "prepare output directory or segments.bin")->required();
  train->add_option("--model-out", model_path, "Output model file (RRF1)");
  train->add_option("--history", history, "Output CSV: epoch,train_loss,val_mae,lr");
  train->add_option("--val-data", val_data, "Separate validation store (overrides the subject split)");
  train->add_flag("--quiet", quiet, "No per-epoch progress on stderr");
  add_common(train, common);

  // estimate
  std::vector<std::string> methods;
  auto* estimate = cli.add_subcommand("estimate", "RR estimates: subject_id,segment_id,rr_est,quality,method");
  estimate->add_option("--data", data, "prepare output directory or segments.bin")->required();
  estimate->add_option("--method", methods, "cnn and/or baseline (repeatable)")
      ->check(CLI::IsMember({"cnn", "baseline"}))
      ->required();
  estimate->add_option("--model", model_path, "Model file for --method cnn");
  estimate->add_option("--corpus", corpus, "Raw corpus for --method baseline");
  estimate->add_option("--out", out, "Output CSV")->required();
  std::string split = "all";
  estimate->add_option("--split", split, "Segments to estimate: all, or the train/val/test part of the subject split")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  add_common(estimate, common);

  // evaluate
  std::string est_csv, ref_csv, per_subject, plot_dir, method;
  auto* evaluate = cli.add_subcommand("evaluate", "MAE, RMSE, Bland-Altman and quartiles as report.json");
  evaluate->add_option("--estimates", est_csv, "Estimates CSV")->required();
  evaluate->add_option("--labels", ref_csv, "Reference CSV (rr_ref or rr_est column)")->required();
  evaluate->add_option("--out", out, "Output report.json")->required();
  evaluate->add_option("--method", method, "Evaluate only rows of this method");
  evaluate->add_option("--per-subject", per_subject, "Output per-subject CSV");
  evaluate->add_option("--plot", plot_dir, "Directory for boxplot.csv and bland_altman.csv");
  evaluate->add_option("--model", model_path, "Model file; adds its parameter count to the report");
  add_common(evaluate, common);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      const auto r = app::synth(spec_file, out, common.seed);
      std::printf("wrote %zu segments to %s (manifest %s)\n", r.rows, out.c_str(), hex64(r.manifest_hash).c_str());
      return 0;
    }
    auto cfg = load(common);
    if (prepare->parsed()) {
      if (random_windows > 0) cfg.random_windows = random_windows;
      const auto s = app::prepare(pick(corpus, cfg.paths.corpus, "--corpus"), out, cfg, opt_path(quality_model));
      std::printf("%zu recordings, %zu windows, %zu accepted (%.3f), %zu labelled\n", s.recordings, s.windows,
                  s.accepted, s.acceptance_rate, s.labelled);
    } else if (filter->parsed()) {
      const auto n = app::filter(pick(corpus, cfg.paths.corpus, "--corpus"), out, cfg, opt_path(quality_model));
      std::printf("%zu windows accepted\n", n);
    } else if (extract->parsed()) {
      std::printf("%zu windows\n", app::extract_resp(input, out, cfg));
    } else if (gt->parsed()) {
      std::printf("%zu windows\n", app::gt_extract(input, out, cfg));
    } else if (train->parsed()) {
      const auto h = app::train(data, pick(model_path, cfg.paths.model, "--model-out"), opt_path(history), cfg,
                                opt_path(val_data), !quiet);
      std::printf("best epoch %zu, val MAE %.4f, %zu steps\n", h.best_epoch, h.best_val_mae, h.steps_executed);
    } else if (estimate->parsed()) {
      auto bundles = app::load_prepared(data);
      if (split != "all") {
        auto parts = app::split_bundles(std::move(bundles), cfg);
        bundles = split == "train" ? std::move(parts.train) : split == "val" ? std::move(parts.val) : std::move(parts.test);
      }
      std::vector<app::Estimate> rows;
      for (const auto& m : methods) {
        auto part = m == "cnn" ? app::estimate_cnn(pick(model_path, cfg.paths.model, "--model"), bundles)
                               : app::estimate_baseline(pick(corpus, cfg.paths.corpus, "--corpus"), bundles, cfg);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      app::write_estimates(out, rows, cfg);
      std::printf("%zu estimates\n", rows.size());
    } else if (evaluate->parsed()) {
      app::EvaluateOptions opts;
      if (!method.empty()) opts.method = method;
      opts.per_subject_csv = opt_path(per_subject);
      opts.plot_dir = opt_path(plot_dir);
      opts.model_path = opt_path(model_path);
      const auto r = app::evaluate(est_csv, ref_csv, out, cfg, opts);
      std::printf("%s: n %zu, MAE %.4f, RMSE %.4f, bias %.4f\n", r.method.c_str(), r.n, r.mae, r.rmse,
                  r.bland_altman.mean_bias);
    }
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return app::exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
