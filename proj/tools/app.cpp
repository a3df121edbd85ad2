#include "app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rrforge/baseline.hpp"
#include "rrforge/bundle.hpp"
#include "rrforge/error.hpp"
#include "rrforge/hash.hpp"
#include "rrforge/parallel.hpp"
#include "rrforge/recording.hpp"
#include "rrforge/synth.hpp"

namespace rrforge::app {
namespace {

using nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io_error, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    require(fs::is_directory(path.parent_path()), Errc::io_error,
            "output directory does not exist: " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io_error, "cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string provenance_line(const RunConfig& cfg) {
  return "# config_hash=" + hex64(config_hash(cfg)) + " seed=" + std::to_string(cfg.seed) + "\n";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const fs::path& path) {
  if (s.empty() || s == "nan" || s == "NaN") return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(end != s.c_str() && *end == '\0', Errc::invalid_argument, "bad number '" + s + "' in " + path.string());
  return v;
}

// Recording id "<subject>/<segment>"; window ids append "/w<k>".
std::string recording_of(const std::string& segment_id) {
  const auto cut = segment_id.rfind('/');
  require(cut != std::string::npos, Errc::invalid_argument, "segment id without recording: " + segment_id);
  return segment_id.substr(0, cut);
}

std::string subject_of(const std::string& segment_id) { return segment_id.substr(0, segment_id.find('/')); }

struct RecordingRef {
  std::string subject;
  std::string segment;
  fs::path wrist;
  std::optional<fs::path> chest;
  std::optional<bool> corrupted;
  std::optional<double> rr_truth;
  std::string id() const { return subject + "/" + segment; }
};

std::vector<RecordingRef> discover(const fs::path& corpus) {
  require(fs::is_directory(corpus), Errc::io_error, "corpus directory not found: " + corpus.string());
  std::vector<RecordingRef> refs;
  const auto manifest = corpus / "manifest.json";
  const auto chest_of = [](const fs::path& wrist) -> std::optional<fs::path> {
    auto name = wrist.filename().string();
    name = name.substr(0, name.size() - std::string(".wrist.csv").size()) + ".chest.csv";
    const auto p = wrist.parent_path() / name;
    return fs::exists(p) ? std::optional<fs::path>(p) : std::nullopt;
  };
  if (fs::exists(manifest)) {
    for (const auto& row : synth::read_manifest(manifest)) {
      RecordingRef r{row.subject_id, row.segment_id, corpus / row.subject_id / (row.segment_id + ".wrist.csv"), {},
                     row.corrupted, row.rr_truth};
      r.chest = chest_of(r.wrist);
      refs.push_back(std::move(r));
    }
  } else {
    std::vector<fs::path> subjects;
    for (const auto& e : fs::directory_iterator(corpus))
      if (e.is_directory()) subjects.push_back(e.path());
    std::sort(subjects.begin(), subjects.end());
    for (const auto& dir : subjects) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.size() > 10 && name.ends_with(".wrist.csv")) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        const auto name = f.filename().string();
        refs.push_back({dir.filename().string(), name.substr(0, name.size() - 10), f, chest_of(f), {}, {}});
      }
    }
  }
  require(!refs.empty(), Errc::invalid_argument, "corpus holds no recordings: " + corpus.string());
  return refs;
}

std::vector<pipeline::WindowInput> load_windows(const RecordingRef& ref, const pipeline::PrepareOptions& opts) {
  const auto wrist = read_wrist_csv(ref.wrist);
  if (ref.chest) {
    const auto chest = read_chest_csv(*ref.chest);
    return pipeline::window_recording(ref.subject, ref.id(), wrist, &chest, opts);
  }
  return pipeline::window_recording(ref.subject, ref.id(), wrist, nullptr, opts);
}

// Gate from a saved model, or fitted on the manifest's clean recordings.
quality::QualityModel obtain_gate(const std::vector<RecordingRef>& refs,
                                  const std::vector<std::vector<quality::QualityFeatures>>& features,
                                  const RunConfig& cfg, const std::optional<fs::path>& quality_model) {
  if (quality_model) return quality::load_quality_model(*quality_model);
  std::vector<quality::QualityFeatures> clean;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    require(refs[r].corrupted.has_value(), Errc::invalid_argument,
            "corpus has no manifest to select clean windows; pass a quality model");
    if (!*refs[r].corrupted) clean.insert(clean.end(), features[r].begin(), features[r].end());
  }
  return pipeline::fit_quality_gate(clean, cfg.quality, cfg.quality_max_windows, cfg.gate_seed());
}

json quality_json(const quality::QualityModel& m, const RunConfig& cfg) {
  auto j = json::parse(quality::to_json(m));
  j["config_hash"] = hex64(config_hash(cfg));
  j["seed"] = cfg.seed;
  return j;
}

template <typename T>
std::vector<T> get_list(const json& j, const char* key, std::vector<T> fallback) {
  return j.contains(key) ? j.at(key).get<std::vector<T>>() : fallback;
}

}  // namespace

// ---------------------------------------------------------------- RunConfig

model::ModelConfig RunConfig::model_config() const {
  auto m = model;
  m.init_seed = mix_seed(seed, 1);
  return m;
}

model::TrainConfig RunConfig::train_config() const {
  auto t = train;
  t.seed = mix_seed(seed, 2);
  return t;
}

pipeline::PrepareOptions RunConfig::prepare_options() const {
  pipeline::PrepareOptions p;
  p.window_s = window_s;
  p.stride_s = stride_s;
  p.random_windows = random_windows;
  p.window_seed = mix_seed(seed, 4);
  p.ica = ica;
  p.ica.seed = mix_seed(seed, 3);
  p.kalman = groundtruth;
  return p;
}

std::uint64_t RunConfig::gate_seed() const { return mix_seed(seed, 5); }

RunConfig run_config_from_json(const std::string& text) {
  RunConfig c;
  try {
    const auto j = json::parse(text);
    require(j.is_object(), Errc::invalid_config, "run config must be a JSON object");
    c.seed = j.value("seed", c.seed);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      auto& o = c.model;
      o.input_length = m.value("input_length", o.input_length);
      o.input_channels = m.value("input_channels", o.input_channels);
      o.branch_kernels = get_list(m, "branch_kernels", o.branch_kernels);
      o.branch_dilations = get_list(m, "branch_dilations", o.branch_dilations);
      o.stem_filters = m.value("stem_filters", o.stem_filters);
      o.max_filters = m.value("max_filters", o.max_filters);
      o.conv_kernel = m.value("conv_kernel", o.conv_kernel);
      o.conv_stride = m.value("conv_stride", o.conv_stride);
      o.head_hidden = m.value("head_hidden", o.head_hidden);
      o.leaky_slope = m.value("leaky_slope", o.leaky_slope);
      o.min_length = m.value("min_length", o.min_length);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      auto& o = c.train;
      o.epochs = t.value("epochs", o.epochs);
      o.steps_per_epoch = t.value("steps_per_epoch", o.steps_per_epoch);
      o.batch_size = t.value("batch_size", o.batch_size);
      o.lr0 = t.value("lr0", o.lr0);
      if (t.contains("early_stop_patience")) {
        const auto& p = t.at("early_stop_patience");
        o.early_stop_patience = p.is_null() ? model::kNoEarlyStop : p.get<std::size_t>();
      }
      o.init_output_bias = t.value("init_output_bias", o.init_output_bias);
    }
    if (j.contains("quality")) {
      const auto& q = j.at("quality");
      c.quality.nu = q.value("nu", c.quality.nu);
      c.quality.gamma = q.value("gamma", c.quality.gamma);
      c.quality.tolerance = q.value("tolerance", c.quality.tolerance);
      c.quality_max_windows = q.value("max_windows", c.quality_max_windows);
    }
    if (j.contains("groundtruth")) {
      const auto& g = j.at("groundtruth");
      c.groundtruth.q = g.value("q", c.groundtruth.q);
      c.groundtruth.r0 = g.value("r0", c.groundtruth.r0);
      c.groundtruth.eps = g.value("eps", c.groundtruth.eps);
    }
    if (j.contains("ica")) {
      const auto& i = j.at("ica");
      c.ica.max_iter = i.value("max_iter", c.ica.max_iter);
      c.ica.tol = i.value("tol", c.ica.tol);
    }
    if (j.contains("windowing")) {
      const auto& w = j.at("windowing");
      c.window_s = w.value("window_s", c.window_s);
      c.stride_s = w.value("stride_s", c.stride_s);
      c.random_windows = w.value("random_windows", c.random_windows);
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.val_subjects = get_list<std::string>(s, "val_subjects", {});
      c.test_subjects = get_list<std::string>(s, "test_subjects", {});
    }
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.paths.corpus = p.value("corpus", std::string{});
      c.paths.model = p.value("model", std::string{});
      c.paths.reports = p.value("reports", std::string{});
    }
  } catch (const json::exception& e) {
    fail(Errc::invalid_config, std::string("run config: ") + e.what());
  }
  c.model.validate();
  c.train.validate();
  require(c.quality.nu > 0.0 && c.quality.nu <= 1.0 && c.quality.gamma > 0.0, Errc::invalid_config,
          "quality.nu must lie in (0, 1] and quality.gamma must be positive");
  require(c.quality_max_windows >= 2, Errc::invalid_config, "quality.max_windows must be at least 2");
  require(c.groundtruth.q > 0.0 && c.groundtruth.r0 > 0.0 && c.groundtruth.eps > 0.0, Errc::invalid_config,
          "groundtruth parameters must be positive");
  require(c.window_s > 0.0 && c.stride_s > 0.0, Errc::invalid_config, "window and stride must be positive");
  return c;
}

std::string to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  const auto& m = c.model;
  j["model"] = {{"input_length", m.input_length},   {"input_channels", m.input_channels},
                {"branch_kernels", m.branch_kernels}, {"branch_dilations", m.branch_dilations},
                {"stem_filters", m.stem_filters},   {"max_filters", m.max_filters},
                {"conv_kernel", m.conv_kernel},     {"conv_stride", m.conv_stride},
                {"head_hidden", m.head_hidden},     {"leaky_slope", m.leaky_slope},
                {"min_length", m.min_length}};
  const auto& t = c.train;
  j["train"] = {{"epochs", t.epochs},
                {"steps_per_epoch", t.steps_per_epoch},
                {"batch_size", t.batch_size},
                {"lr0", t.lr0},
                {"early_stop_patience",
                 t.early_stop_patience == model::kNoEarlyStop ? json(nullptr) : json(t.early_stop_patience)},
                {"init_output_bias", t.init_output_bias}};
  j["quality"] = {{"nu", c.quality.nu},
                  {"gamma", c.quality.gamma},
                  {"tolerance", c.quality.tolerance},
                  {"max_windows", c.quality_max_windows}};
  j["groundtruth"] = {{"q", c.groundtruth.q}, {"r0", c.groundtruth.r0}, {"eps", c.groundtruth.eps}};
  j["ica"] = {{"max_iter", c.ica.max_iter}, {"tol", c.ica.tol}};
  j["windowing"] = {{"window_s", c.window_s}, {"stride_s", c.stride_s}, {"random_windows", c.random_windows}};
  j["split"] = {{"val_subjects", c.val_subjects}, {"test_subjects", c.test_subjects}};
  j["paths"] = {{"corpus", c.paths.corpus}, {"model", c.paths.model}, {"reports", c.paths.reports}};
  return j.dump(2);
}

RunConfig load_run_config(const fs::path& path) { return run_config_from_json(read_text(path)); }

std::uint64_t config_hash(const RunConfig& cfg) {
  // Paths locate artifacts but do not change results.
  auto j = json::parse(to_json(cfg));
  j.erase("paths");
  return fnv1a64(j.dump());
}

// ---------------------------------------------------------------- synth

SynthResult synth(const fs::path& spec_path, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
  auto spec = synth::corpus_spec_from_json(read_text(spec_path));
  if (seed) spec.seed = *seed;
  spec.validate();
  const auto canonical = synth::to_json(spec);
  const auto rows = synth::gen_corpus(spec, out_dir,
                                      {{"config_hash", hex64(fnv1a64(canonical))}, {"seed", std::to_string(spec.seed)}});
  return {rows.size(), fnv1a64(read_text(out_dir / "manifest.json"))};
}

// ---------------------------------------------------------------- prepare

PrepareStats prepare(const fs::path& corpus, const fs::path& out_dir, const RunConfig& cfg,
                     const std::optional<fs::path>& quality_model) {
  const auto refs = discover(corpus);
  require(fs::is_directory(out_dir) || (out_dir.has_parent_path() ? fs::is_directory(out_dir.parent_path()) : true),
          Errc::io_error, "output parent directory does not exist: " + out_dir.string());
  fs::create_directories(out_dir);
  const auto opts = cfg.prepare_options();

  std::vector<std::vector<pipeline::ProcessedWindow>> processed(refs.size());
  parallel_for(refs.size(), [&](std::size_t r) {
    const auto windows = load_windows(refs[r], opts);
    processed[r] = pipeline::process_recording(windows, opts);
  });

  std::vector<std::vector<quality::QualityFeatures>> features(refs.size());
  std::size_t total = 0;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    for (const auto& p : processed[r]) features[r].push_back(p.features);
    total += processed[r].size();
  }
  require(total > 0, Errc::invalid_argument, "corpus yields no complete windows");
  const auto gate = obtain_gate(refs, features, cfg, quality_model);
  write_text(out_dir / "quality_model.json", quality_json(gate, cfg).dump(2));

  PrepareStats st;
  st.recordings = refs.size();
  st.windows = total;
  std::vector<SegmentBundle> kept;
  std::vector<double> labels;
  std::size_t clean = 0, clean_ok = 0, corrupted = 0, corrupted_rejected = 0, acc_low = 0, gyr_low = 0;
  auto labels_csv = open_out(out_dir / "labels.csv");
  auto rejected_csv = open_out(out_dir / "rejected.csv");
  labels_csv << provenance_line(cfg) << "subject_id,segment_id,rr_ref,confidence,rr_truth\n";
  rejected_csv << provenance_line(cfg) << "subject_id,segment_id,score\n";
  for (std::size_t r = 0; r < refs.size(); ++r) {
    for (auto& p : processed[r]) {
      const auto verdict = quality::assess(p.features, gate);
      if (refs[r].corrupted) {
        if (*refs[r].corrupted) {
          ++corrupted;
          corrupted_rejected += !verdict.accept;
        } else {
          ++clean;
          clean_ok += verdict.accept;
        }
      }
      if (!verdict.accept) {
        rejected_csv << p.bundle.subject_id << ',' << p.bundle.segment_id << ',' << num(verdict.score) << '\n';
        continue;
      }
      acc_low += p.acc_low_confidence;
      gyr_low += p.gyr_low_confidence;
      if (p.bundle.has_label()) {
        labels.push_back(p.bundle.label);
        labels_csv << p.bundle.subject_id << ',' << p.bundle.segment_id << ',' << num(p.label->rr) << ','
                   << num(p.label->confidence) << ',' << num(refs[r].rr_truth.value_or(std::nan(""))) << '\n';
      }
      kept.push_back(std::move(p.bundle));
    }
  }
  st.accepted = kept.size();
  st.labelled = labels.size();
  st.acceptance_rate = static_cast<double>(st.accepted) / static_cast<double>(total);
  save_bundles(out_dir / "segments.bin", kept);

  json j;
  j["config_hash"] = hex64(config_hash(cfg));
  j["seed"] = cfg.seed;
  j["recordings"] = st.recordings;
  j["windows"] = st.windows;
  j["accepted"] = st.accepted;
  j["acceptance_rate"] = st.acceptance_rate;
  j["labelled"] = st.labelled;
  j["low_confidence_resp"] = {{"acc", acc_low}, {"gyr", gyr_low}};
  if (!labels.empty()) {
    std::vector<std::size_t> hist(14, 0);  // 2 brpm bins from 4 to 32
    for (const double v : labels) hist[std::min<std::size_t>(13, static_cast<std::size_t>(std::max(0.0, (v - 4.0) / 2.0)))]++;
    j["labels"] = {{"mean", mean(labels)},
                   {"sd", std::sqrt(variance(labels))},
                   {"min", *std::min_element(labels.begin(), labels.end())},
                   {"max", *std::max_element(labels.begin(), labels.end())},
                   {"histogram_lower_edges", json::array({4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30})},
                   {"histogram_counts", hist}};
  }
  if (clean + corrupted > 0) {
    j["manifest"] = {{"clean_windows", clean},
                     {"clean_accepted", clean_ok},
                     {"corrupted_windows", corrupted},
                     {"corrupted_rejected", corrupted_rejected}};
  }
  write_text(out_dir / "stats.json", j.dump(2));
  return st;
}

std::size_t filter(const fs::path& corpus, const fs::path& out_csv, const RunConfig& cfg,
                   const std::optional<fs::path>& quality_model) {
  const auto refs = discover(corpus);
  const auto opts = cfg.prepare_options();
  std::vector<std::vector<pipeline::WindowInput>> windows(refs.size());
  std::vector<std::vector<quality::QualityFeatures>> features(refs.size());
  parallel_for(refs.size(), [&](std::size_t r) {
    windows[r] = load_windows(refs[r], opts);
    for (const auto& w : windows[r])
      features[r].push_back(quality::extract_quality_features(minmax_normalize(w.ppg), kAnalysisRate));
  });
  const auto gate = obtain_gate(refs, features, cfg, quality_model);
  auto out = open_out(out_csv);
  out << provenance_line(cfg) << "subject_id,segment_id,score,accept\n";
  std::size_t accepted = 0;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    for (std::size_t k = 0; k < windows[r].size(); ++k) {
      const auto v = quality::assess(features[r][k], gate);
      accepted += v.accept;
      out << windows[r][k].subject_id << ',' << windows[r][k].segment_id << ',' << num(v.score) << ','
          << (v.accept ? 1 : 0) << '\n';
    }
  }
  return accepted;
}

// ---------------------------------------------------------------- single recordings

std::size_t extract_resp(const fs::path& wrist_csv, const fs::path& out_csv, const RunConfig& cfg) {
  const auto wrist = read_wrist_csv(wrist_csv);
  const auto opts = cfg.prepare_options();
  auto stem = wrist_csv.filename().string();
  if (stem.ends_with(".wrist.csv")) stem.resize(stem.size() - 10);
  const auto windows = pipeline::window_recording("", stem, wrist, nullptr, opts);
  auto out = open_out(out_csv);
  out << provenance_line(cfg) << "segment_id,t,resp_acc,resp_gyr,acc_low_confidence,gyr_low_confidence\n";
  for (const auto& w : windows) {
    const auto acc = resp::extract_respiration(w.acc, opts.ica);
    const auto gyr = resp::extract_respiration(w.gyr, opts.ica);
    for (std::size_t i = 0; i < acc.waveform.size(); ++i) {
      out << w.segment_id << ',' << num(static_cast<double>(i) / kAnalysisRate) << ',' << num(acc.waveform[i]) << ','
          << num(gyr.waveform[i]) << ',' << acc.low_confidence << ',' << gyr.low_confidence << '\n';
    }
  }
  return windows.size();
}

std::size_t gt_extract(const fs::path& chest_csv, const fs::path& out_csv, const RunConfig& cfg) {
  const auto chest = read_chest_csv(chest_csv);
  std::map<std::string, SampledSignal> channels;
  channels["x"] = resample_linear({chest.acc.x, chest.acc.rate}, kAnalysisRate);
  channels["y"] = resample_linear({chest.acc.y, chest.acc.rate}, kAnalysisRate);
  channels["z"] = resample_linear({chest.acc.z, chest.acc.rate}, kAnalysisRate);
  auto stem = chest_csv.filename().string();
  if (stem.ends_with(".chest.csv")) stem.resize(stem.size() - 10);
  gt::GroundTruthExtractor labeller(cfg.groundtruth);
  auto out = open_out(out_csv);
  out << provenance_line(cfg) << "segment_id,rr_ref,confidence\n";
  const auto windows = segment(channels, cfg.window_s, cfg.stride_s);
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    const auto label = labeller.next({w.channels.at("x"), w.channels.at("y"), w.channels.at("z"), kAnalysisRate});
    out << stem << "/w" << k << ',' << (label.available ? num(label.rr) : "nan") << ',' << num(label.confidence)
        << '\n';
  }
  return windows.size();
}

// ---------------------------------------------------------------- train

std::vector<SegmentBundle> load_prepared(const fs::path& data) {
  const auto file = fs::is_directory(data) ? data / "segments.bin" : data;
  require(fs::exists(file), Errc::io_error, "segment store not found: " + file.string());
  return load_bundles(file);
}

Split split_bundles(std::vector<SegmentBundle> bundles, const RunConfig& cfg) {
  std::erase_if(bundles, [](const SegmentBundle& b) { return !b.has_label(); });
  require(!bundles.empty(), Errc::invalid_training_set, "no labelled segments (corpus without chest data?)");
  std::set<std::string> subjects;
  for (const auto& b : bundles) subjects.insert(b.subject_id);
  const std::set<std::string> test(cfg.test_subjects.begin(), cfg.test_subjects.end());
  std::set<std::string> val(cfg.val_subjects.begin(), cfg.val_subjects.end());
  for (const auto& s : val) {
    require(!test.contains(s), Errc::invalid_split, "subject " + s + " is both a validation and a test subject");
    require(subjects.contains(s), Errc::invalid_argument, "validation subject " + s + " has no labelled segments");
  }
  if (val.empty()) {
    std::vector<std::string> remaining;
    for (const auto& s : subjects)
      if (!test.contains(s)) remaining.push_back(s);
    require(remaining.size() >= 2, Errc::invalid_split, "need at least two non-test subjects to hold one out");
    val.insert(remaining.back());
  }
  Split out;
  for (auto& b : bundles) {
    if (test.contains(b.subject_id)) {
      out.test.push_back(std::move(b));
    } else if (val.contains(b.subject_id)) {
      out.val.push_back(std::move(b));
    } else {
      out.train.push_back(std::move(b));
    }
  }
  require(!out.train.empty(), Errc::invalid_split, "no training subjects left after the split");
  return out;
}

model::History train(const fs::path& data, const fs::path& model_out, const std::optional<fs::path>& history_csv,
                     const RunConfig& cfg, const std::optional<fs::path>& val_data, bool verbose) {
  Split split;
  if (val_data) {
    auto all = load_prepared(data);
    const std::set<std::string> test(cfg.test_subjects.begin(), cfg.test_subjects.end());
    for (auto& b : all)
      if (b.has_label() && !test.contains(b.subject_id)) split.train.push_back(std::move(b));
    for (auto& b : load_prepared(*val_data))
      if (b.has_label()) split.val.push_back(std::move(b));
    require(!split.train.empty() && !split.val.empty(), Errc::invalid_training_set, "no labelled segments to train on");
    model::check_disjoint_subjects(split.train, split.val);
  } else {
    split = split_bundles(load_prepared(data), cfg);
  }
  auto model = model::build_model(cfg.model_config());
  model::EpochCallback progress;
  if (verbose) {
    progress = [](const model::EpochRecord& r) {
      std::fprintf(stderr, "epoch %zu train_loss %.4f val_mae %.4f lr %.3g\n", r.epoch, r.train_loss, r.val_mae, r.lr);
    };
  }
  const auto history = model::train(model, split.train, split.val, cfg.train_config(), progress);
  model::save_model(model_out, model, config_hash(cfg));
  if (history_csv) {
    auto out = open_out(*history_csv);
    out << provenance_line(cfg) << "epoch,train_loss,val_mae,lr\n";
    for (const auto& r : history.epochs) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.val_mae, r.lr);
      out << buf;
    }
  }
  return history;
}

// ---------------------------------------------------------------- estimate

std::vector<Estimate> estimate_cnn(const fs::path& model_path, const std::vector<SegmentBundle>& bundles) {
  require(fs::exists(model_path), Errc::io_error, "model file not found: " + model_path.string());
  auto model = model::load_model(model_path);
  const auto pred = model::predict(model, bundles);
  std::vector<Estimate> out;
  for (std::size_t i = 0; i < bundles.size(); ++i)
    out.push_back({bundles[i].subject_id, bundles[i].segment_id, pred[i], 1.0, "cnn"});
  return out;
}

std::vector<Estimate> estimate_baseline(const fs::path& corpus, const std::vector<SegmentBundle>& bundles,
                                        const RunConfig& cfg) {
  std::map<std::string, std::vector<std::size_t>> by_recording;
  for (std::size_t i = 0; i < bundles.size(); ++i) by_recording[recording_of(bundles[i].segment_id)].push_back(i);
  std::vector<std::pair<std::string, std::vector<std::size_t>>> jobs(by_recording.begin(), by_recording.end());
  std::vector<Estimate> out(bundles.size());
  const auto opts = cfg.prepare_options();
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto& [rec, idx] = jobs[j];
    const auto cut = rec.find('/');
    RecordingRef ref{rec.substr(0, cut), rec.substr(cut + 1), corpus / (rec + ".wrist.csv"), {}, {}, {}};
    const auto chest = corpus / (rec + ".chest.csv");
    if (fs::exists(chest)) ref.chest = chest;
    const auto windows = load_windows(ref, opts);
    for (const auto i : idx) {
      const auto& b = bundles[i];
      const auto w = std::find_if(windows.begin(), windows.end(),
                                  [&](const pipeline::WindowInput& x) { return x.segment_id == b.segment_id; });
      require(w != windows.end(), Errc::invalid_argument, "window " + b.segment_id + " not found in the corpus");
      const auto r = baseline::baseline_rr(w->ppg, w->acc, kAnalysisRate);
      out[i] = {b.subject_id, b.segment_id, r.available ? r.rr : std::nan(""), r.quality, "baseline"};
    }
  });
  return out;
}

void write_estimates(const fs::path& path, const std::vector<Estimate>& rows, const RunConfig& cfg) {
  auto out = open_out(path);
  out << provenance_line(cfg) << "subject_id,segment_id,rr_est,quality,method\n";
  for (const auto& r : rows)
    out << r.subject_id << ',' << r.segment_id << ',' << num(r.rr) << ',' << num(r.quality) << ',' << r.method << '\n';
}

std::vector<Estimate> read_estimates(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io_error, "cannot read " + path.string());
  std::string line;
  std::map<std::string, std::size_t> col;
  std::vector<Estimate> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (col.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
      require(col.contains("segment_id") && (col.contains("rr_est") || col.contains("rr_ref")), Errc::invalid_argument,
              path.string() + " needs segment_id and rr_est or rr_ref columns");
      continue;
    }
    require(cells.size() == col.size(), Errc::invalid_argument, "ragged row in " + path.string() + ": " + line);
    Estimate e;
    e.segment_id = cells[col.at("segment_id")];
    e.subject_id = col.contains("subject_id") ? cells[col.at("subject_id")] : subject_of(e.segment_id);
    e.rr = parse_number(cells[col.contains("rr_est") ? col.at("rr_est") : col.at("rr_ref")], path);
    if (col.contains("quality")) e.quality = parse_number(cells[col.at("quality")], path);
    if (col.contains("confidence")) e.quality = parse_number(cells[col.at("confidence")], path);
    if (col.contains("method")) e.method = cells[col.at("method")];
    rows.push_back(std::move(e));
  }
  require(!col.empty(), Errc::invalid_argument, path.string() + " has no header");
  return rows;
}

// ---------------------------------------------------------------- evaluate

metrics::EvalReport evaluate(const fs::path& est_csv, const fs::path& ref_csv, const fs::path& report_json,
                             const RunConfig& cfg, const EvaluateOptions& opts) {
  auto est = read_estimates(est_csv);
  std::set<std::string> methods;
  for (const auto& e : est) methods.insert(e.method);
  require(opts.method || methods.size() <= 1, Errc::invalid_argument,
          "estimates hold several methods; choose one with --method");
  std::string method = opts.method.value_or(methods.empty() ? "" : *methods.begin());
  if (opts.method) std::erase_if(est, [&](const Estimate& e) { return e.method != method; });
  if (method.empty()) method = "estimate";

  std::map<std::string, Estimate> ref;
  for (auto& r : read_estimates(ref_csv)) ref.emplace(r.segment_id, std::move(r));

  std::vector<double> e_rr, r_rr;
  std::vector<std::string> subj, ids;
  std::size_t matched = 0;
  for (const auto& e : est) {
    const auto it = ref.find(e.segment_id);
    if (it == ref.end() || !std::isfinite(it->second.rr)) continue;
    ++matched;
    if (!std::isfinite(e.rr)) continue;
    e_rr.push_back(e.rr);
    r_rr.push_back(it->second.rr);
    subj.push_back(it->second.subject_id);
    ids.push_back(e.segment_id);
  }
  require(matched > 0, Errc::invalid_argument, "no estimate matches a reference segment");
  require(e_rr.size() >= 2, Errc::invalid_argument, "fewer than two available estimates to evaluate");

  auto report = metrics::evaluate(method, e_rr, r_rr, subj);
  if (opts.model_path) report.param_count = model::count_params(model::load_model(*opts.model_path));

  json j;
  j["config_hash"] = hex64(config_hash(cfg));
  j["seed"] = cfg.seed;
  j["method"] = report.method;
  j["n"] = report.n;
  j["n_matched"] = matched;
  j["coverage"] = static_cast<double>(report.n) / static_cast<double>(matched);
  j["mae"] = report.mae;
  j["rmse"] = report.rmse;
  j["bland_altman"] = {{"mean_bias", report.bland_altman.mean_bias},
                       {"loa_low", report.bland_altman.loa_low},
                       {"loa_high", report.bland_altman.loa_high}};
  j["abs_error_quartiles"] = {{"q1", report.abs_err.q1}, {"median", report.abs_err.median}, {"q3", report.abs_err.q3}};
  j["param_count"] = report.param_count ? json(*report.param_count) : json(nullptr);
  j["across_subjects"] = {{"mae_mean", report.subject_mae_mean},
                          {"mae_sd", report.subject_mae_sd},
                          {"rmse_mean", report.subject_rmse_mean},
                          {"rmse_sd", report.subject_rmse_sd}};
  j["per_subject"] = json::array();
  for (const auto& s : report.subjects)
    j["per_subject"].push_back({{"subject_id", s.subject_id}, {"n", s.n}, {"mae", s.mae}, {"rmse", s.rmse}});
  write_text(report_json, j.dump(2) + "\n");

  if (opts.per_subject_csv) {
    auto out = open_out(*opts.per_subject_csv);
    out << provenance_line(cfg) << "subject_id,n,mae,rmse\n";
    for (const auto& s : report.subjects)
      out << s.subject_id << ',' << s.n << ',' << num(s.mae) << ',' << num(s.rmse) << '\n';
  }
  if (opts.plot_dir) {
    require(fs::is_directory(*opts.plot_dir) || fs::create_directories(*opts.plot_dir), Errc::io_error,
            "cannot create " + opts.plot_dir->string());
    auto box = open_out(*opts.plot_dir / "boxplot.csv");
    auto ba = open_out(*opts.plot_dir / "bland_altman.csv");
    box << provenance_line(cfg) << "subject_id,segment_id,abs_error\n";
    ba << provenance_line(cfg) << "segment_id,mean,diff\n";
    for (std::size_t i = 0; i < e_rr.size(); ++i) {
      box << subj[i] << ',' << ids[i] << ',' << num(std::abs(e_rr[i] - r_rr[i])) << '\n';
      ba << ids[i] << ',' << num(0.5 * (e_rr[i] + r_rr[i])) << ',' << num(e_rr[i] - r_rr[i]) << '\n';
    }
  }
  return report;
}

int exit_code(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_split: return 3;
    case Errc::numeric_failure: return 1;
    default: return 2;
  }
}

}  // namespace rrforge::app
