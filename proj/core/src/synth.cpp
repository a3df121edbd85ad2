#include "rrforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "rrforge/error.hpp"
#include "rrforge/hash.hpp"
#include "rrforge/parallel.hpp"
#include "rrforge/spectral.hpp"

namespace rrforge::synth {
namespace {

using nlohmann::json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_range(double v, double lo, double hi, const char* name) {
  require(std::isfinite(v) && v >= lo && v <= hi, Errc::invalid_config,
          std::string(name) + " = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
              std::to_string(hi) + "]");
}

std::array<double, 3> random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::array<double, 3> d{n(rng), n(rng), n(rng)};
  const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  for (auto& v : d) v /= norm;
  return d;
}

std::vector<double> white(std::size_t n, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = sd * dist(rng);
  return v;
}

// Unit-variance Gaussian noise confined to roughly 0.05-0.7 Hz.
std::vector<double> slow_motion(std::size_t n, double rate, std::mt19937_64& rng) {
  const auto burn = static_cast<std::size_t>(20.0 * rate);
  const auto raw = white(n + burn, 1.0, rng);
  const auto sos = spectral::butter_bandpass(2, 0.05, 0.7, rate);
  auto y = spectral::sosfilt(sos, raw);
  std::vector<double> out(y.begin() + static_cast<std::ptrdiff_t>(burn), y.end());
  const double sd = std::sqrt(variance(out));
  if (sd > 0.0) {
    const double m = mean(out);
    for (auto& v : out) v = (v - m) / sd;
  }
  return out;
}

struct Chirp {
  Burst span;
  double f0, f1, amp_ppg, amp_imu;
  std::array<double, 3> dir_acc, dir_gyr;
};

// Linear 3-8 Hz sweep with raised-cosine edges; zero outside the burst.
double chirp_value(const Chirp& c, double t) {
  const double tau = t - c.span.start;
  if (tau < 0.0 || tau > c.span.length) return 0.0;
  const double ramp = std::min({1.0, tau / 0.25, (c.span.length - tau) / 0.25});
  const double env = 0.5 - 0.5 * std::cos(std::numbers::pi * ramp);
  const double phase = kTwoPi * (c.f0 * tau + 0.5 * (c.f1 - c.f0) * tau * tau / c.span.length);
  return env * std::sin(phase);
}

// Asymmetric two-Gaussian pulse: systolic peak at 0, diastolic wave later.
double pulse(double tau, double period) {
  const double sigma_s = std::min(0.12 * period, 0.09);
  const double sigma_d = 1.4 * sigma_s;
  const double delay = std::min(0.25 * period, 0.3);
  const double a = tau / sigma_s;
  const double b = (tau - delay) / sigma_d;
  return std::exp(-0.5 * a * a) + 0.45 * std::exp(-0.5 * b * b);
}

struct Mayer {
  double freq, phase;
};

std::vector<double> beat_times(const SynthSpec& s, double f_r, double phi, double theta0, const Mayer& mw) {
  const double fh = s.hr / 60.0;
  const double w = kTwoPi * f_r;
  const double wm = kTwoPi * mw.freq;
  // Cumulative beat phase for an instantaneous rate
  // fh * (1 + fm sin(w t + phi) + mayer sin(wm t + phase_m)).
  const auto theta = [&](double t) {
    return theta0 + fh * (t - s.fm_depth / w * (std::cos(w * t + phi) - std::cos(phi)) -
                          s.mayer_depth / wm * (std::cos(wm * t + mw.phase) - std::cos(mw.phase)));
  };
  std::vector<double> beats;
  const double t_lo = -2.0, t_hi = s.duration_s + 2.0;
  for (double k = std::ceil(theta(t_lo)); theta(t_hi) > k; k += 1.0) {
    double lo = t_lo, hi = t_hi;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (theta(mid) < k ? lo : hi) = mid;
    }
    beats.push_back(0.5 * (lo + hi));
  }
  return beats;
}

json spec_json(const SynthSpec& s) {
  return json{{"rr", s.rr},
              {"hr", s.hr},
              {"am_depth", s.am_depth},
              {"bw_depth", s.bw_depth},
              {"fm_depth", s.fm_depth},
              {"noise_std", s.noise_std},
              {"mayer_depth", s.mayer_depth},
              {"ppg_wander_std", s.ppg_wander_std},
              {"ibi_jitter_s", s.ibi_jitter_s},
              {"motion_burst_prob", s.motion_burst_prob},
              {"imu_resp_gain", s.imu_resp_gain},
              {"imu_motion_std", s.imu_motion_std},
              {"imu_noise_std", s.imu_noise_std},
              {"chest_noise_std", s.chest_noise_std},
              {"duration_s", s.duration_s},
              {"wrist_rate", s.wrist_rate},
              {"chest_rate", s.chest_rate},
              {"seed", s.seed}};
}

SynthSpec spec_from(const json& j) {
  SynthSpec s;
  s.rr = j.at("rr").get<double>();
  s.hr = j.at("hr").get<double>();
  s.am_depth = j.at("am_depth").get<double>();
  s.bw_depth = j.at("bw_depth").get<double>();
  s.fm_depth = j.at("fm_depth").get<double>();
  s.noise_std = j.at("noise_std").get<double>();
  s.mayer_depth = j.value("mayer_depth", 0.0);
  s.ppg_wander_std = j.value("ppg_wander_std", 0.0);
  s.ibi_jitter_s = j.value("ibi_jitter_s", 0.0);
  s.motion_burst_prob = j.at("motion_burst_prob").get<double>();
  s.imu_resp_gain = j.at("imu_resp_gain").get<double>();
  s.imu_motion_std = j.value("imu_motion_std", 0.0);
  s.imu_noise_std = j.value("imu_noise_std", s.imu_noise_std);
  s.chest_noise_std = j.value("chest_noise_std", s.chest_noise_std);
  s.duration_s = j.value("duration_s", s.duration_s);
  s.wrist_rate = j.value("wrist_rate", s.wrist_rate);
  s.chest_rate = j.value("chest_rate", s.chest_rate);
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

void SynthSpec::validate() const {
  check_range(rr, 6.0, 30.0, "rr");
  check_range(hr, 40.0, 180.0, "hr");
  check_range(am_depth, 0.0, 0.5, "am_depth");
  check_range(bw_depth, 0.0, 0.5, "bw_depth");
  check_range(fm_depth, 0.0, 0.5, "fm_depth");
  check_range(motion_burst_prob, 0.0, 1.0, "motion_burst_prob");
  check_range(noise_std, 0.0, 1e6, "noise_std");
  check_range(mayer_depth, 0.0, 0.5, "mayer_depth");
  check_range(ppg_wander_std, 0.0, 1e6, "ppg_wander_std");
  check_range(ibi_jitter_s, 0.0, 0.2, "ibi_jitter_s");
  check_range(imu_resp_gain, 0.0, 1e6, "imu_resp_gain");
  check_range(imu_motion_std, 0.0, 1e6, "imu_motion_std");
  check_range(imu_noise_std, 0.0, 1e6, "imu_noise_std");
  check_range(chest_noise_std, 0.0, 1e6, "chest_noise_std");
  check_range(duration_s, 10.0, 86400.0, "duration_s");
  check_range(wrist_rate, 10.0, 10000.0, "wrist_rate");
  check_range(chest_rate, 10.0, 10000.0, "chest_rate");
}

SynthSegment gen_segment(const SynthSpec& s) {
  s.validate();
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  SynthSegment seg;
  const double f_r = s.rr / 60.0;
  seg.rr_truth = f_r * 60.0;
  const double w = kTwoPi * f_r;
  const double phi = uniform(0.0, kTwoPi);
  const double theta0 = u01(rng);
  const double period = 60.0 / s.hr;
  const Mayer mayer{uniform(0.08, 0.12), uniform(0.0, kTwoPi)};
  seg.beat_times = beat_times(s, f_r, phi, theta0, mayer);
  if (s.ibi_jitter_s > 0.0) {
    std::normal_distribution<double> jitter(0.0, s.ibi_jitter_s);
    for (auto& b : seg.beat_times) b += jitter(rng);
    std::sort(seg.beat_times.begin(), seg.beat_times.end());
  }

  std::vector<Chirp> chirps;
  if (u01(rng) < s.motion_burst_prob) {
    const int count = 1 + static_cast<int>(u01(rng) * 3.0);
    for (int i = 0; i < count; ++i) {
      Chirp c{};
      c.span.length = uniform(3.0, 7.0);
      c.span.start = uniform(0.0, s.duration_s - c.span.length);
      c.f0 = uniform(3.0, 8.0);
      c.f1 = uniform(3.0, 8.0);
      c.amp_ppg = uniform(1.0, 2.5);
      c.amp_imu = uniform(0.3, 1.0);
      c.dir_acc = random_direction(rng);
      c.dir_gyr = random_direction(rng);
      chirps.push_back(c);
      seg.bursts.push_back(c.span);
    }
  }

  // Wrist channels.
  const auto n = static_cast<std::size_t>(std::llround(s.duration_s * s.wrist_rate)) + 1;
  auto& wr = seg.wrist;
  wr.ppg.rate = s.wrist_rate;
  wr.ppg.samples.assign(n, 0.0);
  const auto ppg_noise = white(n, s.noise_std, rng);
  const auto wander = slow_motion(n, s.wrist_rate, rng);
  std::size_t first_beat = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / s.wrist_rate;
    while (first_beat < seg.beat_times.size() && seg.beat_times[first_beat] < t - 1.5) ++first_beat;
    double train = 0.0;
    for (std::size_t b = first_beat; b < seg.beat_times.size() && seg.beat_times[b] < t + 1.5; ++b) {
      train += pulse(t - seg.beat_times[b], period);
    }
    const double resp = std::sin(w * t + phi);
    const double vaso = s.mayer_depth * std::sin(kTwoPi * mayer.freq * t + mayer.phase);
    double v = (1.0 + s.am_depth * resp + vaso) * train + s.bw_depth * resp + s.ppg_wander_std * wander[i] +
               ppg_noise[i];
    for (const auto& c : chirps) v += c.amp_ppg * chirp_value(c, t);
    wr.ppg.samples[i] = v;
  }

  const auto gravity = random_direction(rng);
  const auto load_acc = random_direction(rng);
  const auto load_gyr = random_direction(rng);
  const auto load_card = random_direction(rng);
  const auto motion_dir_acc = random_direction(rng);
  const auto motion_dir_gyr = random_direction(rng);
  const auto motion_acc = slow_motion(n, s.wrist_rate, rng);
  const auto motion_gyr = slow_motion(n, s.wrist_rate, rng);
  constexpr double kGyrScale = 5.0;
  std::array<std::vector<double>*, 3> acc{&wr.acc.x, &wr.acc.y, &wr.acc.z};
  std::array<std::vector<double>*, 3> gyr{&wr.gyr.x, &wr.gyr.y, &wr.gyr.z};
  wr.acc.rate = wr.gyr.rate = s.wrist_rate;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto na = white(n, s.imu_noise_std, rng);
    const auto ng = white(n, kGyrScale * s.imu_noise_std, rng);
    acc[k]->resize(n);
    gyr[k]->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / s.wrist_rate;
      const double resp = std::sin(w * t + phi);
      const double resp_rate = std::cos(w * t + phi);
      const double cardiac = std::sin(kTwoPi * s.hr / 60.0 * t);
      double a = gravity[k] + s.imu_resp_gain * (load_acc[k] * resp + 0.2 * load_card[k] * cardiac) +
                 s.imu_motion_std * motion_dir_acc[k] * motion_acc[i] + na[i];
      double g = kGyrScale * (s.imu_resp_gain * load_gyr[k] * resp_rate +
                              s.imu_motion_std * motion_dir_gyr[k] * motion_gyr[i]) +
                 ng[i];
      for (const auto& c : chirps) {
        const double m = chirp_value(c, t);
        a += c.amp_imu * c.dir_acc[k] * m;
        g += kGyrScale * c.amp_imu * c.dir_gyr[k] * m;
      }
      (*acc[k])[i] = a;
      (*gyr[k])[i] = g;
    }
  }

  // Chest band: respiration dominant on one axis.
  const auto nc = static_cast<std::size_t>(std::llround(s.duration_s * s.chest_rate)) + 1;
  const auto dominant = static_cast<std::size_t>(u01(rng) * 3.0) % 3;
  std::array<double, 3> load{};
  for (std::size_t k = 0; k < 3; ++k) load[k] = k == dominant ? 1.0 : uniform(-0.3, 0.3);
  const auto chest_gravity = random_direction(rng);
  constexpr double kChestResp = 0.03;
  auto& ch = seg.chest;
  ch.acc.rate = s.chest_rate;
  std::array<std::vector<double>*, 3> cax{&ch.acc.x, &ch.acc.y, &ch.acc.z};
  for (std::size_t k = 0; k < 3; ++k) {
    auto noise = white(nc, s.chest_noise_std, rng);
    for (std::size_t i = 0; i < nc; ++i) {
      const double t = static_cast<double>(i) / s.chest_rate;
      noise[i] += chest_gravity[k] + kChestResp * load[k] * std::sin(w * t + phi);
    }
    *cax[k] = std::move(noise);
  }
  return seg;
}

void CorpusSpec::validate() const {
  require(n_subjects >= 2, Errc::invalid_config, "a corpus needs at least two subjects");
  require(segments_per_subject >= 1, Errc::invalid_config, "segments_per_subject must be positive");
  require(rr_low <= rr_high && hr_low <= hr_high && depth_low <= depth_high && fm_low <= fm_high &&
              noise_low <= noise_high && mayer_low <= mayer_high && wander_low <= wander_high &&
              jitter_low <= jitter_high && imu_resp_gain_low <= imu_resp_gain_high && imu_motion_low <= imu_motion_high,
          Errc::invalid_config, "every range needs low <= high");
  check_range(rr_low, 6.0, 30.0, "rr_low");
  check_range(rr_high, 6.0, 30.0, "rr_high");
  check_range(hr_low, 40.0, 180.0, "hr_low");
  check_range(hr_high, 40.0, 180.0, "hr_high");
  check_range(depth_low, 0.0, 0.5, "depth_low");
  check_range(depth_high, 0.0, 0.5, "depth_high");
  check_range(fm_low, 0.0, 0.5, "fm_low");
  check_range(fm_high, 0.0, 0.5, "fm_high");
  check_range(noise_low, 0.0, 1e6, "noise_low");
  check_range(mayer_low, 0.0, 0.5, "mayer_low");
  check_range(mayer_high, 0.0, 0.5, "mayer_high");
  check_range(wander_low, 0.0, 1e6, "wander_low");
  check_range(jitter_low, 0.0, 0.2, "jitter_low");
  check_range(jitter_high, 0.0, 0.2, "jitter_high");
  check_range(imu_resp_gain_low, 0.0, 1e6, "imu_resp_gain_low");
  check_range(imu_motion_low, 0.0, 1e6, "imu_motion_low");
  check_range(corruption_fraction, 0.0, 1.0, "corruption_fraction");
  check_range(duration_s, 10.0, 86400.0, "duration_s");
}

std::vector<ManifestRow> plan_corpus(const CorpusSpec& c) {
  c.validate();
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  std::vector<ManifestRow> rows;
  char buf[32];
  for (std::size_t s = 0; s < c.n_subjects; ++s) {
    SynthSpec base;
    const double hr_base = uniform(c.hr_low, c.hr_high);
    base.am_depth = uniform(c.depth_low, c.depth_high);
    base.bw_depth = uniform(c.depth_low, c.depth_high);
    base.fm_depth = uniform(c.fm_low, c.fm_high);
    base.noise_std = uniform(c.noise_low, c.noise_high);
    base.mayer_depth = uniform(c.mayer_low, c.mayer_high);
    base.ppg_wander_std = uniform(c.wander_low, c.wander_high);
    base.ibi_jitter_s = uniform(c.jitter_low, c.jitter_high);
    base.imu_resp_gain = uniform(c.imu_resp_gain_low, c.imu_resp_gain_high);
    base.imu_motion_std = uniform(c.imu_motion_low, c.imu_motion_high);
    base.duration_s = c.duration_s;
    std::snprintf(buf, sizeof buf, "S%02zu", s + 1);
    const std::string subject = buf;
    for (std::size_t k = 0; k < c.segments_per_subject; ++k) {
      ManifestRow row;
      row.subject_id = subject;
      std::snprintf(buf, sizeof buf, "seg%04zu", k + 1);
      row.segment_id = buf;
      row.spec = base;
      row.spec.rr = uniform(c.rr_low, c.rr_high);
      row.spec.hr = std::clamp(hr_base * uniform(0.92, 1.08), 40.0, 180.0);
      row.spec.seed = mix_seed(c.seed, s * 1'000'003ull + k);
      row.rr_truth = row.spec.rr / 60.0 * 60.0;
      rows.push_back(std::move(row));
    }
  }

  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_bad = static_cast<std::size_t>(std::llround(c.corruption_fraction * static_cast<double>(rows.size())));
  for (std::size_t i = 0; i < n_bad; ++i) {
    rows[order[i]].corrupted = true;
    rows[order[i]].spec.motion_burst_prob = 1.0;
  }
  return rows;
}

std::vector<ManifestRow> gen_corpus(const CorpusSpec& spec, const std::filesystem::path& dir,
                                    const std::vector<std::pair<std::string, std::string>>& extra_meta) {
  auto rows = plan_corpus(spec);
  std::error_code ec;
  const auto parent = dir.has_parent_path() ? dir.parent_path() : std::filesystem::path(".");
  require(std::filesystem::is_directory(parent, ec), Errc::io_error,
          "output parent directory does not exist: " + parent.string());
  std::filesystem::create_directories(dir, ec);
  require(!ec, Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t s = 0; s < spec.n_subjects; ++s) {
    std::filesystem::create_directories(dir / rows[s * spec.segments_per_subject].subject_id, ec);
    require(!ec, Errc::io_error, "cannot create subject directory: " + ec.message());
  }

  parallel_for(rows.size(), [&](std::size_t i) {
    const auto& row = rows[i];
    const auto seg = gen_segment(row.spec);
    write_wrist_csv(dir / row.subject_id / (row.segment_id + ".wrist.csv"), seg.wrist);
    write_chest_csv(dir / row.subject_id / (row.segment_id + ".chest.csv"), seg.chest);
  });

  json m;
  for (const auto& [k, v] : extra_meta) m[k] = v;
  m["corpus_spec"] = json::parse(to_json(spec));
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"subject_id", r.subject_id},
                   {"segment_id", r.segment_id},
                   {"rr_truth", r.rr_truth},
                   {"corrupted", r.corrupted},
                   {"spec", spec_json(r.spec)}});
  }
  m["segments"] = std::move(arr);
  std::ofstream out(dir / "manifest.json");
  require(out.is_open(), Errc::io_error, "cannot write manifest in " + dir.string());
  out << m.dump(1) << '\n';
  return rows;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  require(in.is_open(), Errc::io_error, "cannot open " + manifest_path.string());
  std::vector<ManifestRow> rows;
  try {
    const json m = json::parse(in);
    for (const auto& e : m.at("segments")) {
      ManifestRow r;
      r.subject_id = e.at("subject_id").get<std::string>();
      r.segment_id = e.at("segment_id").get<std::string>();
      r.rr_truth = e.at("rr_truth").get<double>();
      r.corrupted = e.at("corrupted").get<bool>();
      r.spec = spec_from(e.at("spec"));
      rows.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    fail(Errc::io_error, "malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  return rows;
}

std::string to_json(const CorpusSpec& c) {
  return json{{"n_subjects", c.n_subjects},
              {"segments_per_subject", c.segments_per_subject},
              {"rr_range", {c.rr_low, c.rr_high}},
              {"hr_range", {c.hr_low, c.hr_high}},
              {"depth_range", {c.depth_low, c.depth_high}},
              {"fm_range", {c.fm_low, c.fm_high}},
              {"noise_range", {c.noise_low, c.noise_high}},
              {"mayer_range", {c.mayer_low, c.mayer_high}},
              {"wander_range", {c.wander_low, c.wander_high}},
              {"jitter_range", {c.jitter_low, c.jitter_high}},
              {"imu_resp_gain_range", {c.imu_resp_gain_low, c.imu_resp_gain_high}},
              {"imu_motion_range", {c.imu_motion_low, c.imu_motion_high}},
              {"corruption_fraction", c.corruption_fraction},
              {"duration_s", c.duration_s},
              {"seed", c.seed}}
      .dump();
}

CorpusSpec corpus_spec_from_json(const std::string& text) {
  CorpusSpec c;
  try {
    const json j = json::parse(text);
    const auto range = [&](const char* key, double& lo, double& hi) {
      if (j.contains(key)) {
        const auto& r = j.at(key);
        require(r.is_array() && r.size() == 2, Errc::invalid_config, std::string(key) + " must be [low, high]");
        lo = r[0].get<double>();
        hi = r[1].get<double>();
      }
    };
    c.n_subjects = j.value("n_subjects", c.n_subjects);
    c.segments_per_subject = j.value("segments_per_subject", c.segments_per_subject);
    range("rr_range", c.rr_low, c.rr_high);
    range("hr_range", c.hr_low, c.hr_high);
    range("depth_range", c.depth_low, c.depth_high);
    range("fm_range", c.fm_low, c.fm_high);
    range("noise_range", c.noise_low, c.noise_high);
    range("mayer_range", c.mayer_low, c.mayer_high);
    range("wander_range", c.wander_low, c.wander_high);
    range("jitter_range", c.jitter_low, c.jitter_high);
    range("imu_resp_gain_range", c.imu_resp_gain_low, c.imu_resp_gain_high);
    range("imu_motion_range", c.imu_motion_low, c.imu_motion_high);
    c.corruption_fraction = j.value("corruption_fraction", c.corruption_fraction);
    c.duration_s = j.value("duration_s", c.duration_s);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    fail(Errc::invalid_config, std::string("malformed corpus spec: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace rrforge::synth
