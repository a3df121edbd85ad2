#include "rrforge/baseline.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "rrforge/error.hpp"
#include "rrforge/groundtruth.hpp"
#include "rrforge/quality.hpp"
#include "rrforge/spectral.hpp"

namespace rrforge::baseline {
namespace {

struct Extremum {
  double t;
  double v;
};

// Vertex of the parabola through x[i-1], x[i], x[i+1].
Extremum refine(std::span<const double> x, std::size_t i, double rate) {
  if (i == 0 || i + 1 >= x.size()) return {static_cast<double>(i) / rate, x[i]};
  const double a = x[i - 1], b = x[i], c = x[i + 1];
  const double den = a - 2.0 * b + c;
  if (den == 0.0) return {static_cast<double>(i) / rate, b};
  const double p = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
  return {(static_cast<double>(i) + p) / rate, b - 0.25 * (a - c) * p};
}

std::vector<double> to_uniform(const std::vector<double>& t, const std::vector<double>& v, double t0, std::size_t n,
                               double rate) {
  std::vector<double> out(n);
  std::size_t k = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double tj = t0 + static_cast<double>(j) / rate;
    while (k + 2 < t.size() && t[k + 1] < tj) ++k;
    const double span = t[k + 1] - t[k];
    const double f = span > 0.0 ? std::clamp((tj - t[k]) / span, 0.0, 1.0) : 0.0;
    out[j] = v[k] + f * (v[k + 1] - v[k]);
  }
  return spectral::detrend_linear(out);
}

}  // namespace

std::optional<ModulationSet> extract_modulations(std::span<const double> ppg, double rate, double mod_rate) {
  require(rate > 0.0 && mod_rate > 0.0, Errc::invalid_argument, "rates must be positive");
  const auto peaks = quality::detect_cardiac_cycles(ppg, rate);
  if (peaks.size() < kMinBeats) return std::nullopt;

  std::vector<double> t, am, bw, fm;
  double prev_t = refine(ppg, peaks[0], rate).t;
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    const auto lo = ppg.begin() + static_cast<std::ptrdiff_t>(peaks[i - 1]);
    const auto hi = ppg.begin() + static_cast<std::ptrdiff_t>(peaks[i]);
    const auto trough_idx = static_cast<std::size_t>(std::min_element(lo, hi) - ppg.begin());
    const auto pk = refine(ppg, peaks[i], rate);
    const auto tr = refine(ppg, trough_idx, rate);
    t.push_back(pk.t);
    am.push_back(pk.v - tr.v);
    bw.push_back(0.5 * (pk.v + tr.v));
    fm.push_back(pk.t - prev_t);
    prev_t = pk.t;
  }

  ModulationSet m;
  m.rate = mod_rate;
  m.beats = peaks.size();
  m.am_mean = mean(am);
  m.bw_mean = mean(bw);
  m.fm_mean = mean(fm);
  const double t0 = t.front();
  const auto n = static_cast<std::size_t>(std::floor((t.back() - t0) * mod_rate)) + 1;
  if (n < 8) return std::nullopt;
  m.am = to_uniform(t, am, t0, n, mod_rate);
  m.bw = to_uniform(t, bw, t0, n, mod_rate);
  m.fm = to_uniform(t, fm, t0, n, mod_rate);
  return m;
}

std::vector<double> first_principal_axis(const TriaxialWindow& window) {
  window.validate();
  const std::size_t n = window.size();
  Eigen::MatrixXd x(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    x(static_cast<Eigen::Index>(i), 0) = window.x[i];
    x(static_cast<Eigen::Index>(i), 1) = window.y[i];
    x(static_cast<Eigen::Index>(i), 2) = window.z[i];
  }
  x.rowwise() -= x.colwise().mean();
  const Eigen::Matrix3d cov = (x.transpose() * x) / static_cast<double>(n);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const auto& ev = eig.eigenvalues();  // ascending

  Eigen::VectorXd proj;
  const double scale = std::max(cov.diagonal().maxCoeff(), 0.0);
  const bool degenerate = eig.info() != Eigen::Success || ev(2) <= 1e-12 * std::max(scale, 1e-300) ||
                          ev(2) - ev(1) <= 1e-9 * ev(2);
  if (degenerate) {
    Eigen::Index best = 0;
    cov.diagonal().maxCoeff(&best);
    proj = x.col(best);
  } else {
    proj = x * eig.eigenvectors().col(2);
  }
  Eigen::Index arg = 0;
  proj.cwiseAbs().maxCoeff(&arg);
  if (proj(arg) < 0.0) proj = -proj;
  return {proj.data(), proj.data() + proj.size()};
}

std::optional<double> fuse_candidates(std::span<const Candidate> candidates, double min_confidence) {
  double wsum = 0.0, acc = 0.0;
  for (const auto& c : candidates) {
    if (c.confidence >= min_confidence && c.confidence > 0.0) {
      wsum += c.confidence;
      acc += c.confidence * c.rr;
    }
  }
  if (wsum == 0.0) return std::nullopt;
  return acc / wsum;
}

BaselineResult baseline_rr(std::span<const double> ppg, const TriaxialWindow& acc, double rate,
                           const BaselineOptions& opts) {
  BaselineResult r;

  if (const auto mods = extract_modulations(ppg, rate, opts.mod_rate)) {
    std::vector<double> rrs;
    double conf_sum = 0.0;
    for (const auto* w : {&mods->am, &mods->bw, &mods->fm}) {
      const auto peak = spectral::dominant_peak(*w, mods->rate, gt::kBandLow, gt::kBandHigh);
      if (peak.found) rrs.push_back(60.0 * peak.frequency);
      conf_sum += peak.confidence;
    }
    if (!rrs.empty()) {
      r.ppg_available = true;
      r.ppg_rr = quantile(rrs, 0.5);
      r.ppg_quality = conf_sum / 3.0;
    }
  }

  const auto filtered = gt::preprocess_chest(acc);
  const auto axis = gt::rr_fft_axis(first_principal_axis(filtered), rate);
  r.acc_rr = axis.rr;
  r.acc_quality = axis.flagged ? 0.0 : axis.confidence;

  std::vector<Candidate> cands;
  if (r.ppg_available) cands.push_back({r.ppg_rr, r.ppg_quality});
  if (!axis.flagged) cands.push_back({r.acc_rr, r.acc_quality});
  r.quality = std::max(r.ppg_quality, r.acc_quality);
  if (const auto fused = fuse_candidates(cands, opts.min_confidence)) {
    r.rr = *fused;
    r.available = true;
  }
  return r;
}

}  // namespace rrforge::baseline
