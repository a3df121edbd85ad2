#include "rrforge/quality.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "rrforge/error.hpp"
#include "rrforge/signal.hpp"
#include "rrforge/spectral.hpp"

namespace rrforge::quality {
namespace {

constexpr double kRollingSeconds = 2.0;
constexpr double kWelchSeconds = 8.0;

std::vector<double> resample_cycle(std::span<const double> cycle) {
  std::vector<double> out(kCycleLength);
  const double step = static_cast<double>(cycle.size() - 1) / static_cast<double>(kCycleLength - 1);
  for (std::size_t j = 0; j < kCycleLength; ++j) {
    const double pos = static_cast<double>(j) * step;
    const auto k = std::min(static_cast<std::size_t>(pos), cycle.size() - 2);
    const double frac = pos - static_cast<double>(k);
    out[j] = cycle[k] + frac * (cycle[k + 1] - cycle[k]);
  }
  return out;
}

double rbf(const FeatureVector& a, const FeatureVector& b, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < kFeatureCount; ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-gamma * d2);
}

}  // namespace

std::vector<std::size_t> detect_cardiac_cycles(std::span<const double> ppg, double rate) {
  require(rate > 0.0, Errc::invalid_argument, "rate must be positive");
  const std::size_t n = ppg.size();
  if (n < 3) return {};

  // Prefix sums for the centred rolling statistics.
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s1[i + 1] = s1[i] + ppg[i];
    s2[i + 1] = s2[i] + ppg[i] * ppg[i];
  }
  const auto half = static_cast<std::size_t>(std::lround(kRollingSeconds * rate / 2.0));
  const auto refractory = static_cast<std::size_t>(std::lround(kRefractorySeconds * rate));

  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(ppg[i] > ppg[i - 1] && ppg[i] >= ppg[i + 1])) continue;
    const std::size_t lo = i > half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    const double cnt = static_cast<double>(hi - lo);
    const double m = (s1[hi] - s1[lo]) / cnt;
    const double var = std::max(0.0, (s2[hi] - s2[lo]) / cnt - m * m);
    if (!(ppg[i] > m + 0.5 * std::sqrt(var))) continue;

    if (!peaks.empty() && i - peaks.back() < refractory) {
      if (ppg[i] > ppg[peaks.back()]) peaks.back() = i;
      continue;
    }
    peaks.push_back(i);
  }
  return peaks;
}

QualityFeatures extract_quality_features(std::span<const double> ppg, double rate) {
  require(!ppg.empty(), Errc::invalid_argument, "empty PPG window");
  QualityFeatures f;

  const auto psd = spectral::welch(ppg, rate, static_cast<std::size_t>(kWelchSeconds * rate));
  double total = 0.0;
  for (const double p : psd.power) total += p;
  f.psd_ratio = total > 0.0 ? std::clamp(spectral::band_power(psd, kCardiacBandLow, kCardiacBandHigh) / total, 0.0, 1.0) : 0.0;

  const std::vector<double> values(ppg.begin(), ppg.end());
  f.iqr = quantile(values, 0.75) - quantile(values, 0.25);

  const auto peaks = detect_cardiac_cycles(ppg, rate);
  if (peaks.size() < 3) {
    f.fallback = true;
    f.cycle_energy = 0.0;
    f.template_corr = -1.0;
    f.template_dist = kFallbackDistance;
    return f;
  }

  std::vector<std::vector<double>> cycles;
  double energy = 0.0;
  for (std::size_t c = 0; c + 1 < peaks.size(); ++c) {
    const auto cycle = ppg.subspan(peaks[c], peaks[c + 1] - peaks[c] + 1);
    double e = 0.0;
    for (const double v : cycle) e += v * v;
    energy += e / rate;
    cycles.push_back(resample_cycle(cycle));
  }
  f.cycle_energy = energy / static_cast<double>(cycles.size());

  std::vector<double> templ(kCycleLength, 0.0);
  for (const auto& c : cycles) {
    for (std::size_t j = 0; j < kCycleLength; ++j) templ[j] += c[j];
  }
  for (double& v : templ) v /= static_cast<double>(cycles.size());

  double corr = 0.0, dist = 0.0;
  for (const auto& c : cycles) {
    corr += pearson(c, templ);
    double d2 = 0.0;
    for (std::size_t j = 0; j < kCycleLength; ++j) d2 += (c[j] - templ[j]) * (c[j] - templ[j]);
    dist += std::sqrt(d2);
  }
  f.template_corr = corr / static_cast<double>(cycles.size());
  f.template_dist = dist / static_cast<double>(cycles.size());
  return f;
}

QualityModel train_quality_model(std::span<const QualityFeatures> features, const TrainOptions& opts) {
  require(opts.nu > 0.0 && opts.nu <= 1.0, Errc::invalid_argument, "nu must lie in (0, 1]");
  require(opts.gamma > 0.0, Errc::invalid_argument, "gamma must be positive");
  const std::size_t n = features.size();
  require(n >= 2, Errc::invalid_training_set, "one-class training needs at least two windows");

  QualityModel model;
  model.nu = opts.nu;
  model.gamma = opts.gamma;

  bool any_spread = false;
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    double m = 0.0;
    for (const auto& f : features) m += f.as_array()[k];
    m /= static_cast<double>(n);
    double v = 0.0;
    for (const auto& f : features) v += (f.as_array()[k] - m) * (f.as_array()[k] - m);
    v /= static_cast<double>(n);
    model.mean[k] = m;
    model.scale[k] = v > 0.0 ? std::sqrt(v) : 1.0;
    any_spread = any_spread || v > 0.0;
  }
  require(any_spread, Errc::invalid_training_set, "all training feature vectors are identical");

  std::vector<FeatureVector> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = standardize(features[i].as_array(), model);

  Eigen::MatrixXd q(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    q(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) q(i, j) = q(j, i) = rbf(z[i], z[j], opts.gamma);
  }

  const double c = 1.0 / (opts.nu * static_cast<double>(n));
  model.upper_bound = c;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  {
    double remaining = 1.0;
    for (std::size_t i = 0; i < n && remaining > 0.0; ++i) {
      alpha(i) = std::min(c, remaining);
      remaining -= alpha(i);
    }
  }
  Eigen::VectorXd grad = q * alpha;

  constexpr double tau = 1e-12;
  const auto at_upper = [&](Eigen::Index t) { return alpha(t) >= c; };
  const auto at_lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    // Working set: i maximizes -G over the "can increase" set, j is the
    // second-order choice among the "can decrease" set.
    double g_max = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(n); ++t) {
      if (!at_upper(t) && -grad(t) >= g_max) {
        g_max = -grad(t);
        i = t;
      }
    }
    double g_max2 = -std::numeric_limits<double>::infinity();
    double obj_min = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(n); ++t) {
      if (at_lower(t)) continue;
      g_max2 = std::max(g_max2, grad(t));
      const double b = g_max + grad(t);
      if (i >= 0 && b > 0.0) {
        double a = q(i, i) + q(t, t) - 2.0 * q(i, t);
        if (a <= 0.0) a = tau;
        const double obj = -(b * b) / a;
        if (obj <= obj_min) {
          obj_min = obj;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || g_max + g_max2 < opts.tolerance) break;

    double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
    if (quad <= 0.0) quad = tau;
    const double old_i = alpha(i);
    const double old_j = alpha(j);
    const double sum = old_i + old_j;
    double new_i = old_i - (grad(i) - grad(j)) / quad;
    new_i = std::clamp(new_i, std::max(0.0, sum - c), std::min(c, sum));
    const double new_j = sum - new_i;
    alpha(i) = new_i;
    alpha(j) = new_j;
    grad += q.col(i) * (new_i - old_i) + q.col(j) * (new_j - old_j);
  }

  // Any offset between the largest bounded and the smallest free/zero
  // gradient satisfies KKT to tolerance. The low end keeps boundary support
  // vectors on the accepted side despite rounding.
  double lb = -std::numeric_limits<double>::infinity();
  double rho = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(n); ++t) {
    if (at_upper(t)) {
      lb = std::max(lb, grad(t));
    } else {
      rho = std::min(rho, grad(t));
    }
  }
  model.rho = std::isfinite(rho) ? std::max(rho, lb) : lb;
  model.rho -= 1e-12 * std::max(1.0, std::abs(model.rho));

  for (std::size_t t = 0; t < n; ++t) {
    if (alpha(static_cast<Eigen::Index>(t)) > 0.0) {
      model.support.push_back(z[t]);
      model.coef.push_back(alpha(static_cast<Eigen::Index>(t)));
    }
  }
  return model;
}

FeatureVector standardize(const FeatureVector& raw, const QualityModel& model) {
  FeatureVector z{};
  for (std::size_t k = 0; k < kFeatureCount; ++k) z[k] = (raw[k] - model.mean[k]) / model.scale[k];
  return z;
}

Verdict assess_standardized(const FeatureVector& z, const QualityModel& model) {
  double s = 0.0;
  for (std::size_t i = 0; i < model.support.size(); ++i) s += model.coef[i] * rbf(model.support[i], z, model.gamma);
  s -= model.rho;
  return {s >= 0.0, s};
}

Verdict assess(const QualityFeatures& window, const QualityModel& model) {
  return assess_standardized(standardize(window.as_array(), model), model);
}

std::string to_json(const QualityModel& model) {
  nlohmann::json j;
  j["format"] = "rrforge-quality-model";
  j["version"] = 1;
  j["gamma"] = model.gamma;
  j["nu"] = model.nu;
  j["rho"] = model.rho;
  j["upper_bound"] = model.upper_bound;
  j["mean"] = model.mean;
  j["scale"] = model.scale;
  j["support_vectors"] = model.support;
  j["coefficients"] = model.coef;
  return j.dump(2);
}

QualityModel quality_model_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    QualityModel m;
    m.gamma = j.at("gamma").get<double>();
    m.nu = j.at("nu").get<double>();
    m.rho = j.at("rho").get<double>();
    m.upper_bound = j.value("upper_bound", 0.0);
    m.mean = j.at("mean").get<FeatureVector>();
    m.scale = j.at("scale").get<FeatureVector>();
    m.support = j.at("support_vectors").get<std::vector<FeatureVector>>();
    m.coef = j.at("coefficients").get<std::vector<double>>();
    require(m.support.size() == m.coef.size(), Errc::invalid_argument, "support vector / coefficient count mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("bad quality model JSON: ") + e.what());
  }
}

void save(const std::filesystem::path& path, const QualityModel& model) {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + path.string());
  out << to_json(model) << '\n';
}

QualityModel load_quality_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return quality_model_from_json(ss.str());
}

}  // namespace rrforge::quality
