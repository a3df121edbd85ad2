#include "rrforge/metrics.hpp"

#include <cmath>
#include <map>

#include "rrforge/error.hpp"
#include "rrforge/signal.hpp"

namespace rrforge::metrics {
namespace {

void check_pairs(std::span<const double> est, std::span<const double> ref, std::size_t min_n) {
  require(est.size() == ref.size(), Errc::invalid_argument,
          "estimate and reference lengths differ (" + std::to_string(est.size()) + " vs " +
              std::to_string(ref.size()) + ")");
  require(est.size() >= min_n, Errc::invalid_argument,
          "need at least " + std::to_string(min_n) + " paired values, got " + std::to_string(est.size()));
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double mae(std::span<const double> est, std::span<const double> ref) {
  check_pairs(est, ref, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) sum += std::abs(est[i] - ref[i]);
  return sum / static_cast<double>(est.size());
}

double rmse(std::span<const double> est, std::span<const double> ref) {
  check_pairs(est, ref, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) sum += (est[i] - ref[i]) * (est[i] - ref[i]);
  return std::sqrt(sum / static_cast<double>(est.size()));
}

BlandAltman bland_altman(std::span<const double> est, std::span<const double> ref) {
  check_pairs(est, ref, 2);
  std::vector<double> d(est.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = est[i] - ref[i];
  const double bias = mean(d);
  const double half = 1.96 * sample_sd(d);
  return {bias, bias - half, bias + half};
}

Quartiles abs_error_quartiles(std::span<const double> est, std::span<const double> ref) {
  check_pairs(est, ref, 1);
  std::vector<double> e(est.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::abs(est[i] - ref[i]);
  return {quantile(e, 0.25), quantile(e, 0.5), quantile(e, 0.75)};
}

EvalReport evaluate(std::string method, std::span<const double> est, std::span<const double> ref,
                    std::span<const std::string> subjects) {
  EvalReport r;
  r.method = std::move(method);
  r.n = est.size();
  r.mae = mae(est, ref);
  r.rmse = rmse(est, ref);
  if (est.size() >= 2) {
    r.bland_altman = bland_altman(est, ref);
  } else {
    r.bland_altman = {est[0] - ref[0], est[0] - ref[0], est[0] - ref[0]};
  }
  r.abs_err = abs_error_quartiles(est, ref);

  if (!subjects.empty()) {
    require(subjects.size() == est.size(), Errc::invalid_argument, "subject tags do not match the pairs");
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (std::size_t i = 0; i < est.size(); ++i) {
      auto& g = groups[subjects[i]];
      g.first.push_back(est[i]);
      g.second.push_back(ref[i]);
    }
    std::vector<double> maes, rmses;
    for (const auto& [id, g] : groups) {
      SubjectSummary s{id, g.first.size(), mae(g.first, g.second), rmse(g.first, g.second)};
      maes.push_back(s.mae);
      rmses.push_back(s.rmse);
      r.subjects.push_back(std::move(s));
    }
    r.subject_mae_mean = mean(maes);
    r.subject_mae_sd = sample_sd(maes);
    r.subject_rmse_mean = mean(rmses);
    r.subject_rmse_sd = sample_sd(rmses);
  }
  return r;
}

}  // namespace rrforge::metrics
