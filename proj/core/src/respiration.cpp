#include "rrforge/respiration.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "rrforge/error.hpp"
#include "rrforge/spectral.hpp"

namespace rrforge::resp {
namespace {

// W <- (W W^T)^{-1/2} W
Eigen::MatrixXd symmetric_decorrelate(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

}  // namespace

IcaResult fastica(const TriaxialWindow& window, const IcaOptions& opts) {
  window.validate();
  require(opts.max_iter >= 1 && opts.tol > 0.0, Errc::invalid_argument, "bad FastICA options");
  const auto n = static_cast<Eigen::Index>(window.size());

  Eigen::MatrixXd x(3, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    x(0, t) = window.x[static_cast<std::size_t>(t)];
    x(1, t) = window.y[static_cast<std::size_t>(t)];
    x(2, t) = window.z[static_cast<std::size_t>(t)];
  }
  require(x.allFinite(), Errc::invalid_argument, "non-finite sample in triaxial window");
  x.colwise() -= x.rowwise().mean();

  const Eigen::Matrix3d cov = (x * x.transpose()) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d evals = es.eigenvalues();  // ascending
  const double top = evals(2);

  IcaResult result;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 2; k >= 0; --k) {
    if (top > 0.0 && evals(k) > top / kMaxCondition) keep.push_back(k);
  }
  result.rank = keep.size();
  result.rank_deficient = result.rank < 3;
  if (result.rank == 0) {
    // Constant input: nothing to separate.
    result.rotation = Eigen::MatrixXd::Zero(0, 0);
    result.unmixing = Eigen::MatrixXd::Zero(0, 3);
    return result;
  }

  const auto r = static_cast<Eigen::Index>(result.rank);
  Eigen::MatrixXd whitening(r, 3);
  for (Eigen::Index i = 0; i < r; ++i) {
    whitening.row(i) = es.eigenvectors().col(keep[static_cast<std::size_t>(i)]).transpose() /
                       std::sqrt(evals(keep[static_cast<std::size_t>(i)]));
  }
  const Eigen::MatrixXd z = whitening * x;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd w(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) w(i, j) = gauss(rng);
  }
  w = symmetric_decorrelate(w);

  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Eigen::MatrixXd wz = w * z;
    const Eigen::MatrixXd g = wz.array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).rowwise().mean().matrix();
    Eigen::MatrixXd w_new = (g * z.transpose()) * inv_n - g_prime_mean.asDiagonal() * w;
    w_new = symmetric_decorrelate(w_new);

    const double change = (1.0 - (w_new * w.transpose()).diagonal().array().abs()).maxCoeff();
    w = w_new;
    result.iterations = it;
    if (change < opts.tol) {
      result.converged = true;
      break;
    }
  }

  result.rotation = w;
  result.unmixing = w * whitening;
  const Eigen::MatrixXd s = w * z;
  result.components.resize(result.rank);
  result.band_power_fractions.resize(result.rank);
  for (Eigen::Index i = 0; i < r; ++i) {
    auto& comp = result.components[static_cast<std::size_t>(i)];
    comp.resize(static_cast<std::size_t>(n));
    // Remove the residual mean and rescale so the stated moments hold to
    // rounding rather than to the whitening accuracy.
    const double m = s.row(i).mean();
    const double sd = std::sqrt((s.row(i).array() - m).square().mean());
    for (Eigen::Index t = 0; t < n; ++t) comp[static_cast<std::size_t>(t)] = (s(i, t) - m) / sd;
    result.band_power_fractions[static_cast<std::size_t>(i)] =
        spectral::band_power_fraction(comp, window.rate, kRespBandLow, kRespBandHigh);
  }
  const auto best = std::max_element(result.band_power_fractions.begin(), result.band_power_fractions.end());
  result.selected_index = static_cast<std::size_t>(best - result.band_power_fractions.begin());
  return result;
}

SelectedComponent select_respiratory_component(const IcaResult& result, double rate) {
  require(rate > 0.0, Errc::invalid_argument, "rate must be positive");
  SelectedComponent sel;
  if (result.components.empty()) {
    sel.low_confidence = true;
    return sel;
  }
  std::vector<double> fractions = result.band_power_fractions;
  if (fractions.size() != result.components.size()) {
    fractions.clear();
    for (const auto& c : result.components) {
      fractions.push_back(spectral::band_power_fraction(c, rate, kRespBandLow, kRespBandHigh));
    }
  }
  // max_element returns the first maximum, which is the lower index on ties.
  const auto best = std::max_element(fractions.begin(), fractions.end());
  sel.index = static_cast<std::size_t>(best - fractions.begin());
  sel.band_fraction = *best;
  sel.low_confidence = *best < kLowConfidenceFraction;
  sel.waveform = minmax_normalize(result.components[sel.index]);
  return sel;
}

SelectedComponent extract_respiration(const TriaxialWindow& window, const IcaOptions& opts) {
  const auto result = fastica(window, opts);
  if (result.components.empty()) {
    SelectedComponent sel;
    sel.waveform.assign(window.size(), 0.0);
    sel.low_confidence = true;
    return sel;
  }
  return select_respiratory_component(result, window.rate);
}

}  // namespace rrforge::resp
