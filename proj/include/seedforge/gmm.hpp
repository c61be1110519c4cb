/* One-dimensional Gaussian mixture fitted by expectation maximization.
 *
 * Initialization is deterministic: means at the (2i+1)/(2K) quantiles of the
 * samples, uniform weights, variance = global variance / K (floored).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "seedforge/grid.hpp"

namespace seedforge {

inline constexpr double kVarianceFloor = 1e-6;

struct GaussianComponent {
  double weight = 0.0;
  double mean = 0.0;
  double variance = kVarianceFloor;

  double pdf(double x) const {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
  }
  double log_pdf(double x) const {
    const double d = x - mean;
    return -0.5 * d * d / variance - 0.5 * std::log(2.0 * std::numbers::pi * variance);
  }
  double peak() const { return 1.0 / std::sqrt(2.0 * std::numbers::pi * variance); }

  bool operator==(const GaussianComponent&) const = default;
};

struct GmmParams {
  std::size_t components = 3;
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;  // on mean per-sample log-likelihood

  bool operator==(const GmmParams&) const = default;
};

struct GmmModel {
  std::vector<GaussianComponent> components;
  std::size_t iterations = 0;
  bool converged = false;
  /// Mean per-sample log-likelihood before each M-step, then the final value.
  std::vector<double> log_likelihood;
  /// Iterations at which an empty component was re-seeded; EM monotonicity
  /// does not hold across those steps.
  std::vector<std::size_t> rescues;
  std::vector<std::string> warnings;

  std::size_t size() const { return components.size(); }
};

namespace detail {

inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

inline double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

inline GmmModel fit_gmm(std::span<const double> samples, const GmmParams& params = {}) {
  const std::size_t K = params.components;
  const std::size_t N = samples.size();
  if (K < 2) throw Error(ErrorKind::parameter, "GMM needs K >= 2", "seeding");
  if (N < 10 * K)
    throw Error(ErrorKind::parameter, "GMM needs at least 10*K samples", "seeding");
  if (!(params.tolerance > 0.0))
    throw Error(ErrorKind::parameter, "GMM tolerance must be > 0", "seeding");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(N);
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= static_cast<double>(N);

  GmmModel model;
  model.components.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& c = model.components[k];
    c.weight = 1.0 / static_cast<double>(K);
    c.mean = detail::quantile_sorted(sorted, (2.0 * static_cast<double>(k) + 1.0) / (2.0 * static_cast<double>(K)));
    c.variance = std::max(var / static_cast<double>(K), kVarianceFloor);
  }

  // Heavily tied data (e.g. a noiseless two-level image) puts several
  // quantiles on one value; EM cannot separate identical components.
  for (std::size_t k = 1; k < K; ++k)
    if (model.components[k].mean == model.components[k - 1].mean) {
      model.warnings.push_back("GMM initialization has coincident means; components may not separate");
      break;
    }

  std::vector<double> resp(N * K);
  std::vector<double> logp(K);
  auto e_step = [&](const std::vector<GaussianComponent>& comps, bool fill) {
    double ll = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < K; ++k)
        logp[k] = std::log(comps[k].weight) + comps[k].log_pdf(samples[n]);
      const double lse = detail::log_sum_exp(logp);
      ll += lse;
      if (fill)
        for (std::size_t k = 0; k < K; ++k) resp[n * K + k] = std::exp(logp[k] - lse);
    }
    return ll / static_cast<double>(N);
  };

  std::vector<GaussianComponent> best = model.components;
  double best_ll = -std::numeric_limits<double>::infinity();

  for (std::size_t it = 0; it < params.max_iterations; ++it) {
    const double ll = e_step(model.components, true);
    model.log_likelihood.push_back(ll);
    if (ll > best_ll) {
      best_ll = ll;
      best = model.components;
    }
    if (it > 0) {
      const double prev = model.log_likelihood[model.log_likelihood.size() - 2];
      if (std::abs(ll - prev) < params.tolerance) {
        model.converged = true;
        model.iterations = it;
        break;
      }
    }

    bool rescued = false;
    for (std::size_t k = 0; k < K; ++k) {
      double nk = 0.0, sx = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        nk += resp[n * K + k];
        sx += resp[n * K + k] * samples[n];
      }
      auto& c = model.components[k];
      if (nk < 1e-8 * static_cast<double>(N)) {
        // Empty component: floor its variance and move it onto the sample
        // the current mixture explains worst.
        std::size_t worst = 0;
        double worst_ll = std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t j = 0; j < K; ++j)
            logp[j] = std::log(model.components[j].weight) + model.components[j].log_pdf(samples[n]);
          const double l = detail::log_sum_exp(logp);
          if (l < worst_ll) {
            worst_ll = l;
            worst = n;
          }
        }
        c.mean = samples[worst];
        c.variance = kVarianceFloor;
        c.weight = 1.0 / static_cast<double>(N);
        rescued = true;
        continue;
      }
      const double mu = sx / nk;
      double sv = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const double d = samples[n] - mu;
        sv += resp[n * K + k] * d * d;
      }
      c.weight = nk / static_cast<double>(N);
      c.mean = mu;
      c.variance = std::max(sv / nk, kVarianceFloor);
    }
    double wsum = 0.0;
    for (const auto& c : model.components) wsum += c.weight;
    for (auto& c : model.components) c.weight /= wsum;
    if (rescued) model.rescues.push_back(it);
    model.iterations = it + 1;
  }

  if (!model.converged) {
    const double final_ll = e_step(model.components, false);
    model.log_likelihood.push_back(final_ll);
    if (final_ll < best_ll) model.components = best;
    model.warnings.push_back("GMM did not converge within " +
                             std::to_string(params.max_iterations) + " iterations");
  }
  return model;
}

inline GmmModel fit_gmm(const ImageGrid& grid, const GmmParams& params = {}) {
  return fit_gmm(grid.values(), params);
}

}  // namespace seedforge
