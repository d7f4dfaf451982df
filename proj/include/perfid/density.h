#pragma once

// One-dimensional density models fitted to deviation series.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace perfid {

/// Piecewise-constant density over equal or unequal bins.
class Histogram {
 public:
  /// Validates: edges strictly increasing, one mass per bin, masses positive
  /// and summing to 1 within 1e-12.
  Histogram(std::vector<double> edges, std::vector<double> masses, double smoothing_eps);

  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& masses() const { return masses_; }
  double smoothing_eps() const { return smoothing_eps_; }
  std::size_t bins() const { return masses_.size(); }

  /// mass / width inside the support, 0 outside.
  double pdf(double x) const;

 private:
  std::vector<double> edges_;
  std::vector<double> masses_;
  double smoothing_eps_;
};

/// Fixed [lo, hi] bin range; without one the data range widened by 0.1% on
/// each side is used.
struct HistogramRange {
  std::optional<std::pair<double, double>> fixed;
};

inline constexpr double kHistogramSmoothing = 1e-9;

/// Equal-width bins, normalized counts, then `smoothing_eps` added to each bin
/// and renormalized. Values outside a fixed range land in the end bins.
/// Throws InvalidInput for an empty series or n_bins == 0.
Histogram fit_histogram(std::span<const double> series, std::size_t n_bins = 50,
                        const HistogramRange& range = {},
                        double smoothing_eps = kHistogramSmoothing);

/// Gaussian-kernel density estimate.
class Kde {
 public:
  /// Throws InvalidInput for an empty sample or non-positive bandwidth.
  Kde(std::vector<double> samples, double bandwidth);

  const std::vector<double>& samples() const { return samples_; }  // sorted
  double bandwidth() const { return bandwidth_; }

  /// (1 / (n h)) * sum_i phi((x - s_i) / h), summed over every sample.
  double pdf(double x) const;

  /// pdf at lo + k * step for k in [0, n). Kernels are evaluated by a
  /// multiplicative recurrence along the grid and cut off beyond 12
  /// bandwidths, where a kernel falls below 1e-31 of its peak.
  std::vector<double> pdf_on_grid(double lo, double step, std::size_t n) const;

 private:
  std::vector<double> samples_;
  double bandwidth_;
};

Kde fit_kde(std::span<const double> series, double bandwidth);

/// Univariate Gaussian mixture.
class Gmm {
 public:
  /// Validates: equal lengths, 1 <= k, weights positive summing to 1 within
  /// 1e-12, variances positive.
  Gmm(std::vector<double> weights, std::vector<double> means, std::vector<double> variances);

  std::size_t k() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& variances() const { return variances_; }

  double pdf(double x) const;
  double log_pdf(double x) const;

 private:
  std::vector<double> weights_;
  std::vector<double> means_;
  std::vector<double> variances_;
};

struct GmmOptions {
  double tol = 1e-8;  // on the per-sample mean log-likelihood gain
  int max_iter = 500;
};

struct GmmFit {
  Gmm model;
  std::vector<double> log_likelihood_trace;  // mean log-likelihood after each E step
  int iterations = 0;
  bool converged = false;
};

/// EM from a seeded k-means++ initialization. Variances are floored at
/// 1e-10 x sample variance (1e-12 when the sample is constant).
/// Throws InvalidInput when k < 1 or the series has fewer than k values.
GmmFit fit_gmm_traced(std::span<const double> series, std::size_t k = 3, std::uint64_t seed = 0,
                      const GmmOptions& options = {});

inline Gmm fit_gmm(std::span<const double> series, std::size_t k = 3, std::uint64_t seed = 0,
                   const GmmOptions& options = {}) {
  return fit_gmm_traced(series, k, seed, options).model;
}

using DensityModel = std::variant<Histogram, Kde, Gmm>;

double pdf(const DensityModel& model, double x);

}  // namespace perfid
