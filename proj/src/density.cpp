#include "perfid/density.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "perfid/errors.h"
#include "perfid/random.h"

namespace perfid {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1 / sqrt(2 pi)
constexpr double kKernelCutoff = 12.0;

void check_finite(std::span<const double> series, const char* what) {
  for (double v : series)
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": series has a non-finite value");
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Histogram

Histogram::Histogram(std::vector<double> edges, std::vector<double> masses, double smoothing_eps)
    : edges_(std::move(edges)), masses_(std::move(masses)), smoothing_eps_(smoothing_eps) {
  if (masses_.empty() || edges_.size() != masses_.size() + 1)
    throw InvalidInput("histogram needs len(edges) == len(masses) + 1 >= 2");
  for (std::size_t i = 1; i < edges_.size(); ++i)
    if (!(edges_[i] > edges_[i - 1])) throw InvalidInput("histogram edges must strictly increase");
  double sum = 0.0;
  for (double m : masses_) {
    if (!(m > 0.0) || !std::isfinite(m)) throw InvalidInput("histogram masses must be positive");
    sum += m;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput("histogram masses must sum to 1");
}

double Histogram::pdf(double x) const {
  if (x < edges_.front() || x > edges_.back()) return 0.0;
  auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  std::size_t bin = static_cast<std::size_t>(it - edges_.begin());
  bin = bin == 0 ? 0 : std::min(bin - 1, masses_.size() - 1);
  return masses_[bin] / (edges_[bin + 1] - edges_[bin]);
}

Histogram fit_histogram(std::span<const double> series, std::size_t n_bins,
                        const HistogramRange& range, double smoothing_eps) {
  if (series.empty()) throw InvalidInput("fit_histogram: empty series");
  if (n_bins == 0) throw InvalidInput("fit_histogram: n_bins must be >= 1");
  if (!(smoothing_eps > 0.0)) throw InvalidInput("fit_histogram: smoothing must be positive");
  check_finite(series, "fit_histogram");

  double lo, hi;
  if (range.fixed) {
    std::tie(lo, hi) = *range.fixed;
    if (!(hi > lo)) throw InvalidInput("fit_histogram: fixed range must have hi > lo");
  } else {
    const auto [mn, mx] = std::minmax_element(series.begin(), series.end());
    const double width = *mx - *mn;
    const double pad = width > 0.0 ? 0.001 * width : 1e-3 * std::max(std::abs(*mn), 1.0);
    lo = *mn - pad;
    hi = *mx + pad;
  }

  std::vector<double> edges(n_bins + 1);
  const double step = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) edges[i] = lo + static_cast<double>(i) * step;
  edges[n_bins] = hi;

  std::vector<double> counts(n_bins, 0.0);
  for (double x : series) {
    const double f = std::floor((x - lo) / step);
    const std::size_t bin =
        f < 0.0 ? 0 : std::min(static_cast<std::size_t>(f), n_bins - 1);
    counts[bin] += 1.0;
  }
  const double n = static_cast<double>(series.size());
  std::vector<double> masses(n_bins);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_bins; ++i) {
    masses[i] = counts[i] / n + smoothing_eps;
    sum += masses[i];
  }
  for (double& m : masses) m /= sum;
  return Histogram(std::move(edges), std::move(masses), smoothing_eps);
}

// ---------------------------------------------------------------------------
// KDE

Kde::Kde(std::vector<double> samples, double bandwidth)
    : samples_(std::move(samples)), bandwidth_(bandwidth) {
  if (samples_.empty()) throw InvalidInput("KDE needs at least one sample");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
    throw InvalidInput("KDE bandwidth must be positive");
  check_finite(samples_, "KDE");
  std::sort(samples_.begin(), samples_.end());
}

double Kde::pdf(double x) const {
  double sum = 0.0;
  for (double s : samples_) {
    const double z = (x - s) / bandwidth_;
    sum += std::exp(-0.5 * z * z);
  }
  return sum * kInvSqrt2Pi / (static_cast<double>(samples_.size()) * bandwidth_);
}

std::vector<double> Kde::pdf_on_grid(double lo, double step, std::size_t n) const {
  std::vector<double> acc(n, 0.0);
  if (n == 0) return acc;
  if (!(step > 0.0)) throw InvalidInput("pdf_on_grid: step must be positive");
  const double h = bandwidth_;
  const double delta = step / h;
  const double decay = std::exp(-delta * delta);
  const auto last = static_cast<std::int64_t>(n) - 1;
  for (double s : samples_) {
    // Anchor at the grid point nearest the sample; the kernel decreases
    // monotonically away from it in both directions.
    const double pos = (s - lo) / step;
    const double reach = kKernelCutoff / delta + 1.0;
    if (pos + reach < 0.0 || pos - reach > static_cast<double>(last)) continue;
    const auto k0 = static_cast<std::int64_t>(std::llround(pos));
    const double z0 = (lo + static_cast<double>(k0) * step - s) / h;
    const double peak = std::exp(-0.5 * z0 * z0);

    // Rightward: term(t+1) = term(t) * exp(-z0*delta - (2t+1)*delta^2/2).
    double term = peak;
    double ratio = std::exp(-z0 * delta - 0.5 * delta * delta);
    for (std::int64_t k = k0; k <= last; ++k) {
      if (k >= 0) acc[static_cast<std::size_t>(k)] += term;
      if (z0 + static_cast<double>(k - k0) * delta > kKernelCutoff) break;
      term *= ratio;
      ratio *= decay;
      if (term == 0.0) break;
    }
    // Leftward, starting one point left of the anchor.
    ratio = std::exp(z0 * delta - 0.5 * delta * delta);
    term = peak * ratio;
    ratio *= decay;
    for (std::int64_t k = k0 - 1; k >= 0; --k) {
      if (k <= last) acc[static_cast<std::size_t>(k)] += term;
      if (z0 - static_cast<double>(k0 - k) * delta < -kKernelCutoff) break;
      term *= ratio;
      ratio *= decay;
      if (term == 0.0) break;
    }
  }
  const double scale = kInvSqrt2Pi / (static_cast<double>(samples_.size()) * h);
  for (double& v : acc) v *= scale;
  return acc;
}

Kde fit_kde(std::span<const double> series, double bandwidth) {
  return Kde(std::vector<double>(series.begin(), series.end()), bandwidth);
}

// ---------------------------------------------------------------------------
// GMM

Gmm::Gmm(std::vector<double> weights, std::vector<double> means, std::vector<double> variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  if (weights_.empty() || weights_.size() != means_.size() || means_.size() != variances_.size())
    throw InvalidInput("GMM needs equal, non-zero numbers of weights, means and variances");
  double sum = 0.0;
  for (std::size_t c = 0; c < k(); ++c) {
    if (!(weights_[c] > 0.0)) throw InvalidInput("GMM weights must be positive");
    if (!(variances_[c] > 0.0) || !std::isfinite(variances_[c]))
      throw InvalidInput("GMM variances must be positive");
    if (!std::isfinite(means_[c])) throw InvalidInput("GMM means must be finite");
    sum += weights_[c];
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput("GMM weights must sum to 1");
}

double Gmm::log_pdf(double x) const {
  std::vector<double> terms(k());
  for (std::size_t c = 0; c < k(); ++c) {
    const double d = x - means_[c];
    terms[c] = std::log(weights_[c]) - 0.5 * std::log(2.0 * std::numbers::pi * variances_[c]) -
               0.5 * d * d / variances_[c];
  }
  return log_sum_exp(terms);
}

double Gmm::pdf(double x) const { return std::exp(log_pdf(x)); }

namespace {

struct Params {
  std::vector<double> w, mu, var;
};

std::vector<double> kmeanspp_centers(std::span<const double> x, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::int64_t>(x.size());
  std::vector<double> centers{x[static_cast<std::size_t>(rng.uniform_int(0, n - 1))]};
  std::vector<double> d2(x.size());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, (x[i] - c) * (x[i] - c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = x.size() - 1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        cum += d2[i];
        if (cum > u) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
    }
    centers.push_back(x[pick]);
  }
  return centers;
}

void normalize_weights(std::vector<double>& w) {
  for (double& v : w) v = std::max(v, 1e-300);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= s;
}

}  // namespace

GmmFit fit_gmm_traced(std::span<const double> x, std::size_t k, std::uint64_t seed,
                      const GmmOptions& options) {
  if (k < 1) throw InvalidInput("fit_gmm: k must be >= 1");
  if (x.size() < k) throw InvalidInput("fit_gmm: series shorter than the component count");
  check_finite(x, "fit_gmm");
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= nd;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= nd;
  const double floor = var > 0.0 ? 1e-10 * var : 1e-12;

  // Initial partition: nearest k-means++ center.
  Rng rng(seed);
  const std::vector<double> centers = kmeanspp_centers(x, k, rng);
  Params p{std::vector<double>(k, 0.0), centers, std::vector<double>(k, 0.0)};
  {
    std::vector<double> sum(k, 0.0), sumsq(k, 0.0), count(k, 0.0);
    for (double v : x) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (std::abs(v - centers[c]) < std::abs(v - centers[best])) best = c;
      count[best] += 1.0;
      sum[best] += v;
    }
    for (std::size_t c = 0; c < k; ++c)
      if (count[c] > 0) p.mu[c] = sum[c] / count[c];
    for (double v : x) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (std::abs(v - centers[c]) < std::abs(v - centers[best])) best = c;
      sumsq[best] += (v - p.mu[best]) * (v - p.mu[best]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      p.w[c] = count[c] > 0 ? count[c] / nd : 1.0 / nd;
      p.var[c] = count[c] > 1 ? std::max(sumsq[c] / count[c], floor) : std::max(var, floor);
    }
    normalize_weights(p.w);
  }

  std::vector<double> resp(n * k);
  std::vector<double> terms(k);
  auto e_step = [&]() {
    std::vector<double> log_w(k), log_norm(k);
    for (std::size_t c = 0; c < k; ++c) {
      log_w[c] = std::log(p.w[c]);
      log_norm[c] = -0.5 * std::log(2.0 * std::numbers::pi * p.var[c]);
    }
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        const double d = x[i] - p.mu[c];
        terms[c] = log_w[c] + log_norm[c] - 0.5 * d * d / p.var[c];
      }
      const double lse = log_sum_exp(terms);
      ll += lse;
      for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(terms[c] - lse);
    }
    return ll / nd;
  };

  GmmFit fit{Gmm({1.0}, {0.0}, {1.0}), {}, 0, false};
  fit.log_likelihood_trace.push_back(e_step());
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0, sx = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + c];
        sx += resp[i * k + c] * x[i];
      }
      if (nk < 1e-300) continue;  // starved component keeps its parameters
      const double mu = sx / nk;
      double sv = 0.0;
      for (std::size_t i = 0; i < n; ++i) sv += resp[i * k + c] * (x[i] - mu) * (x[i] - mu);
      p.w[c] = nk / nd;
      p.mu[c] = mu;
      p.var[c] = std::max(sv / nk, floor);
    }
    normalize_weights(p.w);
    const double ll = e_step();
    const double gain = ll - fit.log_likelihood_trace.back();
    fit.log_likelihood_trace.push_back(ll);
    fit.iterations = iter;
    if (gain < options.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.model = Gmm(p.w, p.mu, p.var);
  return fit;
}

double pdf(const DensityModel& model, double x) {
  return std::visit([x](const auto& m) { return m.pdf(x); }, model);
}

}  // namespace perfid
