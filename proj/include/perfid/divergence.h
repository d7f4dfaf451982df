#pragma once

// Kullback-Leibler divergence between fitted models, and weighted fusion.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "perfid/density.h"

namespace perfid {

enum class KlMethod { kDiscrete, kGrid, kVariational };

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_points = 0;
};

/// A divergence in nats. Never negative: round-off below zero (down to
/// -1e-9) is clamped.
struct KlResult {
  double value = 0.0;
  KlMethod method = KlMethod::kDiscrete;
  std::optional<GridSpec> grid;
};

/// Mass-proportional transfer of a histogram onto finer edges that contain
/// all of its own edges.
std::vector<double> rebin_masses(const Histogram& h, std::span<const double> edges);

/// sum_i p_i ln(p_i / q_i). Histograms on different edges are both rebinned
/// onto the union of their edges and re-smoothed first.
KlResult kl_histogram(const Histogram& p, const Histogram& q);

inline constexpr std::size_t kKdeGridPoints = 4096;
inline constexpr double kDensityFloor = 1e-300;

/// Trapezoid integral of p ln(p / max(q, 1e-300)) over a uniform grid that
/// spans both sample ranges widened by 5 bandwidths. Both densities are
/// renormalized to unit mass on the grid first.
KlResult kl_kde(const Kde& p, const Kde& q, std::size_t n_points = kKdeGridPoints);

/// KL(N(mean_p, var_p) || N(mean_q, var_q)).
double gaussian_kl(double mean_p, double var_p, double mean_q, double var_q);

/// Variational approximation for mixtures:
/// sum_a w_a ln[(sum_a' w_a' e^-KL(f_a||f_a')) / (sum_b v_b e^-KL(f_a||g_b))].
KlResult kl_gmm(const Gmm& p, const Gmm& q);

/// Dispatches on the model family. Throws InvalidInput when p and q are
/// different families.
KlResult kl_divergence(const DensityModel& p, const DensityModel& q);

/// sum_i w_i * kl_i. Throws InvalidInput on length mismatch or a negative
/// weight.
double fuse(std::span<const double> kls, std::span<const double> weights);

inline double fuse(std::span<const KlResult> kls, std::span<const double> weights) {
  std::vector<double> values;
  values.reserve(kls.size());
  for (const KlResult& r : kls) values.push_back(r.value);
  return fuse(values, weights);
}

}  // namespace perfid
