#include "perfid/divergence.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "perfid/errors.h"

namespace perfid {

namespace {

double clamp_kl(double v) { return v < 0.0 ? 0.0 : v; }

std::vector<double> smooth(std::vector<double> masses, double eps) {
  double sum = 0.0;
  for (double& m : masses) {
    m += eps;
    sum += m;
  }
  for (double& m : masses) m /= sum;
  return masses;
}

double discrete_kl(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  return kl;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::vector<double> rebin_masses(const Histogram& h, std::span<const double> edges) {
  const auto& src = h.edges();
  const auto& mass = h.masses();
  std::vector<double> out(edges.size() > 0 ? edges.size() - 1 : 0, 0.0);
  std::size_t s = 0;
  for (std::size_t t = 0; t < out.size(); ++t) {
    const double a = edges[t], b = edges[t + 1];
    while (s < mass.size() && src[s + 1] <= a) ++s;
    for (std::size_t u = s; u < mass.size() && src[u] < b; ++u) {
      const double overlap = std::min(b, src[u + 1]) - std::max(a, src[u]);
      if (overlap > 0.0) out[t] += mass[u] * overlap / (src[u + 1] - src[u]);
    }
  }
  return out;
}

KlResult kl_histogram(const Histogram& p, const Histogram& q) {
  KlResult r{0.0, KlMethod::kDiscrete, std::nullopt};
  if (p.edges() == q.edges()) {
    r.value = clamp_kl(discrete_kl(p.masses(), q.masses()));
    return r;
  }
  std::vector<double> edges = p.edges();
  edges.insert(edges.end(), q.edges().begin(), q.edges().end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const double eps = std::max(p.smoothing_eps(), q.smoothing_eps());
  const std::vector<double> pm = smooth(rebin_masses(p, edges), eps);
  const std::vector<double> qm = smooth(rebin_masses(q, edges), eps);
  r.value = clamp_kl(discrete_kl(pm, qm));
  return r;
}

KlResult kl_kde(const Kde& p, const Kde& q, std::size_t n_points) {
  if (n_points < 2) throw InvalidInput("kl_kde needs at least two grid points");
  const double lo = std::min(p.samples().front() - 5.0 * p.bandwidth(),
                             q.samples().front() - 5.0 * q.bandwidth());
  const double hi = std::max(p.samples().back() + 5.0 * p.bandwidth(),
                             q.samples().back() + 5.0 * q.bandwidth());
  const double step = (hi - lo) / static_cast<double>(n_points - 1);
  const std::vector<double> pg = p.pdf_on_grid(lo, step, n_points);
  std::vector<double> qg = q.pdf_on_grid(lo, step, n_points);
  for (double& v : qg) v = std::max(v, kDensityFloor);

  auto weight = [&](std::size_t k) {
    return (k == 0 || k + 1 == n_points) ? 0.5 * step : step;
  };
  double zp = 0.0, zq = 0.0;
  for (std::size_t k = 0; k < n_points; ++k) {
    zp += weight(k) * pg[k];
    zq += weight(k) * qg[k];
  }
  double kl = 0.0;
  for (std::size_t k = 0; k < n_points; ++k) {
    if (pg[k] <= 0.0) continue;
    const double pk = pg[k] / zp;
    const double qk = qg[k] / zq;
    kl += weight(k) * pk * std::log(pk / qk);
  }
  return {clamp_kl(kl), KlMethod::kGrid, GridSpec{lo, hi, n_points}};
}

double gaussian_kl(double mean_p, double var_p, double mean_q, double var_q) {
  const double d = mean_p - mean_q;
  return 0.5 * (std::log(var_q / var_p) + (var_p + d * d) / var_q - 1.0);
}

KlResult kl_gmm(const Gmm& p, const Gmm& q) {
  double total = 0.0;
  std::vector<double> self(p.k()), cross(q.k());
  for (std::size_t a = 0; a < p.k(); ++a) {
    for (std::size_t b = 0; b < p.k(); ++b)
      self[b] = std::log(p.weights()[b]) -
                gaussian_kl(p.means()[a], p.variances()[a], p.means()[b], p.variances()[b]);
    for (std::size_t b = 0; b < q.k(); ++b)
      cross[b] = std::log(q.weights()[b]) -
                 gaussian_kl(p.means()[a], p.variances()[a], q.means()[b], q.variances()[b]);
    total += p.weights()[a] * (log_sum_exp(self) - log_sum_exp(cross));
  }
  return {clamp_kl(total), KlMethod::kVariational, std::nullopt};
}

KlResult kl_divergence(const DensityModel& p, const DensityModel& q) {
  if (p.index() != q.index())
    throw InvalidInput("KL divergence between different model families is not defined here");
  switch (p.index()) {
    case 0:
      return kl_histogram(std::get<Histogram>(p), std::get<Histogram>(q));
    case 1:
      return kl_kde(std::get<Kde>(p), std::get<Kde>(q));
    default:
      return kl_gmm(std::get<Gmm>(p), std::get<Gmm>(q));
  }
}

double fuse(std::span<const double> kls, std::span<const double> weights) {
  if (kls.size() != weights.size())
    throw InvalidInput("fuse: " + std::to_string(kls.size()) + " divergences but " +
                       std::to_string(weights.size()) + " weights");
  double total = 0.0;
  for (std::size_t i = 0; i < kls.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw InvalidInput("fuse: weights must be non-negative");
    if (weights[i] > 0.0) total += weights[i] * kls[i];
  }
  return total;
}

}  // namespace perfid
