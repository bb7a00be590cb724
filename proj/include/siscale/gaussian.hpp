#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "siscale/probcore.hpp"

// Exact machinery for the quadratic Gaussian source with degraded side
// informations: per-decoder test-noise solving, the nested forward test
// channel, subset lower bounds and the active-set rate, the covering grid
// that decomposes the sum rate into per-cell mutual informations, and
// per-stage rates for an arbitrary scalable coding order.
//
// All rates are in bits. Decoders are indexed 1..N with side information
// Y_k = X + sum_{i<=k} noise_i, so larger k means noisier side information.
namespace siscale::gaussian {

inline constexpr double kInfVar = std::numeric_limits<double>::infinity();
// Decoders without side information are modeled by a noise variance of
// this factor times var_x; the induced rate error is below 1e-10 bits.
inline constexpr double kNoSideInfoScale = 1e12;

struct GaussianChain {
  double var_x;
  std::vector<double> noise_increments;  // variance of N_i, each > 0

  GaussianChain(double vx, std::vector<double> incr)
      : var_x(vx), noise_increments(std::move(incr)) {
    detail::require(var_x > 0.0 && std::isfinite(var_x),
                    "GaussianChain: var_x must be positive and finite");
    detail::require(!noise_increments.empty(), "GaussianChain: N >= 1 required");
    for (double v : noise_increments)
      detail::require(v > 0.0 && std::isfinite(v),
                      "GaussianChain: noise increments must be positive");
  }

  int size() const { return static_cast<int>(noise_increments.size()); }

  // s_k = sum_{i<=k} noise_i for 1-based k.
  double cum_noise(int k) const {
    detail::require(k >= 1 && k <= size(), "GaussianChain: decoder index");
    return std::accumulate(noise_increments.begin(),
                           noise_increments.begin() + k, 0.0);
  }
};

// MMSE of X given Y_k: (1/var_x + 1/s_k)^-1.
inline double conditional_variance(const GaussianChain& c, int k) {
  return 1.0 / (1.0 / c.var_x + 1.0 / c.cum_noise(k));
}

// Test-noise variance so that E[X - E(X|Y_k, X+Z_k)]^2 = D_k. Returns
// +infinity at the threshold D_k == conditional_variance(k) (the codeword
// carries nothing) and the ignore sentinel (NaN) above it.
inline double solve_test_noise(const GaussianChain& c, int k, double D_k) {
  detail::require(D_k > 0.0, "solve_test_noise: D_k must be positive");
  const double cv = conditional_variance(c, k);
  if (D_k > cv * (1.0 + 1e-12)) return std::numeric_limits<double>::quiet_NaN();
  const double inv = 1.0 / D_k - 1.0 / c.var_x - 1.0 / c.cum_noise(k);
  if (inv <= 0.0) return kInfVar;
  return 1.0 / inv;
}

inline bool test_noise_ignored(double z) { return std::isnan(z); }

namespace detail_gauss {

// A jointly Gaussian variable of the form X + (noise drawn from one of two
// independent nested noise chains). family 0 is the side-information chain,
// family 1 the codeword chain; X itself is noise zero in either family.
struct GVar {
  double noise;
  int family;
};

inline GVar x_var() { return GVar{0.0, 0}; }

inline double cov(double vx, const GVar& a, const GVar& b) {
  return vx + (a.family == b.family ? std::min(a.noise, b.noise) : 0.0);
}

// Var(target | conditioners). Infinite-noise conditioners carry nothing and
// are dropped; duplicated conditioners are deduplicated.
inline double cond_var(double vx, const GVar& target,
                       std::vector<GVar> cond) {
  std::vector<GVar> c;
  for (const auto& g : cond) {
    if (!std::isfinite(g.noise)) continue;
    bool dup = false;
    for (const auto& h : c)
      dup = dup || (h.family == g.family && h.noise == g.noise);
    if (!dup) c.push_back(g);
  }
  const double vt = vx + target.noise;
  if (c.empty()) return vt;
  const int m = static_cast<int>(c.size());
  Eigen::MatrixXd sig(m, m);
  Eigen::VectorXd cross(m);
  for (int i = 0; i < m; ++i) {
    cross(i) = cov(vx, target, c[i]);
    for (int j = 0; j < m; ++j) sig(i, j) = cov(vx, c[i], c[j]);
  }
  const Eigen::VectorXd w = sig.ldlt().solve(cross);
  return std::max(vt - cross.dot(w), 0.0);
}

// I(a; b | cond) in bits for scalar jointly Gaussian variables.
inline double cond_mi(double vx, const GVar& a, const GVar& b,
                      std::vector<GVar> cond) {
  if (!std::isfinite(a.noise) || !std::isfinite(b.noise)) return 0.0;
  const double v0 = cond_var(vx, a, cond);
  cond.push_back(b);
  const double v1 = cond_var(vx, a, cond);
  if (v0 <= 0.0 || v1 <= 0.0) return 0.0;
  const double r = v0 / v1;
  return r <= 1.0 ? 0.0 : 0.5 * std::log2(r);
}

}  // namespace detail_gauss

// Gaussian Wyner-Ziv rate for decoder k at distortion D (zero at or above
// the zero-rate threshold).
inline double wyner_ziv_gaussian(const GaussianChain& c, int k, double D) {
  detail::require(D > 0.0, "wyner_ziv_gaussian: D must be positive");
  const double cv = conditional_variance(c, k);
  if (D >= cv) return 0.0;
  return 0.5 * std::log2(cv / D);
}

// The nested forward test channel: per-decoder test noises, their increasing
// ranks, the nonnegative increment variances, and the active set.
struct WStarConstruction {
  std::vector<double> test_noise_vars;  // sigma_{Z_k}^2, index k-1
  std::vector<int> rank;                // omega(k) in 1..N, index k-1
  std::vector<double> increment_vars;   // sigma_{Z'_r}^2 by rank r, index r-1
  std::vector<int> active_set;          // A*_D, ascending decoder indices

  // Test noise of the codeword at a given rank (1-based).
  double noise_at_rank(int r) const {
    for (size_t k = 0; k < rank.size(); ++k)
      if (rank[k] == r) return test_noise_vars[k];
    throw std::invalid_argument("noise_at_rank: rank out of range");
  }
};

// Ranks the per-decoder test noises increasingly (ties broken by decoder
// index; tied codewords coincide so any consistent break yields the same
// rates) and derives increments and the active set
// A*_D = {k : omega(k) < omega(j) for all j > k}.
inline WStarConstruction construct_w_star(const GaussianChain& c,
                                          const std::vector<double>& D) {
  const int n = c.size();
  detail::require(static_cast<int>(D.size()) == n,
                  "construct_w_star: distortion vector length mismatch");
  WStarConstruction w;
  w.test_noise_vars.resize(n);
  for (int k = 1; k <= n; ++k) {
    const double z = solve_test_noise(c, k, D[k - 1]);
    detail::require(!test_noise_ignored(z),
                    "construct_w_star: distortion above threshold; drop it first");
    w.test_noise_vars[k - 1] = z;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return w.test_noise_vars[a] < w.test_noise_vars[b];
  });
  w.rank.resize(n);
  for (int r = 0; r < n; ++r) w.rank[order[r]] = r + 1;
  w.increment_vars.resize(n);
  for (int r = 0; r < n; ++r) {
    const double z = w.test_noise_vars[order[r]];
    const double prev = (r == 0) ? 0.0 : w.test_noise_vars[order[r - 1]];
    w.increment_vars[r] = z - prev;
  }
  for (int k = 0; k < n; ++k) {
    bool active = true;
    for (int j = k + 1; j < n; ++j)
      active = active && (w.rank[k] < w.rank[j]);
    if (active) w.active_set.push_back(k + 1);
  }
  return w;
}

// Lower bound on the sum rate when only the constraints in `subset`
// (ascending 1-based decoder indices) are enforced. The dropped decoders'
// noise increments merge into the neighboring retained stage.
inline double hb_lower_bound_subset(const GaussianChain& c,
                                    const std::vector<double>& D,
                                    const std::vector<int>& subset) {
  detail::require(!subset.empty(), "hb_lower_bound_subset: empty subset");
  const int m = static_cast<int>(subset.size());
  std::vector<double> s(m), dd(m);
  for (int j = 0; j < m; ++j) {
    const int k = subset[j];
    detail::require(k >= 1 && k <= c.size() && (j == 0 || k > subset[j - 1]),
                    "hb_lower_bound_subset: subset must be ascending in 1..N");
    s[j] = c.cum_noise(k);
    dd[j] = D[k - 1];
  }
  double log_num = 0.0, log_den = 0.0;
  // K_1 term: MMSE of X given the worst retained side information.
  const double k1 = 1.0 / (1.0 / c.var_x + 1.0 / s[m - 1]);
  log_num += std::log2(k1);
  log_den += std::log2(dd[0]);
  for (int j = 1; j < m; ++j) {
    const double incr = s[j] - s[j - 1];
    const double gamma = s[j - 1] / s[j];
    const double kj = s[j - 1] * incr / s[j];
    const double dhat = (1.0 - gamma) * (1.0 - gamma) * (dd[j] + s[j - 1]) +
                        gamma * gamma * incr;
    log_num += std::log2(kj);
    log_den += std::log2(dhat);
  }
  return 0.5 * (log_num - log_den);
}

struct HbRateResult {
  double rate = 0.0;
  std::vector<int> active_set;  // ascending decoder indices, within kept
  std::vector<int> kept;        // decoders whose constraint is below threshold
};

// Heegard-Berger rate for the Gaussian chain: distortions at or above their
// thresholds are dropped, then the active-set bound of the construction is
// evaluated. Equals the maximum over all nonempty subsets of
// hb_lower_bound_subset on the kept decoders.
inline HbRateResult hb_rate_gaussian(const GaussianChain& c,
                                     const std::vector<double>& D) {
  detail::require(static_cast<int>(D.size()) == c.size(),
                  "hb_rate_gaussian: distortion vector length mismatch");
  HbRateResult out;
  for (int k = 1; k <= c.size(); ++k) {
    detail::require(D[k - 1] > 0.0, "hb_rate_gaussian: distortions must be > 0");
    if (D[k - 1] < conditional_variance(c, k) * (1.0 - 1e-12))
      out.kept.push_back(k);
  }
  if (out.kept.empty()) return out;

  // Sub-problem over the kept decoders; ranks and the active set transfer
  // back through the kept index map.
  std::vector<double> sub_incr;
  std::vector<double> sub_d;
  double consumed = 0.0;
  for (int k : out.kept) {
    sub_incr.push_back(c.cum_noise(k) - consumed);
    consumed = c.cum_noise(k);
    sub_d.push_back(D[k - 1]);
  }
  GaussianChain sub(c.var_x, sub_incr);
  const WStarConstruction w = construct_w_star(sub, sub_d);
  for (int a : w.active_set) out.active_set.push_back(out.kept[a - 1]);
  out.rate = hb_lower_bound_subset(c, D, out.active_set);
  return out;
}

// Sum over the active set of I(X; W_k | Y_k, W_next) evaluated directly on
// the nested jointly Gaussian construction; equals the active-set bound.
inline double construction_sum_rate(const GaussianChain& c,
                                    const std::vector<double>& D) {
  using detail_gauss::GVar;
  const HbRateResult hb = hb_rate_gaussian(c, D);
  if (hb.active_set.empty()) return 0.0;
  std::vector<double> z(c.size());
  for (int k = 1; k <= c.size(); ++k) z[k - 1] = solve_test_noise(c, k, D[k - 1]);
  double total = 0.0;
  for (size_t j = 0; j < hb.active_set.size(); ++j) {
    const int k = hb.active_set[j];
    std::vector<GVar> cond{GVar{c.cum_noise(k), 0}};
    if (j + 1 < hb.active_set.size()) {
      const int next = hb.active_set[j + 1];
      cond.push_back(GVar{z[next - 1], 1});
    }
    total += detail_gauss::cond_mi(c.var_x, detail_gauss::x_var(),
                                   GVar{z[k - 1], 1}, cond);
  }
  return total;
}

// The covering grid: cell (i, j) holds
// I(W_(i); Y_{j-1} | Y_j, W_(i+1)) with Y_0 = X and W_(i) the codeword of
// rank i, so that covering the rectangles below-and-right of the points
// (omega(k), k) reproduces the sum rate.
struct CoverGrid {
  Eigen::MatrixXd cells;            // N x N, row = rank i, col = level j
  WStarConstruction construction;

  double rectangle_union_sum(const std::vector<int>& decoders) const {
    const int n = static_cast<int>(cells.rows());
    double total = 0.0;
    for (int i = 1; i <= n; ++i) {
      int height = 0;
      for (int k : decoders)
        if (construction.rank[k - 1] <= i) height = std::max(height, k);
      for (int j = 1; j <= height; ++j) total += cells(i - 1, j - 1);
    }
    return total;
  }
};

inline CoverGrid cover_grid(const GaussianChain& c,
                            const std::vector<double>& D) {
  using detail_gauss::GVar;
  const int n = c.size();
  CoverGrid grid;
  grid.construction = construct_w_star(c, D);
  grid.cells = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i <= n; ++i) {
    const double zi = grid.construction.noise_at_rank(i);
    const double znext =
        (i < n) ? grid.construction.noise_at_rank(i + 1) : kInfVar;
    for (int j = 1; j <= n; ++j) {
      const GVar y_above = (j == 1) ? detail_gauss::x_var()
                                    : GVar{c.cum_noise(j - 1), 0};
      std::vector<GVar> cond{GVar{c.cum_noise(j), 0}};
      if (std::isfinite(znext)) cond.push_back(GVar{znext, 1});
      grid.cells(i - 1, j - 1) =
          detail_gauss::cond_mi(c.var_x, y_above, GVar{zi, 1}, cond);
    }
  }
  return grid;
}

// Per-stage rates for scalable coding order pi (pi[t] is the 1-based decoder
// served at stage t+1): each stage covers the rectangle of its point and
// pays for the newly covered cells. Cumulative sums equal the prefix
// Heegard-Berger rates.
inline std::vector<double> scalable_rates(const GaussianChain& c,
                                          const std::vector<double>& D,
                                          const std::vector<int>& pi) {
  const int n = c.size();
  detail::require(static_cast<int>(pi.size()) == n,
                  "scalable_rates: order must have length N");
  std::vector<bool> seen(n, false);
  for (int k : pi) {
    detail::require(k >= 1 && k <= n && !seen[k - 1],
                    "scalable_rates: order must be a permutation of 1..N");
    seen[k - 1] = true;
  }

  // Dropped decoders (distortion at or above threshold) cover nothing.
  const HbRateResult hb = hb_rate_gaussian(c, D);
  if (hb.kept.empty()) return std::vector<double>(n, 0.0);
  std::vector<double> sub_incr, sub_d;
  double consumed = 0.0;
  for (int k : hb.kept) {
    sub_incr.push_back(c.cum_noise(k) - consumed);
    consumed = c.cum_noise(k);
    sub_d.push_back(D[k - 1]);
  }
  GaussianChain sub(c.var_x, sub_incr);
  const CoverGrid grid = cover_grid(sub, sub_d);
  const int m = static_cast<int>(hb.kept.size());

  std::vector<double> rates(n, 0.0);
  std::vector<std::vector<bool>> covered(m, std::vector<bool>(m, false));
  for (int t = 0; t < n; ++t) {
    const auto it = std::find(hb.kept.begin(), hb.kept.end(), pi[t]);
    if (it == hb.kept.end()) continue;  // unconstrained stage, zero rate
    const int sk = static_cast<int>(it - hb.kept.begin()) + 1;  // sub index
    const int w_rank = grid.construction.rank[sk - 1];
    double added = 0.0;
    for (int i = w_rank; i <= m; ++i)
      for (int j = 1; j <= sk; ++j)
        if (!covered[i - 1][j - 1]) {
          covered[i - 1][j - 1] = true;
          added += grid.cells(i - 1, j - 1);
        }
    rates[t] = added;
  }
  return rates;
}

// Per-stage perfect-scalability flags: stage t is flagged true when the
// prefix Heegard-Berger rate equals the Wyner-Ziv rate of the decoder
// served at stage t, within 1e-9 bits.
inline std::vector<bool> perfect_scalability_gaussian(
    const GaussianChain& c, const std::vector<double>& D,
    const std::vector<int>& pi, double tol = 1e-9) {
  const int n = c.size();
  detail::require(static_cast<int>(pi.size()) == n,
                  "perfect_scalability_gaussian: order must have length N");
  std::vector<bool> ok(n, false);
  std::vector<double> masked(n, 0.0);
  // Unconstrained decoders are modeled by threshold distortions.
  for (int k = 1; k <= n; ++k) masked[k - 1] = conditional_variance(c, k);
  for (int t = 0; t < n; ++t) {
    const int k = pi[t];
    masked[k - 1] = D[k - 1];
    const double prefix_rate = hb_rate_gaussian(c, masked).rate;
    const double wz = wyner_ziv_gaussian(c, k, D[k - 1]);
    ok[t] = std::abs(prefix_rate - wz) <= tol;
  }
  return ok;
}

}  // namespace siscale::gaussian
