#include "siscale/rateloss.hpp"

#include <cmath>

#include "siscale/gaussian.hpp"

namespace siscale::rateloss {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using gaussian::detail_gauss::GVar;
using gaussian::detail_gauss::cond_mi;
using gaussian::detail_gauss::x_var;

constexpr double kLog2e = 1.4426950408889634;

// ----- Gaussian closed forms -------------------------------------------------

struct GaussSetup {
  double vx;
  double s1;  // noise to Y1
  double s2;  // noise to Y2 (huge when absent)
};

GaussSetup setup(const GaussianMse& g) {
  detail::require(g.var_x > 0.0 && g.var_n1 > 0.0,
                  "rateloss: variances must be positive");
  const double incr = g.var_n2_increment
                          ? *g.var_n2_increment
                          : gaussian::kNoSideInfoScale * g.var_x;
  detail::require(incr > 0.0, "rateloss: Y2 increment must be positive");
  return {g.var_x, g.var_n1, g.var_n1 + incr};
}

RatePair gaussian_inner(const GaussSetup& s, double D1, double D2) {
  const GVar y1{s.s1, 0}, y2{s.s2, 0};
  RatePair out;
  if (D1 >= D2) {
    // W1' = X + N1 + N2 (variance D1), W2' = X + N2 (variance D2); the two
    // test noises are nested through the shared N2.
    const GVar w1{D1, 1}, w2{D2, 1};
    out.r1 = cond_mi(s.vx, x_var(), w1, {y1});
    out.r_sum = cond_mi(s.vx, x_var(), w2, {y2});
  } else {
    // W1' = X + N1 (variance D1), W2' = X + N1 + N2 (variance D2).
    const GVar w1{D1, 1}, w2{D2, 1};
    out.r1 = cond_mi(s.vx, x_var(), w1, {y1});
    out.r_sum = cond_mi(s.vx, x_var(), w2, {y2}) +
                cond_mi(s.vx, x_var(), w1, {y1, w2});
  }
  return out;
}

// ----- quantized-density machinery -------------------------------------------

// Differential entropy (bits) of sum X + N with X discrete on `levels`
// weighted by `w` (already normalized) and N Gaussian with variance `var`.
double mixture_entropy_bits(const VectorXd& levels, const VectorXd& w,
                            double var) {
  const double sigma = std::sqrt(var);
  const double lo = levels.minCoeff() - 8.0 * sigma;
  const double hi = levels.maxCoeff() + 8.0 * sigma;
  const int nq = 4096;
  const double dz = (hi - lo) / nq;
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
  double h = 0.0;
  for (int i = 0; i < nq; ++i) {
    const double z = lo + (i + 0.5) * dz;
    double f = 0.0;
    for (int k = 0; k < levels.size(); ++k) {
      const double t = (z - levels(k)) / sigma;
      f += w(k) * norm * std::exp(-0.5 * t * t);
    }
    if (f > 1e-300) h -= f * std::log2(f) * dz;
  }
  return h;
}

double gaussian_entropy_bits(double var) {
  return 0.5 * std::log2(2.0 * M_PI * var) + 0.5 * kLog2e;
}

// I(X; X + N | Y) for discrete X with explicit P(y|x) and Gaussian N.
double quantized_cond_mi(const QuantizedMse& q, double noise_var) {
  const int nx = static_cast<int>(q.levels.size());
  const int ny = static_cast<int>(q.y1_given_x.cols());
  const double hn = gaussian_entropy_bits(noise_var);
  double total = 0.0;
  for (int y = 0; y < ny; ++y) {
    VectorXd w(nx);
    for (int x = 0; x < nx; ++x) w(x) = q.pmf(x) * q.y1_given_x(x, y);
    const double py = w.sum();
    if (py <= kProbFloor) continue;
    w /= py;
    total += py * (mixture_entropy_bits(q.levels, w, noise_var) - hn);
  }
  return total;
}

// I(X; X + N) with no conditioning (constant side information).
double quantized_mi(const QuantizedMse& q, double noise_var) {
  return mixture_entropy_bits(q.levels, q.pmf, noise_var) -
         gaussian_entropy_bits(noise_var);
}

RatePair quantized_inner(const QuantizedMse& q, double D1, double D2) {
  RatePair out;
  if (D1 >= D2) {
    out.r1 = quantized_cond_mi(q, D1);
    out.r_sum = quantized_mi(q, D2);
  } else {
    // I(X;W1'|Y1,W2') = I(X;W1'|Y1) - I(X;W2'|Y1) because W2' is a degraded
    // version of W1' (shared first noise).
    out.r1 = quantized_cond_mi(q, D1);
    out.r_sum = quantized_mi(q, D2) + quantized_cond_mi(q, D1) -
                quantized_cond_mi(q, D2);
  }
  return out;
}

JointSource quantized_source(const QuantizedMse& q) {
  const int nx = static_cast<int>(q.levels.size());
  const int ny = static_cast<int>(q.y1_given_x.cols());
  MatrixXd jxy(nx, ny);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) jxy(x, y) = q.pmf(x) * q.y1_given_x(x, y);
  return JointSource(jxy, MatrixXd::Ones(ny, 1));
}

DistortionMeasure squared_error(const VectorXd& levels) {
  const int n = static_cast<int>(levels.size());
  MatrixXd d(n, n);
  for (int x = 0; x < n; ++x)
    for (int xh = 0; xh < n; ++xh) {
      const double diff = levels(x) - levels(xh);
      d(x, xh) = diff * diff;
    }
  return DistortionMeasure(d);
}

}  // namespace

QuantizedMse quantize_gaussian(double var_x, double var_n1, int levels,
                               double span_sigmas) {
  detail::require(levels >= 2, "quantize_gaussian: need at least two levels");
  QuantizedMse q;
  const double sigma = std::sqrt(var_x);
  q.levels.resize(levels);
  VectorXd raw(levels);
  for (int i = 0; i < levels; ++i) {
    const double z = -span_sigmas + 2.0 * span_sigmas * (i + 0.5) / levels;
    q.levels(i) = z * sigma;
    raw(i) = std::exp(-0.5 * z * z);
  }
  q.pmf = raw / raw.sum();
  // Y1 = quantize(X + M) onto the same grid, cell probabilities via the
  // Gaussian CDF with absorbing edge cells.
  const double sn = std::sqrt(var_n1);
  const double step = q.levels(1) - q.levels(0);
  q.y1_given_x = MatrixXd::Zero(levels, levels);
  auto cdf = [&](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  for (int x = 0; x < levels; ++x)
    for (int y = 0; y < levels; ++y) {
      const double lo = (y == 0) ? -1e30 : q.levels(y) - 0.5 * step;
      const double hi = (y == levels - 1) ? 1e30 : q.levels(y) + 0.5 * step;
      q.y1_given_x(x, y) =
          cdf((hi - q.levels(x)) / sn) - cdf((lo - q.levels(x)) / sn);
    }
  for (int x = 0; x < levels; ++x)
    q.y1_given_x.row(x) /= q.y1_given_x.row(x).sum();
  return q;
}

QuantizedMse quantize_uniform(double half_width, double var_n1, int levels) {
  detail::require(levels >= 2, "quantize_uniform: need at least two levels");
  QuantizedMse q;
  q.levels.resize(levels);
  for (int i = 0; i < levels; ++i)
    q.levels(i) = -half_width + 2.0 * half_width * (i + 0.5) / levels;
  q.pmf = VectorXd::Constant(levels, 1.0 / levels);
  const double sn = std::sqrt(var_n1);
  const double step = q.levels(1) - q.levels(0);
  q.y1_given_x = MatrixXd::Zero(levels, levels);
  auto cdf = [&](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  for (int x = 0; x < levels; ++x)
    for (int y = 0; y < levels; ++y) {
      const double lo = (y == 0) ? -1e30 : q.levels(y) - 0.5 * step;
      const double hi = (y == levels - 1) ? 1e30 : q.levels(y) + 0.5 * step;
      q.y1_given_x(x, y) =
          cdf((hi - q.levels(x)) / sn) - cdf((lo - q.levels(x)) / sn);
    }
  for (int x = 0; x < levels; ++x)
    q.y1_given_x.row(x) /= q.y1_given_x.row(x).sum();
  return q;
}

RatePair inner_rates_mse(const MseInstance& inst) {
  detail::require(inst.D1 > 0.0 && inst.D2 > 0.0,
                  "inner_rates_mse: distortions must be positive");
  if (std::holds_alternative<GaussianMse>(inst.source))
    return gaussian_inner(setup(std::get<GaussianMse>(inst.source)), inst.D1,
                          inst.D2);
  return quantized_inner(std::get<QuantizedMse>(inst.source), inst.D1,
                         inst.D2);
}

GapCertificate gap_certificate(const MseInstance& inst,
                               const rdopt::OptimizerConfig& cfg) {
  GapCertificate cert;
  cert.inner = inner_rates_mse(inst);

  if (std::holds_alternative<GaussianMse>(inst.source)) {
    const GaussSetup s = setup(std::get<GaussianMse>(inst.source));
    const gaussian::GaussianChain chain(s.vx, {s.s1, s.s2 - s.s1});
    cert.wz1_ref = gaussian::wyner_ziv_gaussian(chain, 1, inst.D1);
    cert.hb_ref = gaussian::hb_rate_gaussian(chain, {inst.D1, inst.D2}).rate;
    cert.tol = 1e-6;
  } else {
    const QuantizedMse& q = std::get<QuantizedMse>(inst.source);
    const JointSource src = quantized_source(q);
    const DistortionMeasure d = squared_error(q.levels);
    const auto wz =
        rdopt::wyner_ziv_rate(src, rdopt::SideInfo::Y1, d, inst.D1, cfg);
    detail::require(wz.feasible, "gap_certificate: " + wz.message);
    const auto hb =
        rdopt::heegard_berger_rate(src, d, d, inst.D1, inst.D2, cfg);
    detail::require(hb.feasible, "gap_certificate: " + hb.message);
    cert.wz1_ref = wz.rate;
    cert.hb_ref = hb.rate;
    cert.tol = cfg.tolerance;
    cert.quant_levels = static_cast<int>(q.levels.size());
    cert.quant_step =
        q.levels.size() > 1 ? q.levels(1) - q.levels(0) : 0.0;
  }

  cert.gap_r1 = cert.inner.r1 - cert.wz1_ref;
  cert.gap_sum = cert.inner.r_sum - cert.hb_ref;
  cert.r1_within_half = cert.gap_r1 <= 0.5 + cert.tol;
  cert.sum_within_one = cert.gap_sum <= 1.0 + cert.tol;
  return cert;
}

}  // namespace siscale::rateloss
