#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "siscale/probcore.hpp"

// Closed forms for the doubly symmetric binary source under Hamming
// distortion with no side information at the second decoder: the G curve,
// the critical distortion where the rate-distortion curve switches to a
// time-sharing line, the two-decoder sum-rate formula valid in the
// low-first-distortion regime, and the distortion-plane classifier.
namespace siscale::dsbs {

struct DsbsInstance {
  double p;   // crossover of the channel X -> Y1, in (0, 0.5)
  double d1;  // Hamming distortion target at decoder 1, in [0, 0.5]
  double d2;  // Hamming distortion target at decoder 2, in [0, 0.5]

  DsbsInstance(double p_, double d1_, double d2_) : p(p_), d1(d1_), d2(d2_) {
    detail::require(p > 0.0 && p < 0.5, "DsbsInstance: p outside (0, 0.5)");
    detail::require(d1 >= 0.0 && d1 <= 0.5, "DsbsInstance: D1 outside [0, 0.5]");
    detail::require(d2 >= 0.0 && d2 <= 0.5, "DsbsInstance: D2 outside [0, 0.5]");
  }
};

// G(u) = h_b(p * u) - h_b(u), the binary Wyner-Ziv curve before time sharing.
inline double g_function(double p, double u) {
  if (!(p > 0.0 && p < 0.5))
    throw std::domain_error("g_function: p outside (0, 0.5)");
  if (!(u >= 0.0 && u <= 0.5))
    throw std::domain_error("g_function: u outside [0, 0.5]");
  return binary_entropy(binary_convolve(p, u)) - binary_entropy(u);
}

// Analytic derivative of G, used for the tangency equation; avoids
// finite-difference noise near the tangent point.
inline double g_derivative(double p, double u) {
  if (!(u > 0.0 && u < 0.5))
    throw std::domain_error("g_derivative: u outside (0, 0.5)");
  const double pu = binary_convolve(p, u);
  return (1.0 - 2.0 * p) * std::log2((1.0 - pu) / pu) -
         std::log2((1.0 - u) / u);
}

// The critical distortion d_c in (0, p): the unique root of
// F(d) = G(d) - (d - p) G'(d), located by bisection and one Newton polish.
inline double critical_distortion(double p) {
  if (!(p > 0.0 && p < 0.5))
    throw std::domain_error("critical_distortion: p outside (0, 0.5)");
  auto f = [p](double d) {
    return g_function(p, d) - (d - p) * g_derivative(p, d);
  };
  double lo = 1e-9, hi = p - 1e-9;
  double flo = f(lo), fhi = f(hi);
  if (!(flo < 0.0 && fhi > 0.0))
    throw std::runtime_error("critical_distortion: bracketing failed");
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double d = 0.5 * (lo + hi);
  // One Newton step on F; F'(d) = -(d - p) G''(d), with G'' from the
  // analytic G' expression.
  const double eps = 1e-7;
  const double fp = (f(d + eps) - f(d - eps)) / (2.0 * eps);
  if (std::abs(fp) > 1e-12) {
    const double step = f(d) / fp;
    const double cand = d - step;
    if (cand > 0.0 && cand < p && std::abs(f(cand)) < std::abs(f(d))) d = cand;
  }
  return d;
}

// The binary Wyner-Ziv rate-distortion function with side information of
// crossover p: G(D) below d_c, the tangent time-sharing line on [d_c, p],
// and zero beyond p.
inline double wz_dsbs(double p, double D) {
  if (!(p > 0.0 && p < 0.5))
    throw std::domain_error("wz_dsbs: p outside (0, 0.5)");
  if (!(D >= 0.0 && D <= 0.5))
    throw std::domain_error("wz_dsbs: D outside [0, 0.5]");
  if (D >= p) return 0.0;
  const double dc = critical_distortion(p);
  if (D <= dc) return g_function(p, D);
  return g_function(p, dc) * (p - D) / (p - dc);
}

// Witness test channel: X -> W1 is a crossover-q1 channel and W1 -> W2 a
// crossover-eta channel, as conditional pmf matrices.
struct CascadeWitness {
  double q1;            // crossover X -> W1
  double eta;           // crossover W1 -> W2
  MatrixXd w1_given_x;  // 2x2
  MatrixXd w2_given_w1; // 2x2
};

inline MatrixXd bsc_matrix(double q) {
  MatrixXd m(2, 2);
  m << 1.0 - q, q, q, 1.0 - q;
  return m;
}

// Solves q1 * eta = target for eta given q1 < 0.5.
inline double deconvolve_binary(double q1, double target) {
  detail::require(q1 < 0.5, "deconvolve_binary: q1 must be < 0.5");
  detail::require(target >= q1 - 1e-15,
                  "deconvolve_binary: target below q1 is unreachable");
  const double eta = (target - q1) / (1.0 - 2.0 * q1);
  return std::min(std::max(eta, 0.0), 1.0);
}

struct RegionIdResult {
  double rate;              // 1 - h_b(D2 * p) + G(D1)
  CascadeWitness witness;   // cascade achieving (D1, D2) exactly
};

// Two-decoder sum rate in the regime 0 <= D1 <= min(d_c, D2), together with
// the cascade witness whose stage distortions evaluate to exactly D1 and D2.
inline RegionIdResult hb_dsbs_region_ID(double p, double D1, double D2) {
  DsbsInstance inst(p, D1, D2);  // validates ranges
  const double dc = critical_distortion(p);
  if (!(D1 <= std::min(dc, D2) + 1e-15))
    throw std::domain_error(
        "hb_dsbs_region_ID: (D1, D2) outside the low-D1 regime (need D1 <= "
        "min(d_c, D2))");
  const double rate = 1.0 - binary_entropy(binary_convolve(D2, p)) +
                      g_function(p, D1);
  const double eta = deconvolve_binary(D1, D2);
  return RegionIdResult{rate, CascadeWitness{D1, eta, bsc_matrix(D1),
                                             bsc_matrix(eta)}};
}

enum class Region { ID, IC, UnresolvedIAIB, Degenerate };

inline std::string region_name(Region r) {
  switch (r) {
    case Region::ID: return "I-D";
    case Region::IC: return "I-C";
    case Region::UnresolvedIAIB: return "UNRESOLVED(I-A/I-B)";
    case Region::Degenerate: return "DEGENERATE";
  }
  return "?";
}

// Distortion-plane classifier. The I-C label implements the time-sharing
// feasibility chain D2 <= D1*eta = eta' <= d_c literally and is best-effort;
// the I-A/I-B boundary is not available in closed form and is reported as
// unresolved inside the nondegenerate square.
inline Region classify_region(double p, double D1, double D2) {
  DsbsInstance inst(p, D1, D2);
  if (D1 >= p || D2 >= 0.5) return Region::Degenerate;
  const double dc = critical_distortion(p);
  if (D1 <= std::min(dc, D2)) return Region::ID;
  // Feasible eta' must satisfy max(D1, D2) <= eta' <= d_c since D1*eta
  // ranges over [D1, 0.5].
  if (std::max(D1, D2) <= dc) return Region::IC;
  return Region::UnresolvedIAIB;
}

// Recognizes a JointSource as a uniform binary source with a symmetric
// crossover channel to Y1 and constant Y2; returns the crossover if so.
inline std::optional<double> match_dsbs(const JointSource& src,
                                        double tol = 1e-12) {
  if (src.x_size() != 2 || src.y1_size() != 2 || src.y2_size() != 1)
    return std::nullopt;
  const MatrixXd& j = src.joint_x_y1();
  if (std::abs(j(0, 0) - j(1, 1)) > tol || std::abs(j(0, 1) - j(1, 0)) > tol)
    return std::nullopt;
  const double px0 = j(0, 0) + j(0, 1);
  if (std::abs(px0 - 0.5) > tol) return std::nullopt;
  const double p = 2.0 * j(0, 1);
  if (!(p > 0.0 && p < 0.5)) return std::nullopt;
  return p;
}

}  // namespace siscale::dsbs
