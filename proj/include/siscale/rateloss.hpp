#pragma once

#include <Eigen/Dense>

#include <optional>
#include <variant>

#include "siscale/probcore.hpp"
#include "siscale/rdopt.hpp"

// Certifies the bounded-gap property of additive-Gaussian test channels
// under squared error: the first-stage rate is within 0.5 bit of the
// Wyner-Ziv reference and the sum rate within 1.0 bit of the two-decoder
// reference, for Gaussian sources in closed form and for finitely quantized
// densities via numerical integration with discrete-optimizer references.
namespace siscale::rateloss {

// Gaussian source with Y1 = X + N(0, var_n1); Y2 is either a further
// degraded observation or absent (no side information at decoder 2).
struct GaussianMse {
  double var_x = 1.0;
  double var_n1 = 1.0;
  std::optional<double> var_n2_increment;  // nullopt: Y2 constant
};

// Finitely quantized real source: P(X = levels[i]) = pmf[i], a discrete
// channel to Y1, and a constant Y2. Distortion is squared error between
// levels.
struct QuantizedMse {
  Eigen::VectorXd levels;
  Eigen::VectorXd pmf;
  Eigen::MatrixXd y1_given_x;  // row-stochastic |X| x |Y1|
};

struct MseInstance {
  std::variant<GaussianMse, QuantizedMse> source;
  double D1 = 0.0;
  double D2 = 0.0;
};

// 256 levels spanning +-6 standard deviations by default.
QuantizedMse quantize_gaussian(double var_x, double var_n1, int levels = 256,
                               double span_sigmas = 6.0);
QuantizedMse quantize_uniform(double half_width, double var_n1,
                              int levels = 256);

struct RatePair {
  double r1 = 0.0;
  double r_sum = 0.0;
};

// Rates of the additive-Gaussian two-layer construction. The noise split is
// selected by comparing the distortions: for D1 >= D2 the first layer uses
// the noisier description; for D1 <= D2 the coarse description conditions
// the refined one.
RatePair inner_rates_mse(const MseInstance& inst);

struct GapCertificate {
  RatePair inner;
  double wz1_ref = 0.0;   // first-stage reference R*_{X|Y1}(D1)
  double hb_ref = 0.0;    // sum-rate reference R_HB(D1, D2)
  double gap_r1 = 0.0;
  double gap_sum = 0.0;
  double tol = 1e-6;
  bool r1_within_half = false;
  bool sum_within_one = false;
  // Echo of the quantization used for discrete references (0 for Gaussian).
  int quant_levels = 0;
  double quant_step = 0.0;
};

// Computes inner rates and references and the two gaps. Gaussian instances
// use closed forms; quantized instances use the discrete optimizers with
// the given configuration (the certificate tolerance widens to the
// optimizer tolerance in that case).
GapCertificate gap_certificate(const MseInstance& inst,
                               const rdopt::OptimizerConfig& cfg = {});

}  // namespace siscale::rateloss
