#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "siscale/rateloss.hpp"

using namespace siscale;
using namespace siscale::rateloss;

namespace {

double half_log2(double ratio) { return 0.5 * std::log2(ratio); }

}  // namespace

TEST_CASE("additive construction rates match scalar formulas") {
  // var_x = 1, Y1 = X + N(0,1), no second side information.
  const GaussianMse g{1.0, 1.0, std::nullopt};

  SUBCASE("coarse-then-refine split (D1 <= D2)") {
    const MseInstance inst{g, 0.1, 0.3};
    const RatePair r = inner_rates_mse(inst);
    // I(X; X+N(0.1) | Y1) with Var(X|Y1) = 0.5 and Var(X|Y1,W) = 1/12.
    CHECK(r.r1 == doctest::Approx(half_log2(0.5 * 12.0)).epsilon(1e-9));
    // I(X; X+N(0.3)) + I(X; X+N(0.1) | Y1, X+N(0.3)).
    const double term2 = half_log2(1.0 / (0.3 / 1.3));
    const double term3 = half_log2(0.1875 * 12.0);
    CHECK(r.r_sum == doctest::Approx(term2 + term3).epsilon(1e-9));
  }
  SUBCASE("noisier-first split (D1 >= D2)") {
    const MseInstance inst{g, 0.3, 0.1};
    const RatePair r = inner_rates_mse(inst);
    CHECK(r.r1 == doctest::Approx(half_log2(0.5 / 0.1875)).epsilon(1e-9));
    CHECK(r.r_sum == doctest::Approx(half_log2(11.0)).epsilon(1e-9));
  }
  SUBCASE("the two cases agree at D1 = D2") {
    const MseInstance a{g, 0.2, 0.2 + 1e-9};
    const MseInstance b{g, 0.2 + 1e-9, 0.2};
    const RatePair ra = inner_rates_mse(a);
    const RatePair rb = inner_rates_mse(b);
    CHECK(ra.r1 == doctest::Approx(rb.r1).epsilon(1e-6));
    CHECK(ra.r_sum == doctest::Approx(rb.r_sum).epsilon(1e-6));
  }
  SUBCASE("rates stay above the first-stage reference near the threshold") {
    const MseInstance inst{g, 0.49, 0.49};
    const auto cert = gap_certificate(inst);
    CHECK(cert.gap_r1 >= -cert.tol);
    CHECK(cert.gap_r1 <= 0.5 + cert.tol);
  }
  SUBCASE("nonpositive distortions rejected") {
    CHECK_THROWS_AS(inner_rates_mse(MseInstance{g, 0.0, 0.1}),
                    std::invalid_argument);
  }
}

TEST_CASE("gap certificate on a parameter grid") {
  bool nontrivial = false;
  for (double vx : {0.5, 1.0, 2.0, 4.0, 8.0})
    for (double vn : {0.25, 0.5, 1.0, 2.0, 4.0})
      for (double f1 : {0.05, 0.2, 0.5, 0.8, 0.95})
        for (double f2 : {0.05, 0.2, 0.5, 0.8, 0.95}) {
          const MseInstance inst{GaussianMse{vx, vn, std::nullopt}, f1 * vx,
                                 f2 * vx};
          const auto cert = gap_certificate(inst);
          CHECK(cert.gap_r1 <= 0.5 + cert.tol);
          CHECK(cert.gap_sum <= 1.0 + cert.tol);
          CHECK(cert.gap_r1 >= -cert.tol);
          CHECK(cert.gap_sum >= -cert.tol);
          nontrivial = nontrivial || cert.gap_sum > 0.05;
        }
  CHECK(nontrivial);
}

TEST_CASE("degraded second side information") {
  const GaussianMse g{1.0, 0.5, 2.0};
  const MseInstance inst{g, 0.15, 0.35};
  const auto cert = gap_certificate(inst);
  CHECK(cert.gap_r1 >= -cert.tol);
  CHECK(cert.gap_r1 <= 0.5 + cert.tol);
  CHECK(cert.gap_sum >= -cert.tol);
  CHECK(cert.gap_sum <= 1.0 + cert.tol);
}

TEST_CASE("scaling the source and distortions leaves rates unchanged") {
  const double lam2 = 7.3;
  const MseInstance a{GaussianMse{1.0, 1.5, std::nullopt}, 0.12, 0.4};
  const MseInstance b{GaussianMse{lam2, 1.5 * lam2, std::nullopt},
                      0.12 * lam2, 0.4 * lam2};
  const RatePair ra = inner_rates_mse(a);
  const RatePair rb = inner_rates_mse(b);
  CHECK(ra.r1 == doctest::Approx(rb.r1).epsilon(1e-9));
  CHECK(ra.r_sum == doctest::Approx(rb.r_sum).epsilon(1e-9));
  const auto ca = gap_certificate(a);
  const auto cb = gap_certificate(b);
  CHECK(ca.gap_r1 == doctest::Approx(cb.gap_r1).epsilon(1e-6));
  CHECK(ca.gap_sum == doctest::Approx(cb.gap_sum).epsilon(1e-6));
}

TEST_CASE("quantized uniform source stays within the budgets") {
  QuantizedMse q = quantize_uniform(std::sqrt(3.0), 1.0, 8);
  const double var = (q.pmf.array() * q.levels.array().square()).sum();
  MseInstance inst{q, 0.25 * var, 0.55 * var};
  rdopt::OptimizerConfig cfg;
  cfg.restarts = 5;
  cfg.seed = 5151;
  cfg.tolerance = 0.02;
  const auto cert = gap_certificate(inst, cfg);
  CHECK(cert.quant_levels == 8);
  CHECK(cert.quant_step > 0.0);
  // The discrete references are heuristic upper approximations of the true
  // minima, so the certificate tolerance is the optimizer tolerance.
  CHECK(cert.gap_r1 <= 0.5 + cert.tol);
  CHECK(cert.gap_sum <= 1.0 + cert.tol);
  CHECK(cert.gap_r1 >= -cert.tol);
  CHECK(cert.gap_sum >= -cert.tol);
}

TEST_CASE("quantizer construction") {
  const auto q = quantize_gaussian(2.0, 1.0, 32, 6.0);
  CHECK(q.levels.size() == 32);
  CHECK(q.pmf.sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (int x = 0; x < 32; ++x)
    CHECK(q.y1_given_x.row(x).sum() == doctest::Approx(1.0).epsilon(1e-12));
  // Symmetric grid, unit-ish second moment scaling with var_x = 2.
  CHECK(q.levels(0) == doctest::Approx(-q.levels(31)).epsilon(1e-12));
  const double var = (q.pmf.array() * q.levels.array().square()).sum();
  CHECK(var == doctest::Approx(2.0).epsilon(0.05));
}
