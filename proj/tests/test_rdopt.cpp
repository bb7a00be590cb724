#include <doctest.h>

#include "oracles.hpp"
#include "siscale/dsbs.hpp"
#include "siscale/rdopt.hpp"

using namespace siscale;
using namespace siscale::rdopt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

JointSource independent_binary() {
  MatrixXd j(2, 2);
  j << 0.25, 0.25, 0.25, 0.25;
  return JointSource(j, MatrixXd::Ones(2, 1));
}

JointSource perfect_side_info() {
  MatrixXd j = MatrixXd::Zero(2, 2);
  j(0, 0) = j(1, 1) = 0.5;
  return JointSource(j, MatrixXd::Ones(2, 1));
}

OptimizerConfig test_config() {
  OptimizerConfig cfg;
  cfg.restarts = 8;
  cfg.grid_resolution = 16;
  cfg.seed = 31337;
  return cfg;
}

}  // namespace

TEST_CASE("slepian-wolf rates are exact") {
  CHECK(slepian_wolf_rate(perfect_side_info(), SideInfo::Y1) ==
        doctest::Approx(0.0));
  CHECK(slepian_wolf_rate(independent_binary(), SideInfo::Y1) ==
        doctest::Approx(1.0));
  CHECK(slepian_wolf_rate(JointSource::dsbs(0.25), SideInfo::Y1) ==
        doctest::Approx(0.811278124459133).epsilon(1e-9));
  CHECK(slepian_wolf_rate(JointSource::dsbs(0.25), SideInfo::Y2) ==
        doctest::Approx(1.0));
}

TEST_CASE("perfect side information needs no rate") {
  const auto ham = DistortionMeasure::hamming(2);
  const auto r = wyner_ziv_rate(perfect_side_info(), SideInfo::Y1, ham, 0.0,
                                test_config());
  CHECK(r.feasible);
  CHECK(r.rate == doctest::Approx(0.0));
}

TEST_CASE("no side information matches the alternating-minimization oracle") {
  const auto ham = DistortionMeasure::hamming(2);
  VectorXd px(2);
  px << 0.5, 0.5;
  const double oracle = oracles::blahut_arimoto_rd(px, ham, 0.1);
  CHECK(oracle == doctest::Approx(1.0 - binary_entropy(0.1)).epsilon(1e-6));

  const auto r = wyner_ziv_rate(independent_binary(), SideInfo::Y1, ham, 0.1,
                                test_config());
  REQUIRE(r.feasible);
  CHECK(r.rate == doctest::Approx(oracle).epsilon(0.02));
  CHECK(r.rate >= oracle - 1e-9);  // heuristic stays above the true minimum
}

TEST_CASE("symmetric binary source against the closed form") {
  const double p = 0.25;
  const JointSource src = JointSource::dsbs(p);
  const auto ham = DistortionMeasure::hamming(2);
  const double dc = dsbs::critical_distortion(p);

  SUBCASE("below the critical distortion") {
    for (double D : {0.02, 0.04}) {
      REQUIRE(D < dc);
      const auto r = wyner_ziv_rate(src, SideInfo::Y1, ham, D, test_config());
      REQUIRE(r.feasible);
      CHECK(std::abs(r.rate - dsbs::g_function(p, D)) < 0.01);
      CHECK(r.rate >= dsbs::g_function(p, D) - 1e-9);
    }
  }
  SUBCASE("time-sharing branch") {
    for (double D : {0.1, 0.18}) {
      REQUIRE(D > dc);
      REQUIRE(D < p);
      const auto r = wyner_ziv_rate(src, SideInfo::Y1, ham, D, test_config());
      REQUIRE(r.feasible);
      CHECK(std::abs(r.rate - dsbs::wz_dsbs(p, D)) < 0.01);
    }
  }
  SUBCASE("zero rate at and beyond the side-information distortion") {
    const auto r = wyner_ziv_rate(src, SideInfo::Y1, ham, p, test_config());
    CHECK(r.feasible);
    CHECK(r.rate == doctest::Approx(0.0));
  }
  SUBCASE("lossless endpoint equals the conditional entropy") {
    const auto r = wyner_ziv_rate(src, SideInfo::Y1, ham, 0.0, test_config());
    REQUIRE(r.feasible);
    CHECK(std::abs(r.rate - binary_entropy(p)) < 2e-3);
  }
}

TEST_CASE("infeasible distortion is reported") {
  MatrixXd d(2, 2);
  d << 0.5, 1.0, 1.0, 0.5;  // minimum achievable distortion is 0.5
  const auto r = wyner_ziv_rate(independent_binary(), SideInfo::Y1,
                                DistortionMeasure(d), 0.2, test_config());
  CHECK_FALSE(r.feasible);
  CHECK(r.message.find("infeasible") != std::string::npos);
}

TEST_CASE("sweep is monotone and witnessed") {
  const JointSource src = JointSource::dsbs(0.25);
  const auto ham = DistortionMeasure::hamming(2);
  std::vector<double> Ds{0.01, 0.03, 0.06, 0.1, 0.15, 0.2, 0.3};
  const auto sweep = wyner_ziv_sweep(src, SideInfo::Y1, ham, Ds, test_config());
  for (std::size_t i = 1; i < sweep.size(); ++i)
    CHECK(sweep[i].rate <= sweep[i - 1].rate + 1e-12);
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    REQUIRE(sweep[i].feasible);
    const auto ev = evaluate_wz_witness(src, SideInfo::Y1, ham,
                                        sweep[i].witness);
    CHECK(ev.rate == doctest::Approx(sweep[i].rate).epsilon(1e-9));
    CHECK(ev.distortion1 <= Ds[i] + 1e-9);
  }
}

TEST_CASE("two-decoder rate: degenerate and low-D1 regimes") {
  const double p = 0.25;
  const JointSource src = JointSource::dsbs(p);
  const auto ham = DistortionMeasure::hamming(2);

  SUBCASE("both at zero-rate levels") {
    const auto r =
        heegard_berger_rate(src, ham, ham, 0.3, 0.5, test_config());
    REQUIRE(r.feasible);
    CHECK(r.rate == doctest::Approx(0.0));
  }
  SUBCASE("low-D1 closed form") {
    const double dc = dsbs::critical_distortion(p);
    for (const auto& [D1, D2] :
         std::vector<std::pair<double, double>>{{0.5 * dc, 0.2},
                                                {0.9 * dc, 0.45}}) {
      const double target = dsbs::hb_dsbs_region_ID(p, D1, D2).rate;
      const auto r = heegard_berger_rate(src, ham, ham, D1, D2, test_config());
      REQUIRE(r.feasible);
      CHECK(std::abs(r.rate - target) < 0.01);
      CHECK(r.distortion1 <= D1 + 1e-9);
      CHECK(r.distortion2 <= D2 + 1e-9);
    }
  }
  SUBCASE("infeasibility is per constraint") {
    MatrixXd d(2, 2);
    d << 0.5, 1.0, 1.0, 0.5;
    const auto r = heegard_berger_rate(src, DistortionMeasure(d), ham, 0.1,
                                       0.1, test_config());
    CHECK_FALSE(r.feasible);
    CHECK(r.message.find("D1") != std::string::npos);
  }
}

TEST_CASE("lossless-first objective cross-checks the two-decoder rate") {
  const JointSource src = JointSource::dsbs(0.25);
  const auto ham = DistortionMeasure::hamming(2);
  const double D2 = 0.1;
  const auto lf = hb_lossless_first(src, ham, D2, test_config());
  REQUIRE(lf.feasible);
  const auto hb = heegard_berger_rate(src, ham, ham, 0.0, D2, test_config());
  REQUIRE(hb.feasible);
  CHECK(std::abs(lf.rate - hb.rate) < 0.02);
}

TEST_CASE("lossless-first degenerate corners") {
  const auto ham = DistortionMeasure::hamming(2);
  // Perfect first side information: only the second stage matters and a
  // constant side information forces the plain rate-distortion value.
  const auto r =
      hb_lossless_first(perfect_side_info(), ham, 0.1, test_config());
  REQUIRE(r.feasible);
  VectorXd px(2);
  px << 0.5, 0.5;
  const double rd = oracles::blahut_arimoto_rd(px, ham, 0.1);
  CHECK(std::abs(r.rate - rd) < 0.02);

  // Second stage satisfiable at zero rate: the objective collapses to the
  // first-stage conditional entropy.
  const JointSource src = JointSource::dsbs(0.25);
  const auto r2 = hb_lossless_first(src, ham, 0.5, test_config());
  REQUIRE(r2.feasible);
  CHECK(std::abs(r2.rate - slepian_wolf_rate(src, SideInfo::Y1)) < 2e-3);
}

TEST_CASE("one-constraint rate never exceeds the two-constraint rate") {
  opt::Rng rng(2024);
  OptimizerConfig cfg = test_config();
  cfg.restarts = 6;
  for (int trial = 0; trial < 6; ++trial) {
    const JointSource src = oracles::random_source(2, 2, 2, rng);
    const auto ham = DistortionMeasure::hamming(2);
    const double D1 = 0.05 + 0.2 * rng.uniform();
    const double D2 = 0.05 + 0.3 * rng.uniform();
    const auto wz = wyner_ziv_rate(src, SideInfo::Y1, ham, D1, cfg);
    const auto hb = heegard_berger_rate(src, ham, ham, D1, D2, cfg);
    REQUIRE(wz.feasible);
    REQUIRE(hb.feasible);
    // The two-constraint channel serves the first decoder too, so its
    // witness is a candidate for the one-constraint problem.
    CHECK(wz.rate <= hb.rate + 0.02);
  }
}

TEST_CASE("witness re-evaluation reproduces the rate") {
  const JointSource src = JointSource::dsbs(0.25);
  const auto ham = DistortionMeasure::hamming(2);
  const auto hb = heegard_berger_rate(src, ham, ham, 0.03, 0.2, test_config());
  REQUIRE(hb.feasible);
  const auto ev = evaluate_hb_witness(src, ham, ham, hb.witness);
  CHECK(ev.rate == doctest::Approx(hb.rate).epsilon(1e-9));
  CHECK(ev.distortion1 == doctest::Approx(hb.distortion1).epsilon(1e-9));
  CHECK(ev.distortion2 == doctest::Approx(hb.distortion2).epsilon(1e-9));
}
