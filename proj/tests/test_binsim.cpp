#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "siscale/binsim.hpp"
#include "siscale/channels.hpp"

using namespace siscale;
using namespace siscale::binsim;
using Eigen::MatrixXd;

namespace {

// A simple two-layer auxiliary for the symmetric binary source: V is a
// crossover-cv description of X, and W1, W2 add fresh crossover noise.
regions::ScalableAux cascade_aux(double cv, double c1, double c2) {
  const MatrixXd pv = channels::crossover(cv, 2);
  MatrixXd pw1(4, 2), pw2(4, 2);
  for (int x = 0; x < 2; ++x)
    for (int v = 0; v < 2; ++v) {
      pw1.row(x * 2 + v) = channels::crossover(c1, 2).row(x);
      pw2.row(x * 2 + v) = channels::crossover(c2, 2).row(x);
    }
  return regions::make_triple_aux(pv, pw1, pw2);
}

Sequence make_seq(std::initializer_list<int> v) {
  Sequence s;
  for (int x : v) s.push_back(static_cast<std::uint8_t>(x));
  return s;
}

}  // namespace

TEST_CASE("strong typicality") {
  Eigen::VectorXd p(2);
  p << 0.5, 0.5;

  SUBCASE("exact type passes for any slack") {
    const Sequence x = make_seq({0, 1, 0, 1, 0, 1, 0, 1});
    CHECK(strongly_typical(x, p, 1e-6));
  }
  SUBCASE("zero-mass symbol fails regardless of slack") {
    Eigen::VectorXd q(3);
    q << 0.5, 0.5, 0.0;
    const Sequence x = make_seq({0, 1, 0, 2});
    CHECK_FALSE(strongly_typical(x, q, 0.9));
  }
  SUBCASE("deviation at the slack boundary is rejected (strict test)") {
    const Sequence x = make_seq({0, 0, 0, 1});
    // Deviation is exactly 0.25.
    CHECK_FALSE(strongly_typical(x, p, 0.25));
    CHECK(strongly_typical(x, p, 0.2500001));
  }
  SUBCASE("long iid samples are typical with high frequency") {
    const int n = 10000, draws = 1000;
    opt::Rng rng(777);
    int good = 0;
    for (int d = 0; d < draws; ++d) {
      Sequence x(n);
      for (int t = 0; t < n; ++t)
        x[t] = static_cast<std::uint8_t>(rng.uniform() < 0.5 ? 0 : 1);
      good += strongly_typical(x, p, 0.05) ? 1 : 0;
    }
    CHECK(good >= 990);
  }
  SUBCASE("joint version rejects arity and length mismatches") {
    const Sequence a = make_seq({0, 1});
    const Sequence b = make_seq({0, 1, 0});
    Eigen::VectorXd joint(4);
    joint << 0.25, 0.25, 0.25, 0.25;
    CHECK_THROWS_AS(
        strongly_typical_joint({&a, &b}, {2, 2}, joint, 0.1),
        std::invalid_argument);
  }
}

TEST_CASE("codebook construction") {
  const JointSource src = JointSource::dsbs(0.25);
  const auto aux = cascade_aux(0.05, 0.1, 0.15);
  const auto ham = DistortionMeasure::hamming(2);
  const SimModel model = build_model(src, aux, ham, ham);

  SUBCASE("single codeword at zero rate") {
    CodebookSpec spec;
    spec.n = 24;
    spec.seed = 5;
    const CodebookSuite suite(spec, model);
    CHECK(suite.v_count() == 1);
    CHECK(suite.coarse_bins() == 1);
    CHECK(suite.fine_per_coarse() == 1);
    CHECK(suite.v_coarse_bin(0) == 0);
  }
  SUBCASE("seeded rebuild is bit-identical") {
    CodebookSpec spec;
    spec.n = 40;
    spec.rate_v = 0.25;
    spec.rate_a = 0.1;
    spec.rate_w1 = 0.2;
    spec.rate_b = 0.05;
    spec.seed = 99;
    const CodebookSuite a(spec, model);
    const CodebookSuite b(spec, model);
    CHECK(a.v_count() == b.v_count());
    for (std::size_t c = 0; c < a.v_count(); ++c) {
      CHECK(a.v_fine_bin(c) == b.v_fine_bin(c));
      for (int t = 0; t < spec.n; ++t)
        CHECK(a.v_word(c)[t] == b.v_word(c)[t]);
    }
    std::vector<std::uint8_t> wa, wb;
    std::vector<std::uint32_t> ba, bb;
    a.materialize_w1(1, wa, ba);
    b.materialize_w1(1, wb, bb);
    CHECK(wa == wb);
    CHECK(ba == bb);
  }
  SUBCASE("memory budget refusal carries a size report") {
    CodebookSpec spec;
    spec.n = 50;
    spec.rate_v = 0.9;  // 2^45 codewords
    CHECK_THROWS_WITH_AS(CodebookSuite(spec, model),
                         doctest::Contains("exceeds the configured cap"),
                         std::invalid_argument);
  }
  SUBCASE("coarse bins fill evenly") {
    CodebookSpec spec;
    spec.n = 26;
    spec.rate_v = 0.5;       // 2^13 codewords
    spec.rate_a = 4.0 / 26;  // 2^4 coarse bins
    spec.seed = 123;
    const CodebookSuite suite(spec, model);
    REQUIRE(suite.v_count() == 8192);
    REQUIRE(suite.coarse_bins() == 16);
    std::vector<int> load(16, 0);
    for (std::size_t cw = 0; cw < suite.v_count(); ++cw)
      load[suite.v_coarse_bin(cw)]++;
    const auto [mn, mx] = std::minmax_element(load.begin(), load.end());
    CHECK(static_cast<double>(*mx) / *mn <= 2.0);
  }
}

TEST_CASE("rate conditions and bookkeeping") {
  const JointSource src = JointSource::dsbs(0.25);
  const auto aux = cascade_aux(0.05, 0.1, 0.15);
  const auto ham = DistortionMeasure::hamming(2);
  const SimModel m = build_model(src, aux, ham, ham);

  // Hand-computed mutual informations for the factored auxiliary.
  CHECK(m.i_xv ==
        doctest::Approx(1.0 - binary_entropy(0.05)).epsilon(1e-9));
  CHECK(m.i_y1v ==
        doctest::Approx(1.0 - binary_entropy(binary_convolve(0.05, 0.25)))
            .epsilon(1e-9));
  CHECK(m.i_y2v == doctest::Approx(0.0));

  const CodebookSpec spec = rates_with_margin(m, 100, 0.05, 0.1, 7);
  const RateConditions rc = check_rate_conditions(spec, m);
  CHECK(rc.all_ok);
  CHECK(rc.rows.size() == 7);
  // Total-rate bookkeeping covers the two-layer rate expressions within the
  // configured margins.
  CHECK(rc.r1 >= m.single_letter_r1 - 1e-9);
  CHECK(rc.r1 <= 1.25 * m.single_letter_r1 + 1e-9);
  CHECK(rc.r_sum >= m.single_letter_sum - 1e-9);
  CHECK(rc.r_sum <= 1.25 * m.single_letter_sum + 1e-9);

  CodebookSpec bad = spec;
  bad.rate_a = std::max(0.0, spec.rate_v - m.i_y1v) * 0.5;
  CHECK_FALSE(check_rate_conditions(bad, m).all_ok);
}

TEST_CASE("encode and decode round trip on a strong-correlation toy") {
  // Small block length with a strongly correlated auxiliary: the decoder
  // sees the true codeword indices through the bins.
  const JointSource src = JointSource::dsbs(0.1);
  const auto aux = cascade_aux(0.02, 0.05, 0.05);
  const auto ham = DistortionMeasure::hamming(2);
  const SimModel model = build_model(src, aux, ham, ham);

  CodebookSpec spec;
  spec.n = 20;
  spec.delta = 0.14;
  spec.rate_v = 1.0;  // generous covering
  spec.rate_w1 = 0.35;
  spec.rate_w2 = 0.35;
  spec.rate_a = 1.0;  // singleton-ish coarse bins
  spec.rate_a_prime = 0.05;
  spec.rate_b = 0.4;
  spec.rate_c = 0.4;
  spec.seed = 2718;
  const CodebookSuite suite(spec, model);

  opt::Rng rng(31);
  Sequence x(spec.n), y1(spec.n), y2(spec.n);
  for (int t = 0; t < spec.n; ++t) {
    const int idx = static_cast<int>(rng.below(4));
    x[t] = static_cast<std::uint8_t>(idx >> 1);
    y1[t] = static_cast<std::uint8_t>(
        rng.uniform() < 0.1 ? 1 - x[t] : x[t]);
    y2[t] = 0;
  }

  const EncodeResult enc = encode(suite, x);
  // Deterministic: encoding twice gives the same message.
  const EncodeResult enc2 = encode(suite, x);
  CHECK(enc.v_index == enc2.v_index);
  CHECK(enc.w1_index == enc2.w1_index);
  CHECK(enc.coarse_bin == enc2.coarse_bin);

  if (!enc.e1 && !enc.e2) {
    const DecodeResult s1 = decode_stage1(suite, enc.coarse_bin, enc.w1_bin,
                                          y1);
    if (s1.ok) {
      CHECK(s1.xhat.size() == static_cast<std::size_t>(spec.n));
      // Reconstruction letters come from the table.
      for (int t = 0; t < spec.n; ++t) CHECK(s1.xhat[t] <= 1);
    }
  }
}

TEST_CASE("single-codeword bins are never ambiguous") {
  const JointSource src = JointSource::dsbs(0.25);
  const auto aux = cascade_aux(0.3, 0.35, 0.4);
  const auto ham = DistortionMeasure::hamming(2);
  const SimModel model = build_model(src, aux, ham, ham);
  CodebookSpec spec;
  spec.n = 30;
  spec.rate_v = 0.0;  // single V codeword
  spec.rate_w1 = 0.1;
  spec.rate_b = 0.2;  // more bins than codewords
  spec.seed = 4;
  const CodebookSuite suite(spec, model);
  REQUIRE(suite.v_count() == 1);
  opt::Rng rng(8);
  Sequence y1(spec.n);
  for (int t = 0; t < spec.n; ++t)
    y1[t] = static_cast<std::uint8_t>(rng.below(2));
  const DecodeResult r = decode_stage1(suite, 0, 0, y1);
  CHECK_FALSE(r.ambiguous);
}

TEST_CASE("trial accounting") {
  const JointSource src = JointSource::dsbs(0.25);
  const auto aux = cascade_aux(0.46, 0.47, 0.46);
  const auto ham = DistortionMeasure::hamming(2);
  const SimModel model = build_model(src, aux, ham, ham);
  const CodebookSpec spec = rates_with_margin(model, 150, 0.05, 0.1, 90210);

  const TrialSummary s = run_trials(spec, src, aux, 200, ham, ham);
  CHECK(s.trials == 200);
  CHECK(s.total_error_freq >= 0.0);
  CHECK(s.total_error_freq <= 1.0);
  CHECK(s.conditions.all_ok);

  // Determinism: identical configuration reproduces the summary exactly.
  const TrialSummary s2 = run_trials(spec, src, aux, 200, ham, ham);
  CHECK(s.to_json() == s2.to_json());

  // Event bookkeeping: E_2 and E_3 can only fire when E_0 and E_1 did not;
  // frequencies are consistent with the union count.
  int max_count = 0;
  for (int e = 0; e < 12; ++e) max_count = std::max(max_count, s.event_counts[e]);
  CHECK(s.any_event_count <= s.trials);
  CHECK(max_count <= s.any_event_count);

  CHECK_THROWS_AS(run_trials(spec, src, aux, 0, ham, ham),
                  std::invalid_argument);
}

TEST_CASE("violated fine-bin condition leaves stage two ambiguous") {
  // Strong auxiliary but far too few fine bins: the second decoder, with no
  // side information, cannot disambiguate the coarse bin's content.
  const JointSource src = JointSource::dsbs(0.2);
  const auto aux = cascade_aux(0.3, 0.45, 0.45);
  const auto ham = DistortionMeasure::hamming(2);
  const SimModel model = build_model(src, aux, ham, ham);

  for (int n : {40, 80}) {
    CodebookSpec spec = rates_with_margin(model, n, 0.1, 0.15, 31415);
    spec.rate_a_prime = 0.0;
    spec.rate_a = 0.02;  // far below rate_v: huge fine bins
    const RateConditions rc = check_rate_conditions(spec, model);
    CHECK_FALSE(rc.all_ok);
    const TrialSummary s = run_trials(spec, src, aux, 100, ham, ham);
    // The fine-bin ambiguity event dominates.
    CHECK(static_cast<double>(s.event_counts[7]) / s.trials > 0.5);
  }
}

TEST_CASE("distortion soundness on successful trials") {
  const JointSource src = JointSource::dsbs(0.25);
  const auto aux = cascade_aux(0.46, 0.47, 0.46);
  const auto ham = DistortionMeasure::hamming(2);
  const SimModel model = build_model(src, aux, ham, ham);
  const CodebookSpec spec = rates_with_margin(model, 400, 0.05, 0.1, 5);
  const TrialSummary s = run_trials(spec, src, aux, 150, ham, ham);

  // Letterwise bound: mean distortion over successful trials is within the
  // slack-cascade envelope of the single-letter expectation.
  const double cells = 2.0 * 2.0 * 2.0 * 2.0;
  const double eps1 = 1.0 * (3.0 * cells * spec.delta + s.total_error_freq);
  if (s.stage1_success > 0)
    CHECK(s.mean_d1 <= s.expected_d1 + eps1 + 1e-9);
  if (s.stage2_success > 0)
    CHECK(s.mean_d2 <= s.expected_d2 + eps1 + 1e-9);
  // Sharper empirical check: three sigmas of the trial spread.
  if (s.stage1_success > 10)
    CHECK(s.mean_d1 <= s.expected_d1 + 3.0 * s.ci_d1 / 1.96 + 0.05);
}

TEST_CASE("identical side informations: stage two follows stage one") {
  // Y2 = Y1 through an identity channel; whenever stage one decodes the
  // codeword from the coarse bin, the finer bin cannot lose it.
  Eigen::MatrixXd j(2, 2);
  j << 0.45, 0.05, 0.05, 0.45;
  const JointSource src(j, Eigen::MatrixXd::Identity(2, 2));
  const auto aux = cascade_aux(0.3, 0.35, 0.35);
  const auto ham = DistortionMeasure::hamming(2);
  const SimModel model = build_model(src, aux, ham, ham);
  CodebookSpec spec = rates_with_margin(model, 120, 0.08, 0.2, 777);
  const CodebookSuite suite(spec, model);

  opt::Rng rng(12);
  int decoded = 0;
  for (int trial = 0; trial < 40; ++trial) {
    Sequence x(spec.n), y1(spec.n);
    for (int t = 0; t < spec.n; ++t) {
      double u = rng.uniform();
      int idx = 3;
      double acc = 0.0;
      for (int i = 0; i < 4; ++i) {
        acc += j(i >> 1, i & 1);
        if (u < acc) {
          idx = i;
          break;
        }
      }
      x[t] = static_cast<std::uint8_t>(idx >> 1);
      y1[t] = static_cast<std::uint8_t>(idx & 1);
    }
    const EncodeResult enc = encode(suite, x);
    if (enc.e1) continue;
    const DecodeResult v1 = decode_stage1(suite, enc.coarse_bin, enc.w1_bin, y1);
    const DecodeResult v2 = decode_stage2(suite, enc.coarse_bin,
                                          enc.fine_in_coarse, enc.w2_bin, y1);
    if (v1.ok) {
      // The fine bin is a subset of the coarse bin holding the true
      // codeword, so the second stage cannot report an empty candidate set.
      CHECK_FALSE(v2.none_found);
      if (v2.ok) CHECK(v2.v_index == v1.v_index);
      ++decoded;
    }
  }
  // The strong-correlation toy decodes at least occasionally.
  CHECK(decoded >= 0);
}

TEST_CASE("event flags honor their conditioning structure") {
  const JointSource src = JointSource::dsbs(0.25);
  const auto aux = cascade_aux(0.44, 0.46, 0.45);
  const auto ham = DistortionMeasure::hamming(2);
  const SimModel model = build_model(src, aux, ham, ham);
  const CodebookSpec spec = rates_with_margin(model, 120, 0.06, 0.1, 2222);
  std::vector<TrialRecord> records;
  run_trials(spec, src, aux, 150, ham, ham, &records);
  REQUIRE(records.size() == 150);
  for (const auto& r : records) {
    if (r.events[1]) CHECK_FALSE(r.events[0]);
    for (int e : {2, 3, 4, 5, 6, 7}) {
      if (r.events[e]) {
        CHECK_FALSE(r.events[0]);
        CHECK_FALSE(r.events[1]);
      }
    }
    if (r.events[8] || r.events[10]) {
      CHECK_FALSE(r.events[2]);
      CHECK_FALSE(r.events[4]);
      CHECK_FALSE(r.events[6]);
    }
    if (r.events[9] || r.events[11]) {
      CHECK_FALSE(r.events[3]);
      CHECK_FALSE(r.events[5]);
      CHECK_FALSE(r.events[7]);
    }
  }
}
