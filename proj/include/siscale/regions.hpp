#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "siscale/probcore.hpp"
#include "siscale/rdopt.hpp"

// Rate regions for two-stage coding where the first-stage decoder has the
// better side information: the achievable region over (V, W1, W2)
// auxiliaries, its cascade restriction, the two outer bounds, exact regions
// for lossless and deterministic-function reconstructions, and the
// perfect-scalability certificate search.
//
// A frontier samples the lower envelope {(r1, min r_sum subject to
// R1 <= r1)} on a grid between the Wyner-Ziv corner and the largest useful
// first-stage rate, so r_sum is non-increasing along the grid.
namespace siscale::regions {

struct RatePair {
  double r1 = 0.0;
  double r_sum = 0.0;
};

// Auxiliary triple witness. cond is P(v, w1, w2 | x) with column index
// ((v * w1_size) + w1) * w2_size + w2. Two rate forms are used:
//   TripleForm: R1 = I(X;V,W1|Y1), sum = I(X;V,W2|Y2) + I(X;W1|Y1,V)
//   PairForm:   R1 = I(X;W1|Y1),   sum = I(X;W2|Y2) + I(X;W1|Y1,W2)
// PairForm witnesses keep v_size == 1. When `factored` is set the triple
// was built as P(v|x) P(w1|x,v) P(w2|x,v), so the conditional independence
// of W1 and W2 given (X, V) holds by construction.
struct ScalableAux {
  enum class RateForm { TripleForm, PairForm };

  Eigen::MatrixXd cond;
  int v_size = 1, w1_size = 1, w2_size = 1;
  RateForm form = RateForm::PairForm;
  Eigen::MatrixXi f1;  // w1_size x |Y1| -> reconstruction index
  Eigen::MatrixXi f2;  // w2_size x |Y2| -> reconstruction index

  bool factored = false;
  Eigen::MatrixXd pv_given_x;     // |X| x v_size
  Eigen::MatrixXd pw1_given_xv;   // (|X| * v_size) x w1_size
  Eigen::MatrixXd pw2_given_xv;   // (|X| * v_size) x w2_size

  Eigen::MatrixXd marginal_v() const;
  Eigen::MatrixXd marginal_vw1() const;  // |X| x (v*w1)
  Eigen::MatrixXd marginal_vw2() const;
  Eigen::MatrixXd marginal_w1() const;
  Eigen::MatrixXd marginal_w2() const;
  Eigen::MatrixXd marginal_w1w2() const;  // |X| x (w1*w2)
};

struct FrontierPoint {
  double r1 = 0.0;
  double r_sum = 0.0;
  ScalableAux witness;
};

struct RegionFrontier {
  std::string bound_tag;
  std::vector<FrontierPoint> points;
};

struct RegionConfig {
  rdopt::OptimizerConfig opt;
  int grid_points = 33;
  // Auxiliary alphabet sizes; 0 picks min(|X|+1, 4), all validated against
  // the cardinality caps |V| <= |X|+3 and |Wj| <= |X|(|X|+3)+1.
  int v_size = 0;
  int w1_size = 0;
  int w2_size = 0;
};

// Exact rate re-evaluation for a witness under its rate form.
RatePair evaluate_rates(const JointSource& src, const ScalableAux& aux);

// Expected distortions under the stored reconstruction tables.
std::pair<double, double> evaluate_distortions(const JointSource& src,
                                               const DistortionMeasure& d1,
                                               const DistortionMeasure& d2,
                                               const ScalableAux& aux);

// Builds a TripleForm witness from the conditional factors P(v|x),
// P(w1|x,v), P(w2|x,v); reconstruction tables are left empty and derived by
// consumers when needed.
ScalableAux make_triple_aux(const Eigen::MatrixXd& pv_given_x,
                            const Eigen::MatrixXd& pw1_given_xv,
                            const Eigen::MatrixXd& pw2_given_xv);

// Achievable region over the full auxiliary triple.
RegionFrontier inner_region(const JointSource& src,
                            const DistortionMeasure& d1,
                            const DistortionMeasure& d2, double D1, double D2,
                            const RegionConfig& cfg,
                            const std::vector<ScalableAux>& extra_inits = {});

// Cascade restriction: only the two orders W1 - W2 - X and W2 - W1 - X are
// searched; contained in inner_region.
RegionFrontier inner_region_hat(const JointSource& src,
                                const DistortionMeasure& d1,
                                const DistortionMeasure& d2, double D1,
                                double D2, const RegionConfig& cfg);

// Intersection-style bound: r1 >= R*_WZ(D1) and r_sum >= R_HB(D1, D2).
RegionFrontier outer_region_cap(const JointSource& src,
                                const DistortionMeasure& d1,
                                const DistortionMeasure& d2, double D1,
                                double D2, const RegionConfig& cfg,
                                const std::vector<Eigen::MatrixXd>& extra_pair_inits = {});

// Pair bound without the conditional-independence restriction. The
// minimization is heuristic, so the computed frontier is an inner
// approximation of the true bound; the tag records this.
RegionFrontier outer_region_out(const JointSource& src,
                                const DistortionMeasure& d1,
                                const DistortionMeasure& d2, double D1,
                                double D2, const RegionConfig& cfg,
                                const std::vector<Eigen::MatrixXd>& extra_pair_inits = {});

enum class LosslessMode { First, Second };

// Exact region when one decoder reconstructs losslessly. `lossless_d` is
// the measure used by the lossless side and must vanish exactly on the
// diagonal (defaults to Hamming).
RegionFrontier lossless_region(const JointSource& src, LosslessMode mode,
                               const DistortionMeasure& other_d,
                               double other_D, const RegionConfig& cfg,
                               const std::optional<DistortionMeasure>&
                                   lossless_d = std::nullopt);

// Exact entropic region when decoders reconstruct functions z1 = q1(x),
// z2 = q2(x) with vanishing Hamming distortion. Requires one of the
// functions to refine the other on the support of X.
RegionFrontier deterministic_region(const JointSource& src,
                                    const std::vector<int>& q1,
                                    const std::vector<int>& q2);

// Diagnostics only: the converse corner (H(Z1|Y1), H(Z2|Y2) + H(Z1|Y1,Z2))
// evaluated without any degradedness requirement. Not achievable in
// general; deterministic_region is the achievable API.
RatePair deterministic_converse_corners(const JointSource& src,
                                        const std::vector<int>& q1,
                                        const std::vector<int>& q2);

struct ScalabilityCertificate {
  enum class Status { Certified, Impossible, Inconclusive };
  Status status = Status::Inconclusive;
  bool support_condition = false;  // exists y1 with P(x, y1) > 0 for all x
  double target_r1 = 0.0;          // R*_{X|Y1}(D1)
  double target_r2 = 0.0;          // R*_{X|Y2}(D2)
  double achieved_r1 = 0.0;        // I(X;W1|Y1) of the witness
  double achieved_r2 = 0.0;        // I(X;W2|Y2) of the witness
  ScalableAux witness;             // cascade W1 - W2 - X (PairForm)
  std::string detail;
};

// Searches for a cascade pair whose two stage rates meet the respective
// Wyner-Ziv rates within cfg.opt.tolerance. Absence of a witness is
// reported as Inconclusive unless the analytic impossibility test for the
// symmetric binary source with constant second side information fires.
ScalabilityCertificate perfect_scalability_certificate(
    const JointSource& src, const DistortionMeasure& d1,
    const DistortionMeasure& d2, double D1, double D2,
    const RegionConfig& cfg);

struct RegionBundle {
  RegionFrontier inner_hat;
  RegionFrontier inner;
  RegionFrontier outer_out;
  RegionFrontier outer_cap;
};

// Computes all four bounds on one shared r1 grid, feeding witnesses across
// bounds so that the frontier dominance chain
//   inner_hat >= inner >= outer_out >= outer_cap
// holds pointwise by construction (each later search also evaluates the
// earlier witnesses as candidates).
RegionBundle compute_bounds(const JointSource& src,
                            const DistortionMeasure& d1,
                            const DistortionMeasure& d2, double D1, double D2,
                            const RegionConfig& cfg);

}  // namespace siscale::regions
