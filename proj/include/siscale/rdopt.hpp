#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "siscale/opt.hpp"
#include "siscale/probcore.hpp"

// Discrete-alphabet heuristic optimizers for the single-constraint
// rate-distortion functions with decoder side information: the Wyner-Ziv
// rate R*_{X|Y}(D) and the two-decoder Heegard-Berger rate R_HB(D1, D2)
// under the degraded chain X - Y1 - Y2.
//
// Distortion constraints are handled by rejection (candidates must satisfy
// E d <= D + 1e-12), so every returned point is primal-feasible, and every
// returned rate carries the achieving auxiliary channel as a witness.
namespace siscale::rdopt {

enum class SideInfo { Y1, Y2 };

struct OptimizerConfig {
  int grid_resolution = 16;   // simplex quantization steps per row
  int restarts = 10;          // independent seeded starts
  int descent_iterations = 30;
  double tolerance = 1e-3;    // bits; used for calibration checks
  std::uint64_t seed = 20250817ULL;
  int max_aux1 = 0;           // auxiliary alphabet caps; 0 = automatic
  int max_aux2 = 0;
};

// Auxiliary channel P(w1, w2 | x) with per-decoder reconstruction tables.
// Column index a = w1 * aux2_size + w2. Single-auxiliary problems put the
// active variable in the matching slot and size the other slot to one.
struct AuxChannel {
  Eigen::MatrixXd cond;  // |X| x (aux1_size * aux2_size), rows sum to one
  int aux1_size = 1;
  int aux2_size = 1;
  Eigen::MatrixXi f1;    // aux1_size x |Y1| -> reconstruction index
  Eigen::MatrixXi f2;    // aux2_size x |Y2| -> reconstruction index

  Eigen::MatrixXd marginal_w1() const;  // |X| x aux1_size
  Eigen::MatrixXd marginal_w2() const;  // |X| x aux2_size
};

struct WitnessedRate {
  bool feasible = false;
  double rate = std::numeric_limits<double>::infinity();
  AuxChannel witness;
  double distortion1 = std::numeric_limits<double>::quiet_NaN();
  double distortion2 = std::numeric_limits<double>::quiet_NaN();
  std::string message;
};

// H(X | Y_side), exact.
double slepian_wolf_rate(const JointSource& src, SideInfo side);

// Best expected distortion with a reconstruction based on the side
// information alone (the zero-rate level).
double zero_rate_distortion(const JointSource& src, SideInfo side,
                            const DistortionMeasure& d);

// Best expected distortion achievable at all (decoder knows X).
double min_achievable_distortion(const JointSource& src,
                                 const DistortionMeasure& d);

// Heuristic minimum of I(X;W|Y) over W - X - Y with a decoder f(W, Y)
// meeting E d <= D. Returns 0 with a constant witness when D is achievable
// at zero rate; reports infeasibility when D is below the minimum
// achievable distortion.
WitnessedRate wyner_ziv_rate(const JointSource& src, SideInfo side,
                             const DistortionMeasure& d, double D,
                             const OptimizerConfig& cfg,
                             const std::vector<Eigen::MatrixXd>& extra_inits = {});

// Sweep over distortions with best-so-far caching: the returned rates are
// monotone non-increasing in D because each point may inherit any witness
// found at a smaller distortion.
std::vector<WitnessedRate> wyner_ziv_sweep(const JointSource& src,
                                           SideInfo side,
                                           const DistortionMeasure& d,
                                           const std::vector<double>& Ds,
                                           const OptimizerConfig& cfg);

// Heuristic minimum of I(X;W2|Y2) + I(X;W1|W2,Y1) over (W1,W2) - X - Y1 - Y2
// with decoders f1(W1,Y1), f2(W2,Y2) meeting both distortion constraints.
WitnessedRate heegard_berger_rate(const JointSource& src,
                                  const DistortionMeasure& d1,
                                  const DistortionMeasure& d2, double D1,
                                  double D2, const OptimizerConfig& cfg,
                                  const std::vector<Eigen::MatrixXd>& extra_inits = {});

// Heuristic minimum of I(X;W2|Y2) + H(X|W2,Y1) over a single auxiliary W2;
// the first decoder is lossless with a distortion measure vanishing only on
// the diagonal.
WitnessedRate hb_lossless_first(const JointSource& src,
                                const DistortionMeasure& d2, double D2,
                                const OptimizerConfig& cfg);

// Exact re-evaluation on a witness: the information objective and the
// expected distortions under the stored reconstruction tables.
struct WitnessEvaluation {
  double rate = 0.0;
  double distortion1 = std::numeric_limits<double>::quiet_NaN();
  double distortion2 = std::numeric_limits<double>::quiet_NaN();
};
WitnessEvaluation evaluate_wz_witness(const JointSource& src, SideInfo side,
                                      const DistortionMeasure& d,
                                      const AuxChannel& aux);
WitnessEvaluation evaluate_hb_witness(const JointSource& src,
                                      const DistortionMeasure& d1,
                                      const DistortionMeasure& d2,
                                      const AuxChannel& aux);

// Expression helpers shared with the region module. `joint_side` is the
// P(x, y) matrix of the conditioning side information.
double cond_mi_aux(const Eigen::MatrixXd& joint_side,
                   const Eigen::MatrixXd& aux_given_x);  // I(X;A|Y)
double cond_entropy_given_aux(const Eigen::MatrixXd& joint_side,
                              const Eigen::MatrixXd& aux_given_x);  // H(X|A,Y)

// Optimal reconstruction table for one auxiliary: per (a, y) the minimizer
// of expected distortion, ties broken toward the lowest reconstruction
// index for reproducibility.
struct DecoderTable {
  Eigen::MatrixXi f;  // aux x |Y|
  double expected_distortion = 0.0;
};
DecoderTable optimal_decoder(const Eigen::MatrixXd& joint_side,
                             const Eigen::MatrixXd& aux_given_x,
                             const DistortionMeasure& d);
double decoder_distortion(const Eigen::MatrixXd& joint_side,
                          const Eigen::MatrixXd& aux_given_x,
                          const DistortionMeasure& d, const Eigen::MatrixXi& f);

}  // namespace siscale::rdopt
