#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "siscale/probcore.hpp"
#include "siscale/regions.hpp"

// Monte Carlo implementation of the nested-binning achievability scheme:
// seeded random codebooks for an auxiliary triple (V, W1, W2), coarse and
// fine bins for V, per-codeword bins for W1 and W2, strong-typicality
// encoding and unique-typicality decoding, and per-event error accounting
// over twelve encoder/decoder events.
//
// Block lengths are desk scale: codebook sizes are 2^ceil(n R) and refuse
// to build beyond the configured caps. Conditional codebooks are
// regenerated deterministically from per-codeword seeds instead of being
// stored, so memory stays within budget and rebuilds are bit-identical.
namespace siscale::binsim {

struct CodebookSpec {
  int n = 200;
  double delta = 0.05;  // slack cascade: delta, 2d, 3d, 3|X|d, 4|X|d
  double rate_v = 0.0;
  double rate_w1 = 0.0;
  double rate_w2 = 0.0;
  double rate_a = 0.0;        // coarse bins for V
  double rate_a_prime = 0.0;  // fine bins per coarse bin
  double rate_b = 0.0;        // bins for W1
  double rate_c = 0.0;        // bins for W2
  std::uint64_t seed = 1;
  std::size_t max_codewords = std::size_t{1} << 24;
  std::size_t max_total_letters = std::size_t{1} << 28;
};

using Sequence = std::vector<std::uint8_t>;

// delta-strong typicality of a tuple of sequences against a flattened joint
// pmf: every positive-mass cell count is within slack of its probability
// and every zero-mass cell count is zero.
bool strongly_typical_joint(const std::vector<const Sequence*>& seqs,
                            const std::vector<int>& dims,
                            const Eigen::VectorXd& flat_pmf, double slack);

inline bool strongly_typical(const Sequence& x, const Eigen::VectorXd& pmf,
                             double slack) {
  return strongly_typical_joint({&x}, {static_cast<int>(pmf.size())}, pmf,
                                slack);
}

// Single-letter model derived from a source and an auxiliary triple: the
// generation pmfs, every typicality reference the scheme tests against,
// reconstruction tables, and the information quantities entering the rate
// conditions.
struct SimModel {
  int nx = 0, ny1 = 0, ny2 = 0, nv = 0, n1 = 0, n2 = 0;

  Eigen::VectorXd p_xy1y2;  // flattened (x, y1, y2) for sampling
  Eigen::VectorXd p_v;
  Eigen::MatrixXd p_w1_given_v;
  Eigen::MatrixXd p_w2_given_v;

  Eigen::VectorXd p_x, p_y1, p_y2;
  Eigen::VectorXd p_xv;                  // (x, v)
  Eigen::VectorXd p_w1vx, p_w2vx;        // (w, v, x)
  Eigen::VectorXd p_vy1, p_vy2;          // (v, y)
  Eigen::VectorXd p_w1vy1, p_w2vy2;      // (w, v, y)
  Eigen::VectorXd p_vxy1, p_vxy2;        // (v, x, y)
  Eigen::VectorXd p_w1vxy1, p_w2vxy2;    // (w, v, x, y)

  Eigen::MatrixXi f1, f2;  // reconstruction tables (w, y) -> xhat

  // Information quantities (bits) entering the rate conditions.
  double i_xv = 0.0, i_xw1_given_v = 0.0, i_xw2_given_v = 0.0;
  double i_y1v = 0.0, i_y2v = 0.0;
  double i_y1w1_given_v = 0.0, i_y2w2_given_v = 0.0;
  double single_letter_r1 = 0.0;   // I(X; V, W1 | Y1)
  double single_letter_sum = 0.0;  // I(X; V, W2 | Y2) + I(X; W1 | V, Y1)
  double expected_d1 = 0.0, expected_d2 = 0.0;
};

SimModel build_model(const JointSource& src, const regions::ScalableAux& aux,
                     const DistortionMeasure& d1, const DistortionMeasure& d2);

struct RateConditions {
  struct Row {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
  };
  std::vector<Row> rows;
  bool all_ok = false;
  double r1 = 0.0;     // R_A + R_B
  double r_sum = 0.0;  // R_A + R_A' + R_B + R_C
};

RateConditions check_rate_conditions(const CodebookSpec& spec,
                                     const SimModel& model);

// Sets the seven rates at (1 + margin) times their single-letter bounds.
CodebookSpec rates_with_margin(const SimModel& model, int n, double delta,
                               double margin, std::uint64_t seed);

class CodebookSuite {
 public:
  CodebookSuite(const CodebookSpec& spec, SimModel model);

  const CodebookSpec& spec() const { return spec_; }
  const SimModel& model() const { return model_; }

  std::size_t v_count() const { return v_count_; }
  std::size_t w1_count() const { return w1_count_; }
  std::size_t w2_count() const { return w2_count_; }
  std::uint64_t coarse_bins() const { return coarse_bins_; }
  std::uint64_t fine_per_coarse() const { return fine_per_coarse_; }
  std::uint64_t w1_bins() const { return w1_bins_; }
  std::uint64_t w2_bins() const { return w2_bins_; }

  const std::uint8_t* v_word(std::size_t idx) const {
    return v_words_.data() + idx * spec_.n;
  }
  std::uint64_t v_fine_bin(std::size_t idx) const { return v_fine_bin_[idx]; }
  std::uint64_t v_coarse_bin(std::size_t idx) const {
    return v_fine_bin_[idx] / fine_per_coarse_;
  }

  // Deterministically regenerates the conditional codebook of a V codeword
  // into the caller's scratch buffers (words: count x n letters).
  void materialize_w1(std::size_t v_idx, std::vector<std::uint8_t>& words,
                      std::vector<std::uint32_t>& bins) const;
  void materialize_w2(std::size_t v_idx, std::vector<std::uint8_t>& words,
                      std::vector<std::uint32_t>& bins) const;

 private:
  CodebookSpec spec_;
  SimModel model_;
  std::size_t v_count_, w1_count_, w2_count_;
  std::uint64_t coarse_bins_, fine_per_coarse_, w1_bins_, w2_bins_;
  std::vector<std::uint8_t> v_words_;
  std::vector<std::uint32_t> v_fine_bin_;
};

CodebookSuite build_codebooks(const CodebookSpec& spec, const SimModel& model);

struct EncodeResult {
  bool x_atypical = false;  // the x part of E_0
  bool e1 = false, e2 = false, e3 = false;
  std::size_t v_index = 0, w1_index = 0, w2_index = 0;
  std::uint64_t coarse_bin = 0;      // i
  std::uint64_t fine_in_coarse = 0;  // j
  std::uint64_t w1_bin = 0;          // k
  std::uint64_t w2_bin = 0;          // l
};

EncodeResult encode(const CodebookSuite& suite, const Sequence& x);

struct DecodeResult {
  bool ok = false;
  bool none_found = false;
  bool ambiguous = false;
  std::size_t v_index = 0, w_index = 0;
  Sequence xhat;
};

DecodeResult decode_stage1(const CodebookSuite& suite, std::uint64_t coarse,
                           std::uint64_t w1_bin, const Sequence& y1);
DecodeResult decode_stage2(const CodebookSuite& suite, std::uint64_t coarse,
                           std::uint64_t fine, std::uint64_t w2_bin,
                           const Sequence& y2);

struct TrialRecord {
  std::array<bool, 12> events{};  // E_0 .. E_11
  bool stage1_ok = false, stage2_ok = false;
  double distortion1 = 0.0, distortion2 = 0.0;
  std::uint64_t i = 0, j = 0, k = 0, l = 0;
};

struct TrialSummary {
  int trials = 0;
  std::array<int, 12> event_counts{};
  int any_event_count = 0;
  double total_error_freq = 0.0;
  int stage1_success = 0, stage2_success = 0;
  double mean_d1 = 0.0, mean_d2 = 0.0;  // over successful trials per stage
  double ci_d1 = 0.0, ci_d2 = 0.0;      // 95% normal half-widths
  double expected_d1 = 0.0, expected_d2 = 0.0;  // single-letter references
  RateConditions conditions;
  CodebookSpec spec;

  std::string to_json() const;  // deterministic field order and formatting
};

// `records`, when given, receives one entry per trial.
TrialSummary run_trials(const CodebookSpec& spec, const JointSource& src,
                        const regions::ScalableAux& aux, int trials,
                        const std::optional<DistortionMeasure>& d1 = {},
                        const std::optional<DistortionMeasure>& d2 = {},
                        std::vector<TrialRecord>* records = nullptr);

}  // namespace siscale::binsim
