#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

// Exact finite-probability primitives: pmfs, joint sources with degraded
// side information, entropies and mutual informations (all in bits), and
// the binary-source helpers used by the closed-form modules.
namespace siscale {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Probabilities below this are treated as exact zeros inside log sums.
inline constexpr double kProbFloor = 1e-15;
// Tolerance for "sums to one" validation.
inline constexpr double kPmfSumTol = 1e-12;

namespace detail {

inline double xlog2x(double p) {
  return (p < kProbFloor) ? 0.0 : p * std::log2(p);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

// Shannon entropy in bits of any nonnegative array summing to one.
// 0 log 0 is treated as 0.
template <typename Derived>
double entropy(const Eigen::MatrixBase<Derived>& probs) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j)
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
      h -= detail::xlog2x(static_cast<double>(probs(i, j)));
  return h;
}

// H(row | column) in bits for a joint pmf laid out as joint(x, y) = P(x, y).
template <typename Derived>
double conditional_entropy(const Eigen::MatrixBase<Derived>& joint) {
  const VectorXd col = joint.colwise().sum();
  return entropy(joint) - entropy(col);
}

// I(row; column) = H(row) - H(row | column), guaranteed >= 0 up to rounding.
template <typename Derived>
double mutual_information(const Eigen::MatrixBase<Derived>& joint) {
  const VectorXd row = joint.rowwise().sum();
  return entropy(row) - conditional_entropy(joint);
}

// h_b(u) = -u log2 u - (1-u) log2(1-u); endpoints map to zero.
inline double binary_entropy(double u) {
  if (!(u >= 0.0 && u <= 1.0))
    throw std::domain_error("binary_entropy: argument outside [0, 1]");
  return -detail::xlog2x(u) - detail::xlog2x(1.0 - u);
}

// Binary convolution u*v = u(1-v) + v(1-u).
inline double binary_convolve(double u, double v) {
  if (!(u >= 0.0 && u <= 1.0) || !(v >= 0.0 && v <= 1.0))
    throw std::domain_error("binary_convolve: arguments outside [0, 1]");
  return u * (1.0 - v) + v * (1.0 - u);
}

// A finite pmf. Entries are validated nonnegative and summing to one.
class Pmf {
 public:
  explicit Pmf(VectorXd probs) : probs_(std::move(probs)) {
    detail::require(probs_.size() >= 1, "Pmf: empty alphabet");
    detail::require(probs_.minCoeff() >= 0.0, "Pmf: negative entry");
    detail::require(std::abs(probs_.sum() - 1.0) <= kPmfSumTol,
                    "Pmf: entries do not sum to one");
  }

  const VectorXd& probs() const { return probs_; }
  int size() const { return static_cast<int>(probs_.size()); }
  double operator()(int i) const { return probs_(i); }

 private:
  VectorXd probs_;
};

inline double entropy(const Pmf& p) { return entropy(p.probs()); }

// A distortion matrix d(x, xhat) >= 0. The reconstruction alphabet is the
// column index and need not match the source alphabet. in_gamma_d() is true
// exactly when the matrix is square with zero diagonal and positive
// off-diagonal entries.
class DistortionMeasure {
 public:
  explicit DistortionMeasure(MatrixXd d) : d_(std::move(d)) {
    detail::require(d_.rows() >= 1 && d_.cols() >= 1,
                    "DistortionMeasure: empty matrix");
    detail::require(d_.minCoeff() >= 0.0, "DistortionMeasure: negative entry");
    in_gamma_d_ = d_.rows() == d_.cols();
    if (in_gamma_d_) {
      for (Eigen::Index x = 0; x < d_.rows() && in_gamma_d_; ++x)
        for (Eigen::Index xh = 0; xh < d_.cols() && in_gamma_d_; ++xh)
          in_gamma_d_ = (x == xh) ? (d_(x, xh) == 0.0) : (d_(x, xh) > 0.0);
    }
  }

  static DistortionMeasure hamming(int n) {
    return DistortionMeasure(MatrixXd::Ones(n, n) -
                             MatrixXd::Identity(n, n));
  }

  const MatrixXd& matrix() const { return d_; }
  int source_size() const { return static_cast<int>(d_.rows()); }
  int recon_size() const { return static_cast<int>(d_.cols()); }
  double operator()(int x, int xhat) const { return d_(x, xhat); }
  bool in_gamma_d() const { return in_gamma_d_; }

 private:
  MatrixXd d_;
  bool in_gamma_d_;
};

// E d(X, Xhat) for a joint pmf over (source, reconstruction).
template <typename Derived>
double expected_distortion(const Eigen::MatrixBase<Derived>& joint_x_xhat,
                           const DistortionMeasure& d) {
  detail::require(joint_x_xhat.rows() == d.source_size() &&
                      joint_x_xhat.cols() == d.recon_size(),
                  "expected_distortion: shape mismatch with distortion matrix");
  double s = 0.0;
  for (int x = 0; x < d.source_size(); ++x)
    for (int xh = 0; xh < d.recon_size(); ++xh)
      s += joint_x_xhat(x, xh) * d(x, xh);
  return s;
}

// A discrete memoryless source X with two decoder side informations forming
// the Markov chain X - Y1 - Y2. The chain holds by construction: the object
// stores P(x, y1) and the row-stochastic P(y2 | y1), never a raw 3-tensor.
class JointSource {
 public:
  JointSource(MatrixXd px_y1, MatrixXd ch_y2_given_y1)
      : px_y1_(std::move(px_y1)), ch_(std::move(ch_y2_given_y1)) {
    detail::require(px_y1_.rows() >= 1 && px_y1_.cols() >= 1,
                    "JointSource: empty joint");
    detail::require(px_y1_.minCoeff() >= 0.0, "JointSource: negative mass");
    detail::require(std::abs(px_y1_.sum() - 1.0) <= kPmfSumTol,
                    "JointSource: P(x, y1) does not sum to one");
    detail::require(ch_.rows() == px_y1_.cols(),
                    "JointSource: channel rows must match |Y1|");
    detail::require(ch_.minCoeff() >= 0.0, "JointSource: negative channel entry");
    for (Eigen::Index r = 0; r < ch_.rows(); ++r)
      detail::require(std::abs(ch_.row(r).sum() - 1.0) <= kPmfSumTol,
                      "JointSource: channel row does not sum to one");
  }

  int x_size() const { return static_cast<int>(px_y1_.rows()); }
  int y1_size() const { return static_cast<int>(px_y1_.cols()); }
  int y2_size() const { return static_cast<int>(ch_.cols()); }

  const MatrixXd& joint_x_y1() const { return px_y1_; }
  const MatrixXd& ch_y2_given_y1() const { return ch_; }

  double joint(int x, int y1, int y2) const {
    return px_y1_(x, y1) * ch_(y1, y2);
  }

  MatrixXd joint_x_y2() const { return px_y1_ * ch_; }
  MatrixXd joint_y1_y2() const {
    const VectorXd py1 = px_y1_.colwise().sum();
    return py1.asDiagonal() * ch_;
  }

  Pmf marginal_x() const { return Pmf(px_y1_.rowwise().sum()); }
  Pmf marginal_y1() const { return Pmf(px_y1_.colwise().sum()); }
  Pmf marginal_y2() const { return Pmf(joint_x_y2().colwise().sum()); }

  // Uniform binary X observed through a crossover-p channel as Y1, with a
  // constant Y2 (no side information at the second decoder).
  static JointSource dsbs(double p) {
    detail::require(p > 0.0 && p < 0.5, "dsbs: crossover must be in (0, 0.5)");
    MatrixXd j(2, 2);
    j << 0.5 * (1.0 - p), 0.5 * p, 0.5 * p, 0.5 * (1.0 - p);
    return JointSource(j, MatrixXd::Ones(2, 1));
  }

 private:
  MatrixXd px_y1_;
  MatrixXd ch_;
};

}  // namespace siscale
