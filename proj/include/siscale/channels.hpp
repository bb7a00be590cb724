#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

#include "siscale/probcore.hpp"

// Small conditional-pmf constructors shared by the optimizers as structured
// starting points and by tests as explicit witnesses.
namespace siscale::channels {

using Eigen::MatrixXd;

// Deterministic channel w = map[x] (mod cols).
inline MatrixXd deterministic(int nx, int cols, const std::vector<int>& map) {
  MatrixXd m = MatrixXd::Zero(nx, cols);
  for (int x = 0; x < nx; ++x) m(x, map[x] % cols) = 1.0;
  return m;
}

inline std::vector<int> identity_map(int nx) {
  std::vector<int> m(nx);
  for (int x = 0; x < nx; ++x) m[x] = x;
  return m;
}

// Per-symbol minimizer of a distortion row; the natural greedy channel.
inline std::vector<int> min_distortion_map(const DistortionMeasure& d) {
  std::vector<int> m(d.source_size());
  for (int x = 0; x < d.source_size(); ++x) {
    int bi = 0;
    for (int xh = 1; xh < d.recon_size(); ++xh)
      if (d(x, xh) < d(x, bi)) bi = xh;
    m[x] = bi;
  }
  return m;
}

inline MatrixXd constant(int nx, int cols) {
  MatrixXd m = MatrixXd::Zero(nx, cols);
  m.col(0).setOnes();
  return m;
}

// Binary crossover channel on the first two letters of a cols-letter row.
inline MatrixXd crossover(double q, int cols) {
  q = std::clamp(q, 1e-4, 0.4999);
  MatrixXd m = MatrixXd::Zero(2, cols);
  m(0, 0) = 1.0 - q;
  m(0, 1) = q;
  m(1, 0) = q;
  m(1, 1) = 1.0 - q;
  return m;
}

// Mixture of a crossover channel on letters {0,1} with the flag letter 2;
// the flag lets the decoder fall back to side information alone.
inline MatrixXd timeshare(double alpha, double q, int cols) {
  MatrixXd m = crossover(q, cols) * alpha;
  m.col(2).setConstant(1.0 - alpha);
  return m;
}

// Proportional grouping of an ordered alphabet into k classes; the natural
// quantizer-style deterministic channel.
inline std::vector<int> grouping_map(int nx, int k) {
  std::vector<int> m(nx);
  for (int x = 0; x < nx; ++x)
    m[x] = std::min(k - 1, x * k / nx);
  return m;
}

// Discretized additive-noise channel for ordered alphabets: mass decays
// with the squared distance between the scaled input position and the
// output letter. Larger kappa means less noise.
inline MatrixXd ordered_blur(int nx, int cols, double kappa) {
  MatrixXd m(nx, cols);
  for (int x = 0; x < nx; ++x) {
    const double pos = (cols - 1) * (nx > 1 ? static_cast<double>(x) / (nx - 1)
                                            : 0.5);
    double s = 0.0;
    for (int w = 0; w < cols; ++w) {
      m(x, w) = std::exp(-kappa * (pos - w) * (pos - w));
      s += m(x, w);
    }
    m.row(x) /= s;
  }
  return m;
}

// Crossover eta with q * eta = target (binary convolution), clamped.
inline double deconvolve(double q, double target) {
  if (q >= 0.4999) return 0.25;
  return std::clamp((target - q) / (1.0 - 2.0 * q), 1e-4, 0.4999);
}

// Embeds an n-row link channel into rows-many rows; extra rows get a
// deterministic fallback to letter 0.
inline MatrixXd pad_rows(const MatrixXd& link, int rows) {
  MatrixXd m = MatrixXd::Zero(rows, link.cols());
  m.block(0, 0, std::min<int>(link.rows(), rows), link.cols()) =
      link.topRows(std::min<int>(link.rows(), rows));
  for (int r = static_cast<int>(link.rows()); r < rows; ++r) m(r, 0) = 1.0;
  return m;
}

}  // namespace siscale::channels
