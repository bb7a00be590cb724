#include "siscale/rdopt.hpp"

#include "siscale/channels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace siscale::rdopt {

namespace {

using Eigen::MatrixXd;
using Eigen::MatrixXi;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDistortionSlack = 1e-12;

double xlog2x(double p) { return p < kProbFloor ? 0.0 : p * std::log2(p); }

MatrixXd side_joint(const JointSource& src, SideInfo side) {
  return side == SideInfo::Y1 ? src.joint_x_y1() : src.joint_x_y2();
}

using DecodeOut = DecoderTable;

DecodeOut best_decoder(const MatrixXd& jxy, const MatrixXd& aux,
                       const DistortionMeasure& d) {
  return optimal_decoder(jxy, aux, d);
}

double distortion_with_table(const MatrixXd& jxy, const MatrixXd& aux,
                             const DistortionMeasure& d, const MatrixXi& f) {
  return decoder_distortion(jxy, aux, d, f);
}








int auto_aux_size(int nx, int recon, int override_size) {
  if (override_size > 0) return override_size;
  return std::min(std::min(nx, recon) + 1, 8);
}

// The joint search over (W1, W2) works on rows of width n1 * n2; large
// alphabets get tighter automatic caps to keep the sweep tractable.
int auto_joint_aux_size(int nx, int recon, int override_size) {
  if (override_size > 0) return override_size;
  return std::min(std::min(nx, recon) + 1, 5);
}

std::vector<int> size_ladder(int n) {
  if (n <= 2) return {n};
  return {2, n};
}

void validate_config(const OptimizerConfig& cfg) {
  detail::require(cfg.grid_resolution >= 2,
                  "OptimizerConfig: grid_resolution must be >= 2");
  detail::require(cfg.tolerance > 0.0, "OptimizerConfig: tolerance must be > 0");
  detail::require(cfg.restarts >= 1, "OptimizerConfig: restarts must be >= 1");
  detail::require(cfg.descent_iterations >= 1,
                  "OptimizerConfig: descent_iterations must be >= 1");
}

opt::SearchOptions search_options(const OptimizerConfig& cfg,
                                  std::uint64_t salt) {
  validate_config(cfg);
  opt::SearchOptions o;
  o.grid_resolution = cfg.grid_resolution;
  o.restarts = cfg.restarts;
  o.max_sweeps = cfg.descent_iterations;
  o.seed = opt::Rng::mix(cfg.seed, salt);
  return o;
}

// ----- Wyner-Ziv -----------------------------------------------------------

struct WzProblem {
  MatrixXd jxy;
  const DistortionMeasure* d;
  double D;
  double h_x_given_y;
};

opt::Eval wz_eval(const WzProblem& p, const opt::Params& params) {
  const MatrixXd& aux = params[0];
  const double rate = p.h_x_given_y - cond_entropy_given_aux(p.jxy, aux);
  const DecodeOut dec = best_decoder(p.jxy, aux, *p.d);
  return {rate, std::max(0.0, dec.expected_distortion - p.D - kDistortionSlack)};
}

std::vector<opt::Params> wz_inits(const WzProblem& p, int nx, int n,
                                  double dzero,
                                  const std::vector<MatrixXd>& extra) {
  std::vector<opt::Params> inits;
  auto add = [&](MatrixXd m) { inits.push_back({std::move(m)}); };
  add(channels::deterministic(nx, n, channels::identity_map(nx)));
  add(channels::deterministic(nx, n, channels::min_distortion_map(*p.d)));
  add(channels::constant(nx, n));
  for (int k = 2; k <= std::min(n, nx - 1); ++k) {
    const MatrixXd det =
        channels::deterministic(nx, n, channels::grouping_map(nx, k));
    add(det);
    // Softened groupings give the polish a start away from the vertex.
    for (double blur : {0.15, 0.4})
      add(det * (1.0 - blur) + MatrixXd::Constant(nx, n, blur / n));
  }
  if (nx > 3)
    for (double kappa : {0.2, 0.7, 2.0, 8.0})
      add(channels::ordered_blur(nx, n, kappa));
  if (nx == 2 && n >= 2) add(channels::crossover(p.D, n));
  if (nx == 2 && n >= 3) {
    for (double alpha : {0.25, 0.5, 0.75}) {
      const double q = (alpha > 1e-9 && p.D > (1.0 - alpha) * dzero)
                           ? (p.D - (1.0 - alpha) * dzero) / alpha
                           : p.D;
      add(channels::timeshare(alpha, q, n));
    }
  }
  for (const auto& m : extra)
    if (m.rows() == nx && m.cols() == n) add(m);
  return inits;
}

AuxChannel make_single_witness(const MatrixXd& aux, SideInfo side,
                               const MatrixXi& f) {
  AuxChannel w;
  w.cond = aux;
  if (side == SideInfo::Y1) {
    w.aux1_size = static_cast<int>(aux.cols());
    w.f1 = f;
  } else {
    w.aux2_size = static_cast<int>(aux.cols());
    w.f2 = f;
  }
  return w;
}

// ----- Heegard-Berger ------------------------------------------------------

struct HbProblem {
  MatrixXd jxy1, jxy2;
  const DistortionMeasure* d1;
  const DistortionMeasure* d2;
  double D1, D2;
  int n1, n2;
  double h_x_given_y2;
};

void split_marginals(const MatrixXd& c, int n1, int n2, MatrixXd& cw1,
                     MatrixXd& cw2) {
  const int nx = static_cast<int>(c.rows());
  cw1 = MatrixXd::Zero(nx, n1);
  cw2 = MatrixXd::Zero(nx, n2);
  for (int x = 0; x < nx; ++x)
    for (int w1 = 0; w1 < n1; ++w1)
      for (int w2 = 0; w2 < n2; ++w2) {
        const double v = c(x, w1 * n2 + w2);
        cw1(x, w1) += v;
        cw2(x, w2) += v;
      }
}

opt::Eval hb_eval(const HbProblem& p, const opt::Params& params) {
  const MatrixXd& c = params[0];
  MatrixXd cw1, cw2;
  split_marginals(c, p.n1, p.n2, cw1, cw2);
  const double i2 = p.h_x_given_y2 - cond_entropy_given_aux(p.jxy2, cw2);
  const double i1 = cond_entropy_given_aux(p.jxy1, cw2) -
                    cond_entropy_given_aux(p.jxy1, c);
  const DecodeOut dec1 = best_decoder(p.jxy1, cw1, *p.d1);
  const DecodeOut dec2 = best_decoder(p.jxy2, cw2, *p.d2);
  const double viol = std::max(0.0, dec1.expected_distortion - p.D1 - kDistortionSlack) +
                      std::max(0.0, dec2.expected_distortion - p.D2 - kDistortionSlack);
  return {i2 + i1, viol};
}

MatrixXd product_channel(const MatrixXd& a, const MatrixXd& b) {
  const int nx = static_cast<int>(a.rows());
  const int n1 = static_cast<int>(a.cols());
  const int n2 = static_cast<int>(b.cols());
  MatrixXd c(nx, n1 * n2);
  for (int x = 0; x < nx; ++x)
    for (int w1 = 0; w1 < n1; ++w1)
      for (int w2 = 0; w2 < n2; ++w2) c(x, w1 * n2 + w2) = a(x, w1) * b(x, w2);
  return c;
}

// c(x, (w1,w2)) = first(x, w1) * link(w1, w2), the forward cascade; the
// reverse cascade transposes the roles of the two slots.
MatrixXd cascade_channel(const MatrixXd& first, const MatrixXd& link,
                         bool w1_first) {
  const int nx = static_cast<int>(first.rows());
  const int na = static_cast<int>(first.cols());
  const int nb = static_cast<int>(link.cols());
  MatrixXd c(nx, w1_first ? na * nb : nb * na);
  for (int x = 0; x < nx; ++x)
    for (int a = 0; a < na; ++a)
      for (int b = 0; b < nb; ++b) {
        const double v = first(x, a) * link(a, b);
        if (w1_first)
          c(x, a * nb + b) = v;
        else
          c(x, b * na + a) = v;
      }
  return c;
}

std::vector<opt::Params> hb_inits(const HbProblem& p, int nx,
                                  const std::vector<MatrixXd>& extra) {
  std::vector<opt::Params> inits;
  auto add = [&](MatrixXd m) { inits.push_back({std::move(m)}); };

  std::vector<MatrixXd> side1{channels::deterministic(nx, p.n1, channels::min_distortion_map(*p.d1)),
                              channels::constant(nx, p.n1)};
  std::vector<MatrixXd> side2{channels::deterministic(nx, p.n2, channels::min_distortion_map(*p.d2)),
                              channels::constant(nx, p.n2)};
  if (nx == 2) {
    side1.push_back(channels::crossover(p.D1, p.n1));
    side2.push_back(channels::crossover(p.D2, p.n2));
  }
  if (nx <= p.n1) side1.push_back(channels::deterministic(nx, p.n1, channels::identity_map(nx)));
  if (nx <= p.n2) side2.push_back(channels::deterministic(nx, p.n2, channels::identity_map(nx)));
  if (nx > 3) {
    side1.push_back(channels::deterministic(
        nx, p.n1, channels::grouping_map(nx, std::min(p.n1, nx - 1))));
    side2.push_back(channels::deterministic(
        nx, p.n2, channels::grouping_map(nx, std::min(p.n2, nx - 1))));
    for (double kappa : {0.7, 4.0}) {
      side1.push_back(channels::ordered_blur(nx, p.n1, kappa));
      side2.push_back(channels::ordered_blur(nx, p.n2, kappa));
    }
  }
  for (const auto& a : side1)
    for (const auto& b : side2) add(product_channel(a, b));

  if (nx == 2 && p.n1 >= 2 && p.n2 >= 2) {
    // W1 near X, W2 a further degraded copy (and the reverse).
    if (p.D2 >= p.D1) {
      const MatrixXd link = channels::crossover(channels::deconvolve(p.D1, p.D2), p.n2)
                                .topRows(2);
      MatrixXd first = channels::crossover(p.D1, p.n1);
      MatrixXd link2 = MatrixXd::Zero(p.n1, p.n2);
      link2.block(0, 0, 2, p.n2) = link;
      for (int r = 2; r < p.n1; ++r) link2(r, 0) = 1.0;
      add(cascade_channel(first, link2, true));
    }
    if (p.D1 >= p.D2) {
      const MatrixXd link = channels::crossover(channels::deconvolve(p.D2, p.D1), p.n1)
                                .topRows(2);
      MatrixXd first = channels::crossover(p.D2, p.n2);
      MatrixXd link2 = MatrixXd::Zero(p.n2, p.n1);
      link2.block(0, 0, 2, p.n1) = link;
      for (int r = 2; r < p.n2; ++r) link2(r, 0) = 1.0;
      add(cascade_channel(first, link2, false));
    }
  }
  for (const auto& m : extra)
    if (m.rows() == nx && m.cols() == p.n1 * p.n2) add(m);
  return inits;
}

// ----- Lossless-first objective over a single W2 ---------------------------

struct LosslessProblem {
  MatrixXd jxy1, jxy2;
  const DistortionMeasure* d2;
  double D2;
  double h_x_given_y2;
};

opt::Eval lossless_eval(const LosslessProblem& p, const opt::Params& params) {
  const MatrixXd& aux = params[0];
  const double i2 = p.h_x_given_y2 - cond_entropy_given_aux(p.jxy2, aux);
  const double h1 = cond_entropy_given_aux(p.jxy1, aux);
  const DecodeOut dec2 = best_decoder(p.jxy2, aux, *p.d2);
  return {i2 + h1, std::max(0.0, dec2.expected_distortion - p.D2 - kDistortionSlack)};
}

}  // namespace

MatrixXd AuxChannel::marginal_w1() const {
  MatrixXd m1, m2;
  split_marginals(cond, aux1_size, aux2_size, m1, m2);
  return m1;
}

MatrixXd AuxChannel::marginal_w2() const {
  MatrixXd m1, m2;
  split_marginals(cond, aux1_size, aux2_size, m1, m2);
  return m2;
}

double slepian_wolf_rate(const JointSource& src, SideInfo side) {
  return conditional_entropy(side_joint(src, side));
}

double zero_rate_distortion(const JointSource& src, SideInfo side,
                            const DistortionMeasure& d) {
  const MatrixXd jxy = side_joint(src, side);
  double total = 0.0;
  for (int y = 0; y < jxy.cols(); ++y) {
    double best = kInf;
    for (int xh = 0; xh < d.recon_size(); ++xh) {
      double v = 0.0;
      for (int x = 0; x < jxy.rows(); ++x) v += jxy(x, y) * d(x, xh);
      best = std::min(best, v);
    }
    total += best;
  }
  return total;
}

double min_achievable_distortion(const JointSource& src,
                                 const DistortionMeasure& d) {
  const VectorXd px = src.marginal_x().probs();
  double total = 0.0;
  for (int x = 0; x < px.size(); ++x) {
    double best = kInf;
    for (int xh = 0; xh < d.recon_size(); ++xh) best = std::min(best, d(x, xh));
    total += px(x) * best;
  }
  return total;
}

double cond_entropy_given_aux(const MatrixXd& jxy, const MatrixXd& aux) {
  double h_xay = 0.0, h_ay = 0.0;
  const int nx = static_cast<int>(jxy.rows());
  const int ny = static_cast<int>(jxy.cols());
  const int na = static_cast<int>(aux.cols());
  for (int a = 0; a < na; ++a)
    for (int y = 0; y < ny; ++y) {
      double s = 0.0;
      for (int x = 0; x < nx; ++x) {
        const double p = jxy(x, y) * aux(x, a);
        h_xay -= xlog2x(p);
        s += p;
      }
      h_ay -= xlog2x(s);
    }
  return h_xay - h_ay;
}

double cond_mi_aux(const MatrixXd& jxy, const MatrixXd& aux) {
  return conditional_entropy(jxy) - cond_entropy_given_aux(jxy, aux);
}

DecoderTable optimal_decoder(const MatrixXd& jxy, const MatrixXd& aux,
                             const DistortionMeasure& d) {
  const int nx = static_cast<int>(jxy.rows());
  const int ny = static_cast<int>(jxy.cols());
  const int na = static_cast<int>(aux.cols());
  DecoderTable out;
  out.f.resize(na, ny);
  for (int a = 0; a < na; ++a)
    for (int y = 0; y < ny; ++y) {
      double best = kInf;
      int bi = 0;
      for (int xh = 0; xh < d.recon_size(); ++xh) {
        double v = 0.0;
        for (int x = 0; x < nx; ++x) v += jxy(x, y) * aux(x, a) * d(x, xh);
        if (v < best) {
          best = v;
          bi = xh;
        }
      }
      out.f(a, y) = bi;
      out.expected_distortion += best;
    }
  return out;
}

double decoder_distortion(const MatrixXd& jxy, const MatrixXd& aux,
                          const DistortionMeasure& d, const Eigen::MatrixXi& f) {
  double ed = 0.0;
  for (int a = 0; a < aux.cols(); ++a)
    for (int y = 0; y < jxy.cols(); ++y)
      for (int x = 0; x < jxy.rows(); ++x)
        ed += jxy(x, y) * aux(x, a) * d(x, f(a, y));
  return ed;
}

WitnessedRate wyner_ziv_rate(const JointSource& src, SideInfo side,
                             const DistortionMeasure& d, double D,
                             const OptimizerConfig& cfg,
                             const std::vector<MatrixXd>& extra_inits) {
  detail::require(D >= 0.0, "wyner_ziv_rate: D must be nonnegative");
  detail::require(d.source_size() == src.x_size(),
                  "wyner_ziv_rate: distortion rows must match |X|");
  WitnessedRate out;
  const MatrixXd jxy = side_joint(src, side);

  const double dzero = zero_rate_distortion(src, side, d);
  if (D >= dzero - kDistortionSlack) {
    const MatrixXd aux = channels::constant(src.x_size(), 1);
    const DecodeOut dec = best_decoder(jxy, aux, d);
    out.feasible = true;
    out.rate = 0.0;
    out.witness = make_single_witness(aux, side, dec.f);
    (side == SideInfo::Y1 ? out.distortion1 : out.distortion2) = dec.expected_distortion;
    return out;
  }
  const double dmin = min_achievable_distortion(src, d);
  if (D < dmin - kDistortionSlack) {
    out.message = "infeasible: D below the minimum achievable distortion " +
                  std::to_string(dmin);
    return out;
  }

  WzProblem prob{jxy, &d, D, conditional_entropy(jxy)};
  const int nx = src.x_size();
  opt::SearchResult best;
  for (int n : size_ladder(auto_aux_size(nx, d.recon_size(), cfg.max_aux1))) {
    const auto inits = wz_inits(prob, nx, n, dzero, extra_inits);
    const auto res = opt::minimize(
        {{nx, n}}, [&](const opt::Params& p) { return wz_eval(prob, p); },
        search_options(cfg, 0x775a ^ static_cast<std::uint64_t>(n)), inits);
    if (res.feasible && opt::improves(res.eval, best.eval)) best = res;
  }
  if (best.params.empty()) {
    out.message = "search found no feasible auxiliary channel";
    return out;
  }
  const MatrixXd& aux = best.params[0];
  const DecodeOut dec = best_decoder(jxy, aux, d);
  out.feasible = true;
  out.rate = std::max(prob.h_x_given_y - cond_entropy_given_aux(jxy, aux), 0.0);
  out.witness = make_single_witness(aux, side, dec.f);
  (side == SideInfo::Y1 ? out.distortion1 : out.distortion2) = dec.expected_distortion;
  return out;
}

std::vector<WitnessedRate> wyner_ziv_sweep(const JointSource& src,
                                           SideInfo side,
                                           const DistortionMeasure& d,
                                           const std::vector<double>& Ds,
                                           const OptimizerConfig& cfg) {
  std::vector<int> order(Ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return Ds[a] < Ds[b]; });
  std::vector<WitnessedRate> results(Ds.size());
  std::vector<MatrixXd> carried;
  const WitnessedRate* prev = nullptr;
  for (int idx : order) {
    WitnessedRate r = wyner_ziv_rate(src, side, d, Ds[idx], cfg, carried);
    // A witness for a smaller distortion remains feasible here; keep the
    // better of the two so the sweep is monotone non-increasing.
    if (prev && prev->feasible && r.feasible && prev->rate < r.rate) {
      r.rate = prev->rate;
      r.witness = prev->witness;
      r.distortion1 = prev->distortion1;
      r.distortion2 = prev->distortion2;
    }
    results[idx] = r;
    if (r.feasible) {
      carried.clear();
      carried.push_back(r.witness.cond);
      prev = &results[idx];
    }
  }
  return results;
}

WitnessedRate heegard_berger_rate(const JointSource& src,
                                  const DistortionMeasure& d1,
                                  const DistortionMeasure& d2, double D1,
                                  double D2, const OptimizerConfig& cfg,
                                  const std::vector<MatrixXd>& extra_inits) {
  WitnessedRate out;
  const double dmin1 = min_achievable_distortion(src, d1);
  const double dmin2 = min_achievable_distortion(src, d2);
  if (D1 < dmin1 - kDistortionSlack)
    out.message += "infeasible D1 (minimum achievable " +
                   std::to_string(dmin1) + "); ";
  if (D2 < dmin2 - kDistortionSlack)
    out.message += "infeasible D2 (minimum achievable " +
                   std::to_string(dmin2) + "); ";
  if (!out.message.empty()) return out;

  const MatrixXd jxy1 = src.joint_x_y1();
  const MatrixXd jxy2 = src.joint_x_y2();
  const int nx = src.x_size();

  const double dz1 = zero_rate_distortion(src, SideInfo::Y1, d1);
  const double dz2 = zero_rate_distortion(src, SideInfo::Y2, d2);
  if (D1 >= dz1 - kDistortionSlack && D2 >= dz2 - kDistortionSlack) {
    AuxChannel w;
    w.cond = channels::constant(nx, 1);
    w.f1 = best_decoder(jxy1, w.cond, d1).f;
    w.f2 = best_decoder(jxy2, w.cond, d2).f;
    out.feasible = true;
    out.rate = 0.0;
    out.witness = w;
    out.distortion1 = distortion_with_table(jxy1, w.cond, d1, w.f1);
    out.distortion2 = distortion_with_table(jxy2, w.cond, d2, w.f2);
    return out;
  }

  const int full1 = auto_joint_aux_size(nx, d1.recon_size(), cfg.max_aux1);
  const int full2 = auto_joint_aux_size(nx, d2.recon_size(), cfg.max_aux2);
  std::vector<std::pair<int, int>> sizes{{std::min(2, full1), std::min(2, full2)},
                                         {full1, full2}};
  if (sizes[0] == sizes[1]) sizes.pop_back();

  opt::SearchResult best;
  int best_n1 = 0, best_n2 = 0;
  for (auto [n1, n2] : sizes) {
    HbProblem prob{jxy1, jxy2, &d1, &d2, D1, D2,
                   n1,   n2,   conditional_entropy(jxy2)};
    const auto inits = hb_inits(prob, nx, extra_inits);
    const auto res = opt::minimize(
        {{nx, n1 * n2}},
        [&](const opt::Params& p) { return hb_eval(prob, p); },
        search_options(cfg, 0xb17cULL ^ static_cast<std::uint64_t>(n1 * 16 + n2)),
        inits);
    if (res.feasible && opt::improves(res.eval, best.eval)) {
      best = res;
      best_n1 = n1;
      best_n2 = n2;
    }
  }
  if (best.params.empty()) {
    out.message = "search found no feasible auxiliary pair";
    return out;
  }

  AuxChannel w;
  w.cond = best.params[0];
  w.aux1_size = best_n1;
  w.aux2_size = best_n2;
  MatrixXd cw1, cw2;
  split_marginals(w.cond, best_n1, best_n2, cw1, cw2);
  w.f1 = best_decoder(jxy1, cw1, d1).f;
  w.f2 = best_decoder(jxy2, cw2, d2).f;
  out.feasible = true;
  out.rate = (conditional_entropy(jxy2) - cond_entropy_given_aux(jxy2, cw2)) +
             (cond_entropy_given_aux(jxy1, cw2) -
              cond_entropy_given_aux(jxy1, w.cond));
  out.witness = w;
  out.distortion1 = distortion_with_table(jxy1, cw1, d1, w.f1);
  out.distortion2 = distortion_with_table(jxy2, cw2, d2, w.f2);
  return out;
}

WitnessedRate hb_lossless_first(const JointSource& src,
                                const DistortionMeasure& d2, double D2,
                                const OptimizerConfig& cfg) {
  WitnessedRate out;
  const double dmin2 = min_achievable_distortion(src, d2);
  if (D2 < dmin2 - kDistortionSlack) {
    out.message = "infeasible D2 (minimum achievable " +
                  std::to_string(dmin2) + ")";
    return out;
  }
  const MatrixXd jxy1 = src.joint_x_y1();
  const MatrixXd jxy2 = src.joint_x_y2();
  const int nx = src.x_size();
  LosslessProblem prob{jxy1, jxy2, &d2, D2, conditional_entropy(jxy2)};

  opt::SearchResult best;
  for (int n : size_ladder(auto_aux_size(nx, d2.recon_size(), cfg.max_aux2))) {
    std::vector<opt::Params> inits;
    inits.push_back({channels::deterministic(nx, n, channels::min_distortion_map(d2))});
    inits.push_back({channels::constant(nx, n)});
    if (nx <= n) inits.push_back({channels::deterministic(nx, n, channels::identity_map(nx))});
    if (nx == 2 && n >= 2) inits.push_back({channels::crossover(D2, n)});
    const auto res = opt::minimize(
        {{nx, n}},
        [&](const opt::Params& p) { return lossless_eval(prob, p); },
        search_options(cfg, 0x10f5 ^ static_cast<std::uint64_t>(n)), inits);
    if (res.feasible && opt::improves(res.eval, best.eval)) best = res;
  }
  if (best.params.empty()) {
    out.message = "search found no feasible auxiliary";
    return out;
  }
  const MatrixXd& aux = best.params[0];
  const DecodeOut dec2 = best_decoder(jxy2, aux, d2);
  AuxChannel w = make_single_witness(aux, SideInfo::Y2, dec2.f);
  out.feasible = true;
  out.rate = (prob.h_x_given_y2 - cond_entropy_given_aux(jxy2, aux)) +
             cond_entropy_given_aux(jxy1, aux);
  out.witness = w;
  out.distortion2 = dec2.expected_distortion;
  return out;
}

WitnessEvaluation evaluate_wz_witness(const JointSource& src, SideInfo side,
                                      const DistortionMeasure& d,
                                      const AuxChannel& aux) {
  const MatrixXd jxy = side_joint(src, side);
  const MatrixXd w =
      side == SideInfo::Y1 ? aux.marginal_w1() : aux.marginal_w2();
  WitnessEvaluation ev;
  ev.rate = cond_mi_aux(jxy, w);
  const MatrixXi& f = side == SideInfo::Y1 ? aux.f1 : aux.f2;
  const double ed = distortion_with_table(jxy, w, d, f);
  (side == SideInfo::Y1 ? ev.distortion1 : ev.distortion2) = ed;
  return ev;
}

WitnessEvaluation evaluate_hb_witness(const JointSource& src,
                                      const DistortionMeasure& d1,
                                      const DistortionMeasure& d2,
                                      const AuxChannel& aux) {
  const MatrixXd jxy1 = src.joint_x_y1();
  const MatrixXd jxy2 = src.joint_x_y2();
  const MatrixXd cw1 = aux.marginal_w1();
  const MatrixXd cw2 = aux.marginal_w2();
  WitnessEvaluation ev;
  ev.rate = cond_mi_aux(jxy2, cw2) +
            (cond_entropy_given_aux(jxy1, cw2) -
             cond_entropy_given_aux(jxy1, aux.cond));
  ev.distortion1 = distortion_with_table(jxy1, cw1, d1, aux.f1);
  ev.distortion2 = distortion_with_table(jxy2, cw2, d2, aux.f2);
  return ev;
}

}  // namespace siscale::rdopt
