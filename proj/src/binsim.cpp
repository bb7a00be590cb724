#include "siscale/binsim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "siscale/opt.hpp"
#include "siscale/rdopt.hpp"

namespace siscale::binsim {

namespace {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXd;

// Inverse-CDF sampling; avoids standard-library distributions so streams
// are identical across platforms.
int sample_pmf(const double* p, int n, opt::Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return n - 1;
}

std::size_t size_from_rate(double rate, int n, const char* what,
                           std::size_t cap) {
  detail::require(rate >= 0.0, std::string(what) + ": negative rate");
  const int bits = std::max(0, static_cast<int>(std::ceil(
                                   rate * n - 1e-9)));
  detail::require(bits < 63, std::string(what) + ": codebook exponent overflow");
  const std::size_t count = std::size_t{1} << bits;
  detail::require(count <= cap,
                  std::string(what) + ": size 2^" + std::to_string(bits) +
                      " exceeds the configured cap of " + std::to_string(cap));
  return count;
}

double entropy_flat(const VectorXd& p) { return entropy(p); }

}  // namespace

bool strongly_typical_joint(const std::vector<const Sequence*>& seqs,
                            const std::vector<int>& dims,
                            const Eigen::VectorXd& flat_pmf, double slack) {
  detail::require(!seqs.empty() && seqs.size() == dims.size(),
                  "strongly_typical_joint: tuple arity mismatch");
  int cells = 1;
  for (int d : dims) cells *= d;
  detail::require(cells == flat_pmf.size(),
                  "strongly_typical_joint: reference size mismatch");
  const std::size_t n = seqs[0]->size();
  for (const auto* s : seqs)
    detail::require(s->size() == n, "strongly_typical_joint: length mismatch");

  std::vector<int> counts(cells, 0);
  for (std::size_t t = 0; t < n; ++t) {
    int idx = 0;
    for (std::size_t k = 0; k < seqs.size(); ++k) {
      const int sym = (*seqs[k])[t];
      detail::require(sym >= 0 && sym < dims[k],
                      "strongly_typical_joint: symbol outside alphabet");
      idx = idx * dims[k] + sym;
    }
    counts[idx]++;
  }
  for (int c = 0; c < cells; ++c) {
    const double p = flat_pmf(c);
    if (p < kProbFloor) {
      if (counts[c] != 0) return false;
    } else if (!(std::abs(static_cast<double>(counts[c]) / n - p) < slack)) {
      return false;
    }
  }
  return true;
}

SimModel build_model(const JointSource& src, const regions::ScalableAux& aux,
                     const DistortionMeasure& d1, const DistortionMeasure& d2) {
  SimModel m;
  m.nx = src.x_size();
  m.ny1 = src.y1_size();
  m.ny2 = src.y2_size();
  m.nv = aux.v_size;
  m.n1 = aux.w1_size;
  m.n2 = aux.w2_size;
  detail::require(aux.cond.rows() == m.nx,
                  "build_model: auxiliary channel does not match the source");

  const VectorXd px = src.marginal_x().probs();
  const MatrixXd jxy1 = src.joint_x_y1();
  const MatrixXd jxy2 = src.joint_x_y2();

  // Sampling pmf over (x, y1, y2).
  m.p_xy1y2.resize(m.nx * m.ny1 * m.ny2);
  for (int x = 0; x < m.nx; ++x)
    for (int y1 = 0; y1 < m.ny1; ++y1)
      for (int y2 = 0; y2 < m.ny2; ++y2)
        m.p_xy1y2((x * m.ny1 + y1) * m.ny2 + y2) = src.joint(x, y1, y2);

  // Generation pmfs. P(w1 | v) and P(w2 | v) come from the joint auxiliary
  // through Bayes; letters with zero-mass v rows fall back to uniform.
  const MatrixXd cv = aux.marginal_v();  // P(v | x)
  m.p_v = VectorXd::Zero(m.nv);
  MatrixXd p_vw1 = MatrixXd::Zero(m.nv, m.n1);
  MatrixXd p_vw2 = MatrixXd::Zero(m.nv, m.n2);
  const MatrixXd cvw1 = aux.marginal_vw1();
  const MatrixXd cvw2 = aux.marginal_vw2();
  for (int x = 0; x < m.nx; ++x) {
    for (int v = 0; v < m.nv; ++v) {
      m.p_v(v) += px(x) * cv(x, v);
      for (int w1 = 0; w1 < m.n1; ++w1)
        p_vw1(v, w1) += px(x) * cvw1(x, v * m.n1 + w1);
      for (int w2 = 0; w2 < m.n2; ++w2)
        p_vw2(v, w2) += px(x) * cvw2(x, v * m.n2 + w2);
    }
  }
  m.p_w1_given_v = MatrixXd::Constant(m.nv, m.n1, 1.0 / m.n1);
  m.p_w2_given_v = MatrixXd::Constant(m.nv, m.n2, 1.0 / m.n2);
  for (int v = 0; v < m.nv; ++v) {
    if (m.p_v(v) > kProbFloor) {
      m.p_w1_given_v.row(v) = p_vw1.row(v) / m.p_v(v);
      m.p_w2_given_v.row(v) = p_vw2.row(v) / m.p_v(v);
    }
  }

  // Typicality references. The scheme draws W from P(w|v) independently of
  // X, but tests joint typicality against the true joint (w, v, x, y).
  m.p_x = px;
  m.p_y1 = src.marginal_y1().probs();
  m.p_y2 = src.marginal_y2().probs();

  m.p_xv.resize(m.nx * m.nv);
  for (int x = 0; x < m.nx; ++x)
    for (int v = 0; v < m.nv; ++v) m.p_xv(x * m.nv + v) = px(x) * cv(x, v);

  auto fill3 = [&](VectorXd& out, const MatrixXd& cw, int nw) {
    // (w, v, x) reference
    out = VectorXd::Zero(nw * m.nv * m.nx);
    for (int x = 0; x < m.nx; ++x)
      for (int v = 0; v < m.nv; ++v)
        for (int w = 0; w < nw; ++w)
          out((w * m.nv + v) * m.nx + x) += px(x) * cw(x, v * nw + w);
  };
  fill3(m.p_w1vx, cvw1, m.n1);
  fill3(m.p_w2vx, cvw2, m.n2);

  auto fill_vy = [&](VectorXd& out, const MatrixXd& jxy, int ny) {
    out = VectorXd::Zero(m.nv * ny);
    for (int x = 0; x < m.nx; ++x)
      for (int y = 0; y < ny; ++y)
        for (int v = 0; v < m.nv; ++v)
          out(v * ny + y) += jxy(x, y) * cv(x, v);
  };
  fill_vy(m.p_vy1, jxy1, m.ny1);
  fill_vy(m.p_vy2, jxy2, m.ny2);

  auto fill_wvy = [&](VectorXd& out, const MatrixXd& jxy, const MatrixXd& cw,
                      int nw, int ny) {
    out = VectorXd::Zero(nw * m.nv * ny);
    for (int x = 0; x < m.nx; ++x)
      for (int y = 0; y < ny; ++y)
        for (int v = 0; v < m.nv; ++v)
          for (int w = 0; w < nw; ++w)
            out((w * m.nv + v) * ny + y) += jxy(x, y) * cw(x, v * nw + w);
  };
  fill_wvy(m.p_w1vy1, jxy1, cvw1, m.n1, m.ny1);
  fill_wvy(m.p_w2vy2, jxy2, cvw2, m.n2, m.ny2);

  auto fill_vxy = [&](VectorXd& out, const MatrixXd& jxy, int ny) {
    out = VectorXd::Zero(m.nv * m.nx * ny);
    for (int x = 0; x < m.nx; ++x)
      for (int y = 0; y < ny; ++y)
        for (int v = 0; v < m.nv; ++v)
          out((v * m.nx + x) * ny + y) += jxy(x, y) * cv(x, v);
  };
  fill_vxy(m.p_vxy1, jxy1, m.ny1);
  fill_vxy(m.p_vxy2, jxy2, m.ny2);

  auto fill_wvxy = [&](VectorXd& out, const MatrixXd& jxy, const MatrixXd& cw,
                       int nw, int ny) {
    out = VectorXd::Zero(nw * m.nv * m.nx * ny);
    for (int x = 0; x < m.nx; ++x)
      for (int y = 0; y < ny; ++y)
        for (int v = 0; v < m.nv; ++v)
          for (int w = 0; w < nw; ++w)
            out(((w * m.nv + v) * m.nx + x) * ny + y) +=
                jxy(x, y) * cw(x, v * nw + w);
  };
  fill_wvxy(m.p_w1vxy1, jxy1, cvw1, m.n1, m.ny1);
  fill_wvxy(m.p_w2vxy2, jxy2, cvw2, m.n2, m.ny2);

  // Reconstruction tables: use the auxiliary's own when present.
  if (aux.f1.rows() == m.n1 && aux.f1.cols() == m.ny1) {
    m.f1 = aux.f1;
  } else {
    m.f1 = rdopt::optimal_decoder(jxy1, aux.marginal_w1(), d1).f;
  }
  if (aux.f2.rows() == m.n2 && aux.f2.cols() == m.ny2) {
    m.f2 = aux.f2;
  } else {
    m.f2 = rdopt::optimal_decoder(jxy2, aux.marginal_w2(), d2).f;
  }
  m.expected_d1 =
      rdopt::decoder_distortion(jxy1, aux.marginal_w1(), d1, m.f1);
  m.expected_d2 =
      rdopt::decoder_distortion(jxy2, aux.marginal_w2(), d2, m.f2);

  // Information quantities.
  auto h = [&](const VectorXd& p) { return entropy_flat(p); };
  const double h_v = h(m.p_v);
  const double h_xv = h(m.p_xv);
  const double h_x = h(m.p_x);
  m.i_xv = h_x + h_v - h_xv;

  auto h_of_pair = [&](const VectorXd& wvx, int nw, bool with_x) {
    // marginal entropies of (w, v) or (w, v, x) references
    if (with_x) return h(wvx);
    VectorXd wv = VectorXd::Zero(nw * m.nv);
    for (int w = 0; w < nw; ++w)
      for (int v = 0; v < m.nv; ++v)
        for (int x = 0; x < m.nx; ++x)
          wv(w * m.nv + v) += wvx((w * m.nv + v) * m.nx + x);
    return h(wv);
  };
  const double h_w1v = h_of_pair(m.p_w1vx, m.n1, false);
  const double h_w1vx = h(m.p_w1vx);
  m.i_xw1_given_v = (h_w1v - h_v) - (h_w1vx - h_xv);
  const double h_w2v = h_of_pair(m.p_w2vx, m.n2, false);
  const double h_w2vx = h(m.p_w2vx);
  m.i_xw2_given_v = (h_w2v - h_v) - (h_w2vx - h_xv);

  const double h_y1 = h(m.p_y1);
  const double h_y2 = h(m.p_y2);
  m.i_y1v = h_y1 + h_v - h(m.p_vy1);
  m.i_y2v = h_y2 + h_v - h(m.p_vy2);
  // I(Y;W|V) = H(W|V) + H(Y|V) - H(W,Y|V) via joint references.
  m.i_y1w1_given_v =
      (h_w1v - h_v) + (h(m.p_vy1) - h_v) - (h(m.p_w1vy1) - h_v);
  m.i_y2w2_given_v =
      (h_w2v - h_v) + (h(m.p_vy2) - h_v) - (h(m.p_w2vy2) - h_v);

  // Rate expressions of the two-layer scheme.
  const double h_vxy1 = h(m.p_vxy1);
  const double h_vy1 = h(m.p_vy1);
  const double h_w1vxy1 = h(m.p_w1vxy1);
  const double h_w1vy1 = h(m.p_w1vy1);
  double h_xy1 = 0.0;
  for (int x = 0; x < m.nx; ++x)
    for (int y = 0; y < m.ny1; ++y) h_xy1 -= detail::xlog2x(jxy1(x, y));
  // I(X; V, W1 | Y1) = H(X|Y1) - H(X | V, W1, Y1)
  const double h_x_given_y1 = h_xy1 - h_y1;
  const double h_x_given_vw1y1 = h_w1vxy1 - h_w1vy1;
  m.single_letter_r1 = h_x_given_y1 - h_x_given_vw1y1;
  const double h_w2vxy2 = h(m.p_w2vxy2);
  const double h_w2vy2 = h(m.p_w2vy2);
  double h_xy2 = 0.0;
  for (int x = 0; x < m.nx; ++x)
    for (int y = 0; y < m.ny2; ++y) h_xy2 -= detail::xlog2x(jxy2(x, y));
  const double h_x_given_y2 = h_xy2 - h_y2;
  const double h_x_given_vw2y2 = h_w2vxy2 - h_w2vy2;
  const double h_x_given_vy1 = h_vxy1 - h_vy1;
  m.single_letter_sum = (h_x_given_y2 - h_x_given_vw2y2) +
                  (h_x_given_vy1 - h_x_given_vw1y1);
  return m;
}

RateConditions check_rate_conditions(const CodebookSpec& spec,
                                     const SimModel& m) {
  RateConditions rc;
  auto row = [&](const std::string& name, double lhs, double rhs) {
    rc.rows.push_back({name, lhs, rhs, lhs > rhs - 1e-12});
  };
  row("R_V > I(X;V)", spec.rate_v, m.i_xv);
  row("R_W1 > I(X;W1|V)", spec.rate_w1, m.i_xw1_given_v);
  row("R_W2 > I(X;W2|V)", spec.rate_w2, m.i_xw2_given_v);
  row("R_A > R_V - I(Y1;V)", spec.rate_a, spec.rate_v - m.i_y1v);
  row("R_A + R_A' > R_V - I(Y2;V)", spec.rate_a + spec.rate_a_prime,
      spec.rate_v - m.i_y2v);
  row("R_B > R_W1 - I(Y1;W1|V)", spec.rate_b, spec.rate_w1 - m.i_y1w1_given_v);
  row("R_C > R_W2 - I(Y2;W2|V)", spec.rate_c, spec.rate_w2 - m.i_y2w2_given_v);
  rc.all_ok = true;
  for (const auto& r : rc.rows) rc.all_ok = rc.all_ok && r.ok;
  rc.r1 = spec.rate_a + spec.rate_b;
  rc.r_sum = spec.rate_a + spec.rate_a_prime + spec.rate_b + spec.rate_c;
  return rc;
}

CodebookSpec rates_with_margin(const SimModel& m, int n, double delta,
                               double margin, std::uint64_t seed) {
  CodebookSpec s;
  s.n = n;
  s.delta = delta;
  s.seed = seed;
  const double f = 1.0 + margin;
  s.rate_v = f * m.i_xv;
  s.rate_w1 = f * m.i_xw1_given_v;
  s.rate_w2 = f * m.i_xw2_given_v;
  s.rate_a = f * std::max(0.0, s.rate_v - m.i_y1v);
  s.rate_a_prime =
      std::max(0.0, f * std::max(0.0, s.rate_v - m.i_y2v) - s.rate_a);
  s.rate_b = f * std::max(0.0, s.rate_w1 - m.i_y1w1_given_v);
  s.rate_c = f * std::max(0.0, s.rate_w2 - m.i_y2w2_given_v);
  return s;
}

CodebookSuite::CodebookSuite(const CodebookSpec& spec, SimModel model)
    : spec_(spec), model_(std::move(model)) {
  detail::require(spec_.n >= 1, "CodebookSuite: block length must be >= 1");
  detail::require(spec_.delta > 0.0, "CodebookSuite: delta must be positive");
  v_count_ = size_from_rate(spec_.rate_v, spec_.n, "V codebook",
                            spec_.max_codewords);
  w1_count_ = size_from_rate(spec_.rate_w1, spec_.n, "W1 codebook",
                             spec_.max_codewords);
  w2_count_ = size_from_rate(spec_.rate_w2, spec_.n, "W2 codebook",
                             spec_.max_codewords);
  coarse_bins_ = size_from_rate(spec_.rate_a, spec_.n, "coarse bins",
                                spec_.max_codewords);
  fine_per_coarse_ = size_from_rate(spec_.rate_a_prime, spec_.n, "fine bins",
                                    spec_.max_codewords);
  w1_bins_ = size_from_rate(spec_.rate_b, spec_.n, "W1 bins",
                            spec_.max_codewords);
  w2_bins_ = size_from_rate(spec_.rate_c, spec_.n, "W2 bins",
                            spec_.max_codewords);

  const std::size_t letters =
      (v_count_ + w1_count_ + w2_count_) * static_cast<std::size_t>(spec_.n);
  detail::require(letters <= spec_.max_total_letters,
                  "CodebookSuite: memory budget exceeded; needs " +
                      std::to_string(letters) + " letters");

  // V codebook and its fine-bin assignment.
  v_words_.resize(v_count_ * spec_.n);
  v_fine_bin_.resize(v_count_);
  opt::Rng gen(opt::Rng::mix(spec_.seed, 0xc0debu));
  opt::Rng binrng(opt::Rng::mix(spec_.seed, 0xb1b5u));
  const std::uint64_t fine_total = coarse_bins_ * fine_per_coarse_;
  for (std::size_t c = 0; c < v_count_; ++c) {
    for (int t = 0; t < spec_.n; ++t)
      v_words_[c * spec_.n + t] = static_cast<std::uint8_t>(
          sample_pmf(model_.p_v.data(), model_.nv, gen));
    v_fine_bin_[c] = static_cast<std::uint32_t>(binrng.below(fine_total));
  }
}

void CodebookSuite::materialize_w1(std::size_t v_idx,
                                   std::vector<std::uint8_t>& words,
                                   std::vector<std::uint32_t>& bins) const {
  words.resize(w1_count_ * spec_.n);
  bins.resize(w1_count_);
  opt::Rng gen(opt::Rng::mix(spec_.seed, 0x3177000000ULL + v_idx));
  const std::uint8_t* v = v_word(v_idx);
  std::vector<double> rows(model_.nv * model_.n1);
  for (int a = 0; a < model_.nv; ++a)
    for (int w = 0; w < model_.n1; ++w)
      rows[a * model_.n1 + w] = model_.p_w1_given_v(a, w);
  for (std::size_t c = 0; c < w1_count_; ++c) {
    for (int t = 0; t < spec_.n; ++t)
      words[c * spec_.n + t] = static_cast<std::uint8_t>(
          sample_pmf(&rows[v[t] * model_.n1], model_.n1, gen));
    bins[c] = static_cast<std::uint32_t>(gen.below(w1_bins_));
  }
}

void CodebookSuite::materialize_w2(std::size_t v_idx,
                                   std::vector<std::uint8_t>& words,
                                   std::vector<std::uint32_t>& bins) const {
  words.resize(w2_count_ * spec_.n);
  bins.resize(w2_count_);
  opt::Rng gen(opt::Rng::mix(spec_.seed, 0x3277000000ULL + v_idx));
  const std::uint8_t* v = v_word(v_idx);
  std::vector<double> rows(model_.nv * model_.n2);
  for (int a = 0; a < model_.nv; ++a)
    for (int w = 0; w < model_.n2; ++w)
      rows[a * model_.n2 + w] = model_.p_w2_given_v(a, w);
  for (std::size_t c = 0; c < w2_count_; ++c) {
    for (int t = 0; t < spec_.n; ++t)
      words[c * spec_.n + t] = static_cast<std::uint8_t>(
          sample_pmf(&rows[v[t] * model_.n2], model_.n2, gen));
    bins[c] = static_cast<std::uint32_t>(gen.below(w2_bins_));
  }
}

CodebookSuite build_codebooks(const CodebookSpec& spec, const SimModel& model) {
  return CodebookSuite(spec, model);
}

namespace {

Sequence copy_word(const std::uint8_t* data, int n) {
  return Sequence(data, data + n);
}

}  // namespace

EncodeResult encode(const CodebookSuite& suite, const Sequence& x) {
  const CodebookSpec& spec = suite.spec();
  const SimModel& m = suite.model();
  EncodeResult r;
  r.x_atypical = !strongly_typical(x, m.p_x, spec.delta);

  // Least-index V codeword jointly typical with x at slack 2 delta.
  bool found = false;
  for (std::size_t c = 0; c < suite.v_count() && !found; ++c) {
    const Sequence v = copy_word(suite.v_word(c), spec.n);
    if (strongly_typical_joint({&x, &v}, {m.nx, m.nv}, m.p_xv,
                               2.0 * spec.delta)) {
      r.v_index = c;
      found = true;
    }
  }
  if (!found) {
    r.e1 = true;
    r.v_index = 0;  // default codeword, error declared
  }
  r.coarse_bin = suite.v_coarse_bin(r.v_index);
  r.fine_in_coarse = suite.v_fine_bin(r.v_index) % suite.fine_per_coarse();
  const Sequence vstar = copy_word(suite.v_word(r.v_index), spec.n);

  std::vector<std::uint8_t> words;
  std::vector<std::uint32_t> bins;
  suite.materialize_w1(r.v_index, words, bins);
  found = false;
  for (std::size_t c = 0; c < suite.w1_count() && !found; ++c) {
    const Sequence w = copy_word(words.data() + c * spec.n, spec.n);
    if (strongly_typical_joint({&w, &vstar, &x}, {m.n1, m.nv, m.nx}, m.p_w1vx,
                               3.0 * spec.delta)) {
      r.w1_index = c;
      found = true;
    }
  }
  if (!found) {
    r.e2 = true;
    r.w1_index = 0;
  }
  r.w1_bin = bins[r.w1_index];

  suite.materialize_w2(r.v_index, words, bins);
  found = false;
  for (std::size_t c = 0; c < suite.w2_count() && !found; ++c) {
    const Sequence w = copy_word(words.data() + c * spec.n, spec.n);
    if (strongly_typical_joint({&w, &vstar, &x}, {m.n2, m.nv, m.nx}, m.p_w2vx,
                               3.0 * spec.delta)) {
      r.w2_index = c;
      found = true;
    }
  }
  if (!found) {
    r.e3 = true;
    r.w2_index = 0;
  }
  r.w2_bin = bins[r.w2_index];
  return r;
}

namespace {

struct VSearch {
  bool none = true, ambiguous = false;
  std::size_t index = 0;
};

// Unique-typicality scan over a bin of V codewords.
VSearch scan_v(const CodebookSuite& suite, const Sequence& y,
               const VectorXd& ref, int ny, bool fine_level,
               std::uint64_t coarse, std::uint64_t fine) {
  const SimModel& m = suite.model();
  const double slack = 3.0 * m.nx * suite.spec().delta;
  VSearch s;
  for (std::size_t c = 0; c < suite.v_count(); ++c) {
    if (fine_level) {
      if (suite.v_fine_bin(c) != coarse * suite.fine_per_coarse() + fine)
        continue;
    } else if (suite.v_coarse_bin(c) != coarse) {
      continue;
    }
    const Sequence v = copy_word(suite.v_word(c), suite.spec().n);
    if (!strongly_typical_joint({&v, &y}, {m.nv, ny}, ref, slack)) continue;
    if (s.none) {
      s.none = false;
      s.index = c;
    } else {
      s.ambiguous = true;
      break;
    }
  }
  return s;
}

}  // namespace

DecodeResult decode_stage1(const CodebookSuite& suite, std::uint64_t coarse,
                           std::uint64_t w1_bin, const Sequence& y1) {
  const CodebookSpec& spec = suite.spec();
  const SimModel& m = suite.model();
  DecodeResult r;
  const VSearch vs = scan_v(suite, y1, m.p_vy1, m.ny1, false, coarse, 0);
  if (vs.none || vs.ambiguous) {
    r.none_found = vs.none;
    r.ambiguous = vs.ambiguous;
    return r;
  }
  r.v_index = vs.index;
  const Sequence vhat = copy_word(suite.v_word(vs.index), spec.n);

  std::vector<std::uint8_t> words;
  std::vector<std::uint32_t> bins;
  suite.materialize_w1(vs.index, words, bins);
  const double slack = 4.0 * m.nx * spec.delta;
  bool have = false;
  for (std::size_t c = 0; c < suite.w1_count(); ++c) {
    if (bins[c] != w1_bin) continue;
    const Sequence w = copy_word(words.data() + c * spec.n, spec.n);
    if (!strongly_typical_joint({&w, &vhat, &y1}, {m.n1, m.nv, m.ny1},
                                m.p_w1vy1, slack))
      continue;
    if (!have) {
      have = true;
      r.w_index = c;
    } else {
      r.ambiguous = true;
      return r;
    }
  }
  if (!have) {
    r.none_found = true;
    return r;
  }
  r.ok = true;
  r.xhat.resize(spec.n);
  const std::uint8_t* w = words.data() + r.w_index * spec.n;
  for (int t = 0; t < spec.n; ++t)
    r.xhat[t] = static_cast<std::uint8_t>(m.f1(w[t], y1[t]));
  return r;
}

DecodeResult decode_stage2(const CodebookSuite& suite, std::uint64_t coarse,
                           std::uint64_t fine, std::uint64_t w2_bin,
                           const Sequence& y2) {
  const CodebookSpec& spec = suite.spec();
  const SimModel& m = suite.model();
  DecodeResult r;
  const VSearch vs = scan_v(suite, y2, m.p_vy2, m.ny2, true, coarse, fine);
  if (vs.none || vs.ambiguous) {
    r.none_found = vs.none;
    r.ambiguous = vs.ambiguous;
    return r;
  }
  r.v_index = vs.index;
  const Sequence vhat = copy_word(suite.v_word(vs.index), spec.n);

  std::vector<std::uint8_t> words;
  std::vector<std::uint32_t> bins;
  suite.materialize_w2(vs.index, words, bins);
  const double slack = 4.0 * m.nx * spec.delta;
  bool have = false;
  for (std::size_t c = 0; c < suite.w2_count(); ++c) {
    if (bins[c] != w2_bin) continue;
    const Sequence w = copy_word(words.data() + c * spec.n, spec.n);
    if (!strongly_typical_joint({&w, &vhat, &y2}, {m.n2, m.nv, m.ny2},
                                m.p_w2vy2, slack))
      continue;
    if (!have) {
      have = true;
      r.w_index = c;
    } else {
      r.ambiguous = true;
      return r;
    }
  }
  if (!have) {
    r.none_found = true;
    return r;
  }
  r.ok = true;
  r.xhat.resize(spec.n);
  const std::uint8_t* w = words.data() + r.w_index * spec.n;
  for (int t = 0; t < spec.n; ++t)
    r.xhat[t] = static_cast<std::uint8_t>(m.f2(w[t], y2[t]));
  return r;
}

namespace {

// Existence scans for the binning ambiguity events; these mirror the decoder
// bins but test against the encoder's chosen codeword.
bool exists_other_typical_v(const CodebookSuite& suite, std::size_t vstar,
                            const Sequence& y, const VectorXd& ref, int ny,
                            bool fine_level) {
  const SimModel& m = suite.model();
  const double slack = 3.0 * m.nx * suite.spec().delta;
  for (std::size_t c = 0; c < suite.v_count(); ++c) {
    if (c == vstar) continue;
    if (fine_level) {
      if (suite.v_fine_bin(c) != suite.v_fine_bin(vstar)) continue;
    } else if (suite.v_coarse_bin(c) != suite.v_coarse_bin(vstar)) {
      continue;
    }
    const Sequence v = copy_word(suite.v_word(c), suite.spec().n);
    if (strongly_typical_joint({&v, &y}, {m.nv, ny}, ref, slack)) return true;
  }
  return false;
}

bool exists_other_typical_w(const CodebookSuite& suite,
                            const std::vector<std::uint8_t>& words,
                            const std::vector<std::uint32_t>& bins,
                            std::size_t wstar, const Sequence& vstar,
                            const Sequence& y, const VectorXd& ref, int nw,
                            int ny) {
  const SimModel& m = suite.model();
  const double slack = 4.0 * m.nx * suite.spec().delta;
  const int n = suite.spec().n;
  for (std::size_t c = 0; c < bins.size(); ++c) {
    if (c == wstar || bins[c] != bins[wstar]) continue;
    const Sequence w = copy_word(words.data() + c * n, n);
    if (strongly_typical_joint({&w, &vstar, &y}, {nw, m.nv, ny}, ref, slack))
      return true;
  }
  return false;
}

double letterwise_distortion(const Sequence& a, const Sequence& b,
                        const DistortionMeasure& d) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) s += d(a[t], b[t]);
  return s / static_cast<double>(a.size());
}

}  // namespace

std::string TrialSummary::to_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"trials\":" << trials << ",\"event_freq\":[";
  for (int i = 0; i < 12; ++i)
    os << (i ? "," : "")
       << static_cast<double>(event_counts[i]) / std::max(trials, 1);
  os << "],\"event_counts\":[";
  for (int i = 0; i < 12; ++i) os << (i ? "," : "") << event_counts[i];
  os << "],\"total_error_freq\":" << total_error_freq
     << ",\"stage1_success\":" << stage1_success
     << ",\"stage2_success\":" << stage2_success << ",\"mean_d1\":" << mean_d1
     << ",\"ci_d1\":" << ci_d1 << ",\"mean_d2\":" << mean_d2
     << ",\"ci_d2\":" << ci_d2 << ",\"expected_d1\":" << expected_d1
     << ",\"expected_d2\":" << expected_d2
     << ",\"rate_conditions_ok\":" << (conditions.all_ok ? "true" : "false")
     << ",\"r1\":" << conditions.r1 << ",\"r_sum\":" << conditions.r_sum
     << ",\"config\":{\"n\":" << spec.n << ",\"delta\":" << spec.delta
     << ",\"seed\":" << spec.seed << ",\"rate_v\":" << spec.rate_v
     << ",\"rate_w1\":" << spec.rate_w1 << ",\"rate_w2\":" << spec.rate_w2
     << ",\"rate_a\":" << spec.rate_a << ",\"rate_a_prime\":"
     << spec.rate_a_prime << ",\"rate_b\":" << spec.rate_b
     << ",\"rate_c\":" << spec.rate_c << "}}";
  return os.str();
}

TrialSummary run_trials(const CodebookSpec& spec, const JointSource& src,
                        const regions::ScalableAux& aux, int trials,
                        const std::optional<DistortionMeasure>& d1_opt,
                        const std::optional<DistortionMeasure>& d2_opt,
                        std::vector<TrialRecord>* records) {
  detail::require(trials >= 1, "run_trials: need at least one trial");
  const DistortionMeasure d1 =
      d1_opt.value_or(DistortionMeasure::hamming(src.x_size()));
  const DistortionMeasure d2 =
      d2_opt.value_or(DistortionMeasure::hamming(src.x_size()));
  const SimModel model = build_model(src, aux, d1, d2);
  const CodebookSuite suite(spec, model);
  const SimModel& m = suite.model();

  TrialSummary sum;
  sum.trials = trials;
  sum.spec = spec;
  sum.conditions = check_rate_conditions(spec, m);
  sum.expected_d1 = m.expected_d1;
  sum.expected_d2 = m.expected_d2;

  double acc_d1 = 0.0, acc_d2 = 0.0, acc_d1sq = 0.0, acc_d2sq = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    opt::Rng rng(opt::Rng::mix(spec.seed, 0x50CE00000ULL + trial));
    Sequence x(spec.n), y1(spec.n), y2(spec.n);
    for (int t = 0; t < spec.n; ++t) {
      const int idx =
          sample_pmf(m.p_xy1y2.data(), static_cast<int>(m.p_xy1y2.size()), rng);
      y2[t] = static_cast<std::uint8_t>(idx % m.ny2);
      y1[t] = static_cast<std::uint8_t>((idx / m.ny2) % m.ny1);
      x[t] = static_cast<std::uint8_t>(idx / (m.ny2 * m.ny1));
    }

    TrialRecord rec;
    const bool y1_typ = strongly_typical(y1, m.p_y1, spec.delta);
    const bool y2_typ = strongly_typical(y2, m.p_y2, spec.delta);
    const EncodeResult enc = encode(suite, x);
    rec.events[0] = enc.x_atypical || !y1_typ || !y2_typ;
    rec.i = enc.coarse_bin;
    rec.j = enc.fine_in_coarse;
    rec.k = enc.w1_bin;
    rec.l = enc.w2_bin;

    const bool e0c = !rec.events[0];
    rec.events[1] = e0c && enc.e1;
    const bool e01c = e0c && !enc.e1;
    rec.events[2] = e01c && enc.e2;
    rec.events[3] = e01c && enc.e3;

    const Sequence vstar = Sequence(suite.v_word(enc.v_index),
                                    suite.v_word(enc.v_index) + spec.n);
    if (e01c) {
      rec.events[4] = !strongly_typical_joint(
          {&vstar, &x, &y1}, {m.nv, m.nx, m.ny1}, m.p_vxy1, 2.0 * spec.delta);
      rec.events[5] = !strongly_typical_joint(
          {&vstar, &x, &y2}, {m.nv, m.nx, m.ny2}, m.p_vxy2, 2.0 * spec.delta);
      rec.events[6] =
          exists_other_typical_v(suite, enc.v_index, y1, m.p_vy1, m.ny1, false);
      rec.events[7] =
          exists_other_typical_v(suite, enc.v_index, y2, m.p_vy2, m.ny2, true);
    }

    std::vector<std::uint8_t> words;
    std::vector<std::uint32_t> bins;
    if (e01c && !enc.e2 && !rec.events[4] && !rec.events[6]) {
      suite.materialize_w1(enc.v_index, words, bins);
      const Sequence w1 = copy_word(words.data() + enc.w1_index * spec.n,
                                    spec.n);
      rec.events[8] = !strongly_typical_joint(
          {&w1, &vstar, &x, &y1}, {m.n1, m.nv, m.nx, m.ny1}, m.p_w1vxy1,
          3.0 * spec.delta);
      rec.events[10] = exists_other_typical_w(suite, words, bins, enc.w1_index,
                                              vstar, y1, m.p_w1vy1, m.n1,
                                              m.ny1);
    }
    if (e01c && !enc.e3 && !rec.events[5] && !rec.events[7]) {
      suite.materialize_w2(enc.v_index, words, bins);
      const Sequence w2 = copy_word(words.data() + enc.w2_index * spec.n,
                                    spec.n);
      rec.events[9] = !strongly_typical_joint(
          {&w2, &vstar, &x, &y2}, {m.n2, m.nv, m.nx, m.ny2}, m.p_w2vxy2,
          3.0 * spec.delta);
      rec.events[11] = exists_other_typical_w(suite, words, bins, enc.w2_index,
                                              vstar, y2, m.p_w2vy2, m.n2,
                                              m.ny2);
    }

    const DecodeResult s1 = decode_stage1(suite, rec.i, rec.k, y1);
    const DecodeResult s2 = decode_stage2(suite, rec.i, rec.j, rec.l, y2);
    rec.stage1_ok = s1.ok;
    rec.stage2_ok = s2.ok;
    if (s1.ok) {
      rec.distortion1 = letterwise_distortion(x, s1.xhat, d1);
      sum.stage1_success++;
      acc_d1 += rec.distortion1;
      acc_d1sq += rec.distortion1 * rec.distortion1;
    }
    if (s2.ok) {
      rec.distortion2 = letterwise_distortion(x, s2.xhat, d2);
      sum.stage2_success++;
      acc_d2 += rec.distortion2;
      acc_d2sq += rec.distortion2 * rec.distortion2;
    }
    bool any = false;
    for (int e = 0; e < 12; ++e) {
      if (rec.events[e]) sum.event_counts[e]++;
      any = any || rec.events[e];
    }
    if (any) sum.any_event_count++;
    if (records) records->push_back(rec);
  }

  sum.total_error_freq =
      static_cast<double>(sum.any_event_count) / sum.trials;
  if (sum.stage1_success > 0) {
    sum.mean_d1 = acc_d1 / sum.stage1_success;
    const double var =
        std::max(0.0, acc_d1sq / sum.stage1_success - sum.mean_d1 * sum.mean_d1);
    sum.ci_d1 = 1.96 * std::sqrt(var / sum.stage1_success);
  }
  if (sum.stage2_success > 0) {
    sum.mean_d2 = acc_d2 / sum.stage2_success;
    const double var =
        std::max(0.0, acc_d2sq / sum.stage2_success - sum.mean_d2 * sum.mean_d2);
    sum.ci_d2 = 1.96 * std::sqrt(var / sum.stage2_success);
  }
  return sum;
}

}  // namespace siscale::binsim
