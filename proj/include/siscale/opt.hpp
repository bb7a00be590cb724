#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

// Seeded heuristic minimization over tuples of row-stochastic matrices:
// multi-start coordinate descent over quantized simplex rows refined by
// pairwise mass-transfer polishing. Candidates are ranked first by
// constraint violation, then by objective, so descent walks into the
// feasible region and then improves the rate. Deterministic given the seed
// regardless of evaluation order: restarts derive independent streams and
// results merge by (violation, objective, restart index).
namespace siscale::opt {

// Portable splitmix64; used everywhere randomness is needed so results do
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling; unbiased and portable.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Derive an independent stream.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    Rng r(seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
    return r.next_u64();
  }

 private:
  std::uint64_t state_;
};

struct Eval {
  double objective = std::numeric_limits<double>::infinity();
  double violation = std::numeric_limits<double>::infinity();
};

inline bool improves(const Eval& cand, const Eval& incumbent,
                     double tol = 1e-12) {
  if (cand.violation < incumbent.violation - tol) return true;
  if (cand.violation > incumbent.violation + tol) return false;
  return cand.objective < incumbent.objective - tol;
}

// A parameter point: one row-stochastic matrix per block.
using Params = std::vector<Eigen::MatrixXd>;
using EvalFn = std::function<Eval(const Params&)>;

struct SearchOptions {
  int grid_resolution = 16;
  int restarts = 12;
  int max_sweeps = 30;
  std::uint64_t seed = 1;
  // Cap on per-row grid candidates; wide rows fall back to a coarser grid.
  int max_row_candidates = 3200;
  std::vector<double> polish_deltas = {0.1,  0.03, 0.01, 0.003,
                                       1e-3, 3e-4, 1e-4};
};

struct SearchResult {
  Params params;
  Eval eval;
  bool feasible = false;
};

// Uniform-ish random row via exponential spacings (Dirichlet(1)).
Eigen::VectorXd random_simplex_row(int cols, Rng& rng);

// Enumerates all compositions of `resolution` into `cols` parts, normalized;
// used by the coordinate sweep.
std::vector<Eigen::VectorXd> simplex_grid_rows(int cols, int resolution);

// Minimizes eval over row-stochastic matrices of the given (rows, cols)
// shapes. structured_inits are tried first; random restarts fill up to
// opts.restarts total starts. Rows of inits are renormalized defensively.
SearchResult minimize(const std::vector<std::pair<int, int>>& shapes,
                      const EvalFn& eval, const SearchOptions& opts,
                      const std::vector<Params>& structured_inits);

}  // namespace siscale::opt
