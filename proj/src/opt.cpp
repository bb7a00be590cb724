#include "siscale/opt.hpp"

#include <algorithm>
#include <cmath>

namespace siscale::opt {

Eigen::VectorXd random_simplex_row(int cols, Rng& rng) {
  Eigen::VectorXd v(cols);
  double sum = 0.0;
  for (int i = 0; i < cols; ++i) {
    const double u = std::max(rng.uniform(), 1e-300);
    v(i) = -std::log(u);
    sum += v(i);
  }
  return v / sum;
}

namespace {

double comb_count(int g, int k) {
  // C(g + k - 1, k - 1), saturating.
  double c = 1.0;
  for (int i = 1; i <= k - 1; ++i) c *= static_cast<double>(g + i) / i;
  return c;
}

void enumerate_compositions(int cols, int resolution,
                            std::vector<Eigen::VectorXd>& out) {
  std::vector<int> comp(cols, 0);
  // Iterative multi-index walk over compositions of `resolution`.
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == cols - 1) {
      comp[pos] = left;
      Eigen::VectorXd row(cols);
      for (int i = 0; i < cols; ++i)
        row(i) = static_cast<double>(comp[i]) / resolution;
      out.push_back(row);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      comp[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, resolution);
}

void normalize_rows(Params& p) {
  for (auto& m : p)
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(r, c) = std::max(m(r, c), 0.0);
      const double s = m.row(r).sum();
      if (s > 0.0)
        m.row(r) /= s;
      else
        m.row(r).setConstant(1.0 / m.cols());
    }
}

struct LocalSearch {
  const EvalFn& eval;
  const SearchOptions& opts;
  std::vector<std::vector<Eigen::VectorXd>> grids;  // per distinct col count

  Params params;
  Eval current;

  LocalSearch(const EvalFn& e, const SearchOptions& o) : eval(e), opts(o) {}

  const std::vector<Eigen::VectorXd>& grid_for(int cols) {
    for (auto& g : grids)
      if (static_cast<int>(g.front().size()) == cols) return g;
    int g = opts.grid_resolution;
    while (g > 1 && comb_count(g, cols) > opts.max_row_candidates) --g;
    grids.emplace_back();
    enumerate_compositions(cols, std::max(g, 1), grids.back());
    return grids.back();
  }

  bool coordinate_sweep() {
    bool any = false;
    for (auto& block : params) {
      const auto& rows = grid_for(static_cast<int>(block.cols()));
      if (block.cols() < 2) continue;
      for (Eigen::Index r = 0; r < block.rows(); ++r) {
        const Eigen::VectorXd saved = block.row(r);
        Eigen::VectorXd best_row = saved;
        Eval best = current;
        bool found = false;
        for (const auto& cand : rows) {
          block.row(r) = cand;
          const Eval e = eval(params);
          if (improves(e, best)) {
            best = e;
            best_row = cand;
            found = true;
          }
        }
        block.row(r) = found ? best_row : saved;
        if (found) {
          current = best;
          any = true;
        }
      }
    }
    return any;
  }

  bool polish_pass(double delta) {
    bool any = false;
    for (auto& block : params) {
      if (block.cols() < 2) continue;
      for (Eigen::Index r = 0; r < block.rows(); ++r)
        for (Eigen::Index i = 0; i < block.cols(); ++i) {
          if (block(r, i) < delta) continue;
          for (Eigen::Index j = 0; j < block.cols(); ++j) {
            if (j == i) continue;
            block(r, i) -= delta;
            block(r, j) += delta;
            const Eval e = eval(params);
            if (improves(e, current)) {
              current = e;
              any = true;
              if (block(r, i) < delta) break;
            } else {
              block(r, i) += delta;
              block(r, j) -= delta;
            }
          }
        }
    }
    return any;
  }

  void run(Params init) {
    params = std::move(init);
    normalize_rows(params);
    current = eval(params);
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      const bool moved = coordinate_sweep();
      bool polished = false;
      for (double d : opts.polish_deltas)
        while (polish_pass(d)) polished = true;
      if (!moved && !polished) break;
    }
  }
};

}  // namespace

SearchResult minimize(const std::vector<std::pair<int, int>>& shapes,
                      const EvalFn& eval, const SearchOptions& opts,
                      const std::vector<Params>& structured_inits) {
  // Structured inits are pre-ranked by their starting evaluation and only
  // the most promising get a full descent; the seeded random restarts
  // always run in addition, so extra structured candidates can never make
  // the outcome worse for a fixed seed.
  std::vector<Params> starts;
  {
    std::vector<std::pair<Eval, int>> ranked;
    for (std::size_t i = 0; i < structured_inits.size(); ++i) {
      Params p = structured_inits[i];
      normalize_rows(p);
      ranked.push_back({eval(p), static_cast<int>(i)});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) {
                       return improves(a.first, b.first, 0.0);
                     });
    const std::size_t keep =
        std::min<std::size_t>(ranked.size(),
                              std::max<std::size_t>(opts.restarts, 10));
    for (std::size_t i = 0; i < keep; ++i)
      starts.push_back(structured_inits[ranked[i].second]);
  }
  const int want = std::max<int>(opts.restarts, 1);
  for (int k = 0; k < want; ++k) {
    Rng rng(Rng::mix(opts.seed, static_cast<std::uint64_t>(k)));
    Params p;
    for (const auto& [r, c] : shapes) {
      Eigen::MatrixXd m(r, c);
      for (int i = 0; i < r; ++i) m.row(i) = random_simplex_row(c, rng).transpose();
      p.push_back(std::move(m));
    }
    starts.push_back(std::move(p));
  }

  SearchResult best;
  LocalSearch search(eval, opts);
  for (auto& start : starts) {
    search.run(start);
    if (improves(search.current, best.eval)) {
      best.eval = search.current;
      best.params = search.params;
    }
  }
  best.feasible = best.eval.violation <= 1e-12;
  return best;
}

}  // namespace siscale::opt
