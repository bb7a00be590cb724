#include "siscale/cli_run.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "siscale/binsim.hpp"
#include "siscale/dsbs.hpp"
#include "siscale/gaussian.hpp"
#include "siscale/io.hpp"
#include "siscale/rateloss.hpp"
#include "siscale/regions.hpp"

namespace siscale::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 20250817ULL;

struct Ctx {
  const RunOptions* opts;
  json cfg;
  std::ostream* out;
};

rdopt::OptimizerConfig optimizer_config(const Ctx& c) {
  rdopt::OptimizerConfig o;
  o.seed = c.opts->seed.value_or(
      c.cfg.value("seed", static_cast<std::uint64_t>(kDefaultSeed)));
  if (c.opts->grid)
    o.grid_resolution = *c.opts->grid;
  else if (c.cfg.contains("grid_resolution"))
    o.grid_resolution = c.cfg["grid_resolution"].get<int>();
  if (c.opts->restarts)
    o.restarts = *c.opts->restarts;
  else if (c.cfg.contains("restarts"))
    o.restarts = c.cfg["restarts"].get<int>();
  if (c.cfg.contains("tolerance")) o.tolerance = c.cfg["tolerance"].get<double>();
  return o;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  detail::require(f.good(), "cannot open output file " + p.string());
  f << text;
}

fs::path out_file(const Ctx& c, const std::string& name) {
  fs::create_directories(c.opts->out_dir);
  return fs::path(c.opts->out_dir) / name;
}

void save_frontier(const Ctx& c, const regions::RegionFrontier& f) {
  std::ostringstream csv;
  io::write_frontier_csv(csv, f, c.opts->deterministic);
  write_text(out_file(c, f.bound_tag + ".csv"), csv.str());
  write_text(out_file(c, f.bound_tag + "_witnesses.json"),
             io::frontier_to_json(f).dump(2));
  *c.out << "region " << f.bound_tag << ": " << f.points.size()
         << " points, r1 in [" << io::format_sig(f.points.front().r1) << ", "
         << io::format_sig(f.points.back().r1) << "], min sum "
         << io::format_sig(f.points.back().r_sum) << " -> "
         << out_file(c, f.bound_tag + ".csv").string() << "\n";
}

int run_region(Ctx& c) {
  const io::SourceSpec s = io::load_source(c.cfg.at("source"));
  const double D1 = c.cfg.at("D1").get<double>();
  const double D2 = c.cfg.at("D2").get<double>();
  regions::RegionConfig rc;
  rc.opt = optimizer_config(c);
  rc.grid_points = c.cfg.value("grid_points", 33);
  rc.v_size = c.cfg.value("v_size", 0);
  rc.w1_size = c.cfg.value("w1_size", 0);
  rc.w2_size = c.cfg.value("w2_size", 0);

  std::vector<std::string> bounds =
      c.cfg.value("bounds", std::vector<std::string>{"inner", "inner_hat",
                                                     "outer_out", "outer_cap"});
  const bool all = bounds.size() == 4;
  if (all) {
    const auto bundle =
        regions::compute_bounds(s.src, s.d1, s.d2, D1, D2, rc);
    save_frontier(c, bundle.inner_hat);
    save_frontier(c, bundle.inner);
    save_frontier(c, bundle.outer_out);
    save_frontier(c, bundle.outer_cap);
    return 0;
  }
  for (const auto& b : bounds) {
    if (b == "inner")
      save_frontier(c, regions::inner_region(s.src, s.d1, s.d2, D1, D2, rc));
    else if (b == "inner_hat")
      save_frontier(c,
                    regions::inner_region_hat(s.src, s.d1, s.d2, D1, D2, rc));
    else if (b == "outer_out")
      save_frontier(c,
                    regions::outer_region_out(s.src, s.d1, s.d2, D1, D2, rc));
    else if (b == "outer_cap")
      save_frontier(c,
                    regions::outer_region_cap(s.src, s.d1, s.d2, D1, D2, rc));
    else
      throw std::invalid_argument("unknown bound name: " + b);
  }
  return 0;
}

int run_dsbs(Ctx& c) {
  const double p = c.cfg.at("p").get<double>();
  const auto d1s = c.cfg.at("D1").get<std::vector<double>>();
  const auto d2s = c.cfg.at("D2").get<std::vector<double>>();
  const double dc = dsbs::critical_distortion(p);

  std::ostringstream csv;
  if (!c.opts->deterministic) csv << "# p=" << io::format_sig(p) << "\n";
  csv << "D1,D2,region,R_WZ,R_HB\n";
  for (double D1 : d1s)
    for (double D2 : d2s) {
      const dsbs::Region reg = dsbs::classify_region(p, D1, D2);
      csv << io::format_sig(D1) << "," << io::format_sig(D2) << ","
          << dsbs::region_name(reg) << ","
          << io::format_sig(dsbs::wz_dsbs(p, D1)) << ",";
      if (reg == dsbs::Region::ID)
        csv << io::format_sig(dsbs::hb_dsbs_region_ID(p, D1, D2).rate);
      csv << "\n";
    }
  write_text(out_file(c, "dsbs_sweep.csv"), csv.str());
  *c.out << "dsbs: p=" << io::format_sig(p)
         << " d_c=" << io::format_sig(dc) << ", " << d1s.size() * d2s.size()
         << " grid points -> " << out_file(c, "dsbs_sweep.csv").string()
         << "\n";
  return 0;
}

int run_gaussian(Ctx& c) {
  gaussian::GaussianChain chain(
      c.cfg.at("var_x").get<double>(),
      c.cfg.at("noise_increments").get<std::vector<double>>());
  const auto D = c.cfg.at("distortions").get<std::vector<double>>();
  std::vector<int> order;
  if (c.cfg.contains("order")) {
    order = c.cfg.at("order").get<std::vector<int>>();
  } else {
    for (int k = 1; k <= chain.size(); ++k) order.push_back(k);
  }

  const auto hb = gaussian::hb_rate_gaussian(chain, D);
  const auto rates = gaussian::scalable_rates(chain, D, order);

  std::ostringstream csv;
  csv << "stage,decoder,rate,cumulative\n";
  double cum = 0.0;
  for (std::size_t t = 0; t < rates.size(); ++t) {
    cum += rates[t];
    csv << (t + 1) << "," << order[t] << "," << io::format_sig(rates[t]) << ","
        << io::format_sig(cum) << "\n";
  }
  write_text(out_file(c, "stage_rates.csv"), csv.str());

  std::ostringstream active;
  active << "{\"rate\":" << io::format_sig(hb.rate) << ",\"active_set\":[";
  for (std::size_t i = 0; i < hb.active_set.size(); ++i)
    active << (i ? "," : "") << hb.active_set[i];
  active << "],\"kept\":[";
  for (std::size_t i = 0; i < hb.kept.size(); ++i)
    active << (i ? "," : "") << hb.kept[i];
  active << "]}";
  write_text(out_file(c, "active_set.json"), active.str());

  if (!hb.kept.empty() &&
      static_cast<int>(hb.kept.size()) == chain.size()) {
    const auto grid = gaussian::cover_grid(chain, D);
    std::ostringstream g;
    g << "rank";
    for (int j = 1; j <= chain.size(); ++j) g << ",level" << j;
    g << "\n";
    for (int i = 0; i < chain.size(); ++i) {
      g << (i + 1);
      for (int j = 0; j < chain.size(); ++j)
        g << "," << io::format_sig(grid.cells(i, j));
      g << "\n";
    }
    write_text(out_file(c, "cover_grid.csv"), g.str());
  }
  *c.out << "gaussian: N=" << chain.size() << " sum rate "
         << io::format_sig(hb.rate) << " bits, active set size "
         << hb.active_set.size() << " -> "
         << out_file(c, "stage_rates.csv").string() << "\n";
  return 0;
}

int run_rateloss(Ctx& c) {
  std::ostringstream csv;
  csv << "var_x,var_n1,D1,D2,r1,r_sum,wz1_ref,hb_ref,gap_r1,gap_sum\n";
  int rows = 0;
  double worst_r1 = 0.0, worst_sum = 0.0;
  auto add = [&](double vx, double vn, double D1, double D2) {
    rateloss::MseInstance inst{rateloss::GaussianMse{vx, vn, std::nullopt},
                               D1, D2};
    const auto cert = rateloss::gap_certificate(inst);
    csv << io::format_sig(vx) << "," << io::format_sig(vn) << ","
        << io::format_sig(D1) << "," << io::format_sig(D2) << ","
        << io::format_sig(cert.inner.r1) << ","
        << io::format_sig(cert.inner.r_sum) << ","
        << io::format_sig(cert.wz1_ref) << "," << io::format_sig(cert.hb_ref)
        << "," << io::format_sig(cert.gap_r1) << ","
        << io::format_sig(cert.gap_sum) << "\n";
    worst_r1 = std::max(worst_r1, cert.gap_r1);
    worst_sum = std::max(worst_sum, cert.gap_sum);
    ++rows;
  };
  if (c.cfg.contains("grid")) {
    const json& g = c.cfg["grid"];
    for (double vx : g.at("var_x").get<std::vector<double>>())
      for (double vn : g.at("noise_var").get<std::vector<double>>())
        for (double D1 : g.at("D1").get<std::vector<double>>())
          for (double D2 : g.at("D2").get<std::vector<double>>())
            add(vx, vn, D1, D2);
  } else {
    add(c.cfg.at("var_x").get<double>(), c.cfg.at("noise_var").get<double>(),
        c.cfg.at("D1").get<double>(), c.cfg.at("D2").get<double>());
  }
  write_text(out_file(c, "rateloss_certificates.csv"), csv.str());
  *c.out << "rateloss: " << rows << " instances, max gap_r1 "
         << io::format_sig(worst_r1) << ", max gap_sum "
         << io::format_sig(worst_sum) << " -> "
         << out_file(c, "rateloss_certificates.csv").string() << "\n";
  return 0;
}

int run_simulate(Ctx& c) {
  const io::SourceSpec s = io::load_source(c.cfg.at("source"));
  const json& aj = c.cfg.at("aux");
  const regions::ScalableAux aux = regions::make_triple_aux(
      io::matrix_from_json(aj.at("pv_given_x")),
      io::matrix_from_json(aj.at("pw1_given_xv")),
      io::matrix_from_json(aj.at("pw2_given_xv")));

  std::vector<int> ns;
  if (c.cfg.at("n").is_array())
    ns = c.cfg.at("n").get<std::vector<int>>();
  else
    ns.push_back(c.cfg.at("n").get<int>());
  const double delta = c.cfg.value("delta", 0.05);
  const int trials = c.cfg.value("trials", 1000);
  const std::uint64_t seed = c.opts->seed.value_or(
      c.cfg.value("seed", static_cast<std::uint64_t>(kDefaultSeed)));

  const binsim::SimModel model = binsim::build_model(
      s.src, aux, s.d1, s.d2);

  std::ostringstream trend;
  trend << "n,total_error_freq,stage1_success,stage2_success,mean_d1,mean_d2\n";
  bool any_violation = false;
  for (int n : ns) {
    binsim::CodebookSpec spec;
    if (c.cfg.contains("rates")) {
      const json& r = c.cfg["rates"];
      spec.rate_v = r.value("rate_v", 0.0);
      spec.rate_w1 = r.value("rate_w1", 0.0);
      spec.rate_w2 = r.value("rate_w2", 0.0);
      spec.rate_a = r.value("rate_a", 0.0);
      spec.rate_a_prime = r.value("rate_a_prime", 0.0);
      spec.rate_b = r.value("rate_b", 0.0);
      spec.rate_c = r.value("rate_c", 0.0);
      spec.n = n;
      spec.delta = delta;
      spec.seed = seed;
    } else {
      spec = binsim::rates_with_margin(model, n, delta,
                                       c.cfg.value("margin", 0.1), seed);
    }
    const auto summary =
        binsim::run_trials(spec, s.src, aux, trials, s.d1, s.d2);
    write_text(out_file(c, "summary_n" + std::to_string(n) + ".json"),
               summary.to_json());
    trend << n << "," << io::format_sig(summary.total_error_freq) << ","
          << summary.stage1_success << "," << summary.stage2_success << ","
          << io::format_sig(summary.mean_d1) << ","
          << io::format_sig(summary.mean_d2) << "\n";
    if (!summary.conditions.all_ok) any_violation = true;
    *c.out << "simulate n=" << n << ": total error "
           << io::format_sig(summary.total_error_freq) << ", d1 "
           << io::format_sig(summary.mean_d1) << ", d2 "
           << io::format_sig(summary.mean_d2)
           << (summary.conditions.all_ok ? "" : " [margin-violated]") << "\n";
  }
  write_text(out_file(c, "trend.csv"), trend.str());
  if (any_violation)
    *c.out << "warning: at least one rate condition was violated; results "
              "are labeled margin-violated and carry no achievability "
              "guarantee\n";
  return 0;
}

}  // namespace

int run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  Ctx c{&opts, {}, &out};
  try {
    std::ifstream f(opts.config_path);
    if (!f.good()) {
      err << "{\"error\":\"config\",\"detail\":\"cannot open "
          << opts.config_path << "\"}\n";
      return 2;
    }
    try {
      c.cfg = json::parse(f);
    } catch (const json::exception& e) {
      err << "{\"error\":\"parse\",\"detail\":" << json(e.what()).dump()
          << "}\n";
      return 2;
    }
    if (opts.subcommand == "region") return run_region(c);
    if (opts.subcommand == "dsbs") return run_dsbs(c);
    if (opts.subcommand == "gaussian") return run_gaussian(c);
    if (opts.subcommand == "rateloss") return run_rateloss(c);
    if (opts.subcommand == "simulate") return run_simulate(c);
    err << "{\"error\":\"usage\",\"detail\":\"unknown subcommand "
        << opts.subcommand << "\"}\n";
    return 2;
  } catch (const json::exception& e) {
    err << "{\"error\":\"parse\",\"detail\":" << json(e.what()).dump() << "}\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "{\"error\":\"domain\",\"detail\":" << json(e.what()).dump()
        << "}\n";
    return 3;
  } catch (const std::domain_error& e) {
    err << "{\"error\":\"domain\",\"detail\":" << json(e.what()).dump()
        << "}\n";
    return 3;
  } catch (const std::exception& e) {
    err << "{\"error\":\"internal\",\"detail\":" << json(e.what()).dump()
        << "}\n";
    return 1;
  }
}

}  // namespace siscale::cli
