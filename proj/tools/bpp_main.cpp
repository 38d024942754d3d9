// Command-line front end: every experiment reads a key-value config file
// (flags override file values), runs the requested estimator or checker,
// and writes one CSV of rows plus one JSON summary that can reproduce the
// run bit for bit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bpp/certificate.hpp"
#include "bpp/estimators.hpp"
#include "bpp/mathutil.hpp"
#include "bpp/runio.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidConfig = 1;
constexpr int kExitCheckFailed = 2;
constexpr int kExitInternal = 3;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_prefix = "run";
  std::string experiment_id;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "key=value config file");
  cmd->add_option("-s,--set", args.overrides,
                  "override one config key, e.g. --set lambda=0.5");
  cmd->add_option("-o,--out", args.out_prefix, "output path prefix");
  cmd->add_option("--id", args.experiment_id, "experiment identifier");
}

bpp::ConfigView load_config(const CommonArgs& args) {
  bpp::ConfigView view = args.config_path.empty()
                             ? bpp::ConfigView()
                             : bpp::ConfigView::from_file(args.config_path);
  for (const std::string& ov : args.overrides) {
    std::size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw bpp::invalid_parameter("--set expects key=value, got '" + ov + "'");
    view.override_value(ov.substr(0, eq), ov.substr(eq + 1));
  }
  return view;
}

bpp::ModelConfig read_model_config(bpp::ConfigView& view) {
  bpp::ModelConfig mc;
  mc.d = static_cast<int>(view.get_int("d", 2));
  mc.lambda = view.get_double("lambda", 1.0);
  mc.t = view.get_double("t", 1.0);
  mc.r = view.get_double("r", 0.0);
  mc.step = view.get_double("step", 0.01);
  double n = view.get_double("N", 10.0);
  std::vector<double> def_extents(std::size_t(std::max(1, mc.d)), 3.0 * n);
  if (!def_extents.empty()) def_extents[0] = n;
  mc.extents = view.get_list("extents", def_extents);
  mc.margin = view.get_double("margin", -1.0);
  mc.tol = view.get_double("tol", -1.0);
  mc.master_seed = view.get_u64("seed", 1);
  std::string radius_kind = view.get_string("boolean_radius", "");
  if (!radius_kind.empty()) {
    if (radius_kind == "deterministic") {
      mc.boolean_radius =
          bpp::RadiusDistribution::deterministic(view.get_double("radius_value", 1.0));
    } else if (radius_kind == "sup_of_brownian") {
      mc.boolean_radius = bpp::RadiusDistribution::sup_of_brownian(
          view.get_double("radius_t", mc.t), view.get_double("radius_value", 0.0), mc.d);
    } else if (radius_kind == "exponential_tail") {
      mc.boolean_radius = bpp::RadiusDistribution::exponential_tail(
          view.get_double("radius_tail_c", 1.0), view.get_double("radius_tail_r0", 1.0));
    } else if (radius_kind == "empirical") {
      mc.boolean_radius = bpp::RadiusDistribution::empirical(
          view.get_list("radius_samples", {1.0}));
    } else {
      throw bpp::invalid_parameter("unknown boolean_radius kind '" + radius_kind + "'");
    }
  }
  mc.validate();
  return mc;
}

struct Outputs {
  std::string csv;
  bpp::RunRecord record;
};

void write_outputs(const CommonArgs& args, const Outputs& out) {
  bpp::atomic_write(args.out_prefix + ".csv", out.csv);
  bpp::atomic_write(args.out_prefix + ".json", out.record.to_json().dump(2) + "\n");
}

std::string default_id(const std::string& command,
                       const std::map<std::string, std::string>& resolved) {
  return command + "-" + bpp::config_hash(resolved).substr(0, 8);
}

double wall_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json bracket_to_json(const bpp::ThresholdBracket& b) {
  json trace = json::array();
  for (const auto& p : b.trace)
    trace.push_back({{"param", p.param}, {"estimate", bpp::estimate_to_json(p.estimate)}});
  return {{"axis", b.axis == bpp::ThresholdAxis::Time ? "t" : "lambda"},
          {"lo", b.lo},
          {"hi", b.hi},
          {"p_lo", bpp::estimate_to_json(b.p_lo)},
          {"p_hi", bpp::estimate_to_json(b.p_hi)},
          {"target", b.target},
          {"budget_exhausted", b.budget_exhausted},
          {"trace", trace}};
}

// ----------------------------------------------------------------- cross

int run_cross(const CommonArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  bpp::ConfigView view = load_config(args);
  bpp::ModelConfig mc = read_model_config(view);
  std::uint64_t replicas = view.get_u64("replicas", 1000);
  double level = view.get_double("level", bpp::kDefaultLevel);
  view.finish();

  bpp::RngStream stream = bpp::derive_stream(mc.master_seed, {{"cross", 0}});
  bpp::EstimateCI est = bpp::crossing_probability(mc, replicas, stream, level);

  Outputs out;
  out.record.command = "cross";
  out.record.config = view.resolved();
  out.record.master_seed = mc.master_seed;
  out.record.experiment_id =
      args.experiment_id.empty() ? default_id("cross", view.resolved()) : args.experiment_id;
  out.record.results.push_back({{"estimate", bpp::estimate_to_json(est)},
                                {"margin", mc.resolved_margin()},
                                {"seed", mc.master_seed}});
  out.csv = std::string(bpp::kEstimateCsvHeader) + "\n" +
            bpp::estimate_csv_row(out.record.experiment_id, mc, mc.resolved_margin(),
                                  est, mc.master_seed) +
            "\n";
  out.record.wall_seconds = wall_since(t0);
  write_outputs(args, out);
  return kExitOk;
}

// ------------------------------------------------------------- threshold

int run_threshold(const CommonArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  bpp::ConfigView view = load_config(args);
  bpp::ModelConfig mc = read_model_config(view);
  std::string axis_name = view.get_string("axis", "t");
  double target = view.get_double("target", 0.5);
  double lo = view.get_double("lo", 0.0);
  double hi = view.get_double("hi", 0.0);
  std::uint64_t replicas = view.get_u64("replicas", 400);
  int max_iters = static_cast<int>(view.get_int("max_iters", 32));
  double rel_width = view.get_double("rel_width", 0.2);
  int budget = static_cast<int>(view.get_int("budget_multiplier", 8));
  double level = view.get_double("level", bpp::kDefaultLevel);
  view.finish();
  if (!(lo < hi)) throw bpp::invalid_parameter("threshold: need lo < hi");
  bpp::ThresholdAxis axis;
  if (axis_name == "t") axis = bpp::ThresholdAxis::Time;
  else if (axis_name == "lambda") axis = bpp::ThresholdAxis::Intensity;
  else throw bpp::invalid_parameter("threshold: axis must be 't' or 'lambda'");

  bpp::RngStream stream = bpp::derive_stream(mc.master_seed, {{"threshold", 0}});
  bpp::ThresholdBracket bracket =
      bpp::threshold_bisect(bpp::crossing_evaluator(mc, axis, level), axis, target,
                            lo, hi, replicas, max_iters, stream, rel_width, budget);

  Outputs out;
  out.record.command = "threshold";
  out.record.config = view.resolved();
  out.record.master_seed = mc.master_seed;
  out.record.experiment_id = args.experiment_id.empty()
                                 ? default_id("threshold", view.resolved())
                                 : args.experiment_id;
  out.record.results.push_back({{"bracket", bracket_to_json(bracket)},
                                {"seed", mc.master_seed}});
  std::ostringstream csv;
  csv << "experiment_id,eval,param,p_hat,ci_lo,ci_hi,replicas,seed\n";
  for (std::size_t i = 0; i < bracket.trace.size(); ++i) {
    const auto& p = bracket.trace[i];
    csv << out.record.experiment_id << ',' << i << ',' << bpp::format_double(p.param)
        << ',' << bpp::format_double(p.estimate.p_hat) << ','
        << bpp::format_double(p.estimate.ci_lo) << ','
        << bpp::format_double(p.estimate.ci_hi) << ',' << p.estimate.replicas << ','
        << mc.master_seed << "\n";
  }
  out.csv = csv.str();
  out.record.wall_seconds = wall_since(t0);
  write_outputs(args, out);
  return kExitOk;
}

// ----------------------------------------------------------------- sweep

int run_sweep(const CommonArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  bpp::ConfigView view = load_config(args);
  bpp::ModelConfig base = read_model_config(view);
  std::vector<double> lambdas = view.get_list("lambda_list", {base.lambda});
  std::vector<double> times = view.get_list("t_list", {base.t});
  std::vector<double> radii = view.get_list("r_list", {base.r});
  std::vector<double> ns = view.get_list("N_list",
                                         {base.extents.empty() ? 10.0 : base.extents[0]});
  std::uint64_t replicas = view.get_u64("replicas", 400);
  double level = view.get_double("level", bpp::kDefaultLevel);
  view.finish();

  Outputs out;
  out.record.command = "sweep";
  out.record.config = view.resolved();
  out.record.master_seed = base.master_seed;
  out.record.experiment_id =
      args.experiment_id.empty() ? default_id("sweep", view.resolved()) : args.experiment_id;
  std::ostringstream csv;
  csv << bpp::kEstimateCsvHeader << "\n";
  bpp::RngStream stream = bpp::derive_stream(base.master_seed, {{"sweep", 0}});
  std::uint64_t cell = 0;
  for (double lam : lambdas)
    for (double t : times)
      for (double r : radii)
        for (double n : ns) {
          bpp::ModelConfig mc = base;
          mc.lambda = lam;
          mc.t = t;
          mc.r = r;
          mc.extents.assign(std::size_t(mc.d), 3.0 * n);
          mc.extents[0] = n;
          bpp::EstimateCI est =
              bpp::crossing_probability(mc, replicas, stream.sub("cell", cell), level);
          csv << bpp::estimate_csv_row(out.record.experiment_id, mc,
                                       mc.resolved_margin(), est, base.master_seed)
              << "\n";
          out.record.results.push_back({{"cell", cell},
                                        {"lambda", lam},
                                        {"t", t},
                                        {"r", r},
                                        {"N", n},
                                        {"estimate", bpp::estimate_to_json(est)},
                                        {"seed", base.master_seed}});
          ++cell;
        }
  out.csv = csv.str();
  out.record.wall_seconds = wall_since(t0);
  write_outputs(args, out);
  return kExitOk;
}

// ----------------------------------------------------------------- edges

int run_edges(const CommonArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  bpp::ConfigView view = load_config(args);
  int d = static_cast<int>(view.get_int("d", 2));
  double lambda = view.get_double("lambda", 1.0);
  std::vector<double> rs = view.get_list("R_list", {1.0, 2.0, 4.0});
  std::vector<double> ts = view.get_list("t_list", {1.0, 4.0, 16.0});
  double step = view.get_double("step", 0.01);
  double tol = view.get_double("tol", 3.0 * std::sqrt(step));
  std::uint64_t replicas = view.get_u64("replicas", 1000);
  double level = view.get_double("level", bpp::kDefaultLevel);
  std::uint64_t seed = view.get_u64("seed", 1);
  view.finish();
  if (rs.size() != ts.size())
    throw bpp::invalid_parameter("edges: R_list and t_list must pair up");

  Outputs out;
  out.record.command = "edges";
  out.record.config = view.resolved();
  out.record.master_seed = seed;
  out.record.experiment_id =
      args.experiment_id.empty() ? default_id("edges", view.resolved()) : args.experiment_id;
  std::ostringstream csv;
  csv << "experiment_id,R,t,lambda,d,Delta,tol,replicas,p_hat,ci_lo,ci_hi,level,seed\n";
  bpp::RngStream stream = bpp::derive_stream(seed, {{"edges", 0}});
  for (std::size_t i = 0; i < rs.size(); ++i) {
    bpp::EstimateCI est = bpp::edge_open_probability(
        rs[i], ts[i], lambda, d, step, tol, replicas, stream.sub("grid", i), level);
    csv << out.record.experiment_id << ',' << bpp::format_double(rs[i]) << ','
        << bpp::format_double(ts[i]) << ',' << bpp::format_double(lambda) << ',' << d
        << ',' << bpp::format_double(step) << ',' << bpp::format_double(tol) << ','
        << est.replicas << ',' << bpp::format_double(est.p_hat) << ','
        << bpp::format_double(est.ci_lo) << ',' << bpp::format_double(est.ci_hi) << ','
        << bpp::format_double(est.level) << ',' << seed << "\n";
    out.record.results.push_back({{"R", rs[i]},
                                  {"t", ts[i]},
                                  {"estimate", bpp::estimate_to_json(est)},
                                  {"seed", seed}});
  }
  out.csv = csv.str();
  out.record.wall_seconds = wall_since(t0);
  write_outputs(args, out);
  return kExitOk;
}

// ------------------------------------------------------------------ mono

int run_mono(const CommonArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  bpp::ConfigView view = load_config(args);
  int d = static_cast<int>(view.get_int("d", 2));
  double t = view.get_double("t", 10.0);
  std::vector<double> seps = view.get_list("separations", {1.0, 2.0, 4.0});
  double step = view.get_double("step", 0.01);
  double tol = view.get_double("tol", 3.0 * std::sqrt(step));
  std::uint64_t replicas = view.get_u64("replicas", 1000);
  double level = view.get_double("level", bpp::kDefaultLevel);
  std::uint64_t seed = view.get_u64("seed", 1);
  view.finish();

  Outputs out;
  out.record.command = "mono";
  out.record.config = view.resolved();
  out.record.master_seed = seed;
  out.record.experiment_id =
      args.experiment_id.empty() ? default_id("mono", view.resolved()) : args.experiment_id;
  std::ostringstream csv;
  csv << "experiment_id,separation,t,d,Delta,tol,replicas,p_hat,ci_lo,ci_hi,level,seed\n";
  bpp::RngStream stream = bpp::derive_stream(seed, {{"mono", 0}});
  std::vector<bpp::EstimateCI> ests;
  for (std::size_t i = 0; i < seps.size(); ++i) {
    bpp::PathIntersection pi = bpp::path_intersection_probability(
        seps[i], t, d, step, tol, replicas, stream.sub("sep", i), level);
    ests.push_back(pi.estimate);
    csv << out.record.experiment_id << ',' << bpp::format_double(seps[i]) << ','
        << bpp::format_double(t) << ',' << d << ',' << bpp::format_double(step) << ','
        << bpp::format_double(tol) << ',' << pi.estimate.replicas << ','
        << bpp::format_double(pi.estimate.p_hat) << ','
        << bpp::format_double(pi.estimate.ci_lo) << ','
        << bpp::format_double(pi.estimate.ci_hi) << ','
        << bpp::format_double(pi.estimate.level) << ',' << seed << "\n";
    out.record.results.push_back({{"separation", seps[i]},
                                  {"estimate", bpp::estimate_to_json(pi.estimate)},
                                  {"flagged_dimension", pi.flagged_dimension},
                                  {"seed", seed}});
  }
  // Monotone battery: a strictly significant increase between consecutive
  // separations fails the check.
  bool monotone_ok = true;
  for (std::size_t i = 0; i + 1 < ests.size(); ++i)
    if (ests[i + 1].ci_lo > ests[i].ci_hi) monotone_ok = false;
  out.record.results.push_back({{"monotone_ok", monotone_ok}});
  out.csv = csv.str();
  out.record.wall_seconds = wall_since(t0);
  write_outputs(args, out);
  return monotone_ok ? kExitOk : kExitCheckFailed;
}

// ----------------------------------------------------------------- scale

int run_scale(const CommonArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  bpp::ConfigView view = load_config(args);
  int d = static_cast<int>(view.get_int("d", 2));
  double lambda = view.get_double("lambda", 1.0);
  double t = view.get_double("t", 1.0);
  double n = view.get_double("N", 10.0);
  double eta = view.get_double("eta", 4.0);
  double step = view.get_double("step", 0.01);
  std::uint64_t replicas = view.get_u64("replicas", 1000);
  double significance = view.get_double("significance", 0.01);
  std::uint64_t seed = view.get_u64("seed", 1);
  view.finish();

  bpp::RngStream stream = bpp::derive_stream(seed, {{"scale", 0}});
  bpp::ScaleCheck check =
      bpp::scale_invariance_check(lambda, t, n, eta, d, step, replicas, stream,
                                  significance);

  Outputs out;
  out.record.command = "scale";
  out.record.config = view.resolved();
  out.record.master_seed = seed;
  out.record.experiment_id =
      args.experiment_id.empty() ? default_id("scale", view.resolved()) : args.experiment_id;
  out.record.results.push_back({{"pass", check.pass},
                                {"z", check.z},
                                {"significance", check.significance},
                                {"base", bpp::estimate_to_json(check.base)},
                                {"rescaled", bpp::estimate_to_json(check.rescaled)},
                                {"seed", seed}});
  std::ostringstream csv;
  csv << "experiment_id,cell,lambda,t,N,p_hat,ci_lo,ci_hi,replicas,seed\n";
  csv << out.record.experiment_id << ",base," << bpp::format_double(lambda) << ','
      << bpp::format_double(t) << ',' << bpp::format_double(n) << ','
      << bpp::format_double(check.base.p_hat) << ','
      << bpp::format_double(check.base.ci_lo) << ','
      << bpp::format_double(check.base.ci_hi) << ',' << check.base.replicas << ','
      << seed << "\n";
  csv << out.record.experiment_id << ",rescaled,"
      << bpp::format_double(check.rescaled_config.lambda) << ','
      << bpp::format_double(check.rescaled_config.t) << ','
      << bpp::format_double(check.rescaled_config.extents[0]) << ','
      << bpp::format_double(check.rescaled.p_hat) << ','
      << bpp::format_double(check.rescaled.ci_lo) << ','
      << bpp::format_double(check.rescaled.ci_hi) << ',' << check.rescaled.replicas
      << ',' << seed << "\n";
  out.csv = csv.str();
  out.record.wall_seconds = wall_since(t0);
  write_outputs(args, out);
  return check.pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- unique

int run_unique(const CommonArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  bpp::ConfigView view = load_config(args);
  bpp::ModelConfig base = read_model_config(view);
  double r_in = view.get_double("r_in", 2.0);
  std::vector<double> ratios = view.get_list("ratios", {2.0, 4.0, 8.0});
  std::uint64_t replicas = view.get_u64("replicas", 200);
  double level = view.get_double("level", bpp::kDefaultLevel);
  view.finish();

  Outputs out;
  out.record.command = "unique";
  out.record.config = view.resolved();
  out.record.master_seed = base.master_seed;
  out.record.experiment_id =
      args.experiment_id.empty() ? default_id("unique", view.resolved()) : args.experiment_id;
  std::ostringstream csv;
  csv << "experiment_id,ratio,r_in,r_out,freq_ge2,ci_lo,ci_hi,mean_count,replicas,seed\n";
  bpp::RngStream stream = bpp::derive_stream(base.master_seed, {{"unique", 0}});
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    double r_out = r_in * ratios[i];
    bpp::ModelConfig mc = base;
    mc.extents.assign(std::size_t(mc.d), 2.0 * r_out);
    bpp::Box outer = bpp::Box::centered_cube(mc.d, r_out);
    int m = bpp::build_margin(outer, mc.reach_tail(), bpp::kMarginDefect);
    bpp::Box window = bpp::Box::centered_cube(mc.d, m);
    auto make_sample = [&](bpp::RngStream s) {
      bpp::OccupiedSetSample sample;
      sample.config = mc;
      sample.margin = m;
      sample.window = window;
      sample.chains = bpp::sample_chain_cloud(window, mc.lambda, mc.t, mc.r,
                                              mc.step, mc.d, s);
      return sample;
    };
    bpp::RngStream ratio_stream = stream.sub("ratio", i);
    std::uint64_t counts_sum = 0;
    std::uint64_t ge2 = 0;
    std::vector<std::uint8_t> hits = bpp::run_indicator_replicas(
        replicas,
        [&](std::uint64_t, bpp::RngStream s) {
          return bpp::unbounded_cluster_count(make_sample(s), r_in, r_out) >= 2;
        },
        ratio_stream);
    for (auto h : hits) ge2 += h;
    std::uint64_t diag = std::min<std::uint64_t>(replicas, 50);
    for (std::uint64_t k = 0; k < diag; ++k)
      counts_sum +=
          bpp::unbounded_cluster_count(make_sample(ratio_stream.sub("replica", k)), r_in, r_out);
    double mean_count = double(counts_sum) / double(diag);
    bpp::EstimateCI est = bpp::make_estimate(ge2, replicas, level);
    csv << out.record.experiment_id << ',' << bpp::format_double(ratios[i]) << ','
        << bpp::format_double(r_in) << ',' << bpp::format_double(r_out) << ','
        << bpp::format_double(est.p_hat) << ',' << bpp::format_double(est.ci_lo) << ','
        << bpp::format_double(est.ci_hi) << ',' << bpp::format_double(mean_count) << ','
        << replicas << ',' << base.master_seed << "\n";
    out.record.results.push_back({{"ratio", ratios[i]},
                                  {"r_in", r_in},
                                  {"r_out", r_out},
                                  {"freq_ge2", bpp::estimate_to_json(est)},
                                  {"mean_count", mean_count},
                                  {"seed", base.master_seed}});
  }
  out.csv = csv.str();
  out.record.wall_seconds = wall_since(t0);
  write_outputs(args, out);
  return kExitOk;
}

// ------------------------------------------------------------------ slab

int run_slab(const CommonArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  bpp::ConfigView view = load_config(args);
  int d = static_cast<int>(view.get_int("d", 2));
  double lambda = view.get_double("lambda", 1.0);
  double t = view.get_double("t", 4.0);
  int k_max = static_cast<int>(
      view.get_int("K_max", static_cast<std::int64_t>(std::ceil(10.0 * std::sqrt(t))) + 10));
  double w = view.get_double("window", 8.0);
  std::uint64_t replicas = view.get_u64("replicas", 1000);
  std::uint64_t thin_replicas = view.get_u64("thin_replicas", 1000);
  std::uint64_t seed = view.get_u64("seed", 1);
  view.finish();

  bpp::SlabIntensity analytic = bpp::slab_intensity_sum(t, k_max);
  bool lower_bound_ok = analytic.value >= analytic.lower_bound;

  bpp::Box window;
  window.dim = d - 1;
  for (int j = 0; j < d - 1; ++j) {
    window.lo[j] = 0.0;
    window.hi[j] = w;
  }
  bpp::RngStream stream = bpp::derive_stream(seed, {{"slab", 0}});

  // Monte Carlo intensity of the projected cloud.
  double vol = window.volume();
  std::uint64_t total_points = 0;
  std::vector<std::uint64_t> cell_counts;
  const int cells_per_axis = 4;
  for (std::uint64_t rep = 0; rep < replicas; ++rep) {
    bpp::PointSet ps =
        bpp::slab_projection_sample(lambda, t, d, window, k_max, stream.sub("rep", rep));
    total_points += ps.count();
    std::vector<std::uint64_t> counts(
        static_cast<std::size_t>(std::pow(cells_per_axis, d - 1)), 0);
    for (int i = 0; i < ps.count(); ++i) {
      std::size_t lin = 0;
      for (int j = 0; j < d - 1; ++j) {
        int c = std::min(cells_per_axis - 1,
                         static_cast<int>((ps.point(i)[j] - window.lo[j]) /
                                          ((window.hi[j] - window.lo[j]) / cells_per_axis)));
        lin = lin * cells_per_axis + static_cast<std::size_t>(c);
      }
      ++counts[lin];
    }
    cell_counts.insert(cell_counts.end(), counts.begin(), counts.end());
  }
  double expected_mean = lambda * analytic.value * vol;
  double emp_mean = double(total_points) / double(replicas);
  double z_intensity =
      (emp_mean - expected_mean) / std::sqrt(expected_mean / double(replicas));
  bool intensity_ok = std::abs(z_intensity) <= 3.0;

  // Thinning rate per slab against the analytic p^k_t.
  json thin_rows = json::array();
  bool thinning_ok = true;
  bpp::RngStream thin_stream = stream.sub("thinning", 0);
  for (int k = 1; k <= std::min(k_max, 5); ++k) {
    double pk = bpp::integrate_adaptive(
        [t](double z) { return bpp::hitting_probability_halfline(z, t); },
        double(k - 1), double(k));
    std::uint64_t kept = 0;
    bpp::RngStream ks = thin_stream.sub("k", k);
    for (std::uint64_t i = 0; i < thin_replicas; ++i) {
      double z = ks.next_uniform(double(k - 1), double(k));
      double g = ks.next_normal();
      if ((z / g) * (z / g) <= t) ++kept;
    }
    double rate = double(kept) / double(thin_replicas);
    double sd = std::sqrt(std::max(1e-12, pk * (1.0 - pk) / double(thin_replicas)));
    double z_thin = (rate - pk) / sd;
    if (std::abs(z_thin) > 3.0) thinning_ok = false;
    thin_rows.push_back({{"k", k}, {"analytic", pk}, {"rate", rate}, {"z", z_thin}});
  }

  double cell_mean = 0.0;
  for (auto c : cell_counts) cell_mean += double(c);
  cell_mean /= double(cell_counts.size());
  double gof_p = bpp::poisson_gof_pvalue(cell_counts, cell_mean);
  bool gof_ok = gof_p >= 0.01;

  bool all_ok = lower_bound_ok && intensity_ok && thinning_ok && gof_ok;

  Outputs out;
  out.record.command = "slab";
  out.record.config = view.resolved();
  out.record.master_seed = seed;
  out.record.experiment_id =
      args.experiment_id.empty() ? default_id("slab", view.resolved()) : args.experiment_id;
  out.record.results.push_back({{"analytic_sum", analytic.value},
                                {"lower_bound", analytic.lower_bound},
                                {"lower_bound_ok", lower_bound_ok},
                                {"empirical_mean_count", emp_mean},
                                {"expected_mean_count", expected_mean},
                                {"z_intensity", z_intensity},
                                {"intensity_ok", intensity_ok},
                                {"thinning", thin_rows},
                                {"thinning_ok", thinning_ok},
                                {"poisson_gof_p", gof_p},
                                {"gof_ok", gof_ok},
                                {"seed", seed}});
  std::ostringstream csv;
  csv << "experiment_id,t,K_max,analytic_sum,lower_bound,emp_mean,expected_mean,"
         "z_intensity,gof_p,seed\n";
  csv << out.record.experiment_id << ',' << bpp::format_double(t) << ',' << k_max << ','
      << bpp::format_double(analytic.value) << ','
      << bpp::format_double(analytic.lower_bound) << ',' << bpp::format_double(emp_mean)
      << ',' << bpp::format_double(expected_mean) << ','
      << bpp::format_double(z_intensity) << ',' << bpp::format_double(gof_p) << ','
      << seed << "\n";
  out.csv = csv.str();
  out.record.wall_seconds = wall_since(t0);
  write_outputs(args, out);
  return all_ok ? kExitOk : kExitCheckFailed;
}

// --------------------------------------------------------------- certify

int run_certify(const CommonArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  bpp::ConfigView view = load_config(args);
  int d = static_cast<int>(view.get_int("d", 2));
  int scale_ratio = static_cast<int>(view.get_int("R", 2));
  std::int64_t l0_default = 2;
  for (int i = 0; i < 4 * (d - 1) + 1; ++i) l0_default *= scale_ratio;
  std::int64_t l0 = view.get_int("L0", l0_default);
  std::int64_t n_box = view.get_int("N", 10);
  double lambda = view.get_double("lambda", 1.0);
  double tail_c = view.get_double("tail_c", 1.0);
  double tail_r0 = view.get_double("tail_r0", 1.0);
  double c1 = view.get_double("c1", std::pow(3.0, d));
  double c2 = view.get_double("c2", tail_c);
  double c3 = view.get_double("c3", 1.0);
  double c4 = view.get_double("c4", std::pow(3.0, d));
  double a0 = view.get_double("a0", 1.0 / double(l0));
  int n_max = static_cast<int>(view.get_int("n_max", 20));
  std::int64_t m_margin = view.get_int("M", 6 * n_box + 1);
  double cross_ci_hi = view.get_double("cross_ci_hi", -1.0);
  view.finish();

  bpp::RadiusDistribution tail = bpp::RadiusDistribution::exponential_tail(tail_c, tail_r0);
  bpp::CertificateReport rep = bpp::renorm_recursion(d, scale_ratio, l0, n_box, lambda,
                                                     tail, c1, c2, c3, a0, n_max);
  double eps_max = bpp::seed_condition(d, l0, c1, c4);
  double tail_bound = bpp::boundary_tail_bound(tail, m_margin, n_box, d);

  json jrep;
  jrep["d"] = rep.d;
  jrep["R"] = rep.scale_ratio;
  jrep["L0"] = rep.l0;
  jrep["N"] = rep.n_box;
  jrep["lambda"] = rep.lambda;
  jrep["constants"] = {{"c1", c1}, {"c2", c2}, {"c3", c3}, {"c4", c4}};
  jrep["cst_surrogate"] = d * std::pow(4.0, d);
  jrep["a0"] = rep.a0;
  jrep["scales"] = rep.scales;
  jrep["bounds"] = rep.bounds;
  jrep["bounds_repr"] = rep.bounds_repr;
  jrep["pass"] = rep.pass;
  jrep["fail_at"] = rep.fail_at;
  jrep["structural_ok"] = rep.structural_ok;
  jrep["truncated_at"] = rep.truncated_at;
  jrep["exact_arithmetic"] = rep.exact_arithmetic;
  jrep["epsilon_max"] = eps_max;
  jrep["boundary_tail_bound"] = {{"M", m_margin}, {"value", tail_bound}};
  bool certified = rep.pass;
  if (cross_ci_hi >= 0.0) {
    jrep["measured_cross_ci_hi"] = cross_ci_hi;
    jrep["seed_condition_met"] = cross_ci_hi < eps_max;
    certified = certified && cross_ci_hi < eps_max;
  }

  Outputs out;
  out.record.command = "certify";
  out.record.config = view.resolved();
  out.record.master_seed = 0;
  out.record.experiment_id =
      args.experiment_id.empty() ? default_id("certify", view.resolved()) : args.experiment_id;
  out.record.results.push_back(jrep);
  std::ostringstream csv;
  csv << "experiment_id,n,L_n,a_n,ok\n";
  for (std::size_t n = 0; n < rep.scales.size(); ++n) {
    bool ok = rep.fail_at < 0 || n < std::size_t(rep.fail_at);
    csv << out.record.experiment_id << ',' << n << ',' << rep.scales[n] << ','
        << bpp::format_double(rep.bounds[n]) << ',' << (ok ? 1 : 0) << "\n";
  }
  out.csv = csv.str();
  out.record.wall_seconds = wall_since(t0);
  write_outputs(args, out);
  return certified ? kExitOk : kExitCheckFailed;
}

// -------------------------------------------------------------- counting

int run_counting(const CommonArgs& args) {
  auto t0 = std::chrono::steady_clock::now();
  bpp::ConfigView view = load_config(args);
  std::string instance_path = view.get_string("instance", "");
  view.finish();
  if (instance_path.empty())
    throw bpp::invalid_parameter("counting: 'instance' file is required");
  std::ifstream in(instance_path);
  if (!in) throw bpp::invalid_parameter("counting: cannot open " + instance_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw bpp::invalid_parameter(std::string("counting: bad JSON: ") + e.what());
  }
  bpp::CountingInstance inst;
  try {
    inst.k = j.value("k", 1);
    inst.elements = j.at("elements").get<std::vector<int>>();
    inst.pivots = j.at("pivots").get<std::vector<int>>();
    inst.families = j.at("families").get<std::vector<std::vector<std::vector<int>>>>();
  } catch (const json::exception& e) {
    throw bpp::invalid_parameter(std::string("counting: bad instance: ") + e.what());
  }
  bpp::CountingCheck check = bpp::counting_lemma_check(inst);

  Outputs out;
  out.record.command = "counting";
  out.record.config = view.resolved();
  out.record.master_seed = 0;
  out.record.experiment_id =
      args.experiment_id.empty() ? default_id("counting", view.resolved()) : args.experiment_id;
  out.record.results.push_back({{"preconditions_ok", check.preconditions_ok},
                                {"conclusion_ok", check.conclusion_ok},
                                {"detail", check.detail},
                                {"elements", inst.elements.size()},
                                {"pivots", inst.pivots.size()},
                                {"k", inst.k}});
  std::ostringstream csv;
  csv << "experiment_id,preconditions_ok,conclusion_ok,detail\n";
  csv << out.record.experiment_id << ',' << check.preconditions_ok << ','
      << check.conclusion_ok << ",\"" << check.detail << "\"\n";
  out.csv = csv.str();
  out.record.wall_seconds = wall_since(t0);
  write_outputs(args, out);
  return (check.preconditions_ok && check.conclusion_ok) ? kExitOk : kExitCheckFailed;
}

// ------------------------------------------------------------------ plot

bpp::ModelConfig config_from_record(const bpp::RunRecord& record) {
  bpp::ConfigView view = bpp::ConfigView::from_entries(record.config);
  return read_model_config(view);
}

int run_plot(const std::string& record_path, const std::string& kind,
             const std::string& out_path) {
  std::ifstream in(record_path);
  if (!in) throw bpp::invalid_parameter("plot: cannot open " + record_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw bpp::invalid_parameter(std::string("plot: bad record JSON: ") + e.what());
  }
  bpp::RunRecord record = bpp::RunRecord::from_json(j);
  std::ostringstream csv;

  if (kind == "snapshot") {
    bpp::ModelConfig mc = config_from_record(record);
    bpp::RngStream stream = bpp::derive_stream(mc.master_seed, {{record.command, 0}});
    bpp::OccupiedSetSample sample = bpp::sample_occupied_set(mc, stream.sub("replica", 0));
    csv << "chain_id,vertex,radius";
    for (int jx = 0; jx < mc.d; ++jx) csv << ",x" << (jx + 1);
    csv << "\n";
    for (const auto& chain : sample.chains)
      for (int v = 0; v < chain.path.count(); ++v) {
        csv << chain.id << ',' << v << ',' << bpp::format_double(chain.radius);
        for (int jx = 0; jx < mc.d; ++jx)
          csv << ',' << bpp::format_double(chain.path.point(v)[jx]);
        csv << "\n";
      }
  } else if (kind == "pcurve") {
    csv << "param,p_hat,ci_lo,ci_hi,replicas,seed\n";
    // Pick the axis that actually varies across rows.
    const char* axes[] = {"lambda", "t", "r", "N", "separation", "R", "ratio"};
    std::string axis;
    for (const char* a : axes) {
      std::set<double> values;
      for (const auto& row : record.results)
        if (row.contains(a)) values.insert(row.at(a).get<double>());
      if (values.size() > 1) {
        axis = a;
        break;
      }
    }
    for (std::size_t i = 0; i < record.results.size(); ++i) {
      const auto& row = record.results[i];
      const char* est_key = row.contains("estimate")   ? "estimate"
                            : row.contains("freq_ge2") ? "freq_ge2"
                                                       : nullptr;
      if (!est_key) continue;
      double param = axis.empty() || !row.contains(axis)
                         ? double(i)
                         : row.at(axis).get<double>();
      const auto& e = row.at(est_key);
      csv << bpp::format_double(param) << ','
          << bpp::format_double(e.at("p_hat").get<double>()) << ','
          << bpp::format_double(e.at("ci_lo").get<double>()) << ','
          << bpp::format_double(e.at("ci_hi").get<double>()) << ','
          << e.at("replicas").get<std::uint64_t>() << ',' << record.master_seed << "\n";
    }
  } else if (kind == "bracket-trace") {
    csv << "eval,param,p_hat,ci_lo,ci_hi,replicas,seed\n";
    for (const auto& row : record.results) {
      if (!row.contains("bracket")) continue;
      const auto& trace = row.at("bracket").at("trace");
      for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& p = trace[i];
        const auto& e = p.at("estimate");
        csv << i << ',' << bpp::format_double(p.at("param").get<double>()) << ','
            << bpp::format_double(e.at("p_hat").get<double>()) << ','
            << bpp::format_double(e.at("ci_lo").get<double>()) << ','
            << bpp::format_double(e.at("ci_hi").get<double>()) << ','
            << e.at("replicas").get<std::uint64_t>() << ',' << record.master_seed
            << "\n";
      }
    }
  } else {
    throw bpp::invalid_parameter("plot: unknown kind '" + kind + "'");
  }
  bpp::atomic_write(out_path, csv.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo toolkit for continuum percolation of Brownian paths"};
  app.require_subcommand(1);

  CommonArgs cross_args, threshold_args, sweep_args, edges_args, mono_args,
      scale_args, unique_args, slab_args, certify_args, counting_args;

  add_common(app.add_subcommand("cross", "crossing probability of one cell"), cross_args);
  add_common(app.add_subcommand("threshold", "bisect a crossing threshold"), threshold_args);
  add_common(app.add_subcommand("sweep", "grid of crossing estimates"), sweep_args);
  add_common(app.add_subcommand("edges", "coarse-grained edge probabilities"), edges_args);
  add_common(app.add_subcommand("mono", "path-intersection monotonicity battery"), mono_args);
  add_common(app.add_subcommand("scale", "scale-invariance check"), scale_args);
  add_common(app.add_subcommand("unique", "annulus-spanning cluster counts"), unique_args);
  add_common(app.add_subcommand("slab", "slab projection diagnostics"), slab_args);
  add_common(app.add_subcommand("certify", "renormalization certificate"), certify_args);
  add_common(app.add_subcommand("counting", "counting-lemma instance check"), counting_args);

  auto* plot_cmd = app.add_subcommand("plot", "export plot data from a run record");
  std::string plot_record, plot_kind, plot_out = "plot.csv";
  plot_cmd->add_option("--record", plot_record, "run record JSON")->required();
  plot_cmd->add_option("--kind", plot_kind, "snapshot | pcurve | bracket-trace")->required();
  plot_cmd->add_option("--out", plot_out, "output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("cross")) return run_cross(cross_args);
    if (app.got_subcommand("threshold")) return run_threshold(threshold_args);
    if (app.got_subcommand("sweep")) return run_sweep(sweep_args);
    if (app.got_subcommand("edges")) return run_edges(edges_args);
    if (app.got_subcommand("mono")) return run_mono(mono_args);
    if (app.got_subcommand("scale")) return run_scale(scale_args);
    if (app.got_subcommand("unique")) return run_unique(unique_args);
    if (app.got_subcommand("slab")) return run_slab(slab_args);
    if (app.got_subcommand("certify")) return run_certify(certify_args);
    if (app.got_subcommand("counting")) return run_counting(counting_args);
    if (app.got_subcommand("plot")) return run_plot(plot_record, plot_kind, plot_out);
  } catch (const bpp::invalid_parameter& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const bpp::numeric_failure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
