#include <chrono>
#include <cmath>
#include <limits>

#include "sapr/cli/report.hpp"
#include "sapr/injectivity.hpp"
#include "sapr/kernels.hpp"
#include "sapr/mra.hpp"
#include "sapr/prior_io.hpp"

namespace sapr::cli {
namespace {

using nlohmann::json;

std::uint64_t u64(const json& j) { return j.get<std::uint64_t>(); }
std::string num(double v) { return format_number(v); }
std::string num(Index v) { return std::to_string(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "true" : "false"; }

[[noreturn]] void config_fail(const std::string& field, const std::string& message) {
  throw ConfigError({{0, "/parameters" + field, message}});
}

BlockStructure make_blocks(const json& node, Index n) {
  if (node.is_string()) return BlockStructure::power_spectrum(n);
  return BlockStructure(node.get<std::vector<Index>>());
}

MixingMatrix make_mixing(const json& node, Index n, std::uint64_t stream) {
  const auto kind = parse_mixing_kind(node.at("source") == "matrix" || node.at("source") == "random"
                                          ? node.at("kind").get<std::string>()
                                          : "general-linear");
  const auto source = node.at("source").get<std::string>();
  if (source == "identity") return MixingMatrix::identity(n);
  if (source == "fourier") {
    const RowMatrix f = real_fourier_matrix(n);
    // orthogonal, but det = -1 for some N
    return {f, f.determinant() > 0 ? MixingKind::special_orthogonal : MixingKind::general_linear};
  }
  if (source == "matrix") {
    RowMatrix m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = node.at("matrix").at(i).at(j).get<double>();
    try {
      return {m, kind};
    } catch (const Error& e) {
      config_fail("/mixing/matrix", e.what());
    }
  }
  return sample_mixing(n, kind, derive_seed(u64(node.at("seed")), stream));
}

Activation make_activation(const json& node) {
  switch (parse_activation(node.at("activation").get<std::string>())) {
  case ActivationKind::relu: return Activation::relu();
  case ActivationKind::leaky_relu: return Activation::leaky_relu(node.at("slope").get<double>());
  case ActivationKind::hardtanh: return Activation::hardtanh(-1.0, 1.0);
  case ActivationKind::identity: return Activation::identity();
  }
  return Activation::relu();
}

PriorModel make_prior(const json& node, Index n, const std::filesystem::path& base) {
  const auto type = node.at("type").get<std::string>();
  if (type == "relu") {
    std::vector<Index> widths{node.at("latent_dim").get<Index>()};
    for (const auto& h : node.at("hidden")) widths.push_back(h.get<Index>());
    widths.push_back(n);
    return random_generator(widths, make_activation(node), u64(node.at("seed")));
  }
  if (type == "sparse") {
    const auto m = node.at("sparsity").get<Index>();
    const auto kind = parse_sparse_kind(node.at("basis").get<std::string>());
    if (kind == SparseKind::standard_basis) return SparsePrior::standard(n, m);
    return SparsePrior::generic(n, m, kind, u64(node.at("seed")));
  }
  PriorModel prior = load_prior(base / node.at("path").get<std::string>());
  if (prior_dim(prior) != n)
    config_fail("/prior/path", "prior has dimension " + std::to_string(prior_dim(prior)) + ", expected " +
                                   std::to_string(n));
  return prior;
}

// A point of the prior, mapped through A, rescaled to the requested norm.
struct PriorSignal {
  Signal x;       // A x(z)
  Vector latent;
};

PriorSignal prior_signal(const PriorModel& prior, const MixingMatrix& a, std::uint64_t seed, double norm) {
  PriorSignal out;
  if (const auto* net = std::get_if<GeneratorNetwork>(&prior)) {
    Rng rng = make_rng(seed);
    Vector z = gaussian_vector(rng, net->latent_dim());
    // exact for positively homogeneous networks, a fixed-point refinement otherwise
    for (int it = 0; it < 8; ++it) {
      const double current = a.apply(generator_forward(*net, z)).norm();
      if (current <= 0.0) break;
      z *= norm / current;
    }
    out.latent = z;
    out.x = a.apply(generator_forward(*net, z));
  } else {
    Signal s = sample_sparse(std::get<SparsePrior>(prior), seed);
    Signal x = a.apply(s);
    const double current = x.norm();
    out.x = current > 0.0 ? Signal(x * (norm / current)) : x;
  }
  return out;
}

CollisionOptions collision_options(const json& p) {
  CollisionOptions o;
  o.restarts = p.at("restarts").get<int>();
  o.max_iterations = p.at("max_iterations").get<int>();
  o.residual_tol = p.at("residual_tol").get<double>();
  o.separation_tol = p.at("separation_tol").get<double>();
  o.penalty_weight = p.at("penalty_weight").get<double>();
  return o;
}

std::vector<std::string> collision_row(const std::string& label, const CollisionReport& r,
                                       const std::string& oracle) {
  return {label, num(r.seed), std::string(to_string(r.verdict)), num(r.residual), num(r.separation),
          num(r.relative_residual), num(r.relative_separation), std::to_string(r.restarts_used),
          flag(r.converged), oracle};
}

void run_measure(const ExperimentConfig& cfg, RunReport& report) {
  const json& p = cfg.parameters;
  std::vector<Vector> signals;
  const auto to_vec = [](const json& arr) {
    Vector v(static_cast<Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Index>(i)] = arr[i].get<double>();
    return v;
  };
  if (p.at("x").front().is_array()) {
    for (const auto& s : p.at("x")) signals.push_back(to_vec(s));
  } else {
    signals.push_back(to_vec(p.at("x")));
  }
  const Index n = signals.front().size();
  const auto blocks = make_blocks(p.at("blocks"), n);
  const auto a = make_mixing(p.at("mixing"), n, 0);
  Table t{"measure", {}, {}};
  for (Index k = 0; k < blocks.block_count(); ++k) t.header.push_back("b" + std::to_string(k));
  for (const auto& s : signals) {
    const Signal x = p.at("domain") == "time" ? to_real_fourier(s) : Signal(s);
    const auto m = separable_measurement(x, a, blocks);
    std::vector<std::string> row;
    for (Index k = 0; k < m.size(); ++k) row.push_back(num(m[k]));
    t.rows.push_back(std::move(row));
  }
  report.tables.push_back(std::move(t));
  report.summary["signals"] = signals.size();
  report.summary["block_count"] = blocks.block_count();
}

void run_collide(const ExperimentConfig& cfg, RunReport& report, std::vector<std::uint64_t>& seeds) {
  const json& p = cfg.parameters;
  const auto n = p.at("N").get<Index>();
  const auto blocks = make_blocks(p.at("blocks"), n);
  const auto prior = make_prior(p.at("prior"), n, cfg.base_dir);
  const auto base = collision_options(p);
  const auto seed = u64(p.at("seed"));
  const int grid = p.at("oracle_grid_points").get<int>();

  Table t{"collide",
          {"case", "seed", "verdict", "residual", "separation", "relative_residual", "relative_separation",
           "restarts_used", "converged", "oracle_verdict"},
          {}};
  int collisions = 0, nonconverged = 0, disagreements = 0;
  const int mixings = p.at("mixings").get<int>();
  for (int i = 0; i < mixings; ++i) {
    const auto a = make_mixing(p.at("mixing"), n, static_cast<std::uint64_t>(i));
    CollisionOptions opts = base;
    if (p.at("anchor") == "random") opts.anchor = prior_signal(prior, MixingMatrix::identity(n), derive_seed(seed, 1000 + i), 1.0).x;
    const auto search_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    seeds.push_back(search_seed);
    const auto r = collision_search(prior, a, blocks, opts, search_seed);
    std::string oracle = "n/a";
    if (grid > 0) {
      if (prior_latent_dim(prior) > 2) config_fail("/oracle_grid_points", "the grid oracle needs latent dimension <= 2");
      OracleOptions oo;
      oo.residual_tol = base.residual_tol;
      const auto o = brute_force_collision_oracle(prior, a, blocks, grid, oo);
      oracle = std::string(to_string(o.verdict));
      if (o.verdict != r.verdict) ++disagreements;
    }
    collisions += r.verdict == Verdict::collision;
    nonconverged += !r.converged;
    t.rows.push_back(collision_row("mixing-" + std::to_string(i), r, oracle));
  }
  report.summary["mixings"] = mixings;
  report.summary["collisions"] = collisions;
  if (grid > 0) report.summary["oracle_disagreements"] = disagreements;

  if (p.at("controls").get<bool>()) {
    // all of R^N under A = I: rotations inside a (cos, sin) pair collide
    CollisionOptions copts = base;
    const auto s1 = derive_seed(seed, 2001);
    const auto torus = collision_search(SparsePrior::standard(n, n), MixingMatrix::identity(n), blocks, copts, s1);
    t.rows.push_back(collision_row("control-torus", torus, "n/a"));
    // time-domain 2-sparse signals, measured through the real Fourier analysis matrix
    const auto s2 = derive_seed(seed, 2002);
    const RowMatrix f = real_fourier_matrix(n);
    const MixingMatrix fourier(f, f.determinant() > 0 ? MixingKind::special_orthogonal : MixingKind::general_linear);
    const auto shift = collision_search(SparsePrior::standard(n, std::min<Index>(2, n)), fourier, blocks, copts, s2);
    t.rows.push_back(collision_row("control-sparse-shift", shift, "n/a"));
    seeds.push_back(s1);
    seeds.push_back(s2);
    report.summary["control_torus_verdict"] = to_string(torus.verdict);
    report.summary["control_sparse_shift_verdict"] = to_string(shift.verdict);
  }
  report.flags["nonconverged_searches"] = nonconverged;
  report.tables.push_back(std::move(t));
}

void run_probe(const ExperimentConfig& cfg, RunReport& report, std::vector<std::uint64_t>& seeds) {
  const json& p = cfg.parameters;
  const auto n = p.at("N").get<Index>();
  const auto blocks = make_blocks(p.at("blocks"), n);
  const auto kind = parse_mixing_kind(p.at("manifold").get<std::string>());
  ProbeOptions opts;
  opts.max_restarts = p.at("max_restarts").get<int>();
  opts.max_newton_iterations = p.at("max_newton_iterations").get<int>();
  opts.target_residual = p.at("target_residual").get<double>();
  opts.accept_residual = p.at("accept_residual").get<double>();
  opts.rank_tol = p.at("rank_tol").get<double>();
  const auto seed = u64(p.at("seed"));

  Table t{"probe",
          {"pair", "ambient_dim", "theoretical_bound", "estimated_solution_dim", "rank", "converged",
           "constraint_residual", "restarts_used"},
          {}};
  int converged = 0, at_bound = 0, above = 0;
  const int pairs = p.at("pairs").get<int>();
  for (int i = 0; i < pairs; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    const Signal x = gaussian_vector(rng, n);
    Signal y = gaussian_vector(rng, n);
    // the SO fibre is empty unless the norms agree
    if (kind == MixingKind::special_orthogonal) y *= x.norm() / y.norm();
    const auto probe_seed = derive_seed(seed, 1000 + static_cast<std::uint64_t>(i));
    seeds.push_back(probe_seed);
    const auto e = codimension_probe(x, y, kind, blocks, probe_seed, opts);
    if (e.converged) {
      ++converged;
      at_bound += e.estimated_solution_dim == e.theoretical_bound;
      above += e.estimated_solution_dim > e.theoretical_bound;
    }
    t.rows.push_back({std::to_string(i), num(e.ambient_dim), num(e.theoretical_bound), num(e.estimated_solution_dim),
                      num(e.rank), flag(e.converged), num(e.constraint_residual), std::to_string(e.restarts_used)});
  }
  report.summary["pairs"] = pairs;
  report.summary["converged"] = converged;
  report.summary["equal_to_bound"] = at_bound;
  report.summary["above_bound"] = above;
  report.summary["theoretical_bound"] = theoretical_solution_bound(kind, blocks);
  report.flags["nonconverged_probes"] = pairs - converged;
  report.tables.push_back(std::move(t));
}

GroupAction make_group(const json& g) {
  const auto kind = parse_group_kind(g.at("kind").get<std::string>());
  if (kind == GroupKind::so3) return GroupAction::so3(g.at("band_limit").get<Index>());
  const auto n = g.at("N").get<Index>();
  return kind == GroupKind::cyclic ? GroupAction::cyclic(n) : GroupAction::dihedral(n);
}

RecoveryOptions recovery_options(const json& r) {
  RecoveryOptions o;
  o.starts = r.at("starts").get<int>();
  o.max_iterations = r.at("max_iterations").get<int>();
  o.max_supports = r.at("max_supports").get<std::size_t>();
  return o;
}

std::vector<std::uint64_t> seed_list(const json& p) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < p.at("seeds").get<int>(); ++i) out.push_back(derive_seed(u64(p.at("seed")), static_cast<std::uint64_t>(i)));
  return out;
}

void run_mra(const ExperimentConfig& cfg, RunReport& report, std::vector<std::uint64_t>& seeds, int threads) {
  const json& p = cfg.parameters;
  const auto group = make_group(p.at("group"));
  const Index n = group.dim();
  const auto prior = make_prior(p.at("prior"), n, cfg.base_dir);
  const auto a = make_mixing(p.at("mixing"), n, 0);
  const auto mode = p.at("mode").get<std::string>();
  const double norm = p.at("signal").at("norm").get<double>();

  Signal x_true;
  if (p.at("signal").at("x").is_array()) {
    x_true = Signal(n);
    for (Index i = 0; i < n; ++i) x_true[i] = p.at("signal").at("x").at(i).get<double>();
  } else {
    x_true = prior_signal(prior, a, u64(p.at("signal").at("latent_seed")), norm).x;
  }
  report.summary["signal_norm"] = x_true.norm();

  if (mode == "sample-complexity") {
    SampleComplexityOptions opts;
    opts.target_error = p.at("target_error").get<double>();
    opts.n_min = u64(p.at("n_min"));
    opts.n_cap = u64(p.at("n_cap"));
    opts.grid_ratio = p.at("grid_ratio").get<double>();
    opts.bisection_steps = p.at("bisection_steps").get<int>();
    opts.recovery = recovery_options(p.at("recovery"));
    opts.threads = threads;
    const auto sweep_seeds = seed_list(p);
    seeds.insert(seeds.end(), sweep_seeds.begin(), sweep_seeds.end());
    const auto sigmas = p.at("sigma_list").get<std::vector<double>>();
    const auto table = sample_complexity_sweep(x_true, prior, a, group, sigmas, sweep_seeds, opts);
    Table t{"mra_sweep", {"sigma", "n_star", "median_error", "seeds_used"}, {}};
    Table curve{"mra_curve", {"sigma", "n", "median_error"}, {}};
    json saturated = json::array();
    for (const auto& r : table.rows) {
      t.rows.push_back({num(r.sigma), num(r.n_star), num(r.median_error), std::to_string(r.seeds_used)});
      for (const auto& [gn, err] : r.grid_curve) curve.rows.push_back({num(r.sigma), num(gn), num(err)});
      if (r.saturated) saturated.push_back(r.sigma);
    }
    report.summary["fitted_slope"] = std::isfinite(table.fitted_slope) ? json(table.fitted_slope) : json(nullptr);
    report.flags["saturated_sigmas"] = saturated;
    report.tables.push_back(std::move(t));
    report.tables.push_back(std::move(curve));
    return;
  }

  const auto seed = u64(p.at("seed"));
  const auto count = p.at("n").get<std::uint64_t>();
  const double sigma = p.at("sigma").get<double>();
  const auto& blocks = group.blocks();

  if (mode == "block-scalar") {
    const Matrix exact = population_second_moment(x_true, group);
    const auto energy = second_moment_blocks(x_true, blocks);
    const auto stream_seed = derive_seed(seed, 0);
    seeds.push_back(stream_seed);
    ObservationStream stream(x_true, group, sigma, stream_seed);
    SecondMomentAccumulator acc(n);
    std::vector<double> buf(static_cast<std::size_t>(n));
    for (std::uint64_t i = 0; i < count; ++i) {
      stream.next(buf.data());
      acc.add(buf.data());
    }
    const Matrix mc = acc.estimate(sigma).matrix;
    Table t{"block_scalar",
            {"block", "dim", "energy", "exact_trace", "exact_scalar_deviation", "exact_offblock_max", "mc_trace",
             "mc_relative_frobenius"},
            {}};
    double worst_exact = 0.0, worst_mc = 0.0;
    for (Index k = 0; k < blocks.block_count(); ++k) {
      const Index o = blocks.offset(k), d = blocks.block_dim(k);
      const Matrix eb = exact.block(o, o, d, d);
      const Matrix target = Matrix::Identity(d, d) * (energy[k] / static_cast<double>(d));
      Matrix off = exact.middleRows(o, d);
      off.middleCols(o, d).setZero();
      const double dev = (eb - target).cwiseAbs().maxCoeff();
      const double off_max = off.cwiseAbs().maxCoeff();
      const Matrix mb = mc.block(o, o, d, d);
      const double rel = target.norm() > 0.0 ? (mb - target).norm() / target.norm() : (mb - target).norm();
      worst_exact = std::max({worst_exact, dev, off_max});
      worst_mc = std::max(worst_mc, rel);
      t.rows.push_back({num(k), num(d), num(energy[k]), num(eb.trace()), num(dev), num(off_max), num(mb.trace()), num(rel)});
    }
    report.summary["exact_max_deviation"] = worst_exact;
    report.summary["mc_max_relative_frobenius"] = worst_mc;
    report.summary["n"] = count;
    report.tables.push_back(std::move(t));
    return;
  }

  if (mode == "recovery") {
    const auto opts = recovery_options(p.at("recovery"));
    Table t{"recovery", {"seed", "error_exact", "error_sampled", "cost_exact", "cost_sampled", "converged"}, {}};
    int nonconverged = 0;
    const bool inline_signal = p.at("signal").at("x").is_array();
    for (const auto s : seed_list(p)) {
      seeds.push_back(s);
      const Signal x = inline_signal ? x_true : prior_signal(prior, a, derive_seed(s, 1), norm).x;
      const auto exact = extract_invariants(population_second_moment(x, group), blocks);
      const auto fit_exact = recover(exact, prior, a, blocks, opts, derive_seed(s, 2));
      ObservationStream stream(x, group, sigma, derive_seed(s, 3));
      SecondMomentAccumulator acc(n);
      std::vector<double> buf(static_cast<std::size_t>(n));
      for (std::uint64_t i = 0; i < count; ++i) {
        stream.next(buf.data());
        acc.add(buf.data());
      }
      const auto sampled = extract_invariants(acc.estimate(sigma), blocks);
      const auto fit_sampled = recover(sampled, prior, a, blocks, opts, derive_seed(s, 2));
      nonconverged += !(fit_exact.converged && fit_sampled.converged);
      t.rows.push_back({num(s), num(fit_exact.error(x)), num(fit_sampled.error(x)), num(fit_exact.cost),
                        num(fit_sampled.cost), flag(fit_exact.converged && fit_sampled.converged)});
    }
    report.flags["nonconverged_recoveries"] = nonconverged;
    report.tables.push_back(std::move(t));
    return;
  }

  // simulate
  const auto obs_seed = derive_seed(seed, 0);
  seeds.push_back(obs_seed);
  const auto obs = simulate_observations(x_true, group, static_cast<Index>(count), sigma, obs_seed);
  std::filesystem::create_directories(cfg.output_dir);
  const auto file = cfg.output_dir / p.at("observations_file").get<std::string>();
  save_observations(obs, file);
  const auto est = extract_invariants(estimate_second_moment(obs), blocks);
  const auto truth = second_moment_blocks(x_true, blocks);
  Table t{"invariants", {"block", "true", "estimated"}, {}};
  for (Index k = 0; k < blocks.block_count(); ++k) t.rows.push_back({num(k), num(truth[k]), num(est[k])});
  report.summary["observations_file"] = file.filename().string();
  report.summary["n"] = count;
  report.tables.push_back(std::move(t));
}

void run_sweep(const ExperimentConfig& cfg, RunReport& report, std::vector<std::uint64_t>& seeds, int threads) {
  const json& p = cfg.parameters;
  PriorFamily family;
  family.type = p.at("family").at("type") == "sparse" ? PriorFamilyType::sparse : PriorFamilyType::relu;
  family.hidden_multiplier = p.at("family").at("hidden_multiplier").get<Index>();
  family.hidden_layers = p.at("family").at("hidden_layers").get<Index>();
  const auto sweep_seeds = seed_list(p);
  seeds.insert(seeds.end(), sweep_seeds.begin(), sweep_seeds.end());
  const auto table = threshold_sweep(family, p.at("n_values").get<std::vector<Index>>(),
                                     p.at("m_values").get<std::vector<Index>>(),
                                     parse_mixing_kind(p.at("kind").get<std::string>()), sweep_seeds,
                                     collision_options(p), threads);
  Table rows{"sweep", {"N", "M", "regime", "kind", "seed", "verdict", "residual", "separation"}, {}};
  for (const auto& r : table.rows)
    rows.rows.push_back({num(r.n), num(r.m), std::string(to_string(r.regime)), std::string(to_string(r.kind)),
                         num(r.seed), std::string(to_string(r.verdict)), num(r.residual), num(r.separation)});
  Table cells{"sweep_cells", {"N", "M", "regime", "collision_fraction", "instances"}, {}};
  int asserted_collisions = 0;
  for (const auto& c : table.cells) {
    cells.rows.push_back({num(c.n), num(c.m), std::string(to_string(c.regime)), num(c.collision_fraction),
                          std::to_string(c.instances)});
    if (c.regime != Regime::below_threshold && c.collision_fraction > 0.0) ++asserted_collisions;
  }
  report.summary["cells_with_collisions_above_threshold"] = asserted_collisions;
  report.tables.push_back(std::move(rows));
  report.tables.push_back(std::move(cells));
}

} // namespace

RunReport run(const ExperimentConfig& config, int threads) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.config_echo = config.echo;
  std::vector<std::uint64_t> seeds;
  switch (config.command) {
  case Command::measure: run_measure(config, report); break;
  case Command::collide: run_collide(config, report, seeds); break;
  case Command::probe_dim: run_probe(config, report, seeds); break;
  case Command::mra_sim: run_mra(config, report, seeds, threads); break;
  case Command::sweep: run_sweep(config, report, seeds, threads); break;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  report.provenance = {{"command", to_string(config.command)},
                       {"preset", config.preset},
                       {"parameters", config.parameters},
                       {"seeds", seeds},
                       {"config_sha1", git_blob_sha1(config.source_text)},
                       {"wall_time_seconds", elapsed.count()},
                       {"threads", threads},
                       {"kernel_isa", kernels::isa_name(kernels::active().isa)}};
  return report;
}

} // namespace sapr::cli
