#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lra/dataset_io.hpp"
#include "lra/lasserre.hpp"
#include "lra/onepoint.hpp"
#include "lra/pgd.hpp"
#include "lra/polyatk.hpp"
#include "lra/rankone.hpp"
#include "lra/svg.hpp"

namespace lra::bench {

using regress::Dataset;
using regress::PoisonPoint;
using regress::RegressionFit;

enum class AttackKind { one, multi, rankone, baseline, sweep };
enum class ObjectiveKind { coef_min, coef_max, abs_shrink, abs_grow, pinned };
enum class Reduction { best, mean };

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::one: return "one";
    case AttackKind::multi: return "multi";
    case AttackKind::rankone: return "rankone";
    case AttackKind::baseline: return "baseline";
    case AttackKind::sweep: return "sweep";
  }
  return "?";
}

inline const char* to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::coef_min: return "coef-min";
    case ObjectiveKind::coef_max: return "coef-max";
    case ObjectiveKind::abs_shrink: return "shrink";
    case ObjectiveKind::abs_grow: return "grow";
    case ObjectiveKind::pinned: return "pinned";
  }
  return "?";
}

/// One experiment request; flags mirror the CLI surface.
struct ExperimentSpec {
  std::string dataset;
  AttackKind attack = AttackKind::one;
  ObjectiveKind objective = ObjectiveKind::coef_min;
  std::size_t target_index = 0;  // 0-based
  double eta = 0.2;              // for rankone: fraction of sigma_m
  Vec eta_grid;                  // sweep grid (same convention)
  double lambda = 1.0;
  int order = 2;
  int max_order = 3;
  std::size_t trials = 10000;
  std::size_t restarts = 1;
  std::uint64_t seed = 1;
  Reduction reduction = Reduction::best;
  bool standardize = false;
  bool intercept = false;
  bool exact_zero = false;
  bool allow_unbounded = false;  // permit eta >= sigma_m for the refusal demo
  std::optional<std::string> response;
  std::vector<std::string> drop;
  double pgd_step = 100.0;
  std::size_t max_iterations = 10000;
  double tol = 1e-9;
  std::string out_dir = "lra-out";
  std::size_t threads = 0;  // 0: LRA_THREADS env or hardware concurrency
};

struct ResultRow {
  std::string key;
  std::string attack;
  std::string objective_kind;
  std::size_t index_1based = 0;
  double eta = 0.0;
  double lambda = 0.0;
  int order = 0;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::string reduction;
  double objective = 0.0;
  std::size_t iterations = 0;
  double wall_ms = 0.0;
  bool certified = false;
  bool extracted = false;
  bool unbounded = false;
  Vec beta_before;
  Vec beta_after;
  Vec point_x;  // one/multi artifact
  std::optional<double> point_y;
  Vec factor_c;  // rankone artifact
  Vec factor_d;
};

struct RunOutcome {
  std::vector<ResultRow> rows;
  int exit_code = 0;
  std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Small utilities.

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LRA_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? hc : 1;
}

/// Index-chunked work pool; results must not depend on execution order.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

inline std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

inline std::string join_vec(const Vec& v) {
  std::ostringstream s;
  s << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s << ';';
    s << v[i];
  }
  return s.str();
}

inline Dataset load_dataset(const ExperimentSpec& spec) {
  LoadOptions opts;
  opts.response = spec.response;
  opts.drop = spec.drop;
  Dataset d = load_csv(spec.dataset, opts);
  return preprocess(std::move(d), spec.standardize, spec.intercept);
}

inline std::string spec_key(const ExperimentSpec& spec, double eta, std::uint64_t seed,
                            const char* algo) {
  std::ostringstream s;
  s << "attack=" << to_string(spec.attack) << ";algo=" << algo
    << ";objective=" << to_string(spec.objective) << ";index=" << spec.target_index + 1
    << ";eta=" << format_double(eta) << ";lambda=" << format_double(spec.lambda)
    << ";order=" << spec.order << ";seed=" << seed << ";trials=" << spec.trials
    << ";reduction=" << (spec.reduction == Reduction::best ? "best" : "mean")
    << ";standardize=" << spec.standardize << ";intercept=" << spec.intercept;
  return s.str();
}

inline void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write results: " + path, 0);
  out << "key,attack,objective_kind,index,eta,lambda,order,seed,trials,reduction,objective,"
         "iterations,wall_ms,certified,extracted,unbounded,beta_before,beta_after,point_x,point_y,"
         "factor_c,factor_d\n";
  for (const auto& r : rows) {
    out << '"' << r.key << '"' << ',' << r.attack << ',' << r.objective_kind << ','
        << r.index_1based << ',' << format_double(r.eta) << ',' << format_double(r.lambda) << ','
        << r.order << ',' << r.seed << ',' << r.trials << ',' << r.reduction << ','
        << format_double(r.objective) << ',' << r.iterations << ',' << format_double(r.wall_ms)
        << ',' << r.certified << ',' << r.extracted << ',' << r.unbounded << ',' << '"'
        << join_vec(r.beta_before) << '"' << ',' << '"' << join_vec(r.beta_after) << '"' << ','
        << '"' << join_vec(r.point_x) << '"' << ','
        << (r.point_y ? format_double(*r.point_y) : std::string()) << ',' << '"'
        << join_vec(r.factor_c) << '"' << ',' << '"' << join_vec(r.factor_d) << '"' << '\n';
  }
}

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Random attack baseline.

/// Draws an (m+1)-dimensional standard-normal point, rescales it to energy
/// eta, and evaluates the requested objective; keeps the best of `trials`.
/// Trial i uses stream(seed, i), so the result is independent of threading.
inline ResultRow random_baseline(const Dataset& data, const RegressionFit& fit,
                                 const ExperimentSpec& spec, double eta, std::size_t threads = 1) {
  const std::size_t m = fit.m();
  const std::size_t idx = spec.target_index;
  std::optional<polyatk::QuarticProgram> qp;
  if (spec.objective == ObjectiveKind::pinned)
    qp.emplace(polyatk::build_quartic(fit, idx, eta, spec.lambda));

  const auto score = [&](const Vec& x0, double y0) {
    const Vec beta = regress::refit_add_point(fit, x0, y0);
    switch (spec.objective) {
      case ObjectiveKind::coef_min: return beta[idx];
      case ObjectiveKind::coef_max: return -beta[idx];
      case ObjectiveKind::abs_shrink: return std::abs(beta[idx]);
      case ObjectiveKind::abs_grow: return -std::abs(beta[idx]);
      case ObjectiveKind::pinned: return polyatk::bilevel_objective(*qp, beta, fit.beta0);
    }
    return 0.0;
  };

  const CounterRng root(spec.seed);
  WallTimer timer;
  std::vector<double> best_val(std::max<std::size_t>(1, threads),
                               std::numeric_limits<double>::infinity());
  std::vector<std::size_t> best_idx(best_val.size(), 0);
  const std::size_t nthreads = best_val.size();
  std::atomic<std::size_t> chunk{0};
  const std::size_t chunk_size = 256;
  const auto worker = [&](std::size_t tid) {
    for (;;) {
      const std::size_t c = chunk.fetch_add(1);
      const std::size_t lo = c * chunk_size;
      if (lo >= spec.trials) break;
      const std::size_t hi = std::min(spec.trials, lo + chunk_size);
      for (std::size_t t = lo; t < hi; ++t) {
        CounterRng rng = root.stream(t);
        Vec u = rng.normal_vec(m + 1);
        const double nu = matkit::norm2(u);
        if (nu == 0.0) continue;
        for (double& v : u) v *= eta / nu;
        const Vec x0(u.begin(), u.begin() + m);
        const double val = score(x0, u[m]);
        if (val < best_val[tid] || (val == best_val[tid] && t < best_idx[tid])) {
          best_val[tid] = val;
          best_idx[tid] = t;
        }
      }
    }
  };
  if (nthreads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  std::size_t winner = 0;
  for (std::size_t t = 1; t < nthreads; ++t)
    if (best_val[t] < best_val[winner] ||
        (best_val[t] == best_val[winner] && best_idx[t] < best_idx[winner]))
      winner = t;

  // Rebuild the winning draw.
  CounterRng rng = root.stream(best_idx[winner]);
  Vec u = rng.normal_vec(m + 1);
  const double nu = matkit::norm2(u);
  for (double& v : u) v *= eta / nu;
  const Vec x0(u.begin(), u.begin() + m);

  ResultRow row;
  row.key = spec_key(spec, eta, spec.seed, "random");
  row.attack = "random";
  row.objective_kind = to_string(spec.objective);
  row.index_1based = idx + 1;
  row.eta = eta;
  row.lambda = spec.lambda;
  row.order = 0;
  row.seed = spec.seed;
  row.trials = spec.trials;
  row.reduction = "best";
  row.iterations = spec.trials;
  row.beta_before = fit.beta0;
  row.beta_after = regress::refit_add_point(fit, x0, u[m]);
  row.point_x = x0;
  row.point_y = u[m];
  // Report the natural objective (undo the sign trick for max-style goals).
  const double raw = best_val[winner];
  row.objective = (spec.objective == ObjectiveKind::coef_max || spec.objective == ObjectiveKind::abs_grow)
                      ? -raw
                      : raw;
  row.wall_ms = timer.ms();
  return row;
}

// ---------------------------------------------------------------------------
// Attack runners.

inline ResultRow attack_one_row(const RegressionFit& fit, const ExperimentSpec& spec, double eta) {
  WallTimer timer;
  ResultRow row;
  row.attack = "one";
  row.objective_kind = to_string(spec.objective);
  row.index_1based = spec.target_index + 1;
  row.eta = eta;
  row.lambda = 0.0;
  row.seed = spec.seed;
  row.reduction = "best";
  row.beta_before = fit.beta0;

  PoisonPoint point;
  switch (spec.objective) {
    case ObjectiveKind::coef_min:
      point = onepoint::attack_coefficient(fit, spec.target_index, eta, onepoint::Sense::minimize);
      row.objective = point.predicted_value;
      break;
    case ObjectiveKind::coef_max:
      point = onepoint::attack_coefficient(fit, spec.target_index, eta, onepoint::Sense::maximize);
      row.objective = point.predicted_value;
      break;
    case ObjectiveKind::abs_shrink:
    case ObjectiveKind::abs_grow: {
      const auto res = onepoint::solve_abs_objective(
          fit, spec.target_index, eta,
          spec.objective == ObjectiveKind::abs_shrink ? onepoint::AbsSense::shrink
                                                      : onepoint::AbsSense::grow,
          spec.exact_zero);
      point = res.point;
      row.objective = res.target_abs_value;
      break;
    }
    case ObjectiveKind::pinned:
      throw DimensionError("attack-one does not take the pinned objective; use attack-multi");
  }
  row.key = spec_key(spec, eta, spec.seed, "closed-form");
  row.beta_after = point.predicted_beta;
  row.point_x = point.x0;
  row.point_y = point.y0;
  row.iterations = 1;
  row.wall_ms = timer.ms();
  row.certified = true;  // closed form
  row.extracted = true;
  return row;
}

struct MultiAttackResult {
  ResultRow row;
  bool archimedean_verified = true;
  int order_used = 0;
};

inline MultiAttackResult attack_multi_row(const RegressionFit& fit, const ExperimentSpec& spec,
                                          double eta) {
  WallTimer timer;
  MultiAttackResult out;
  ResultRow& row = out.row;
  row.attack = "multi";
  row.objective_kind = "pinned";
  row.index_1based = spec.target_index + 1;
  row.eta = eta;
  row.lambda = spec.lambda;
  row.seed = spec.seed;
  row.reduction = "best";
  row.beta_before = fit.beta0;

  const auto qp = polyatk::build_quartic(fit, spec.target_index, eta, spec.lambda);
  const auto prog = polyatk::as_polynomial(qp);

  for (int order = spec.order; order <= std::max(spec.order, spec.max_order); ++order) {
    const auto rel = lasserre::relax(prog, order);
    out.archimedean_verified = rel.archimedean_verified;
    const auto sol = sdpcore::solve_sdp(rel.sdp);
    // Large relaxations can stall slightly above the strict gap target; the
    // rank certificate tolerates that, so accept near-optimal solves too.
    const bool usable = sol.status == sdpcore::SdpStatus::optimal ||
                        (sol.duality_gap <= 1e-6 * (1.0 + std::abs(sol.value)) &&
                         sol.primal_infeasibility <= 1e-6 && sol.dual_infeasibility <= 1e-5);
    if (!usable) continue;
    const auto cert =
        lasserre::certify_and_extract(lasserre::moments_from_solution(rel, sol.y_star), order, 1);
    row.order = order;
    row.objective = sol.value;
    row.iterations = sol.iterations;
    row.certified = cert.rank_ok;
    row.extracted = !cert.minimizers.empty();
    if (row.certified && row.extracted) {
      const auto point = polyatk::recover_attack(qp, cert.minimizers[0], fit);
      row.beta_after = point.predicted_beta;
      row.point_x = point.x0;
      row.point_y = point.y0;
      break;
    }
  }
  out.order_used = row.order;
  row.key = spec_key(spec, eta, spec.seed, "relaxation");
  row.wall_ms = timer.ms();
  return out;
}

struct RankOneAttackResult {
  std::vector<ResultRow> rows;  // one per seed
  bool unbounded = false;
  Vec certificate_c, certificate_d;
  double sigma_min = 0.0;
};

inline RankOneAttackResult attack_rankone_rows(const Dataset& data, const RegressionFit& fit,
                                               const ExperimentSpec& spec, double eta_fraction,
                                               std::size_t threads) {
  RankOneAttackResult out;
  out.sigma_min = fit.sigma_min();
  const double eta = eta_fraction * out.sigma_min;
  const rankone::TargetSense sense = spec.objective == ObjectiveKind::coef_max
                                         ? rankone::TargetSense::increase
                                         : rankone::TargetSense::decrease;

  if (eta_fraction >= 1.0) {
    const auto cert = rankone::check_unbounded(fit, eta);
    out.unbounded = true;
    out.certificate_c = cert->c;
    out.certificate_d = cert->d;
    ResultRow row;
    row.key = spec_key(spec, eta, spec.seed, "alternating");
    row.attack = "rankone";
    row.objective_kind = to_string(spec.objective);
    row.index_1based = spec.target_index + 1;
    row.eta = eta;
    row.seed = spec.seed;
    row.unbounded = true;
    row.beta_before = fit.beta0;
    row.factor_c = cert->c;
    row.factor_d = cert->d;
    out.rows.push_back(std::move(row));
    return out;
  }

  const auto ctx = rankone::make_context(data, fit, spec.target_index, sense, eta);
  out.rows.resize(spec.restarts);
  parallel_for(spec.restarts, threads, [&](std::size_t r) {
    WallTimer timer;
    rankone::AlternatingOptions opts;
    opts.seed = CounterRng(spec.seed).stream(r).seed();
    opts.tol = spec.tol;
    opts.max_iterations = spec.max_iterations;
    const auto res = rankone::alternating_attack(ctx, opts);
    ResultRow row;
    row.key = spec_key(spec, eta, opts.seed, "alternating");
    row.attack = "rankone";
    row.objective_kind = to_string(spec.objective);
    row.index_1based = spec.target_index + 1;
    row.eta = eta;
    row.seed = opts.seed;
    row.reduction = spec.reduction == Reduction::best ? "best" : "mean";
    row.objective = res.objective;
    row.iterations = res.iterations;
    row.wall_ms = timer.ms();
    row.beta_before = fit.beta0;
    row.factor_c = res.c;
    row.factor_d = res.d;
    // Refit on the perturbed matrix for the stored after-coefficients.
    matkit::Matrix xm = data.x;
    for (std::size_t i = 0; i < xm.rows(); ++i)
      for (std::size_t j = 0; j < xm.cols(); ++j) xm(i, j) += res.c[i] * res.d[j];
    Dataset poisoned{std::move(xm), data.y, {}};
    row.beta_after = regress::fit_ols(poisoned).beta0;
    out.rows[r] = std::move(row);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Top-level runners (one per CLI subcommand).

inline RunOutcome run_fit(const ExperimentSpec& spec) {
  const Dataset data = load_dataset(spec);
  const RegressionFit fit = regress::fit_ols(data);
  RunOutcome out;
  ResultRow row;
  row.key = spec_key(spec, 0.0, spec.seed, "fit");
  row.attack = "fit";
  row.objective_kind = "none";
  row.beta_before = fit.beta0;
  row.beta_after = fit.beta0;
  out.rows.push_back(std::move(row));
  std::ostringstream note;
  note << "n=" << data.n() << " m=" << data.m() << " sigma_min=" << format_double(fit.sigma_min())
       << " sigma_max=" << format_double(fit.svd.singular_values.front());
  out.notes.push_back(note.str());
  return out;
}

inline RunOutcome run_attack_one(const ExperimentSpec& spec) {
  const Dataset data = load_dataset(spec);
  const RegressionFit fit = regress::fit_ols(data);
  RunOutcome out;
  out.rows.push_back(attack_one_row(fit, spec, spec.eta));
  if (spec.trials > 0)
    out.rows.push_back(random_baseline(data, fit, spec, spec.eta, resolve_threads(spec.threads)));

  std::filesystem::create_directories(spec.out_dir);
  std::vector<std::string> cats;
  for (std::size_t j = 0; j < fit.m(); ++j) cats.push_back(std::to_string(j + 1));
  std::vector<svg::Series> series(out.rows.size() + 1);
  series[0].label = "original";
  for (std::size_t j = 0; j < fit.m(); ++j) series[0].points.push_back({double(j), fit.beta0[j]});
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    series[r + 1].label = out.rows[r].attack;
    for (std::size_t j = 0; j < fit.m(); ++j)
      series[r + 1].points.push_back({double(j), out.rows[r].beta_after[j]});
  }
  svg::write_bar_chart(spec.out_dir + "/attack_one_coefficients.svg",
                       "Coefficients before/after the one-point attack", cats, series);
  write_results_csv(spec.out_dir + "/attack_one.csv", out.rows);
  return out;
}

inline RunOutcome run_attack_multi(const ExperimentSpec& spec) {
  const Dataset data = load_dataset(spec);
  const RegressionFit fit = regress::fit_ols(data);
  RunOutcome out;
  const auto res = attack_multi_row(fit, spec, spec.eta);
  out.rows.push_back(res.row);
  if (!res.archimedean_verified)
    out.notes.push_back("warning: compactness of the constraint set not verified");
  if (spec.trials > 0) {
    ExperimentSpec base = spec;
    base.objective = ObjectiveKind::pinned;
    out.rows.push_back(random_baseline(data, fit, base, spec.eta, resolve_threads(spec.threads)));
  }
  if (!res.row.certified || !res.row.extracted) out.exit_code = 2;

  std::filesystem::create_directories(spec.out_dir);
  std::vector<std::string> cats;
  for (std::size_t j = 0; j < fit.m(); ++j) cats.push_back(std::to_string(j + 1));
  std::vector<svg::Series> series(2);
  series[0].label = "original";
  series[1].label = "relaxation";
  for (std::size_t j = 0; j < fit.m(); ++j) {
    series[0].points.push_back({double(j), fit.beta0[j]});
    series[1].points.push_back(
        {double(j), res.row.beta_after.empty() ? fit.beta0[j] : res.row.beta_after[j]});
  }
  svg::write_bar_chart(spec.out_dir + "/attack_multi_coefficients.svg",
                       "Coefficients before/after the pinned attack", cats, series);
  write_results_csv(spec.out_dir + "/attack_multi.csv", out.rows);
  return out;
}

inline RunOutcome run_attack_rankone(const ExperimentSpec& spec) {
  const Dataset data = load_dataset(spec);
  const RegressionFit fit = regress::fit_ols(data);
  if (spec.eta >= 1.0 && !spec.allow_unbounded)
    throw DimensionError("attack-rankone: eta fraction must be < 1 (pass --demo-unbounded to show the refusal)");
  RunOutcome out;
  const auto res =
      attack_rankone_rows(data, fit, spec, spec.eta, resolve_threads(spec.threads));
  out.rows = res.rows;
  if (res.unbounded) {
    out.exit_code = 3;
    std::ostringstream note;
    note << "unbounded: eta = " << format_double(spec.eta * res.sigma_min)
         << " >= sigma_min = " << format_double(res.sigma_min)
         << "; certificate factors written to the results row";
    out.notes.push_back(note.str());
  }
  std::filesystem::create_directories(spec.out_dir);
  write_results_csv(spec.out_dir + "/attack_rankone.csv", out.rows);
  return out;
}

inline RunOutcome run_baseline(const ExperimentSpec& spec) {
  const Dataset data = load_dataset(spec);
  const RegressionFit fit = regress::fit_ols(data);
  RunOutcome out;
  out.rows.push_back(random_baseline(data, fit, spec, spec.eta, resolve_threads(spec.threads)));
  std::filesystem::create_directories(spec.out_dir);
  write_results_csv(spec.out_dir + "/baseline.csv", out.rows);
  return out;
}

inline RunOutcome run_validate(const ExperimentSpec& spec) {
  const Dataset data = load_dataset(spec);
  const RegressionFit fit = regress::fit_ols(data);
  RunOutcome out;

  const auto qp = polyatk::build_quartic(fit, spec.target_index, std::max(spec.eta, 0.5), 1.0);
  const double eta_h = 0.5 * fit.sigma_min();
  const auto ctx =
      rankone::make_context(data, fit, spec.target_index, rankone::TargetSense::decrease, eta_h);
  const double worst = pgd::validate_attack_gradients(ctx, qp, 100, spec.seed);
  std::ostringstream note;
  note << "gradient check: max relative error " << format_double(worst) << " (threshold 1e-5)";
  out.notes.push_back(note.str());
  if (worst > 1e-5) out.exit_code = 1;

  // Refit identity spot check.
  CounterRng rng(spec.seed);
  double worst_refit = 0.0;
  for (int t = 0; t < 50; ++t) {
    PoisonPoint p;
    p.x0 = rng.uniform_in_ball(fit.m(), 1.0);
    p.y0 = rng.next_normal();
    const Vec fast = regress::refit_add_point(fit, p);
    const Vec slow = regress::refit_direct(data, p);
    for (std::size_t j = 0; j < fit.m(); ++j)
      worst_refit = std::max(worst_refit, std::abs(fast[j] - slow[j]));
  }
  std::ostringstream note2;
  note2 << "refit identity: max abs deviation " << format_double(worst_refit) << " (threshold 1e-8)";
  out.notes.push_back(note2.str());
  if (worst_refit > 1e-8) out.exit_code = 1;
  return out;
}

/// Energy sweep with per-family algorithm comparisons; emits the results CSV
/// plus line plots of objective (and for rank-one also iteration and time)
/// versus the budget.
inline RunOutcome run_sweep(const ExperimentSpec& spec) {
  const Dataset data = load_dataset(spec);
  const RegressionFit fit = regress::fit_ols(data);
  const std::size_t threads = resolve_threads(spec.threads);
  if (spec.eta_grid.empty()) throw DimensionError("sweep: empty eta grid");
  RunOutcome out;
  std::filesystem::create_directories(spec.out_dir);

  if (spec.attack == AttackKind::one) {
    svg::Series closed{"closed-form", {}}, rand{"random best", {}};
    for (const double eta : spec.eta_grid) {
      ResultRow row = attack_one_row(fit, spec, eta);
      closed.points.push_back({eta, row.objective});
      out.rows.push_back(std::move(row));
      if (spec.trials > 0) {
        ResultRow rb = random_baseline(data, fit, spec, eta, threads);
        rand.points.push_back({eta, rb.objective});
        out.rows.push_back(std::move(rb));
      }
    }
    svg::write_line_plot(spec.out_dir + "/sweep_one.svg", "One-point attack objective vs budget",
                         "energy budget", "objective", {closed, rand});
  } else if (spec.attack == AttackKind::multi) {
    svg::Series poly{"relaxation", {}}, grad{"pgd mean", {}}, rand{"random best", {}};
    for (const double eta : spec.eta_grid) {
      auto res = attack_multi_row(fit, spec, eta);
      poly.points.push_back({eta, res.row.objective});
      if (!res.row.certified) out.exit_code = 2;
      out.rows.push_back(std::move(res.row));

      // PGD restarts, aggregated by the requested reduction (mean by default here).
      const auto qp = polyatk::build_quartic(fit, spec.target_index, eta, spec.lambda);
      std::vector<double> finals(spec.restarts, 0.0);
      parallel_for(spec.restarts, threads, [&](std::size_t r) {
        pgd::PgdConfig cfg;
        cfg.stepsize_base = 1.0;
        cfg.max_iterations = spec.max_iterations;
        cfg.tol = spec.tol;
        cfg.seed = CounterRng(spec.seed).stream(r).seed();
        finals[r] = pgd::pgd_attack_pinned(qp, cfg).trace.back();
      });
      double agg = 0.0;
      if (spec.reduction == Reduction::mean) {
        for (const double v : finals) agg += v;
        agg /= static_cast<double>(spec.restarts);
      } else {
        agg = *std::min_element(finals.begin(), finals.end());
      }
      ResultRow g;
      g.key = spec_key(spec, eta, spec.seed, "pgd");
      g.attack = "pgd";
      g.objective_kind = "pinned";
      g.index_1based = spec.target_index + 1;
      g.eta = eta;
      g.lambda = spec.lambda;
      g.seed = spec.seed;
      g.trials = spec.restarts;
      g.reduction = spec.reduction == Reduction::mean ? "mean" : "best";
      g.objective = agg;
      g.beta_before = fit.beta0;
      grad.points.push_back({eta, agg});
      out.rows.push_back(std::move(g));

      ExperimentSpec base = spec;
      base.objective = ObjectiveKind::pinned;
      ResultRow rb = random_baseline(data, fit, base, eta, threads);
      rand.points.push_back({eta, rb.objective});
      out.rows.push_back(std::move(rb));
    }
    svg::write_line_plot(spec.out_dir + "/sweep_multi.svg", "Pinned attack objective vs budget",
                         "energy budget", "objective", {poly, grad, rand});
  } else if (spec.attack == AttackKind::rankone) {
    const double sigma_m = fit.sigma_min();
    const std::vector<double> steps = {1.0, 10.0, 100.0};
    svg::Series ao_v{"AO", {}};
    std::vector<svg::Series> gd_v = {{"GD-1", {}}, {"GD-10", {}}, {"GD-100", {}}};
    svg::Series ao_i{"AO", {}};
    std::vector<svg::Series> gd_i = {{"GD-1", {}}, {"GD-10", {}}, {"GD-100", {}}};
    svg::Series ao_t{"AO", {}};
    std::vector<svg::Series> gd_t = {{"GD-1", {}}, {"GD-10", {}}, {"GD-100", {}}};

    for (const double frac : spec.eta_grid) {
      if (frac >= 1.0 && !spec.allow_unbounded)
        throw DimensionError("sweep: rank-one eta fractions must stay below 1");
      const double eta = frac * sigma_m;
      const auto ctx = rankone::make_context(data, fit, spec.target_index,
                                             spec.objective == ObjectiveKind::coef_max
                                                 ? rankone::TargetSense::increase
                                                 : rankone::TargetSense::decrease,
                                             eta);
      struct Acc {
        double obj = 0.0, iters = 0.0, ms = 0.0;
      };
      Acc ao;
      std::vector<Acc> gd(steps.size());
      std::vector<double> ao_obj(spec.restarts), ao_it(spec.restarts), ao_ms(spec.restarts);
      std::vector<std::vector<double>> gd_obj(steps.size(), std::vector<double>(spec.restarts));
      std::vector<std::vector<double>> gd_it(steps.size(), std::vector<double>(spec.restarts));
      std::vector<std::vector<double>> gd_ms(steps.size(), std::vector<double>(spec.restarts));

      parallel_for(spec.restarts, threads, [&](std::size_t r) {
        const std::uint64_t seed_r = CounterRng(spec.seed).stream(r).seed();
        {
          WallTimer timer;
          rankone::AlternatingOptions opts;
          opts.seed = seed_r;
          opts.tol = spec.tol;
          opts.max_iterations = spec.max_iterations;
          const auto res = rankone::alternating_attack(ctx, opts);
          ao_obj[r] = res.objective;
          ao_it[r] = static_cast<double>(res.iterations);
          ao_ms[r] = timer.ms();
        }
        const auto [c0, d0] = rankone::random_start(ctx, seed_r);
        for (std::size_t s = 0; s < steps.size(); ++s) {
          WallTimer timer;
          pgd::PgdConfig cfg;
          cfg.stepsize_base = steps[s];
          cfg.max_iterations = spec.max_iterations;
          cfg.tol = spec.tol;
          const auto res = pgd::pgd_attack_rankone(ctx, c0, d0, cfg);
          gd_obj[s][r] = res.trace.back();
          gd_it[s][r] = static_cast<double>(res.iterations);
          gd_ms[s][r] = timer.ms();
        }
      });
      const auto mean = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (const double x : v) acc += x;
        return acc / static_cast<double>(v.size());
      };
      ao = {mean(ao_obj), mean(ao_it), mean(ao_ms)};
      ao_v.points.push_back({frac, ao.obj});
      ao_i.points.push_back({frac, ao.iters});
      ao_t.points.push_back({frac, ao.ms});
      for (std::size_t s = 0; s < steps.size(); ++s) {
        gd[s] = {mean(gd_obj[s]), mean(gd_it[s]), mean(gd_ms[s])};
        gd_v[s].points.push_back({frac, gd[s].obj});
        gd_i[s].points.push_back({frac, gd[s].iters});
        gd_t[s].points.push_back({frac, gd[s].ms});
      }

      ResultRow row;
      row.key = spec_key(spec, eta, spec.seed, "alternating-mean");
      row.attack = "rankone";
      row.objective_kind = to_string(spec.objective);
      row.index_1based = spec.target_index + 1;
      row.eta = eta;
      row.seed = spec.seed;
      row.trials = spec.restarts;
      row.reduction = "mean";
      row.objective = ao.obj;
      row.iterations = static_cast<std::size_t>(ao.iters);
      row.wall_ms = ao.ms;
      row.beta_before = fit.beta0;
      out.rows.push_back(std::move(row));
      for (std::size_t s = 0; s < steps.size(); ++s) {
        ResultRow g;
        std::ostringstream algo;
        algo << "gd-" << steps[s];
        g.key = spec_key(spec, eta, spec.seed, algo.str().c_str());
        g.attack = "pgd";
        g.objective_kind = to_string(spec.objective);
        g.index_1based = spec.target_index + 1;
        g.eta = eta;
        g.seed = spec.seed;
        g.trials = spec.restarts;
        g.reduction = "mean";
        g.objective = gd[s].obj;
        g.iterations = static_cast<std::size_t>(gd[s].iters);
        g.wall_ms = gd[s].ms;
        g.beta_before = fit.beta0;
        out.rows.push_back(std::move(g));
      }
    }
    std::vector<svg::Series> values = {ao_v, gd_v[0], gd_v[1], gd_v[2]};
    std::vector<svg::Series> iters = {ao_i, gd_i[0], gd_i[1], gd_i[2]};
    std::vector<svg::Series> times = {ao_t, gd_t[0], gd_t[1], gd_t[2]};
    svg::write_line_plot(spec.out_dir + "/sweep_rankone_objective.svg",
                         "Rank-one attack mean objective", "eta / sigma_min", "objective", values);
    svg::write_line_plot(spec.out_dir + "/sweep_rankone_iterations.svg",
                         "Rank-one attack mean iterations", "eta / sigma_min", "iterations", iters);
    svg::write_line_plot(spec.out_dir + "/sweep_rankone_time.svg", "Rank-one attack mean run time",
                         "eta / sigma_min", "milliseconds", times);

    // Convergence traces at the largest budget (one representative seed).
    const double frac = spec.eta_grid.back();
    const double eta = frac * sigma_m;
    const auto ctx = rankone::make_context(data, fit, spec.target_index,
                                           rankone::TargetSense::decrease, eta);
    const std::uint64_t seed0 = CounterRng(spec.seed).stream(0).seed();
    rankone::AlternatingOptions opts;
    opts.seed = seed0;
    opts.tol = spec.tol;
    opts.max_iterations = spec.max_iterations;
    const auto ao_run = rankone::alternating_attack(ctx, opts);
    const auto [c0, d0] = rankone::random_start(ctx, seed0);
    pgd::PgdConfig cfg;
    cfg.stepsize_base = 100.0;
    cfg.max_iterations = std::min<std::size_t>(spec.max_iterations, 2000);
    cfg.tol = spec.tol;
    const auto gd_run = pgd::pgd_attack_rankone(ctx, c0, d0, cfg);
    svg::Series tr_ao{"AO", {}}, tr_gd{"GD-100", {}};
    for (std::size_t k = 0; k < ao_run.trace.size(); ++k)
      tr_ao.points.push_back({double(k), ao_run.trace[k]});
    for (std::size_t k = 0; k < gd_run.trace.size(); ++k)
      tr_gd.points.push_back({double(k), gd_run.trace[k]});
    svg::write_line_plot(spec.out_dir + "/sweep_rankone_trace.svg",
                         "Objective trace at the largest budget", "iteration", "objective",
                         {tr_ao, tr_gd});
  } else {
    throw DimensionError("sweep: unsupported attack family");
  }

  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const ResultRow& a, const ResultRow& b) { return a.key < b.key; });
  write_results_csv(spec.out_dir + "/sweep.csv", out.rows);
  return out;
}

}  // namespace lra::bench
