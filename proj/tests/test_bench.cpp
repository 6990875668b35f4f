#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "lra/bench.hpp"
#include "support/oracles.hpp"

using namespace lra;
using namespace lra::bench;

namespace {

ExperimentSpec base_spec() {
  ExperimentSpec spec;
  spec.dataset = std::string(LRA_DATA_DIR) + "/istanbul_synthetic.csv";
  spec.out_dir = "test_bench_out";
  spec.target_index = 3;
  return spec;
}

}  // namespace

TEST_CASE("random baseline: determinism, joint normalization, monotone trials") {
  const ExperimentSpec spec = base_spec();
  const Dataset data = load_dataset(spec);
  const RegressionFit fit = regress::fit_ols(data);

  ExperimentSpec one = spec;
  one.trials = 1;
  one.seed = 77;
  const ResultRow a = random_baseline(data, fit, one, 0.2);
  const ResultRow b = random_baseline(data, fit, one, 0.2);
  REQUIRE(a.objective == b.objective);  // bitwise reproducible
  double energy = *a.point_y * *a.point_y;
  for (const double v : a.point_x) energy += v * v;
  REQUIRE(std::sqrt(energy) == Catch::Approx(0.2).epsilon(1e-12));

  ExperimentSpec small = spec;
  small.trials = 500;
  small.seed = 5;
  ExperimentSpec big = small;
  big.trials = 1000;
  const double v_small = random_baseline(data, fit, small, 0.2).objective;
  const double v_big = random_baseline(data, fit, big, 0.2).objective;
  REQUIRE(v_big <= v_small);

  // Thread count must not change the winner.
  ExperimentSpec par = spec;
  par.trials = 4000;
  const ResultRow serial = random_baseline(data, fit, par, 0.2, 1);
  const ResultRow threaded = random_baseline(data, fit, par, 0.2, 4);
  REQUIRE(serial.objective == threaded.objective);
  REQUIRE(serial.point_x == threaded.point_x);
}

TEST_CASE("random baseline never beats the closed form") {
  const ExperimentSpec spec = base_spec();
  const Dataset data = load_dataset(spec);
  const RegressionFit fit = regress::fit_ols(data);
  for (const double eta : {0.1, 0.2, 0.5}) {
    ExperimentSpec s = spec;
    s.trials = 10000;
    const ResultRow rand_row = random_baseline(data, fit, s, eta);
    const auto exact = onepoint::attack_coefficient(fit, 3, eta, onepoint::Sense::minimize);
    REQUIRE(rand_row.objective >= exact.predicted_value - 1e-12);
  }
}

TEST_CASE("attack-one run is replayable bit for bit") {
  ExperimentSpec spec = base_spec();
  spec.eta = 0.2;
  spec.trials = 2000;
  spec.seed = 99;
  const RunOutcome first = run_attack_one(spec);
  const RunOutcome second = run_attack_one(spec);
  REQUIRE(first.rows.size() == second.rows.size());
  for (std::size_t i = 0; i < first.rows.size(); ++i) {
    REQUIRE(first.rows[i].key == second.rows[i].key);
    REQUIRE(first.rows[i].objective == second.rows[i].objective);
    REQUIRE(first.rows[i].beta_after == second.rows[i].beta_after);
  }
  REQUIRE(std::filesystem::exists(spec.out_dir + "/attack_one.csv"));
  REQUIRE(std::filesystem::exists(spec.out_dir + "/attack_one_coefficients.svg"));
}

TEST_CASE("emitted rows replay through an independent refit") {
  ExperimentSpec spec = base_spec();
  spec.eta = 0.2;
  spec.trials = 100;
  const Dataset data = load_dataset(spec);

  const RunOutcome one = run_attack_one(spec);
  for (const auto& row : one.rows) {
    regress::PoisonPoint p;
    p.x0 = row.point_x;
    p.y0 = *row.point_y;
    const Vec redo = regress::refit_direct(data, p);
    for (std::size_t j = 0; j < redo.size(); ++j)
      REQUIRE(std::abs(redo[j] - row.beta_after[j]) <= 1e-6);
  }

  ExperimentSpec ro = base_spec();
  ro.attack = AttackKind::rankone;
  ro.eta = 0.5;  // fraction of sigma_min
  ro.restarts = 2;
  const RunOutcome rr = run_attack_rankone(ro);
  REQUIRE(rr.exit_code == 0);
  for (const auto& row : rr.rows) {
    matkit::Matrix xm = data.x;
    for (std::size_t i = 0; i < xm.rows(); ++i)
      for (std::size_t j = 0; j < xm.cols(); ++j) xm(i, j) += row.factor_c[i] * row.factor_d[j];
    Dataset poisoned{std::move(xm), data.y, {}};
    const Vec redo = regress::fit_ols(poisoned).beta0;
    for (std::size_t j = 0; j < redo.size(); ++j)
      REQUIRE(std::abs(redo[j] - row.beta_after[j]) <= 1e-6);
  }
}

TEST_CASE("shrink attack moves the targeted coefficient the most") {
  ExperimentSpec spec = base_spec();
  spec.eta = 0.2;
  spec.trials = 0;
  spec.objective = ObjectiveKind::abs_shrink;
  const RunOutcome out = run_attack_one(spec);
  const ResultRow& row = out.rows[0];
  std::size_t argmax = 0;
  double best = 0.0;
  for (std::size_t j = 0; j < row.beta_before.size(); ++j) {
    const double shift = std::abs(row.beta_after[j] - row.beta_before[j]);
    if (shift > best) {
      best = shift;
      argmax = j;
    }
  }
  REQUIRE(argmax == 3);
}

TEST_CASE("attack-multi exit codes: certified vs degenerate") {
  ExperimentSpec good = base_spec();
  good.attack = AttackKind::multi;
  good.objective = ObjectiveKind::pinned;
  good.eta = 1.0;
  good.lambda = -1.0;
  good.trials = 0;
  good.max_order = 2;
  const RunOutcome ok = run_attack_multi(good);
  REQUIRE(ok.exit_code == 0);
  REQUIRE(ok.rows[0].certified);
  REQUIRE(ok.rows[0].extracted);

  ExperimentSpec degen = good;
  degen.target_index = 5;
  degen.lambda = 1.0;  // surplus budget: optimizer set is a curve
  const RunOutcome bad = run_attack_multi(degen);
  REQUIRE(bad.exit_code == 2);
  REQUIRE_FALSE(bad.rows[0].certified);
}

TEST_CASE("rankone unbounded demo produces exit code 3 and the certificate") {
  ExperimentSpec spec = base_spec();
  spec.attack = AttackKind::rankone;
  spec.eta = 1.01;
  spec.allow_unbounded = true;
  const RunOutcome out = run_attack_rankone(spec);
  REQUIRE(out.exit_code == 3);
  REQUIRE(out.rows[0].unbounded);
  REQUIRE(out.rows[0].factor_c.size() == 536);
  REQUIRE(out.rows[0].factor_d.size() == 7);

  ExperimentSpec refused = spec;
  refused.allow_unbounded = false;
  REQUIRE_THROWS_AS(run_attack_rankone(refused), DimensionError);
}

TEST_CASE("sweep emits sorted rows and the expected artifacts") {
  ExperimentSpec spec = base_spec();
  spec.attack = AttackKind::rankone;
  spec.eta_grid = {0.3, 0.6};
  spec.restarts = 2;
  spec.max_iterations = 400;
  spec.out_dir = "test_bench_sweep";
  const RunOutcome out = run_sweep(spec);
  REQUIRE(out.rows.size() == 2 * 4);  // AO + three GD variants per grid point
  for (std::size_t i = 1; i < out.rows.size(); ++i) REQUIRE(out.rows[i - 1].key <= out.rows[i].key);
  for (const char* name : {"sweep.csv", "sweep_rankone_objective.svg", "sweep_rankone_iterations.svg",
                           "sweep_rankone_time.svg", "sweep_rankone_trace.svg"})
    REQUIRE(std::filesystem::exists(spec.out_dir + "/" + name));
}

TEST_CASE("validate passes on the shipped dataset") {
  ExperimentSpec spec = base_spec();
  const RunOutcome out = run_validate(spec);
  REQUIRE(out.exit_code == 0);
  REQUIRE(out.notes.size() == 2);
}
