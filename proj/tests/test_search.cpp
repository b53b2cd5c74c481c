#include <doctest.h>

#include <string>

#include "shopsched/dataio.hpp"
#include "shopsched/search.hpp"
#include "test_support.hpp"

using namespace shopsched;
using namespace shopsched::testing;

namespace {

ProblemInstance small_instance(std::uint64_t seed = 1) {
  GeneratorConfig cfg = preset_config("gbrt01");
  cfg.seed = seed;
  return generate_instance(cfg);
}

}  // namespace

TEST_CASE("searches consume exactly the evaluation budget") {
  const ProblemInstance inst = small_instance();

  SUBCASE("memetic run") {
    SearchBudget budget{120, 0};
    const SearchResult result = run_ga(inst, GaConfig{}, budget, 11);
    CHECK(budget.consumed == 120);
    CHECK(result.evaluations == 120);
    CHECK(budget.exhausted());
  }
  SUBCASE("memetic run with annealing") {
    SearchBudget budget{120, 0};
    const SearchResult result = run_gasa(inst, GaConfig{}, budget, 11);
    CHECK(budget.consumed == 120);
    CHECK(result.evaluations == 120);
  }
  SUBCASE("policy-injected run") {
    SearchBudget budget{90, 0};
    const Agent agent = make_agent(NetConfig{}, 5);
    const SearchResult result = run_gasa_rl(inst, GaConfig{}, budget, agent, 11);
    CHECK(budget.consumed == 90);
    CHECK(result.evaluations == 90);
  }
  SUBCASE("annealing with restarts") {
    SearchBudget budget{60, 0};
    const Genome start = balanced_genome(inst, DispatchRule::Str);
    const SearchResult result = run_sars(inst, start, SaConfig{}, budget, 11);
    CHECK(budget.consumed == 60);
    CHECK(result.evaluations == 60);
  }
  SUBCASE("tabu search") {
    SearchBudget budget{60, 0};
    const Genome start = balanced_genome(inst, DispatchRule::Str);
    const SearchResult result = run_ts(inst, start, TsConfig{}, budget, 11);
    CHECK(budget.consumed == 60);
    CHECK(result.evaluations == 60);
  }
}

TEST_CASE("dispatch baseline costs one evaluation and self-normalizes") {
  const ProblemInstance inst = small_instance();
  SearchBudget budget{500, 0};
  const SearchResult result = run_dispatch_baseline(inst, DispatchRule::Str, budget);
  CHECK(budget.consumed == 1);
  CHECK(result.evaluations == 1);
  CHECK(result.best_z ==
        doctest::Approx(inst.weight_makespan + inst.weight_tardiness));
  CHECK(result.baseline.makespan == doctest::Approx(result.best_metrics.makespan));
  CHECK(check_schedule_feasibility(inst, result.best_schedule).empty());
}

TEST_CASE("search results are deterministic in the seed") {
  const ProblemInstance inst = small_instance();

  auto fingerprint = [&](std::uint64_t seed) {
    SearchBudget budget{100, 0};
    const SearchResult result = run_gasa(inst, GaConfig{}, budget, seed);
    return export_schedule_csv(result.best_schedule) + "|" +
           std::to_string(result.best_z);
  };
  CHECK(fingerprint(7) == fingerprint(7));
  CHECK(fingerprint(7) != fingerprint(8));
}

TEST_CASE("parallel evaluation does not change the outcome") {
  const ProblemInstance inst = small_instance();

  auto run_with = [&](int parallelism) {
    SearchBudget budget{100, 0};
    return run_gasa(inst, GaConfig{}, budget, 13, parallelism);
  };
  const SearchResult serial = run_with(1);
  const SearchResult threaded = run_with(2);
  CHECK(serial.best_z == doctest::Approx(threaded.best_z).epsilon(0.0));
  CHECK(export_schedule_csv(serial.best_schedule) ==
        export_schedule_csv(threaded.best_schedule));
  REQUIRE(serial.trajectory.size() == threaded.trajectory.size());
  for (std::size_t i = 0; i < serial.trajectory.size(); ++i) {
    CHECK(serial.trajectory[i].best_z ==
          doctest::Approx(threaded.trajectory[i].best_z).epsilon(0.0));
    CHECK(serial.trajectory[i].mean_z ==
          doctest::Approx(threaded.trajectory[i].mean_z).epsilon(0.0));
  }
}

TEST_CASE("local searches never lose ground against their start") {
  const ProblemInstance inst = small_instance();
  const Genome start = balanced_genome(inst, DispatchRule::Str);

  SearchBudget probe{1, 0};
  const SearchResult start_eval = run_dispatch_baseline(inst, DispatchRule::Str, probe);
  // run_sars/run_ts normalize against the start decode, so its z is w1 + w2.
  const double start_z = inst.weight_makespan + inst.weight_tardiness;

  SUBCASE("annealing") {
    SearchBudget budget{80, 0};
    const SearchResult result = run_sars(inst, start, SaConfig{}, budget, 3);
    CHECK(result.best_z <= start_z + 1e-12);
    CHECK_FALSE(result.trajectory.empty());
    CHECK(check_schedule_feasibility(inst, result.best_schedule).empty());
  }
  SUBCASE("tabu") {
    SearchBudget budget{80, 0};
    const SearchResult result = run_ts(inst, start, TsConfig{}, budget, 3);
    CHECK(result.best_z <= start_z + 1e-12);
    CHECK_FALSE(result.trajectory.empty());
    CHECK(check_schedule_feasibility(inst, result.best_schedule).empty());
  }
  CHECK(start_eval.evaluations == 1);
}

TEST_CASE("trajectories are monotone in best-so-far and track the budget") {
  const ProblemInstance inst = small_instance();
  SearchBudget budget{150, 0};
  const SearchResult result = run_gasa(inst, GaConfig{}, budget, 19);
  REQUIRE_FALSE(result.trajectory.empty());
  double prev_best = result.trajectory.front().best_z;
  int prev_evals = 0;
  for (const GenerationStat& g : result.trajectory) {
    CHECK(g.best_z <= prev_best + 1e-12);
    CHECK(g.evaluations > prev_evals);
    CHECK(g.evaluations <= 150);
    prev_best = g.best_z;
    prev_evals = g.evaluations;
  }
  CHECK(result.trajectory.back().best_z == doctest::Approx(result.best_z));
  CHECK(result.trajectory.back().evaluations == 150);
  CHECK(check_schedule_feasibility(inst, result.best_schedule).empty());
}

TEST_CASE("exhaustive oracle sizes and caps") {
  const ProblemInstance single = single_task_instance();
  // One task, one station, one worker for both ops, one queue order.
  CHECK(brute_force_size(single) == 1);

  const ProblemInstance dual = slot_instance(1);
  // Two tasks with fixed assignments; only the queue order (2!) varies.
  CHECK(brute_force_size(dual) == 2);

  CHECK_THROWS_WITH_AS(
      brute_force(dual, 1, 0.5, 0.5, ScheduleMetrics{}),
      doctest::Contains("exceeds"), std::invalid_argument);
}

TEST_CASE("exhaustive oracle lower-bounds sampled decodes") {
  const ProblemInstance inst = diamond_instance();

  SearchBudget probe{1, 0};
  const SearchResult ref = run_dispatch_baseline(inst, DispatchRule::Fifo, probe);
  const BruteForceResult best =
      brute_force(inst, 1'000'000, inst.weight_makespan, inst.weight_tardiness,
                  ref.baseline);
  CHECK(best.enumerated == brute_force_size(inst));
  CHECK(check_schedule_feasibility(inst, best.schedule).empty());

  const auto population = init_population(inst, 12, 29);
  for (const Genome& genome : population) {
    const SimResult decoded = simulate(inst, genome);
    const double z = scalarize(decoded.metrics, ref.baseline,
                               inst.weight_makespan, inst.weight_tardiness);
    CHECK(best.z <= z + 1e-9);
  }
  CHECK(best.z <= ref.best_z + 1e-9);
}
