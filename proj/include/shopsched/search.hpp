#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shopsched/agent.hpp"
#include "shopsched/genome.hpp"
#include "shopsched/instance.hpp"

namespace shopsched {

// Shared evaluation budget: every simulation-decode of a candidate solution
// consumes exactly one unit, across all heuristics.
struct SearchBudget {
  int max_evaluations = 500;
  int consumed = 0;

  int remaining() const { return max_evaluations - consumed; }
  bool exhausted() const { return consumed >= max_evaluations; }
};

struct GaConfig {
  int population_size = 50;
  int survivors = 8;
  int offspring = 20;
  // Mutation probability decays, crossover probability grows, both linearly
  // over the generation count the budget implies.
  double mutation_start = 0.9;
  double mutation_end = 0.1;
  double crossover_start = 0.1;
  double crossover_end = 0.9;
  // Embedded-annealing exploitation of the per-generation elite.
  double sa_probability = 0.5;
  int sa_steps = 25;
};

struct SaConfig {
  double cooling = 0.95;            // geometric, per accepted-or-rejected step
  int restart_after_stall = 20;     // non-improving steps before jumping to best
  int calibration_samples = 10;     // first proposals used to set T0
  double calibration_accept = 0.8;  // median |dZ| accepted with this probability
};

struct TsConfig {
  int tenure = 10;
  int neighborhood = 10;
};

struct GenerationStat {
  int generation = 0;
  double best_z = 0.0;   // best-so-far after the generation
  double mean_z = 0.0;   // over the individuals evaluated in the generation
  int evaluations = 0;   // consumed so far
  double seconds = 0.0;  // wall time of the generation
  // Raw objectives of the best-so-far solution, so trajectories from different
  // runs can be re-normalized against a common reference.
  double best_makespan = 0.0;
  double best_tardiness = 0.0;
};

struct SearchResult {
  Genome best_genome;
  Schedule best_schedule;
  ScheduleMetrics best_metrics;
  double best_z = 0.0;
  ScheduleMetrics baseline;  // reference solution the run normalized against
  std::vector<GenerationStat> trajectory;
  int evaluations = 0;
  double wall_seconds = 0.0;
};

// Population memetic search. `parallelism` splits each generation's
// evaluation batch over that many threads; results are bit-identical for any
// value because every genome carries its own derived RNG stream.
SearchResult run_ga(const ProblemInstance&, const GaConfig&, SearchBudget&,
                    std::uint64_t seed, int parallelism = 1);

// GA with embedded simulated-annealing exploitation of the generation elite.
SearchResult run_gasa(const ProblemInstance&, const GaConfig&, SearchBudget&,
                      std::uint64_t seed, int parallelism = 1);

// GASA with the trained policy injected into every decode: the policy's rule
// choice overrides the dispatching genes at each decision point and its queue
// flips write back into the evaluated genome (memetic inheritance).
SearchResult run_gasa_rl(const ProblemInstance&, const GaConfig&, SearchBudget&,
                         const Agent& policy, std::uint64_t seed,
                         int parallelism = 1);

// Simulated annealing with restarts over mutation neighbors of `start`.
SearchResult run_sars(const ProblemInstance&, const Genome& start,
                      const SaConfig&, SearchBudget&, std::uint64_t seed);

// Tabu search over mutation moves of `start`.
SearchResult run_ts(const ProblemInstance&, const Genome& start, const TsConfig&,
                    SearchBudget&, std::uint64_t seed);

// Decodes the deterministic least-loaded assignment under one rule;
// consumes exactly one evaluation.
SearchResult run_dispatch_baseline(const ProblemInstance&, DispatchRule,
                                   SearchBudget&);

// --- exhaustive oracle -----------------------------------------------------

struct BruteForceResult {
  Genome genome;
  Schedule schedule;
  ScheduleMetrics metrics;
  double z = 0.0;
  std::uint64_t enumerated = 0;
};

// Enumerates every (station, setup worker, processing worker) combination per
// task crossed with every forced queue order (decoded under arrival-order
// dispatch), and returns the Z-minimal schedule (ties: lower makespan, lower
// tardiness, earliest hit). `baseline` supplies the normalization; pass the
// same baseline as the heuristic run you compare against. Throws
// std::invalid_argument when the enumeration size exceeds `cap`.
BruteForceResult brute_force(const ProblemInstance&, std::uint64_t cap,
                             double weight_makespan, double weight_tardiness,
                             const ScheduleMetrics& baseline);

// Enumeration size without running it.
std::uint64_t brute_force_size(const ProblemInstance&);

}  // namespace shopsched
