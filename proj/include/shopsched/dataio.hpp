#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shopsched/instance.hpp"
#include "shopsched/search.hpp"

namespace shopsched {

// --- generation ------------------------------------------------------------

struct GeneratorConfig {
  int jobs = 6;
  int tasks_per_job_min = 2;
  int tasks_per_job_max = 3;
  int stations = 2;
  int workers = 2;
  int slots_min = 1;
  int slots_max = 1;
  // Probability that a station beyond the first is a valid alternative for a
  // task, and that a worker beyond the first is capable of an op.
  double station_density = 0.6;
  double capability_density = 0.7;
  double setup_duration_min = 2.0;
  double setup_duration_max = 8.0;
  double processing_duration_min = 5.0;
  double processing_duration_max = 25.0;
  // Sequence factors are drawn uniformly from [min,max] (within [-1, 0.5])
  // for a `density` share of same-station task pairs; the rest stay neutral.
  double sequence_factor_min = -0.5;
  double sequence_factor_max = 0.5;
  double sequence_factor_density = 0.35;
  double automation_min = 0.2;
  double automation_max = 1.0;
  // Due date = chain lower bound x tightness, on jobs without successors.
  double due_date_tightness = 1.3;
  // Release times drawn from [0, spread x mean processing duration].
  double release_spread = 0.5;
  double precedence_probability = 0.15;
  std::uint64_t seed = 1;
};

// Named configurations: two benchmark regimes plus a sparse "realworld"
// flavor (few flexible stations, thin capability matrix).
// Throws std::invalid_argument for unknown names.
GeneratorConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

// Random instance; deterministic in the config (seed included). Generated
// instances always pass validate_instance. Throws std::invalid_argument on
// impossible configs (no stations, inverted ranges, ...).
ProblemInstance generate_instance(const GeneratorConfig&);

// --- instance files ----------------------------------------------------------

// Human-readable JSON document. save -> load -> save is byte-identical.
std::string save_instance(const ProblemInstance&);
// Throws std::invalid_argument naming the offending field path.
ProblemInstance load_instance_text(const std::string& text);

// --- schedule exports --------------------------------------------------------

// CSV with header: job,task,kind,station,worker,start,end
std::string export_schedule_csv(const Schedule&);
// Parses the same CSV (for external verification round trips). Throws
// std::invalid_argument with row numbers on malformed input.
Schedule parse_schedule_csv(const std::string& text, const ProblemInstance&);

// One lane per station (also empty ones), bars labeled "job.task kind".
std::string export_gantt_json(const Schedule&, const ProblemInstance&);

// Flat event log: time,event,job,task,kind,station,worker — op starts and
// completions in deterministic time order.
std::string export_event_trace(const Schedule&);

// --- exact-model export ------------------------------------------------------

struct MilpOptions {
  double big_m_scale = 1.5;     // big-M = scale x summed max op durations
  bool hard_due_dates = false;  // emit due dates as deadlines (feasibility probes)
  std::uint64_t max_rows = 2'000'000;
};

struct MilpDocument {
  std::string lp_text;
  std::map<std::string, int> rows_per_family;
  int binaries = 0;
  int continuous = 0;
};

// Emits the full mixed-integer model (objective, completion/tardiness
// linking, release times, duration couplings incl. sequence-dependent setups,
// assignment choice, worker-attention and slot-capacity disjunctions with
// big-M ordering binaries, setup adjacency, precedence) in LP file format.
// Throws std::invalid_argument when the row cap would be exceeded.
MilpDocument export_milp(const ProblemInstance&, const MilpOptions& = {});

// --- benchmark reports -------------------------------------------------------

struct BenchmarkRun {
  std::string dataset;
  std::string heuristic;
  std::uint64_t seed = 0;
  double makespan = 0.0;
  double tardiness = 0.0;
  double z = 0.0;  // against the dataset's shared reference solution
  double seconds = 0.0;
  int parallelism = 1;
  std::vector<GenerationStat> trajectory;
};

struct BenchmarkReport {
  // dataset -> heuristic -> aggregates
  struct Cell {
    int runs = 0;
    double mean_makespan = 0.0, std_makespan = 0.0;
    double mean_tardiness = 0.0, std_tardiness = 0.0;
    double mean_z = 0.0;
    double mean_seconds = 0.0;
  };
  std::map<std::string, std::map<std::string, Cell>> cells;
  std::string objective_table;   // makespan/tardiness per dataset x heuristic
  std::string timing_table;      // seconds per dataset x heuristic x parallelism
  std::string convergence_csv;   // generation,heuristic,dataset,mean_best_z
};

// Aggregates runs into mean / sample standard deviation tables (n-1 in the
// denominator; a single run reports std 0).
BenchmarkReport build_report(const std::vector<BenchmarkRun>&);

// Mean and sample standard deviation helper used by the report (exposed for
// tests).
std::pair<double, double> mean_and_sample_std(const std::vector<double>&);

}  // namespace shopsched
