#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace shopsched {

// Identifies one task: `job` indexes ProblemInstance::jobs by id, `task` is
// the 0-based position inside that job's chain.
struct TaskId {
  int job = 0;
  int task = 0;
  auto operator<=>(const TaskId&) const = default;
};

enum class OpKind { Setup, Processing };

// One station a task may run on, with the capable workers and the duration
// each worker needs. Durations are worker-specific on purpose: a skilled
// worker finishes faster.
struct TaskAlternative {
  int station = 0;
  std::map<int, double> setup_workers;       // worker id -> base setup duration
  std::map<int, double> processing_workers;  // worker id -> processing duration
};

struct TaskSpec {
  double release_time = 0.0;  // material availability; processing cannot start earlier
  std::vector<TaskAlternative> alternatives;
  // station id -> attention fraction u in [0,1] the worker must dedicate while
  // the task processes there. Missing entry means full attention (1.0).
  std::map<int, double> automation;
};

struct Job {
  int id = 0;
  std::vector<TaskSpec> tasks;          // executed strictly in order
  std::optional<double> due_date;       // lateness beyond it counts as tardiness
};

struct Station {
  int id = 0;
  int slots = 1;                        // parallel workplaces
  bool requires_setup = true;           // false: tasks start processing directly
  // (previous task, next task) -> sequence factor in [-1, 0.5]. The factor
  // scales the next task's base setup duration by (1 + factor); pairs not
  // listed are neutral (0). -1 removes the setup entirely (same part family).
  std::map<std::pair<TaskId, TaskId>, double> sequence_factors;
};

struct Worker {
  int id = 0;  // attention capacity is always 1.0
};

struct ProblemInstance {
  std::vector<Job> jobs;
  std::vector<Station> stations;
  std::vector<Worker> workers;
  // (job, predecessor job): the job's first task waits until the predecessor
  // job's last task finished processing. Must be acyclic.
  std::set<std::pair<int, int>> job_precedence;
  double weight_makespan = 0.5;
  double weight_tardiness = 0.5;

  int task_count() const;
  const Job* find_job(int id) const;
  const TaskSpec* find_task(TaskId id) const;
  const TaskSpec& task_at(TaskId id) const;  // throws std::out_of_range
  const Station* find_station(int id) const;
  const TaskAlternative* find_alternative(TaskId id, int station) const;
  double automation_degree(TaskId id, int station) const;
  double sequence_factor(TaskId prev, TaskId next, int station) const;
  std::vector<TaskId> all_task_ids() const;  // job-major, task-minor
};

// --- schedules -------------------------------------------------------------

struct ScheduledOp {
  int job = 0;
  int task = 0;
  OpKind kind = OpKind::Processing;
  int station = 0;
  int worker = 0;
  double start = 0.0;
  double end = 0.0;
};

struct Schedule {
  // Canonical order: (job, task), setup before processing.
  std::vector<ScheduledOp> ops;
  std::map<int, double> tardiness_by_job;
};

struct StationMetrics {
  int station = 0;
  double avg_wip = 0.0;         // time-averaged count of released-but-unfinished tasks
  double throughput = 0.0;      // completed tasks per time unit over the horizon
  double mean_flow_time = 0.0;  // mean (processing end - release) of its tasks
  int completed = 0;
  std::vector<std::pair<double, double>> wip_series;  // (time, level) step function
};

struct ScheduleMetrics {
  double makespan = 0.0;
  double total_tardiness = 0.0;
  double horizon = 0.0;  // simulation end time
  std::map<int, double> job_flow_time;
  std::map<int, double> job_wait_time;
  std::vector<StationMetrics> stations;
};

// --- operations ------------------------------------------------------------

struct ValidationReport {
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

// Structural soundness of the data: non-empty resources, alternatives that
// reference existing stations/workers, positive durations, factor and
// attention ranges, acyclic job precedence, ...
ValidationReport validate_instance(const ProblemInstance&);

// Layered topological grouping of the global task DAG (within-job chains plus
// job-precedence edges). Group 1 holds tasks without predecessors; group g
// holds tasks whose predecessors all sit in groups below g. Groups are
// 1-based and contiguous. Throws std::invalid_argument on a cyclic instance.
std::map<TaskId, int> topology_groups(const ProblemInstance&);

double makespan(const Schedule&);  // throws std::invalid_argument when empty
double total_tardiness(const Schedule&, const ProblemInstance&);

// Weighted normalized objective:
//   Z = w_ms * makespan/base.makespan + w_tt * tardiness/max(base.tardiness, 1)
// Lower is better. Throws std::invalid_argument if the baseline makespan is
// not positive.
double scalarize(const ScheduleMetrics& m, const ScheduleMetrics& baseline,
                 double weight_makespan, double weight_tardiness);

struct Violation {
  std::string family;  // stable machine-readable constraint family name
  std::string detail;
};

// Checks a schedule against every model constraint: completeness, release
// times, durations (incl. sequence-dependent setups), resource eligibility,
// worker attention, slot capacity, setup/processing adjacency, within-job
// order, job precedence and reported tardiness. Empty result == feasible.
std::vector<Violation> check_schedule_feasibility(const ProblemInstance&,
                                                  const Schedule&);

}  // namespace shopsched
