#include "shopsched/instance.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>

namespace shopsched {

namespace {

std::string task_name(TaskId id) {
  std::ostringstream os;
  os << "job " << id.job << " task " << id.task;
  return os.str();
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

int ProblemInstance::task_count() const {
  int n = 0;
  for (const Job& job : jobs) n += static_cast<int>(job.tasks.size());
  return n;
}

const Job* ProblemInstance::find_job(int id) const {
  for (const Job& job : jobs) {
    if (job.id == id) return &job;
  }
  return nullptr;
}

const TaskSpec* ProblemInstance::find_task(TaskId id) const {
  const Job* job = find_job(id.job);
  if (job == nullptr) return nullptr;
  if (id.task < 0 || id.task >= static_cast<int>(job->tasks.size())) return nullptr;
  return &job->tasks[static_cast<std::size_t>(id.task)];
}

const TaskSpec& ProblemInstance::task_at(TaskId id) const {
  const TaskSpec* spec = find_task(id);
  if (spec == nullptr) throw std::out_of_range("unknown task: " + task_name(id));
  return *spec;
}

const Station* ProblemInstance::find_station(int id) const {
  for (const Station& station : stations) {
    if (station.id == id) return &station;
  }
  return nullptr;
}

const TaskAlternative* ProblemInstance::find_alternative(TaskId id,
                                                         int station) const {
  const TaskSpec* spec = find_task(id);
  if (spec == nullptr) return nullptr;
  for (const TaskAlternative& alt : spec->alternatives) {
    if (alt.station == station) return &alt;
  }
  return nullptr;
}

double ProblemInstance::automation_degree(TaskId id, int station) const {
  const TaskSpec* spec = find_task(id);
  if (spec == nullptr) return 1.0;
  auto it = spec->automation.find(station);
  return it == spec->automation.end() ? 1.0 : it->second;
}

double ProblemInstance::sequence_factor(TaskId prev, TaskId next,
                                        int station) const {
  const Station* st = find_station(station);
  if (st == nullptr) return 0.0;
  auto it = st->sequence_factors.find({prev, next});
  return it == st->sequence_factors.end() ? 0.0 : it->second;
}

std::vector<TaskId> ProblemInstance::all_task_ids() const {
  std::vector<TaskId> ids;
  ids.reserve(static_cast<std::size_t>(task_count()));
  for (const Job& job : jobs) {
    for (int t = 0; t < static_cast<int>(job.tasks.size()); ++t) {
      ids.push_back({job.id, t});
    }
  }
  return ids;
}

// --- validation --------------------------------------------------------------

ValidationReport validate_instance(const ProblemInstance& inst) {
  ValidationReport report;
  auto flag = [&report](const std::string& msg) { report.problems.push_back(msg); };

  if (inst.jobs.empty()) flag("instance has no jobs");
  if (inst.stations.empty()) flag("instance has no stations");
  if (inst.workers.empty()) flag("instance has no workers");
  if (!finite(inst.weight_makespan) || inst.weight_makespan < 0.0 ||
      !finite(inst.weight_tardiness) || inst.weight_tardiness < 0.0) {
    flag("objective weights must be finite and non-negative");
  }

  std::set<int> job_ids, station_ids, worker_ids;
  for (const Job& job : inst.jobs) {
    if (!job_ids.insert(job.id).second) {
      flag("duplicate job id " + std::to_string(job.id));
    }
    if (job.tasks.empty()) {
      flag("job " + std::to_string(job.id) + " has no tasks");
    }
    if (job.due_date && (!finite(*job.due_date) || *job.due_date < 0.0)) {
      flag("job " + std::to_string(job.id) + " has an invalid due date");
    }
  }
  for (const Station& st : inst.stations) {
    if (!station_ids.insert(st.id).second) {
      flag("duplicate station id " + std::to_string(st.id));
    }
    if (st.slots < 1) {
      flag("station " + std::to_string(st.id) + " needs at least one slot");
    }
  }
  for (const Worker& w : inst.workers) {
    if (!worker_ids.insert(w.id).second) {
      flag("duplicate worker id " + std::to_string(w.id));
    }
  }

  for (const Job& job : inst.jobs) {
    for (int t = 0; t < static_cast<int>(job.tasks.size()); ++t) {
      const TaskSpec& spec = job.tasks[static_cast<std::size_t>(t)];
      const std::string where = task_name({job.id, t});
      if (!finite(spec.release_time) || spec.release_time < 0.0) {
        flag(where + ": release time must be finite and non-negative");
      }
      if (spec.alternatives.empty()) {
        flag(where + ": needs at least one station alternative");
      }
      std::set<int> seen_stations;
      for (const TaskAlternative& alt : spec.alternatives) {
        if (station_ids.count(alt.station) == 0) {
          flag(where + ": alternative references unknown station " +
               std::to_string(alt.station));
        }
        if (!seen_stations.insert(alt.station).second) {
          flag(where + ": duplicate alternative for station " +
               std::to_string(alt.station));
        }
        if (alt.setup_workers.empty()) {
          flag(where + ": no capable setup worker on station " +
               std::to_string(alt.station));
        }
        if (alt.processing_workers.empty()) {
          flag(where + ": no capable processing worker on station " +
               std::to_string(alt.station));
        }
        for (const auto& [worker, duration] : alt.setup_workers) {
          if (worker_ids.count(worker) == 0) {
            flag(where + ": setup worker " + std::to_string(worker) +
                 " does not exist");
          }
          if (!finite(duration) || duration <= 0.0) {
            flag(where + ": setup duration must be positive (station " +
                 std::to_string(alt.station) + ", worker " +
                 std::to_string(worker) + ")");
          }
        }
        for (const auto& [worker, duration] : alt.processing_workers) {
          if (worker_ids.count(worker) == 0) {
            flag(where + ": processing worker " + std::to_string(worker) +
                 " does not exist");
          }
          if (!finite(duration) || duration <= 0.0) {
            flag(where + ": processing duration must be positive (station " +
                 std::to_string(alt.station) + ", worker " +
                 std::to_string(worker) + ")");
          }
        }
      }
      for (const auto& [station, degree] : spec.automation) {
        if (seen_stations.count(station) == 0) {
          flag(where + ": attention fraction given for station " +
               std::to_string(station) + " which is not an alternative");
        }
        if (!finite(degree) || degree < 0.0 || degree > 1.0) {
          flag(where + ": attention fraction must lie in [0, 1] (station " +
               std::to_string(station) + ")");
        }
      }
    }
  }

  for (const Station& st : inst.stations) {
    for (const auto& [pair, factor] : st.sequence_factors) {
      const auto& [prev, next] = pair;
      if (inst.find_task(prev) == nullptr) {
        flag("station " + std::to_string(st.id) +
             ": sequence factor references unknown " + task_name(prev));
      }
      if (inst.find_task(next) == nullptr) {
        flag("station " + std::to_string(st.id) +
             ": sequence factor references unknown " + task_name(next));
      }
      if (!finite(factor) || factor < -1.0 || factor > 0.5) {
        flag("station " + std::to_string(st.id) + ": sequence factor for " +
             task_name(prev) + " -> " + task_name(next) +
             " must lie in [-1, 0.5]");
      }
    }
  }

  for (const auto& [job, pred] : inst.job_precedence) {
    if (job_ids.count(job) == 0) {
      flag("precedence references unknown job " + std::to_string(job));
    }
    if (job_ids.count(pred) == 0) {
      flag("precedence references unknown predecessor job " + std::to_string(pred));
    }
    if (job == pred) {
      flag("job " + std::to_string(job) + " cannot precede itself");
    }
  }

  // Cycle detection over the job DAG (Kahn). Only meaningful when the ids
  // referenced above exist.
  {
    std::map<int, int> indegree;
    std::map<int, std::vector<int>> successors;
    for (const Job& job : inst.jobs) indegree[job.id] = 0;
    bool edges_ok = true;
    for (const auto& [job, pred] : inst.job_precedence) {
      if (indegree.count(job) == 0 || indegree.count(pred) == 0 || job == pred) {
        edges_ok = false;
        continue;
      }
      indegree[job] += 1;
      successors[pred].push_back(job);
    }
    if (edges_ok) {
      std::deque<int> ready;
      for (const auto& [id, deg] : indegree) {
        if (deg == 0) ready.push_back(id);
      }
      std::size_t visited = 0;
      while (!ready.empty()) {
        const int id = ready.front();
        ready.pop_front();
        ++visited;
        for (int next : successors[id]) {
          if (--indegree[next] == 0) ready.push_back(next);
        }
      }
      if (visited != indegree.size()) flag("job precedence contains a cycle");
    }
  }

  return report;
}

// --- topology groups ---------------------------------------------------------

std::map<TaskId, int> topology_groups(const ProblemInstance& inst) {
  std::map<TaskId, int> indegree;
  std::map<TaskId, std::vector<TaskId>> successors;
  for (const TaskId& id : inst.all_task_ids()) indegree[id] = 0;

  auto add_edge = [&](TaskId from, TaskId to) {
    successors[from].push_back(to);
    indegree[to] += 1;
  };

  for (const Job& job : inst.jobs) {
    for (int t = 1; t < static_cast<int>(job.tasks.size()); ++t) {
      add_edge({job.id, t - 1}, {job.id, t});
    }
  }
  for (const auto& [job, pred] : inst.job_precedence) {
    const Job* succ_job = inst.find_job(job);
    const Job* pred_job = inst.find_job(pred);
    if (succ_job == nullptr || pred_job == nullptr) {
      throw std::invalid_argument("job precedence references unknown jobs");
    }
    if (succ_job->tasks.empty() || pred_job->tasks.empty()) continue;
    add_edge({pred, static_cast<int>(pred_job->tasks.size()) - 1}, {job, 0});
  }

  std::map<TaskId, int> group;
  std::vector<TaskId> frontier;
  for (const auto& [id, deg] : indegree) {
    if (deg == 0) frontier.push_back(id);
  }
  int level = 0;
  std::size_t placed = 0;
  while (!frontier.empty()) {
    ++level;
    std::vector<TaskId> next;
    for (const TaskId& id : frontier) {
      group[id] = level;
      ++placed;
      for (const TaskId& succ : successors[id]) {
        if (--indegree[succ] == 0) next.push_back(succ);
      }
    }
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
  }
  if (placed != indegree.size()) {
    for (const auto& [id, deg] : indegree) {
      if (deg > 0) {
        throw std::invalid_argument("task precedence contains a cycle involving " +
                                    task_name(id));
      }
    }
  }
  return group;
}

// --- schedule metrics ----------------------------------------------------------

double makespan(const Schedule& schedule) {
  if (schedule.ops.empty()) {
    throw std::invalid_argument("makespan of an empty schedule is undefined");
  }
  double latest = 0.0;
  for (const ScheduledOp& op : schedule.ops) latest = std::max(latest, op.end);
  return latest;
}

double total_tardiness(const Schedule& schedule, const ProblemInstance& inst) {
  double total = 0.0;
  for (const Job& job : inst.jobs) {
    if (!job.due_date) continue;
    const int last = static_cast<int>(job.tasks.size()) - 1;
    const ScheduledOp* completion = nullptr;
    for (const ScheduledOp& op : schedule.ops) {
      if (op.job == job.id && op.task == last && op.kind == OpKind::Processing) {
        completion = &op;
        break;
      }
    }
    if (completion == nullptr) {
      throw std::invalid_argument(
          "schedule misses the completing operation of job " +
          std::to_string(job.id));
    }
    total += std::max(0.0, completion->end - *job.due_date);
  }
  return total;
}

double scalarize(const ScheduleMetrics& m, const ScheduleMetrics& baseline,
                 double weight_makespan, double weight_tardiness) {
  if (!(baseline.makespan > 0.0)) {
    throw std::invalid_argument("scalarize needs a baseline with positive makespan");
  }
  const double tardiness_ref = std::max(baseline.total_tardiness, 1.0);
  return weight_makespan * (m.makespan / baseline.makespan) +
         weight_tardiness * (m.total_tardiness / tardiness_ref);
}

}  // namespace shopsched
