#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "shopsched/instance.hpp"
#include "shopsched/sim.hpp"

namespace shopsched {

namespace {

constexpr double kTimeTol = 1e-9;       // exact arithmetic expected; slack for io round trips
constexpr double kAttentionTol = 1e-8;  // summation order differences

struct OpRef {
  const ScheduledOp* op;
  TaskId task() const { return {op->job, op->task}; }
};

std::string describe(const ScheduledOp& op) {
  std::ostringstream os;
  os << "job " << op.job << " task " << op.task << " "
     << (op.kind == OpKind::Setup ? "setup" : "processing") << " ["
     << op.start << ", " << op.end << ") on station " << op.station
     << " worker " << op.worker;
  return os.str();
}

// The processing op on `station` that most recently completed at or before
// `when`; deterministic tie-break (latest end, then latest start, then lowest
// job/task). This is the canonical setup-state predecessor.
std::optional<TaskId> predecessor_at(const std::vector<OpRef>& station_processing,
                                     TaskId self, double when) {
  const ScheduledOp* best = nullptr;
  for (const OpRef& ref : station_processing) {
    const ScheduledOp* op = ref.op;
    if (ref.task() == self) continue;
    if (op->end > when + kTimeTol) continue;
    if (best == nullptr) {
      best = op;
      continue;
    }
    if (op->end > best->end + kTimeTol) {
      best = op;
    } else if (std::abs(op->end - best->end) <= kTimeTol) {
      if (op->start > best->start + kTimeTol ||
          (std::abs(op->start - best->start) <= kTimeTol &&
           std::pair(op->job, op->task) < std::pair(best->job, best->task))) {
        best = op;
      }
    }
  }
  if (best == nullptr) return std::nullopt;
  return TaskId{best->job, best->task};
}

}  // namespace

std::vector<Violation> check_schedule_feasibility(const ProblemInstance& inst,
                                                  const Schedule& schedule) {
  std::vector<Violation> violations;
  auto flag = [&violations](std::string family, std::string detail) {
    violations.push_back({std::move(family), std::move(detail)});
  };

  // Index the schedule; structural sanity first.
  std::map<std::pair<TaskId, OpKind>, const ScheduledOp*> by_op;
  std::map<int, std::vector<OpRef>> station_ops;         // all ops per station
  std::map<int, std::vector<OpRef>> station_processing;  // processing per station
  for (const ScheduledOp& op : schedule.ops) {
    const TaskId id{op.job, op.task};
    if (inst.find_task(id) == nullptr) {
      flag("structural", "operation for unknown task: " + describe(op));
      continue;
    }
    if (!std::isfinite(op.start) || !std::isfinite(op.end) || op.start < -kTimeTol ||
        op.end < op.start - kTimeTol) {
      flag("structural", "invalid operation interval: " + describe(op));
      continue;
    }
    if (!by_op.emplace(std::pair(id, op.kind), &op).second) {
      flag("structural", "duplicate operation: " + describe(op));
      continue;
    }
    station_ops[op.station].push_back({&op});
    if (op.kind == OpKind::Processing) station_processing[op.station].push_back({&op});
  }

  // Per-task checks: presence, eligibility, durations, release, adjacency.
  for (const TaskId& id : inst.all_task_ids()) {
    const TaskSpec& spec = inst.task_at(id);
    auto processing_it = by_op.find({id, OpKind::Processing});
    auto setup_it = by_op.find({id, OpKind::Setup});
    if (processing_it == by_op.end()) {
      flag("structural", "missing processing operation for job " +
                             std::to_string(id.job) + " task " +
                             std::to_string(id.task));
      continue;
    }
    const ScheduledOp& proc = *processing_it->second;

    const TaskAlternative* alt = inst.find_alternative(id, proc.station);
    if (alt == nullptr) {
      flag("station_eligibility",
           "station is not an alternative of the task: " + describe(proc));
      continue;
    }
    const Station* station = inst.find_station(proc.station);

    auto proc_duration = alt->processing_workers.find(proc.worker);
    if (proc_duration == alt->processing_workers.end()) {
      flag("worker_eligibility",
           "worker cannot process the task there: " + describe(proc));
    } else if (std::abs((proc.end - proc.start) - proc_duration->second) > kTimeTol) {
      std::ostringstream os;
      os << describe(proc) << " should take " << proc_duration->second;
      flag("processing_duration", os.str());
    }

    if (proc.start < spec.release_time - kTimeTol) {
      std::ostringstream os;
      os << describe(proc) << " starts before release " << spec.release_time;
      flag("release_time", os.str());
    }

    if (setup_it == by_op.end()) {
      if (station != nullptr && station->requires_setup) {
        flag("setup_presence", "missing setup operation for job " +
                                   std::to_string(id.job) + " task " +
                                   std::to_string(id.task));
      }
      continue;
    }
    const ScheduledOp& setup = *setup_it->second;
    if (station != nullptr && !station->requires_setup) {
      flag("setup_presence",
           "setup scheduled on a station that needs none: " + describe(setup));
      continue;
    }
    if (setup.station != proc.station) {
      flag("station_eligibility",
           "setup and processing sit on different stations: " + describe(setup));
      continue;
    }
    if (setup.end > proc.start + kTimeTol) {
      flag("setup_before_processing",
           "setup must finish before processing starts: " + describe(setup));
    }
    auto setup_duration_it = alt->setup_workers.find(setup.worker);
    if (setup_duration_it == alt->setup_workers.end()) {
      flag("worker_eligibility",
           "worker cannot set up the task there: " + describe(setup));
    } else {
      const std::optional<TaskId> prev =
          predecessor_at(station_processing[setup.station], id, setup.start);
      const double expected =
          setup_duration(inst, prev, id, setup.station, setup.worker);
      if (std::abs((setup.end - setup.start) - expected) > kTimeTol) {
        std::ostringstream os;
        os << describe(setup) << " should take " << expected
           << " (sequence predecessor: ";
        if (prev) {
          os << "job " << prev->job << " task " << prev->task;
        } else {
          os << "none";
        }
        os << ")";
        flag("setup_duration", os.str());
      }
    }
  }

  // Within-job chain order.
  for (const Job& job : inst.jobs) {
    for (int t = 1; t < static_cast<int>(job.tasks.size()); ++t) {
      auto prev_it = by_op.find({{job.id, t - 1}, OpKind::Processing});
      auto this_it = by_op.find({{job.id, t}, OpKind::Processing});
      if (prev_it == by_op.end() || this_it == by_op.end()) continue;
      if (this_it->second->start < prev_it->second->end - kTimeTol) {
        std::ostringstream os;
        os << "job " << job.id << " task " << t << " starts at "
           << this_it->second->start << " before task " << (t - 1)
           << " finishes at " << prev_it->second->end;
        flag("job_task_order", os.str());
      }
    }
  }

  // Cross-job precedence.
  for (const auto& [succ, pred] : inst.job_precedence) {
    const Job* pred_job = inst.find_job(pred);
    if (pred_job == nullptr || pred_job->tasks.empty()) continue;
    auto pred_it = by_op.find(
        {{pred, static_cast<int>(pred_job->tasks.size()) - 1}, OpKind::Processing});
    auto succ_it = by_op.find({{succ, 0}, OpKind::Processing});
    if (pred_it == by_op.end() || succ_it == by_op.end()) continue;
    if (succ_it->second->start < pred_it->second->end - kTimeTol) {
      std::ostringstream os;
      os << "job " << succ << " starts at " << succ_it->second->start
         << " before predecessor job " << pred << " finishes at "
         << pred_it->second->end;
      flag("job_precedence", os.str());
    }
  }

  // Worker attention: sum of concurrent commitments must stay within 1.0.
  // Setups bind full attention, processing binds the automation fraction.
  {
    struct AttentionEvent {
      double time;
      int phase;  // 0 = release, 1 = acquire (releases apply first at a tie)
      double load;
      const ScheduledOp* op;
    };
    std::map<int, std::vector<AttentionEvent>> per_worker;
    for (const ScheduledOp& op : schedule.ops) {
      const TaskId id{op.job, op.task};
      if (inst.find_task(id) == nullptr) continue;
      if (op.end - op.start <= kTimeTol) continue;  // zero-length holds nothing
      const double load = op.kind == OpKind::Setup
                              ? 1.0
                              : inst.automation_degree(id, op.station);
      per_worker[op.worker].push_back({op.start, 1, load, &op});
      per_worker[op.worker].push_back({op.end, 0, -load, &op});
    }
    for (auto& [worker, events] : per_worker) {
      std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.phase != b.phase) return a.phase < b.phase;
        return std::pair(a.op->job, a.op->task) < std::pair(b.op->job, b.op->task);
      });
      double level = 0.0;
      for (const AttentionEvent& ev : events) {
        level += ev.load;
        if (ev.phase == 1 && level > 1.0 + kAttentionTol) {
          std::ostringstream os;
          os << "worker " << worker << " reaches attention " << level << " at "
             << ev.time << " acquiring " << describe(*ev.op);
          flag("worker_attention", os.str());
        }
      }
    }
  }

  // Slot capacity: concurrent operations per station bounded by its slots.
  for (auto& [station_id, refs] : station_ops) {
    const Station* station = inst.find_station(station_id);
    if (station == nullptr) {
      flag("station_eligibility",
           "operations scheduled on unknown station " + std::to_string(station_id));
      continue;
    }
    struct SlotEvent {
      double time;
      int phase;  // 0 = end, 1 = start
      const ScheduledOp* op;
    };
    std::vector<SlotEvent> events;
    for (const OpRef& ref : refs) {
      if (ref.op->end - ref.op->start <= kTimeTol) continue;
      events.push_back({ref.op->start, 1, ref.op});
      events.push_back({ref.op->end, 0, ref.op});
    }
    std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
      if (a.time != b.time) return a.time < b.time;
      if (a.phase != b.phase) return a.phase < b.phase;
      return std::pair(a.op->job, a.op->task) < std::pair(b.op->job, b.op->task);
    });
    int level = 0;
    for (const SlotEvent& ev : events) {
      level += ev.phase == 1 ? 1 : -1;
      if (ev.phase == 1 && level > station->slots) {
        std::ostringstream os;
        os << "station " << station_id << " runs " << level
           << " concurrent operations (capacity " << station->slots << ") at "
           << ev.time << " starting " << describe(*ev.op);
        flag("slot_capacity", os.str());
      }
    }
  }

  // Setup adjacency: a task holds its slot from setup start to processing
  // end, so between its setup end and processing start at most slots-1
  // operations of other tasks may run on the station. On single-slot stations
  // this is exactly "nothing interleaves".
  for (const TaskId& id : inst.all_task_ids()) {
    auto setup_it = by_op.find({id, OpKind::Setup});
    auto proc_it = by_op.find({id, OpKind::Processing});
    if (setup_it == by_op.end() || proc_it == by_op.end()) continue;
    const ScheduledOp& setup = *setup_it->second;
    const ScheduledOp& proc = *proc_it->second;
    if (setup.station != proc.station) continue;
    const Station* station = inst.find_station(setup.station);
    if (station == nullptr) continue;
    const double gap_begin = setup.end;
    const double gap_end = proc.start;
    if (gap_end - gap_begin <= kTimeTol) continue;

    struct GapEvent {
      double time;
      int delta;
    };
    std::vector<GapEvent> events;
    for (const OpRef& ref : station_ops[setup.station]) {
      if (ref.task() == id) continue;
      if (ref.op->end - ref.op->start <= kTimeTol) continue;
      const double from = std::max(ref.op->start, gap_begin);
      const double to = std::min(ref.op->end, gap_end);
      if (to - from <= kTimeTol) continue;
      events.push_back({from, 1});
      events.push_back({to, -1});
    }
    std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
      if (a.time != b.time) return a.time < b.time;
      return a.delta < b.delta;
    });
    int level = 0;
    for (const GapEvent& ev : events) {
      level += ev.delta;
      if (level > station->slots - 1) {
        std::ostringstream os;
        os << "job " << id.job << " task " << id.task
           << ": other work fills station " << setup.station
           << " between setup end " << gap_begin << " and processing start "
           << gap_end;
        flag("setup_adjacency", os.str());
        break;
      }
    }
  }

  // Reported tardiness must match the schedule (skipped when the schedule
  // carries no report, e.g. parsed from CSV).
  if (!schedule.tardiness_by_job.empty()) {
    for (const Job& job : inst.jobs) {
      if (!job.due_date) continue;
      auto completion = by_op.find(
          {{job.id, static_cast<int>(job.tasks.size()) - 1}, OpKind::Processing});
      if (completion == by_op.end()) continue;
      const double actual = std::max(0.0, completion->second->end - *job.due_date);
      auto reported = schedule.tardiness_by_job.find(job.id);
      const double value =
          reported == schedule.tardiness_by_job.end() ? 0.0 : reported->second;
      if (std::abs(actual - value) > kTimeTol) {
        std::ostringstream os;
        os << "job " << job.id << " reports tardiness " << value
           << " but the schedule implies " << actual;
        flag("tardiness_report", os.str());
      }
    }
  }

  return violations;
}

}  // namespace shopsched
