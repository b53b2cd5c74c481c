#include "shopsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <climits>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace shopsched {

namespace {
constexpr double kAttentionEps = 1e-9;
}

double setup_duration(const ProblemInstance& inst, std::optional<TaskId> prev,
                      TaskId task, int station, int worker) {
  const TaskAlternative* alt = inst.find_alternative(task, station);
  if (alt == nullptr) {
    throw std::invalid_argument("task has no alternative on station " +
                                std::to_string(station));
  }
  auto it = alt->setup_workers.find(worker);
  if (it == alt->setup_workers.end()) {
    throw std::invalid_argument("worker " + std::to_string(worker) +
                                " cannot set up on station " +
                                std::to_string(station));
  }
  double factor = 0.0;
  if (prev) factor = inst.sequence_factor(*prev, task, station);
  return it->second * (1.0 + factor);
}

void sort_queue(DispatchRule rule, std::vector<QueueItem>& queue) {
  auto canonical = [](const QueueItem& a, const QueueItem& b) {
    return a.task < b.task;
  };
  switch (rule) {
    case DispatchRule::Spt:
      std::sort(queue.begin(), queue.end(),
                [&](const QueueItem& a, const QueueItem& b) {
                  if (a.processing_duration != b.processing_duration) {
                    return a.processing_duration < b.processing_duration;
                  }
                  return canonical(a, b);
                });
      break;
    case DispatchRule::Lpt:
      std::sort(queue.begin(), queue.end(),
                [&](const QueueItem& a, const QueueItem& b) {
                  if (a.processing_duration != b.processing_duration) {
                    return a.processing_duration > b.processing_duration;
                  }
                  return canonical(a, b);
                });
      break;
    case DispatchRule::Mtwr:
      std::sort(queue.begin(), queue.end(),
                [&](const QueueItem& a, const QueueItem& b) {
                  if (a.job_remaining_work != b.job_remaining_work) {
                    return a.job_remaining_work > b.job_remaining_work;
                  }
                  return canonical(a, b);
                });
      break;
    case DispatchRule::Str:
      std::sort(queue.begin(), queue.end(),
                [&](const QueueItem& a, const QueueItem& b) {
                  const bool a_due = a.job_slack.has_value();
                  const bool b_due = b.job_slack.has_value();
                  if (a_due != b_due) return a_due;  // undated tasks go last
                  if (a_due && *a.job_slack != *b.job_slack) {
                    return *a.job_slack < *b.job_slack;
                  }
                  return canonical(a, b);
                });
      break;
    case DispatchRule::Fifo:
      std::sort(queue.begin(), queue.end(),
                [](const QueueItem& a, const QueueItem& b) {
                  if (a.arrival != b.arrival) return a.arrival < b.arrival;
                  return a.arrival_seq < b.arrival_seq;
                });
      break;
  }
}

namespace {

enum class TaskState {
  Queued,
  AwaitSetupWorker,  // pulled, waiting for the setup worker's full attention
  InSetup,
  AwaitReady,        // setup done (or not needed), waiting for release/predecessors
  AwaitProcWorker,   // ready, waiting for the processing worker's attention
  Processing,
  Done,
};

struct SimTask {
  TaskId id;
  int group = 1;
  double release = 0.0;
  // Current assignment (mutable through queue flips).
  int station = 0;
  int setup_worker = 0;
  int processing_worker = 0;
  double proc_duration = 0.0;
  double setup_base = 0.0;
  bool needs_setup = false;
  double attention = 1.0;

  TaskState state = TaskState::Queued;
  int pending_preds = 0;
  std::vector<int> successors;  // task indices
  double arrival = 0.0;
  int arrival_seq = 0;
  bool released = false;  // counted in station WIP
  int slot = -1;
  double setup_start = -1.0, setup_end = -1.0;
  double proc_start = -1.0, proc_end = -1.0;
};

struct SlotState {
  int station_index = 0;
  int owner = -1;  // task index, -1 when free
};

struct StationRt {
  const Station* cfg = nullptr;
  std::vector<int> slots;  // indices into the global slot array
  std::vector<int> queue;  // task indices, reordered on every dispatch
  // Canonical setup-state predecessor: the processing op with the latest end
  // (ties: latest start, lowest task id) completed so far.
  int last_proc_task = -1;
  double last_proc_end = -1.0, last_proc_start = -1.0;

  double wip_duration = 0.0;        // unfinished processing duration assigned here
  double done_proc_duration = 0.0;  // throughput numerator (duration units)
  int done_count = 0;
  double flow_sum = 0.0;

  int count_wip = 0;  // released & unfinished tasks (metrics series)
  double wip_integral = 0.0;
  double wip_changed_at = 0.0;
  std::vector<std::pair<double, double>> wip_series;
};

struct WorkerRt {
  int id = 0;
  std::map<std::pair<int, int>, double> commitments;  // (task idx, kind) -> load
  double wip = 0.0;  // attention-weighted unfinished planned durations

  double committed() const {
    double sum = 0.0;
    for (const auto& [key, load] : commitments) sum += load;
    return sum;
  }
};

struct Event {
  double time = 0.0;
  int kind = 0;  // 0 completion, 1 wake — completions free resources first
  long seq = 0;
  int task = -1;
  int op = 0;  // 0 setup, 1 processing

  bool operator>(const Event& other) const {
    if (time != other.time) return time > other.time;
    if (kind != other.kind) return kind > other.kind;
    return seq > other.seq;
  }
};

class Simulation {
 public:
  Simulation(const ProblemInstance& inst, const Genome& genome,
             DecisionHandler* handler, const SimOptions& options)
      : inst_(inst), genome_(genome), handler_(handler), options_(options) {
    build();
  }

  SimResult run();

 private:
  const ProblemInstance& inst_;
  const Genome& genome_;
  DecisionHandler* handler_;
  SimOptions options_;

  std::vector<SimTask> tasks_;
  std::map<TaskId, int> task_index_;
  std::vector<StationRt> stations_;
  std::map<int, int> station_index_;
  std::vector<int> station_order_;  // station positions in ascending id order
  std::vector<SlotState> slots_;
  std::map<int, WorkerRt> workers_;
  std::map<int, double> job_remaining_;  // unfinished processing work per job
  std::map<int, std::vector<int>> successor_jobs_;

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
  long event_seq_ = 0;
  std::uint64_t handled_events_ = 0;
  int recoveries_ = 0;
  double now_ = 0.0;
  int arrival_seq_ = 0;
  int done_tasks_ = 0;

  std::vector<ScheduledOp> ops_;
  std::vector<DecisionPoint> decisions_;
  std::map<TaskId, int> forced_rank_;  // only with options_.forced_priority

  void build();
  void push_event(double time, int kind, int task, int op);
  void handle_completion(const Event& ev);
  void dispatch_loop();
  bool progress_slot(StationRt& station, SlotState& slot);
  bool fill_slot(StationRt& station, int slot_index);
  void pull(StationRt& station, int slot_index, int task_index);
  bool chain_blocked_by(const SimTask& task, int station_id) const;
  bool successor_holds_slot(const SimTask& task, int station_id) const;
  bool recover_from_stall();
  void start_setup(StationRt& station, SimTask& task);
  void start_processing(SimTask& task);
  bool worker_can_take(int worker, double load) const;
  bool ready(const SimTask& task) const {
    return task.release <= now_ && task.pending_preds == 0;
  }
  std::vector<int> processable_in_queue(const StationRt& station) const;
  void sort_station_queue(StationRt& station, DispatchRule rule);
  FlipAction apply_flip(StationRt& station, FlipAction request);
  FeatureVector extract_features(const StationRt& station) const;
  void change_count_wip(StationRt& station, int delta);
  void assign_contributions(SimTask& task, int sign);
  static double planned_attention_load(const SimTask& task) {
    return task.attention * task.proc_duration;
  }
  SimResult finish();
  [[noreturn]] void report_deadlock() const;
};

void Simulation::build() {
  if (static_cast<int>(genome_.allocation.size()) != inst_.task_count()) {
    throw std::invalid_argument("genome does not cover every task of the instance");
  }
  if (options_.forced_priority) {
    int rank = 0;
    for (const TaskId& id : *options_.forced_priority) forced_rank_[id] = rank++;
  }

  stations_.reserve(inst_.stations.size());
  for (const Station& station : inst_.stations) {
    station_index_[station.id] = static_cast<int>(stations_.size());
    StationRt rt;
    rt.cfg = &station;
    stations_.push_back(rt);
  }
  for (StationRt& rt : stations_) {
    for (int s = 0; s < rt.cfg->slots; ++s) {
      rt.slots.push_back(static_cast<int>(slots_.size()));
      slots_.push_back({static_cast<int>(&rt - stations_.data()), -1});
    }
  }
  for (const auto& [id, pos] : station_index_) station_order_.push_back(pos);
  for (const Worker& worker : inst_.workers) {
    workers_[worker.id] = WorkerRt{worker.id, {}, 0.0};
  }
  for (const auto& [succ, pred] : inst_.job_precedence) {
    successor_jobs_[pred].push_back(succ);
  }

  // Tasks in canonical gene order; queues in the same order (arrival ties at
  // time zero resolve by gene position).
  tasks_.reserve(genome_.allocation.size());
  for (const AllocationGene& gene : genome_.allocation) {
    const TaskSpec& spec = inst_.task_at(gene.task);
    const TaskAlternative* alt = inst_.find_alternative(gene.task, gene.station);
    if (alt == nullptr) {
      throw std::invalid_argument("genome assigns an invalid station for job " +
                                  std::to_string(gene.task.job));
    }
    auto proc_it = alt->processing_workers.find(gene.processing_worker);
    auto setup_it = alt->setup_workers.find(gene.setup_worker);
    if (proc_it == alt->processing_workers.end() ||
        setup_it == alt->setup_workers.end()) {
      throw std::invalid_argument("genome assigns an incapable worker for job " +
                                  std::to_string(gene.task.job));
    }
    SimTask task;
    task.id = gene.task;
    task.group = gene.topology_group;
    task.release = spec.release_time;
    task.station = gene.station;
    task.setup_worker = gene.setup_worker;
    task.processing_worker = gene.processing_worker;
    task.proc_duration = proc_it->second;
    task.setup_base = setup_it->second;
    task.needs_setup = inst_.find_station(gene.station)->requires_setup;
    task.attention = inst_.automation_degree(gene.task, gene.station);
    task.arrival = 0.0;
    task.arrival_seq = arrival_seq_++;
    task_index_[gene.task] = static_cast<int>(tasks_.size());
    tasks_.push_back(task);
  }

  // Precedence wiring: within-job chains and job-to-job edges.
  for (SimTask& task : tasks_) {
    const Job* job = inst_.find_job(task.id.job);
    const int last = static_cast<int>(job->tasks.size()) - 1;
    if (task.id.task < last) {
      task.successors.push_back(task_index_.at({task.id.job, task.id.task + 1}));
    }
    job_remaining_[task.id.job] += task.proc_duration;
  }
  for (SimTask& task : tasks_) {
    if (task.id.task > 0) task.pending_preds += 1;
    if (task.id.task == 0) {
      for (const auto& [succ, pred] : inst_.job_precedence) {
        if (succ == task.id.job) task.pending_preds += 1;
      }
    }
  }
  for (const auto& [pred, succs] : successor_jobs_) {
    const Job* pred_job = inst_.find_job(pred);
    if (pred_job == nullptr || pred_job->tasks.empty()) continue;
    SimTask& last_task =
        tasks_[task_index_.at({pred, static_cast<int>(pred_job->tasks.size()) - 1})];
    for (int succ : succs) {
      auto it = task_index_.find({succ, 0});
      if (it != task_index_.end()) last_task.successors.push_back(it->second);
    }
  }

  for (int i = 0; i < static_cast<int>(tasks_.size()); ++i) {
    SimTask& task = tasks_[i];
    StationRt& station = stations_[station_index_.at(task.station)];
    station.queue.push_back(i);
    station.wip_duration += task.proc_duration;
    assign_contributions(task, +1);
    if (task.release <= 0.0) {
      task.released = true;
      change_count_wip(station, +1);
    } else {
      push_event(task.release, 1, i, 0);
    }
  }
}

void Simulation::assign_contributions(SimTask& task, int sign) {
  if (task.needs_setup) {
    workers_.at(task.setup_worker).wip += sign * task.setup_base;
  }
  workers_.at(task.processing_worker).wip += sign * planned_attention_load(task);
}

void Simulation::change_count_wip(StationRt& station, int delta) {
  if (now_ > station.wip_changed_at) {
    station.wip_integral += station.count_wip * (now_ - station.wip_changed_at);
    station.wip_changed_at = now_;
  }
  station.count_wip += delta;
  if (!station.wip_series.empty() && station.wip_series.back().first == now_) {
    station.wip_series.back().second = station.count_wip;
  } else {
    station.wip_series.push_back({now_, static_cast<double>(station.count_wip)});
  }
}

void Simulation::push_event(double time, int kind, int task, int op) {
  events_.push({time, kind, event_seq_++, task, op});
}

bool Simulation::worker_can_take(int worker, double load) const {
  return workers_.at(worker).committed() + load <= 1.0 + kAttentionEps;
}

std::vector<int> Simulation::processable_in_queue(const StationRt& station) const {
  std::vector<int> out;
  for (int idx : station.queue) {
    if (ready(tasks_[static_cast<std::size_t>(idx)])) out.push_back(idx);
  }
  return out;
}

void Simulation::sort_station_queue(StationRt& station, DispatchRule rule) {
  if (options_.forced_priority) {
    std::sort(station.queue.begin(), station.queue.end(), [&](int a, int b) {
      const TaskId& ta = tasks_[static_cast<std::size_t>(a)].id;
      const TaskId& tb = tasks_[static_cast<std::size_t>(b)].id;
      auto rank_a = forced_rank_.find(ta);
      auto rank_b = forced_rank_.find(tb);
      const int ra = rank_a == forced_rank_.end() ? INT_MAX : rank_a->second;
      const int rb = rank_b == forced_rank_.end() ? INT_MAX : rank_b->second;
      if (ra != rb) return ra < rb;
      return ta < tb;
    });
    return;
  }
  std::vector<QueueItem> items;
  items.reserve(station.queue.size());
  for (int idx : station.queue) {
    const SimTask& task = tasks_[static_cast<std::size_t>(idx)];
    QueueItem item;
    item.task = task.id;
    item.arrival = task.arrival;
    item.arrival_seq = task.arrival_seq;
    item.processing_duration = task.proc_duration;
    item.job_remaining_work = job_remaining_.at(task.id.job);
    const Job* job = inst_.find_job(task.id.job);
    if (job->due_date) {
      item.job_slack = *job->due_date - now_ - item.job_remaining_work;
    }
    items.push_back(item);
  }
  sort_queue(rule, items);
  std::vector<int> reordered;
  reordered.reserve(items.size());
  for (const QueueItem& item : items) reordered.push_back(task_index_.at(item.task));
  station.queue = std::move(reordered);
}

void Simulation::start_setup(StationRt& station, SimTask& task) {
  std::optional<TaskId> prev;
  if (station.last_proc_task >= 0) {
    prev = tasks_[static_cast<std::size_t>(station.last_proc_task)].id;
  }
  const double duration =
      setup_duration(inst_, prev, task.id, task.station, task.setup_worker);
  task.state = TaskState::InSetup;
  task.setup_start = now_;
  task.setup_end = now_ + duration;
  workers_.at(task.setup_worker)
      .commitments[{task_index_.at(task.id), 0}] = 1.0;
  ops_.push_back({task.id.job, task.id.task, OpKind::Setup, task.station,
                  task.setup_worker, task.setup_start, task.setup_end});
  push_event(task.setup_end, 0, task_index_.at(task.id), 0);
}

void Simulation::start_processing(SimTask& task) {
  task.state = TaskState::Processing;
  task.proc_start = now_;
  task.proc_end = now_ + task.proc_duration;
  workers_.at(task.processing_worker)
      .commitments[{task_index_.at(task.id), 1}] = task.attention;
  ops_.push_back({task.id.job, task.id.task, OpKind::Processing, task.station,
                  task.processing_worker, task.proc_start, task.proc_end});
  push_event(task.proc_end, 0, task_index_.at(task.id), 1);
}

void Simulation::pull(StationRt& station, int slot_index, int task_index) {
  SimTask& task = tasks_[static_cast<std::size_t>(task_index)];
  std::erase(station.queue, task_index);
  slots_[static_cast<std::size_t>(slot_index)].owner = task_index;
  task.slot = slot_index;
  if (task.needs_setup) {
    if (worker_can_take(task.setup_worker, 1.0)) {
      start_setup(station, task);
    } else {
      task.state = TaskState::AwaitSetupWorker;
    }
  } else {
    task.state = TaskState::AwaitReady;
    if (ready(task)) {
      task.state = TaskState::AwaitProcWorker;
      if (worker_can_take(task.processing_worker, task.attention)) {
        start_processing(task);
      }
    }
  }
}

// Moves a waiting slot's task forward when its blockers cleared.
bool Simulation::progress_slot(StationRt& station, SlotState& slot) {
  if (slot.owner < 0) return false;
  SimTask& task = tasks_[static_cast<std::size_t>(slot.owner)];
  switch (task.state) {
    case TaskState::AwaitSetupWorker:
      if (worker_can_take(task.setup_worker, 1.0)) {
        start_setup(station, task);
        return true;
      }
      return false;
    case TaskState::AwaitReady:
      if (!ready(task)) return false;
      task.state = TaskState::AwaitProcWorker;
      [[fallthrough]];
    case TaskState::AwaitProcWorker:
      if (ready(task) && worker_can_take(task.processing_worker, task.attention)) {
        start_processing(task);
        return true;
      }
      return false;
    default:
      return false;
  }
}

bool Simulation::fill_slot(StationRt& station, int slot_index) {
  if (station.queue.empty()) return false;
  const std::vector<int> processable = processable_in_queue(station);

  if (!processable.empty() && options_.forced_priority) {
    sort_station_queue(station, DispatchRule::Fifo);
    for (int idx : station.queue) {
      if (ready(tasks_[static_cast<std::size_t>(idx)])) {
        pull(station, slot_index, idx);
        return true;
      }
    }
    return false;
  }
  if (!processable.empty()) {
    DecisionPoint dp;
    dp.time = now_;
    dp.station = station.cfg->id;
    for (int idx : processable) dp.candidates.push_back(tasks_[static_cast<std::size_t>(idx)].id);
    std::sort(dp.candidates.begin(), dp.candidates.end());
    dp.features = extract_features(station);

    Decision decision;
    decision.rule = genome_.rule_for(station.cfg->id);
    decision.flip = FlipAction::None;
    if (handler_ != nullptr) decision = handler_->decide(dp);

    sort_station_queue(station, decision.rule);
    dp.rule = decision.rule;
    dp.flip = apply_flip(station, decision.flip);
    decisions_.push_back(dp);

    for (int idx : station.queue) {
      if (ready(tasks_[static_cast<std::size_t>(idx)])) {
        pull(station, slot_index, idx);
        return true;
      }
    }
    return false;  // flip moved the only candidate away
  }

  // Nothing processable: setup stations may pull the rule-preferred task to
  // run its setup ahead of readiness, when its setup worker is free now. A
  // task whose enabling predecessor chain still needs this station must not
  // seize a slot here, or the chain could wait on itself forever.
  if (!station.cfg->requires_setup) return false;
  sort_station_queue(station, genome_.rule_for(station.cfg->id));
  for (int idx : station.queue) {
    const SimTask& task = tasks_[static_cast<std::size_t>(idx)];
    if (!worker_can_take(task.setup_worker, 1.0)) continue;
    if (chain_blocked_by(task, station.cfg->id)) continue;
    pull(station, slot_index, idx);
    return true;
  }
  return false;
}

// True when any unfinished transitive predecessor of `task` is currently
// assigned to `station_id`: such a predecessor would need one of the slots we
// are about to occupy before `task` can ever become ready.
bool Simulation::chain_blocked_by(const SimTask& task, int station_id) const {
  std::vector<TaskId> frontier{task.id};
  std::set<TaskId> seen;
  while (!frontier.empty()) {
    const TaskId current = frontier.back();
    frontier.pop_back();
    std::vector<TaskId> preds;
    if (current.task > 0) {
      preds.push_back({current.job, current.task - 1});
    } else {
      for (const auto& [succ, pred] : inst_.job_precedence) {
        if (succ != current.job) continue;
        const Job* pred_job = inst_.find_job(pred);
        if (pred_job == nullptr || pred_job->tasks.empty()) continue;
        preds.push_back({pred, static_cast<int>(pred_job->tasks.size()) - 1});
      }
    }
    for (const TaskId& pred : preds) {
      if (!seen.insert(pred).second) continue;
      const SimTask& pred_task = tasks_[static_cast<std::size_t>(task_index_.at(pred))];
      if (pred_task.state == TaskState::Done) continue;
      if (pred_task.station == station_id) return true;
      frontier.push_back(pred);
    }
  }
  return false;
}

// True when an unfinished transitive successor of `task` currently owns a
// slot at `station_id`. Moving `task` there would park it behind a slot that
// cannot free until `task` itself finishes.
bool Simulation::successor_holds_slot(const SimTask& task, int station_id) const {
  std::vector<int> frontier(task.successors.begin(), task.successors.end());
  std::set<int> seen(frontier.begin(), frontier.end());
  while (!frontier.empty()) {
    const SimTask& succ = tasks_[static_cast<std::size_t>(frontier.back())];
    frontier.pop_back();
    if (succ.state == TaskState::Done) continue;
    if (succ.station == station_id && succ.slot >= 0) return true;
    for (int next : succ.successors) {
      if (seen.insert(next).second) frontier.push_back(next);
    }
  }
  return false;
}

void Simulation::dispatch_loop() {
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (int station_pos : station_order_) {
      StationRt& station = stations_[static_cast<std::size_t>(station_pos)];
      for (int slot_index : station.slots) {
        SlotState& slot = slots_[static_cast<std::size_t>(slot_index)];
        if (slot.owner >= 0) {
          progressed |= progress_slot(station, slot);
        } else {
          progressed |= fill_slot(station, slot_index);
        }
      }
    }
  }
}

void Simulation::handle_completion(const Event& ev) {
  SimTask& task = tasks_[static_cast<std::size_t>(ev.task)];
  StationRt& station = stations_[station_index_.at(task.station)];
  if (ev.op == 0) {  // setup finished
    workers_.at(task.setup_worker).commitments.erase({ev.task, 0});
    workers_.at(task.setup_worker).wip -= task.setup_base;
    task.state = TaskState::AwaitReady;
    return;
  }
  // processing finished
  workers_.at(task.processing_worker).commitments.erase({ev.task, 1});
  workers_.at(task.processing_worker).wip -= planned_attention_load(task);
  task.state = TaskState::Done;
  ++done_tasks_;
  slots_[static_cast<std::size_t>(task.slot)].owner = -1;

  station.wip_duration -= task.proc_duration;
  station.done_proc_duration += task.proc_duration;
  station.done_count += 1;
  station.flow_sum += task.proc_end - task.release;
  change_count_wip(station, -1);
  job_remaining_.at(task.id.job) -= task.proc_duration;

  // Canonical setup-state update: latest end wins; ties by latest start, then
  // lowest (job, task).
  const bool replace =
      station.last_proc_task < 0 || task.proc_end > station.last_proc_end ||
      (task.proc_end == station.last_proc_end &&
       (task.proc_start > station.last_proc_start ||
        (task.proc_start == station.last_proc_start &&
         std::pair(task.id.job, task.id.task) <
             std::pair(tasks_[static_cast<std::size_t>(station.last_proc_task)].id.job,
                       tasks_[static_cast<std::size_t>(station.last_proc_task)].id.task))));
  if (replace) {
    station.last_proc_task = ev.task;
    station.last_proc_end = task.proc_end;
    station.last_proc_start = task.proc_start;
  }

  for (int succ : task.successors) {
    tasks_[static_cast<std::size_t>(succ)].pending_preds -= 1;
  }
}

FlipAction Simulation::apply_flip(StationRt& station, FlipAction request) {
  if (request == FlipAction::None) return FlipAction::None;

  std::vector<int> processable;
  for (int idx : station.queue) {
    if (ready(tasks_[static_cast<std::size_t>(idx)])) processable.push_back(idx);
  }

  if (request == FlipAction::Station) {
    if (processable.size() < 2) return FlipAction::None;
    SimTask& task = tasks_[static_cast<std::size_t>(processable[1])];
    const TaskSpec& spec = inst_.task_at(task.id);
    const TaskAlternative* target = nullptr;
    for (const TaskAlternative& alt : spec.alternatives) {
      if (alt.station == task.station) continue;
      // Never move the task under a slot its own successor chain is holding:
      // that slot cannot free before the task finishes.
      if (successor_holds_slot(task, alt.station)) continue;
      if (target == nullptr) {
        target = &alt;
        continue;
      }
      const double candidate_load =
          stations_[station_index_.at(alt.station)].wip_duration;
      const double best_load =
          stations_[station_index_.at(target->station)].wip_duration;
      if (candidate_load < best_load ||
          (candidate_load == best_load && alt.station < target->station)) {
        target = &alt;
      }
    }
    if (target == nullptr) return FlipAction::None;

    StationRt& to = stations_[station_index_.at(target->station)];
    auto least_loaded = [this](const std::map<int, double>& capable) {
      int best = capable.begin()->first;
      for (const auto& [worker, unused] : capable) {
        if (workers_.at(worker).wip < workers_.at(best).wip) best = worker;
      }
      return best;
    };

    // Retract the old assignment's bookkeeping.
    assign_contributions(task, -1);
    station.wip_duration -= task.proc_duration;
    if (task.released) change_count_wip(station, -1);
    std::erase(station.queue, task_index_.at(task.id));

    task.station = target->station;
    task.setup_worker = least_loaded(target->setup_workers);
    task.processing_worker = least_loaded(target->processing_workers);
    task.setup_base = target->setup_workers.at(task.setup_worker);
    task.proc_duration = target->processing_workers.at(task.processing_worker);
    task.needs_setup = inst_.find_station(task.station)->requires_setup;
    task.attention = inst_.automation_degree(task.id, task.station);
    task.arrival = now_;
    task.arrival_seq = arrival_seq_++;

    to.queue.push_back(task_index_.at(task.id));
    to.wip_duration += task.proc_duration;
    if (task.released) change_count_wip(to, +1);
    assign_contributions(task, +1);
    return FlipAction::Station;
  }

  // Worker flip: head task's processing worker.
  if (processable.empty()) return FlipAction::None;
  SimTask& task = tasks_[static_cast<std::size_t>(processable[0])];
  const TaskAlternative* alt = inst_.find_alternative(task.id, task.station);
  int best = -1;
  for (const auto& [worker, unused] : alt->processing_workers) {
    if (worker == task.processing_worker) continue;
    if (best < 0 || workers_.at(worker).wip < workers_.at(best).wip) best = worker;
  }
  if (best < 0) return FlipAction::None;

  workers_.at(task.processing_worker).wip -= planned_attention_load(task);
  station.wip_duration -= task.proc_duration;
  task.processing_worker = best;
  task.proc_duration = alt->processing_workers.at(best);
  station.wip_duration += task.proc_duration;
  workers_.at(task.processing_worker).wip += planned_attention_load(task);
  return FlipAction::Worker;
}

FeatureVector Simulation::extract_features(const StationRt& station) const {
  FeatureVector f{};

  double total_wip = 0.0;
  double throughput_sum = 0.0;
  std::vector<double> throughputs;
  throughputs.reserve(stations_.size());
  for (const StationRt& st : stations_) {
    total_wip += st.wip_duration;
    const double rate = now_ > 0.0 ? st.done_proc_duration / now_ : 0.0;
    throughputs.push_back(rate);
    throughput_sum += rate;
  }
  const double station_count = static_cast<double>(stations_.size());
  const double mean_wip = total_wip / station_count;
  const double mean_throughput = throughput_sum / station_count;

  f[kFeatRelClock] = mean_wip > 0.0 ? now_ / mean_wip : 0.0;
  f[kFeatMeanStationWip] = mean_wip;
  f[kFeatMeanThroughput] = mean_throughput;
  f[kFeatRelStationWip] = total_wip > 0.0 ? station.wip_duration / total_wip : 0.0;
  f[kFeatThroughput] =
      now_ > 0.0 ? station.done_proc_duration / now_ : 0.0;

  double throughput_var = 0.0;
  for (double rate : throughputs) {
    throughput_var += (rate - mean_throughput) * (rate - mean_throughput);
  }
  f[kFeatThroughputStd] = std::sqrt(throughput_var / station_count);

  // Queue-derived quantities for this station.
  double group_sum = 0.0;
  std::set<int> successor_stations;
  std::set<int> station_workers;
  std::set<int> here_jobs;
  for (int idx : station.queue) {
    const SimTask& task = tasks_[static_cast<std::size_t>(idx)];
    group_sum += task.group;
    here_jobs.insert(task.id.job);
    station_workers.insert(task.processing_worker);
    if (task.needs_setup) station_workers.insert(task.setup_worker);
    const Job* job = inst_.find_job(task.id.job);
    std::vector<TaskId> next_tasks;
    if (task.id.task + 1 < static_cast<int>(job->tasks.size())) {
      next_tasks.push_back({task.id.job, task.id.task + 1});
    } else {
      auto succ_it = successor_jobs_.find(task.id.job);
      if (succ_it != successor_jobs_.end()) {
        for (int succ : succ_it->second) next_tasks.push_back({succ, 0});
      }
    }
    for (const TaskId& next : next_tasks) {
      const TaskSpec* spec = inst_.find_task(next);
      if (spec == nullptr) continue;
      for (const TaskAlternative& alt : spec->alternatives) {
        successor_stations.insert(alt.station);
      }
    }
  }
  for (int slot_index : station.slots) {
    const int owner = slots_[static_cast<std::size_t>(slot_index)].owner;
    if (owner < 0) continue;
    const SimTask& task = tasks_[static_cast<std::size_t>(owner)];
    if (task.state == TaskState::Done) continue;
    station_workers.insert(task.processing_worker);
    if (task.needs_setup) station_workers.insert(task.setup_worker);
  }
  f[kFeatMeanGroup] =
      station.queue.empty() ? 0.0 : group_sum / static_cast<double>(station.queue.size());

  if (!successor_stations.empty()) {
    double nwip = 0.0, nthr = 0.0;
    for (int id : successor_stations) {
      const StationRt& st = stations_[static_cast<std::size_t>(station_index_.at(id))];
      nwip += st.wip_duration;
      nthr += now_ > 0.0 ? st.done_proc_duration / now_ : 0.0;
    }
    f[kFeatSuccessorWip] = nwip / static_cast<double>(successor_stations.size());
    f[kFeatSuccessorThroughput] =
        nthr / static_cast<double>(successor_stations.size());
  }

  double all_worker_wip = 0.0;
  for (const auto& [id, worker] : workers_) all_worker_wip += worker.wip;
  double here_worker_wip = 0.0;
  for (int id : station_workers) here_worker_wip += workers_.at(id).wip;
  f[kFeatRelWorkerWip] =
      all_worker_wip > 0.0 ? here_worker_wip / all_worker_wip : 0.0;

  int processable_here = 0;
  int processable_total = 0;
  for (const StationRt& st : stations_) {
    int count = 0;
    for (int idx : st.queue) {
      if (ready(tasks_[static_cast<std::size_t>(idx)])) ++count;
    }
    processable_total += count;
    if (&st == &station) processable_here = count;
  }
  f[kFeatRelProcessable] =
      processable_total > 0
          ? static_cast<double>(processable_here) / processable_total
          : 0.0;
  f[kFeatCompeting] = processable_here > 1 ? 1.0 : 0.0;
  f[kFeatSlots] = station.cfg->slots;

  // Job slack statistics: per due-dated job with queued tasks.
  auto slack_of = [this](int job_id) {
    const Job* job = inst_.find_job(job_id);
    return *job->due_date - now_ - job_remaining_.at(job_id);
  };
  double here_min = 0.0, here_sum = 0.0;
  int here_count = 0;
  for (int job_id : here_jobs) {
    if (!inst_.find_job(job_id)->due_date) continue;
    const double slack = slack_of(job_id);
    if (here_count == 0 || slack < here_min) here_min = slack;
    here_sum += slack;
    ++here_count;
  }
  f[kFeatMinSlack] = here_count > 0 ? here_min : 0.0;
  f[kFeatMeanSlack] = here_count > 0 ? here_sum / here_count : 0.0;

  std::vector<double> station_mean_slacks;
  double global_sum = 0.0;
  int global_count = 0;
  std::set<int> global_jobs;
  for (const StationRt& st : stations_) {
    std::set<int> jobs;
    for (int idx : st.queue) jobs.insert(tasks_[static_cast<std::size_t>(idx)].id.job);
    double sum = 0.0;
    int count = 0;
    for (int job_id : jobs) {
      if (!inst_.find_job(job_id)->due_date) continue;
      sum += slack_of(job_id);
      ++count;
      if (global_jobs.insert(job_id).second) {
        global_sum += slack_of(job_id);
        ++global_count;
      }
    }
    if (count > 0) station_mean_slacks.push_back(sum / count);
  }
  f[kFeatGlobalMeanSlack] = global_count > 0 ? global_sum / global_count : 0.0;
  if (!station_mean_slacks.empty()) {
    double mean = 0.0;
    for (double s : station_mean_slacks) mean += s;
    mean /= static_cast<double>(station_mean_slacks.size());
    double var = 0.0;
    for (double s : station_mean_slacks) var += (s - mean) * (s - mean);
    f[kFeatSlackStd] =
        std::sqrt(var / static_cast<double>(station_mean_slacks.size()));
  }
  return f;
}

void Simulation::report_deadlock() const {
  std::ostringstream os;
  os << "simulation stalled at " << now_ << " with unfinished tasks:";
  for (const SimTask& task : tasks_) {
    if (task.state != TaskState::Done) {
      os << " (job " << task.id.job << " task " << task.id.task << ")";
    }
  }
  throw std::runtime_error(os.str());
}

// Abandons one left-shifted setup whose slot a now-ready task needs: the
// holder returns to the queue (its recorded setup is discarded and will be
// redone) so the ready task can run. Wait cycles between early-pulled tasks
// holding slots on one station while their enabling predecessors queue on
// another can otherwise never clear. Returns false when no slot qualifies.
bool Simulation::recover_from_stall() {
  for (int station_pos : station_order_) {
    StationRt& station = stations_[static_cast<std::size_t>(station_pos)];
    if (processable_in_queue(station).empty()) continue;
    for (int slot_index : station.slots) {
      SlotState& slot = slots_[static_cast<std::size_t>(slot_index)];
      if (slot.owner < 0) continue;
      const int holder_index = slot.owner;
      SimTask& holder = tasks_[static_cast<std::size_t>(holder_index)];
      if (holder.state != TaskState::AwaitReady) continue;
      if (holder.needs_setup) {
        // Drop the completed setup op and restore the setup worker's planned
        // load, which the setup's completion already deducted.
        auto it = std::find_if(ops_.begin(), ops_.end(), [&](const ScheduledOp& op) {
          return op.kind == OpKind::Setup && op.job == holder.id.job &&
                 op.task == holder.id.task;
        });
        if (it != ops_.end()) ops_.erase(it);
        workers_.at(holder.setup_worker).wip += holder.setup_base;
        holder.setup_start = holder.setup_end = -1.0;
      }
      slot.owner = -1;
      holder.slot = -1;
      holder.state = TaskState::Queued;
      holder.arrival = now_;
      holder.arrival_seq = arrival_seq_++;
      station.queue.push_back(holder_index);
      return true;
    }
  }
  return false;
}

SimResult Simulation::run() {
  dispatch_loop();
  while (true) {
    while (!events_.empty()) {
      if (++handled_events_ > options_.max_events) {
        throw std::runtime_error("simulation exceeded the event limit");
      }
      now_ = events_.top().time;
      while (!events_.empty() && events_.top().time == now_) {
        const Event ev = events_.top();
        events_.pop();
        if (ev.kind == 0) {
          handle_completion(ev);
        } else {
          SimTask& task = tasks_[static_cast<std::size_t>(ev.task)];
          if (!task.released) {
            task.released = true;
            change_count_wip(stations_[station_index_.at(task.station)], +1);
          }
        }
      }
      dispatch_loop();
    }
    if (done_tasks_ == static_cast<int>(tasks_.size())) break;
    if (++recoveries_ > 16 * static_cast<int>(tasks_.size()) + 64 ||
        !recover_from_stall()) {
      report_deadlock();
    }
    dispatch_loop();
  }
  return finish();
}

SimResult Simulation::finish() {
  SimResult result;
  std::sort(ops_.begin(), ops_.end(), [](const ScheduledOp& a, const ScheduledOp& b) {
    return std::tuple(a.job, a.task, static_cast<int>(a.kind)) <
           std::tuple(b.job, b.task, static_cast<int>(b.kind));
  });
  result.schedule.ops = std::move(ops_);

  ScheduleMetrics& metrics = result.metrics;
  metrics.makespan = 0.0;
  for (const ScheduledOp& op : result.schedule.ops) {
    metrics.makespan = std::max(metrics.makespan, op.end);
  }
  metrics.horizon = std::max(now_, metrics.makespan);

  for (const Job& job : inst_.jobs) {
    double completion = 0.0;
    double first_release = 0.0;
    double work = 0.0;
    bool first = true;
    for (int t = 0; t < static_cast<int>(job.tasks.size()); ++t) {
      const SimTask& task = tasks_[static_cast<std::size_t>(task_index_.at({job.id, t}))];
      completion = std::max(completion, task.proc_end);
      first_release = first ? task.release : std::min(first_release, task.release);
      first = false;
      work += task.proc_end - task.proc_start;
    }
    metrics.job_flow_time[job.id] = completion - first_release;
    metrics.job_wait_time[job.id] = completion - first_release - work;
    if (job.due_date) {
      const double tardiness = std::max(0.0, completion - *job.due_date);
      metrics.total_tardiness += tardiness;
      result.schedule.tardiness_by_job[job.id] = tardiness;
    }
  }

  for (StationRt& station : stations_) {
    StationMetrics sm;
    sm.station = station.cfg->id;
    if (metrics.horizon > station.wip_changed_at) {
      station.wip_integral +=
          station.count_wip * (metrics.horizon - station.wip_changed_at);
    }
    sm.avg_wip = metrics.horizon > 0.0 ? station.wip_integral / metrics.horizon : 0.0;
    sm.throughput =
        metrics.horizon > 0.0 ? station.done_count / metrics.horizon : 0.0;
    sm.mean_flow_time =
        station.done_count > 0 ? station.flow_sum / station.done_count : 0.0;
    sm.completed = station.done_count;
    sm.wip_series = std::move(station.wip_series);
    metrics.stations.push_back(std::move(sm));
  }

  // Terminal observation for reward bookkeeping.
  if (handler_ != nullptr && !decisions_.empty()) {
    const int station_id = decisions_.back().station;
    handler_->episode_end(
        extract_features(stations_[static_cast<std::size_t>(station_index_.at(station_id))]));
  }

  result.decisions = std::move(decisions_);

  result.effective_genome = genome_;
  if (options_.lamarckian_writeback) {
    for (AllocationGene& gene : result.effective_genome.allocation) {
      const SimTask& task =
          tasks_[static_cast<std::size_t>(task_index_.at(gene.task))];
      gene.station = task.station;
      gene.setup_worker = task.setup_worker;
      gene.processing_worker = task.processing_worker;
    }
  }
  return result;
}

}  // namespace

SimResult simulate(const ProblemInstance& inst, const Genome& genome,
                   DecisionHandler* handler, const SimOptions& options) {
  Simulation sim(inst, genome, handler, options);
  return sim.run();
}

}  // namespace shopsched
