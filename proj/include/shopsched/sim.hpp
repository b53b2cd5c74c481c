#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "shopsched/genome.hpp"
#include "shopsched/instance.hpp"

namespace shopsched {

// Queue manipulations an agent may request at a decision point, on top of the
// rule choice: shift the runner-up task to another station, swap the head
// task's processing worker, or leave everything alone.
enum class FlipAction { Station = 0, Worker = 1, None = 2 };

// Rules an agent may pick (arrival order is not part of its action space).
inline constexpr std::array<DispatchRule, 4> kAgentRules = {
    DispatchRule::Spt, DispatchRule::Lpt, DispatchRule::Mtwr, DispatchRule::Str};
inline constexpr int kAgentRuleCount = 4;
inline constexpr int kFlipActionCount = 3;

inline constexpr int kFeatureCount = 17;
using FeatureVector = std::array<double, kFeatureCount>;

// Feature layout (indices into FeatureVector), extracted per station at every
// decision point:
//   0 clock relative to mean station WIP
//   1 mean topology group of the station's queued tasks
//   2 station WIP / total WIP               (WIP = unfinished processing duration)
//   3 mean WIP of successor-eligible stations
//   4 mean WIP over all stations
//   5 station workers' WIP / all workers' WIP (attention-weighted durations)
//   6 processable tasks here / processable tasks everywhere
//   7 competing flag: more than one processable task here
//   8 slot count
//   9 station throughput rate                (completed processing duration / clock)
//  10 mean throughput of successor-eligible stations
//  11 mean throughput over all stations
//  12 throughput standard deviation over stations
//  13 min job slack among due-dated queued jobs here
//  14 mean job slack among due-dated queued jobs here
//  15 mean job slack among due-dated queued jobs at any station
//  16 job slack standard deviation over stations
enum FeatureIndex : int {
  kFeatRelClock = 0,
  kFeatMeanGroup = 1,
  kFeatRelStationWip = 2,
  kFeatSuccessorWip = 3,
  kFeatMeanStationWip = 4,
  kFeatRelWorkerWip = 5,
  kFeatRelProcessable = 6,
  kFeatCompeting = 7,
  kFeatSlots = 8,
  kFeatThroughput = 9,
  kFeatSuccessorThroughput = 10,
  kFeatMeanThroughput = 11,
  kFeatThroughputStd = 12,
  kFeatMinSlack = 13,
  kFeatMeanSlack = 14,
  kFeatGlobalMeanSlack = 15,
  kFeatSlackStd = 16,
};

struct DecisionPoint {
  double time = 0.0;
  int station = 0;
  std::vector<TaskId> candidates;  // processable queue members, canonical order
  FeatureVector features{};
  DispatchRule rule = DispatchRule::Fifo;  // what ended up applied
  FlipAction flip = FlipAction::None;
};

struct Decision {
  DispatchRule rule = DispatchRule::Fifo;
  FlipAction flip = FlipAction::None;
};

// Hook consulted at every decision point. Implementations: greedy policy
// injection for search, sampling rollout collection for training. The default
// (no handler) applies the genome's rule and no flip.
class DecisionHandler {
 public:
  virtual ~DecisionHandler() = default;
  virtual Decision decide(const DecisionPoint& pending) = 0;
  // Called once when the run finishes, with features extracted at the end
  // time for the station of the last decision (reward bookkeeping needs a
  // terminal observation). Not called if there was no decision point.
  virtual void episode_end(const FeatureVector&) {}
};

struct SimOptions {
  // Keep queue-flip station/worker reassignments in the returned genome
  // (memetic writeback). Rollout training turns this off.
  bool lamarckian_writeback = true;
  std::uint64_t max_events = 50'000'000;  // runaway guard
  // Exhaustive-search hook: when set, every queue ordering follows this total
  // priority order (earlier entries first, unlisted tasks last in canonical
  // order) instead of any dispatch rule; no decision points are emitted and
  // no handler is consulted.
  std::optional<std::vector<TaskId>> forced_priority;
};

struct SimResult {
  Schedule schedule;
  ScheduleMetrics metrics;
  std::vector<DecisionPoint> decisions;
  Genome effective_genome;  // input genome plus any flip writebacks
};

// Decodes a genome into a schedule by event-driven simulation. Stations cycle
// Free -> Dispatching -> (Setup ->) Processing per slot; queues are sorted by
// the active rule at each dispatch; setups may be pulled ahead of material
// availability; assigned workers are awaited, with setups binding full
// attention and processing the task's automation-dependent fraction.
// Deterministic for fixed inputs. Throws std::runtime_error when no progress
// is possible while tasks remain (names the blocked tasks).
SimResult simulate(const ProblemInstance&, const Genome&,
                   DecisionHandler* handler = nullptr, const SimOptions& = {});

// Sequence-dependent setup length: base duration of (task, station, worker)
// scaled by (1 + factor(prev -> task)). No previous task means factor 0.
// Throws std::invalid_argument if the worker cannot set up the task there.
double setup_duration(const ProblemInstance&, std::optional<TaskId> prev,
                      TaskId task, int station, int worker);

// Pure queue-ordering core, exposed for tests. Sorts by the rule's key with
// deterministic tie-breaks: rule key, then (job, task). Tasks without a due
// date sort after all due-dated tasks under Str.
struct QueueItem {
  TaskId task;
  double arrival = 0.0;
  int arrival_seq = 0;
  double processing_duration = 0.0;   // under the current assignment
  double job_remaining_work = 0.0;    // unfinished processing work of the job
  std::optional<double> job_slack;    // due - clock - remaining work
};
void sort_queue(DispatchRule, std::vector<QueueItem>&);

}  // namespace shopsched
