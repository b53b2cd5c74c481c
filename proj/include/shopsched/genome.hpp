#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shopsched/instance.hpp"
#include "shopsched/rng.hpp"

namespace shopsched {

enum class DispatchRule {
  Spt,   // shortest processing time first
  Lpt,   // longest processing time first
  Mtwr,  // most total work remaining (task's job) first
  Str,   // slack time remaining (due - clock - remaining work) ascending
  Fifo,  // station-queue arrival order
};

inline constexpr int kDispatchRuleCount = 5;
const char* to_string(DispatchRule rule);
std::optional<DispatchRule> dispatch_rule_from_string(std::string_view name);

// One allocation decision per task: where it runs and who sets up / processes.
struct AllocationGene {
  TaskId task;
  int topology_group = 1;
  int station = 0;
  int setup_worker = 0;
  int processing_worker = 0;
};

// One dispatching rule per station, applied whenever its queue is sorted.
struct DispatchGene {
  int station = 0;
  DispatchRule rule = DispatchRule::Fifo;
};

struct Genome {
  std::vector<AllocationGene> allocation;  // sorted by (group, job, task)
  std::vector<DispatchGene> dispatching;   // sorted by station id

  const AllocationGene* find(TaskId id) const;
  AllocationGene* find(TaskId id);
  DispatchRule rule_for(int station) const;  // throws std::out_of_range
};

// Structural check against an instance: one gene per task, canonical gene
// order, station/worker picks inside the task's alternatives, topology groups
// matching the instance DAG, one rule gene per station.
std::vector<std::string> validate_genome(const Genome&, const ProblemInstance&);

// Deterministic genome: every task assigned by least-accumulated-load
// balancing in canonical task order, every station using `rule`. Used for
// dispatching baselines and as the start solution of trajectory searches.
Genome balanced_genome(const ProblemInstance&, DispatchRule rule);

// Random population. Each member assigns tasks in a random topological order
// of the task DAG, balancing accumulated station/worker load, and draws one
// random rule per station. Deterministic in (instance, size, seed).
std::vector<Genome> init_population(const ProblemInstance&, int size,
                                    std::uint64_t seed);

// Crossover core with an explicit inheritance mask (exposed for tests):
// offspring takes allocation gene i from `a` where from_a[i] != 0, from `b`
// elsewhere; dispatching genes come from `a`.
Genome jox_crossover_masked(const Genome& a, const Genome& b,
                            const std::vector<char>& from_a);

// Job-order crossover: inherits a random non-empty strict subset of `a`'s
// allocation genes (positions), the rest from `b`, the whole rule subgenome
// from `a`. Parents must describe the same instance.
Genome jox_crossover(const Genome& a, const Genome& b, Rng& rng);

// What a mutation changed; used by tabu search to build move signatures.
struct MutationMove {
  enum class Kind { None, Resource, Rule } kind = Kind::None;
  TaskId task;                 // resource flips
  int station = 0;
  int setup_worker = 0;
  int processing_worker = 0;
  int rule_station = 0;        // rule flips
  DispatchRule rule = DispatchRule::Fifo;

  bool operator==(const MutationMove&) const = default;
};

// 50/50 between a resource flip (one task's station+workers replaced by a
// random different valid combination) and a rule flip (one station's rule
// replaced by a random different rule). A gene without any alternative
// combination triggers a bounded redraw of the gene; when no resource gene
// can flip at all, the move falls back to a rule flip.
Genome mutate(const Genome&, const ProblemInstance&, Rng& rng,
              MutationMove* move = nullptr);

}  // namespace shopsched
