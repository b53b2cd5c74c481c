#include "shopsched/genome.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace shopsched {

const char* to_string(DispatchRule rule) {
  switch (rule) {
    case DispatchRule::Spt: return "spt";
    case DispatchRule::Lpt: return "lpt";
    case DispatchRule::Mtwr: return "mtwr";
    case DispatchRule::Str: return "str";
    case DispatchRule::Fifo: return "fifo";
  }
  return "?";
}

std::optional<DispatchRule> dispatch_rule_from_string(std::string_view name) {
  if (name == "spt") return DispatchRule::Spt;
  if (name == "lpt") return DispatchRule::Lpt;
  if (name == "mtwr") return DispatchRule::Mtwr;
  if (name == "str") return DispatchRule::Str;
  if (name == "fifo") return DispatchRule::Fifo;
  return std::nullopt;
}

const AllocationGene* Genome::find(TaskId id) const {
  for (const AllocationGene& gene : allocation) {
    if (gene.task == id) return &gene;
  }
  return nullptr;
}

AllocationGene* Genome::find(TaskId id) {
  for (AllocationGene& gene : allocation) {
    if (gene.task == id) return &gene;
  }
  return nullptr;
}

DispatchRule Genome::rule_for(int station) const {
  for (const DispatchGene& gene : dispatching) {
    if (gene.station == station) return gene.rule;
  }
  throw std::out_of_range("no dispatching gene for station " +
                          std::to_string(station));
}

namespace {

bool canonical_before(const AllocationGene& a, const AllocationGene& b) {
  return std::tuple(a.topology_group, a.task.job, a.task.task) <
         std::tuple(b.topology_group, b.task.job, b.task.task);
}

void sort_canonical(Genome& genome) {
  std::sort(genome.allocation.begin(), genome.allocation.end(), canonical_before);
  std::sort(genome.dispatching.begin(), genome.dispatching.end(),
            [](const DispatchGene& a, const DispatchGene& b) {
              return a.station < b.station;
            });
}

// All valid (station, setup worker, processing worker) triples of a task.
struct ResourceTriple {
  int station;
  int setup_worker;
  int processing_worker;
  bool operator==(const ResourceTriple&) const = default;
};

std::vector<ResourceTriple> resource_triples(const ProblemInstance& inst,
                                             TaskId id) {
  std::vector<ResourceTriple> out;
  for (const TaskAlternative& alt : inst.task_at(id).alternatives) {
    for (const auto& [setup_worker, unused_s] : alt.setup_workers) {
      for (const auto& [processing_worker, unused_p] : alt.processing_workers) {
        out.push_back({alt.station, setup_worker, processing_worker});
      }
    }
  }
  return out;
}

// Accumulated-load bookkeeping shared by balanced_genome and init_population.
struct LoadState {
  std::map<int, double> station_load;
  std::map<int, double> worker_load;

  AllocationGene assign(const ProblemInstance& inst, TaskId id, int group) {
    const TaskSpec& spec = inst.task_at(id);
    const TaskAlternative* best_alt = nullptr;
    for (const TaskAlternative& alt : spec.alternatives) {
      if (best_alt == nullptr ||
          station_load[alt.station] < station_load[best_alt->station] ||
          (station_load[alt.station] == station_load[best_alt->station] &&
           alt.station < best_alt->station)) {
        best_alt = &alt;
      }
    }
    auto pick_worker = [this](const std::map<int, double>& capable) {
      int best = capable.begin()->first;
      for (const auto& [worker, unused] : capable) {
        if (worker_load[worker] < worker_load[best]) best = worker;
      }
      return best;
    };
    const int setup_worker = pick_worker(best_alt->setup_workers);
    const int processing_worker = pick_worker(best_alt->processing_workers);
    const double processing = best_alt->processing_workers.at(processing_worker);
    station_load[best_alt->station] += processing;
    worker_load[setup_worker] += best_alt->setup_workers.at(setup_worker);
    worker_load[processing_worker] += processing;
    return {id, group, best_alt->station, setup_worker, processing_worker};
  }
};

}  // namespace

Genome balanced_genome(const ProblemInstance& inst, DispatchRule rule) {
  const std::map<TaskId, int> groups = topology_groups(inst);
  std::vector<std::pair<int, TaskId>> order;  // canonical: (group, job, task)
  for (const auto& [id, group] : groups) order.push_back({group, id});
  std::sort(order.begin(), order.end());

  Genome genome;
  LoadState load;
  for (const auto& [group, id] : order) {
    genome.allocation.push_back(load.assign(inst, id, group));
  }
  for (const Station& station : inst.stations) {
    genome.dispatching.push_back({station.id, rule});
  }
  sort_canonical(genome);
  return genome;
}

std::vector<Genome> init_population(const ProblemInstance& inst, int size,
                                    std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("population size must be positive");
  const std::map<TaskId, int> groups = topology_groups(inst);

  // Task DAG successors/indegrees, for drawing random linear extensions.
  std::map<TaskId, std::vector<TaskId>> successors;
  std::map<TaskId, int> base_indegree;
  for (const auto& [id, unused] : groups) base_indegree[id] = 0;
  for (const Job& job : inst.jobs) {
    for (int t = 1; t < static_cast<int>(job.tasks.size()); ++t) {
      successors[{job.id, t - 1}].push_back({job.id, t});
      base_indegree[{job.id, t}] += 1;
    }
  }
  for (const auto& [succ, pred] : inst.job_precedence) {
    const Job* pred_job = inst.find_job(pred);
    if (pred_job == nullptr || pred_job->tasks.empty()) continue;
    const TaskId from{pred, static_cast<int>(pred_job->tasks.size()) - 1};
    successors[from].push_back({succ, 0});
    base_indegree[{succ, 0}] += 1;
  }

  std::vector<Genome> population;
  population.reserve(static_cast<std::size_t>(size));
  Rng rng(seed);
  for (int member = 0; member < size; ++member) {
    // Random linear extension: repeatedly take a uniformly drawn ready task.
    std::map<TaskId, int> indegree = base_indegree;
    std::vector<TaskId> ready;
    for (const auto& [id, deg] : indegree) {
      if (deg == 0) ready.push_back(id);
    }
    Genome genome;
    LoadState load;
    while (!ready.empty()) {
      const std::size_t pick = static_cast<std::size_t>(rng.below(ready.size()));
      const TaskId id = ready[pick];
      ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(pick));
      genome.allocation.push_back(load.assign(inst, id, groups.at(id)));
      for (const TaskId& succ : successors[id]) {
        if (--indegree[succ] == 0) {
          ready.insert(std::upper_bound(ready.begin(), ready.end(), succ), succ);
        }
      }
    }
    for (const Station& station : inst.stations) {
      genome.dispatching.push_back(
          {station.id, static_cast<DispatchRule>(rng.below(kDispatchRuleCount))});
    }
    sort_canonical(genome);
    population.push_back(std::move(genome));
  }
  return population;
}

std::vector<std::string> validate_genome(const Genome& genome,
                                         const ProblemInstance& inst) {
  std::vector<std::string> problems;
  auto flag = [&problems](const std::string& msg) { problems.push_back(msg); };

  std::map<TaskId, int> groups;
  try {
    groups = topology_groups(inst);
  } catch (const std::exception& e) {
    flag(e.what());
    return problems;
  }

  if (genome.allocation.size() != groups.size()) {
    flag("expected " + std::to_string(groups.size()) + " allocation genes, got " +
         std::to_string(genome.allocation.size()));
  }
  std::map<TaskId, int> seen;
  for (std::size_t i = 0; i < genome.allocation.size(); ++i) {
    const AllocationGene& gene = genome.allocation[i];
    std::ostringstream where;
    where << "gene for job " << gene.task.job << " task " << gene.task.task;
    if (seen[gene.task]++ > 0) {
      flag(where.str() + " appears more than once");
      continue;
    }
    auto group_it = groups.find(gene.task);
    if (group_it == groups.end()) {
      flag(where.str() + " references an unknown task");
      continue;
    }
    if (gene.topology_group != group_it->second) {
      flag(where.str() + " carries topology group " +
           std::to_string(gene.topology_group) + ", instance implies " +
           std::to_string(group_it->second));
    }
    if (i + 1 < genome.allocation.size() &&
        !canonical_before(gene, genome.allocation[i + 1])) {
      flag("allocation genes are not in canonical (group, job, task) order at index " +
           std::to_string(i));
    }
    const TaskAlternative* alt = inst.find_alternative(gene.task, gene.station);
    if (alt == nullptr) {
      flag(where.str() + " assigns station " + std::to_string(gene.station) +
           " which is not an alternative");
      continue;
    }
    if (alt->setup_workers.count(gene.setup_worker) == 0) {
      flag(where.str() + " assigns incapable setup worker " +
           std::to_string(gene.setup_worker));
    }
    if (alt->processing_workers.count(gene.processing_worker) == 0) {
      flag(where.str() + " assigns incapable processing worker " +
           std::to_string(gene.processing_worker));
    }
  }
  if (genome.dispatching.size() != inst.stations.size()) {
    flag("expected " + std::to_string(inst.stations.size()) +
         " dispatching genes, got " + std::to_string(genome.dispatching.size()));
  }
  std::map<int, int> rule_seen;
  for (std::size_t i = 0; i < genome.dispatching.size(); ++i) {
    const DispatchGene& gene = genome.dispatching[i];
    if (inst.find_station(gene.station) == nullptr) {
      flag("dispatching gene references unknown station " +
           std::to_string(gene.station));
    }
    if (rule_seen[gene.station]++ > 0) {
      flag("duplicate dispatching gene for station " +
           std::to_string(gene.station));
    }
    if (i + 1 < genome.dispatching.size() &&
        genome.dispatching[i + 1].station <= gene.station) {
      flag("dispatching genes are not sorted by station id");
    }
  }
  return problems;
}

Genome jox_crossover_masked(const Genome& a, const Genome& b,
                            const std::vector<char>& from_a) {
  if (a.allocation.size() != b.allocation.size() ||
      from_a.size() != a.allocation.size()) {
    throw std::invalid_argument("crossover parents/mask must have equal gene counts");
  }
  Genome child;
  child.allocation.reserve(a.allocation.size());
  for (std::size_t i = 0; i < a.allocation.size(); ++i) {
    if (a.allocation[i].task != b.allocation[i].task) {
      throw std::invalid_argument("crossover parents disagree on gene order");
    }
    child.allocation.push_back(from_a[i] != 0 ? a.allocation[i] : b.allocation[i]);
  }
  child.dispatching = a.dispatching;
  return child;
}

Genome jox_crossover(const Genome& a, const Genome& b, Rng& rng) {
  const std::size_t n = a.allocation.size();
  if (n < 2) return a;  // no strict subset possible; offspring clones a
  const int keep = rng.uniform_int(1, static_cast<int>(n) - 1);
  std::vector<char> from_a(n, 0);
  for (int index : rng.sample_indices(static_cast<int>(n), keep)) {
    from_a[static_cast<std::size_t>(index)] = 1;
  }
  return jox_crossover_masked(a, b, from_a);
}

Genome mutate(const Genome& input, const ProblemInstance& inst, Rng& rng,
              MutationMove* move) {
  Genome genome = input;
  if (move != nullptr) *move = MutationMove{};
  if (genome.allocation.empty() && genome.dispatching.empty()) return genome;

  const bool resource_flip = rng.bernoulli(0.5);
  if (resource_flip && !genome.allocation.empty()) {
    const int n = static_cast<int>(genome.allocation.size());
    for (int attempt = 0; attempt < n; ++attempt) {
      AllocationGene& gene = genome.allocation[static_cast<std::size_t>(
          rng.below(static_cast<std::uint64_t>(n)))];
      std::vector<ResourceTriple> options = resource_triples(inst, gene.task);
      const ResourceTriple current{gene.station, gene.setup_worker,
                                   gene.processing_worker};
      std::erase(options, current);
      if (options.empty()) continue;  // nothing to flip here; draw another gene
      const ResourceTriple pick =
          options[static_cast<std::size_t>(rng.below(options.size()))];
      gene.station = pick.station;
      gene.setup_worker = pick.setup_worker;
      gene.processing_worker = pick.processing_worker;
      if (move != nullptr) {
        move->kind = MutationMove::Kind::Resource;
        move->task = gene.task;
        move->station = pick.station;
        move->setup_worker = pick.setup_worker;
        move->processing_worker = pick.processing_worker;
      }
      return genome;
    }
    // No task offers an alternative combination: fall back to a rule flip.
  }

  if (!genome.dispatching.empty()) {
    DispatchGene& gene = genome.dispatching[static_cast<std::size_t>(
        rng.below(genome.dispatching.size()))];
    int offset = rng.uniform_int(1, kDispatchRuleCount - 1);
    gene.rule = static_cast<DispatchRule>(
        (static_cast<int>(gene.rule) + offset) % kDispatchRuleCount);
    if (move != nullptr) {
      move->kind = MutationMove::Kind::Rule;
      move->rule_station = gene.station;
      move->rule = gene.rule;
    }
  }
  return genome;
}

}  // namespace shopsched
