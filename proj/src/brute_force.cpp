#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "shopsched/search.hpp"

namespace shopsched {

namespace {

// Per-task list of every (station, setup worker, processing worker) triple.
struct TaskChoices {
  TaskId task;
  int group = 1;
  std::vector<AllocationGene> options;
};

std::vector<TaskChoices> enumerate_choices(const ProblemInstance& inst) {
  const std::map<TaskId, int> groups = topology_groups(inst);
  std::vector<TaskChoices> all;
  for (const Job& job : inst.jobs) {
    for (int t = 0; t < static_cast<int>(job.tasks.size()); ++t) {
      TaskChoices choices;
      choices.task = {job.id, t};
      choices.group = groups.at(choices.task);
      for (const TaskAlternative& alt : job.tasks[static_cast<std::size_t>(t)].alternatives) {
        for (const auto& [sw, sd] : alt.setup_workers) {
          for (const auto& [pw, pd] : alt.processing_workers) {
            choices.options.push_back(
                {choices.task, choices.group, alt.station, sw, pw});
          }
        }
      }
      all.push_back(std::move(choices));
    }
  }
  return all;
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > std::numeric_limits<std::uint64_t>::max() / b) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a * b;
}

}  // namespace

std::uint64_t brute_force_size(const ProblemInstance& inst) {
  std::uint64_t size = 1;
  for (const TaskChoices& choices : enumerate_choices(inst)) {
    size = saturating_mul(size, choices.options.size());
  }
  std::uint64_t n = 0;
  for (const Job& job : inst.jobs) n += job.tasks.size();
  for (std::uint64_t k = 2; k <= n; ++k) size = saturating_mul(size, k);
  return size;
}

BruteForceResult brute_force(const ProblemInstance& inst, std::uint64_t cap,
                             double weight_makespan, double weight_tardiness,
                             const ScheduleMetrics& baseline) {
  const std::uint64_t size = brute_force_size(inst);
  if (size > cap) {
    throw std::invalid_argument("enumeration size " + std::to_string(size) +
                                " exceeds cap " + std::to_string(cap));
  }

  const std::vector<TaskChoices> choices = enumerate_choices(inst);
  for (const TaskChoices& c : choices) {
    if (c.options.empty()) {
      throw std::invalid_argument("task without any resource option");
    }
  }

  // Canonical order for the permutation stream.
  std::vector<TaskId> order;
  for (const TaskChoices& c : choices) order.push_back(c.task);
  std::sort(order.begin(), order.end());

  Genome genome;
  genome.allocation.resize(choices.size());
  for (const Station& station : inst.stations) {
    genome.dispatching.push_back({station.id, DispatchRule::Fifo});
  }

  BruteForceResult best;
  bool found = false;

  std::vector<std::size_t> odometer(choices.size(), 0);
  while (true) {
    for (std::size_t i = 0; i < choices.size(); ++i) {
      genome.allocation[i] = choices[i].options[odometer[i]];
    }
    std::sort(genome.allocation.begin(), genome.allocation.end(),
              [](const AllocationGene& a, const AllocationGene& b) {
                return std::tuple(a.topology_group, a.task.job, a.task.task) <
                       std::tuple(b.topology_group, b.task.job, b.task.task);
              });

    std::vector<TaskId> permutation = order;
    do {
      SimOptions options;
      options.forced_priority = permutation;
      const SimResult sim = simulate(inst, genome, nullptr, options);
      const double z =
          scalarize(sim.metrics, baseline, weight_makespan, weight_tardiness);
      best.enumerated += 1;
      const bool better =
          !found || z < best.z ||
          (z == best.z && (sim.metrics.makespan < best.metrics.makespan ||
                           (sim.metrics.makespan == best.metrics.makespan &&
                            sim.metrics.total_tardiness <
                                best.metrics.total_tardiness)));
      if (better) {
        best.genome = genome;
        best.schedule = sim.schedule;
        best.metrics = sim.metrics;
        best.z = z;
        found = true;
      }
    } while (std::next_permutation(permutation.begin(), permutation.end()));

    // Advance the mixed-radix assignment odometer.
    std::size_t pos = 0;
    while (pos < odometer.size()) {
      if (++odometer[pos] < choices[pos].options.size()) break;
      odometer[pos] = 0;
      ++pos;
    }
    if (pos == odometer.size()) break;
  }
  return best;
}

}  // namespace shopsched
