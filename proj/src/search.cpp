#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>

#include "shopsched/search.hpp"

namespace shopsched {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Evaluated {
  Genome genome;  // effective genome after decoding (flip writebacks kept)
  Schedule schedule;
  ScheduleMetrics metrics;
  double raw = 0.0;  // weighted un-normalized objective, for baseline choice
  double z = 0.0;
};

// Budgeted decode service. Every genome decode costs one budget unit; batches
// split over threads without changing results because decoding is a pure
// function of (instance, genome, policy) and any sampling stream derives from
// the genome's own serial uid.
class Evaluator {
 public:
  Evaluator(const ProblemInstance& inst, SearchBudget& budget,
            std::uint64_t run_seed, const Agent* policy, int parallelism)
      : inst_(inst),
        budget_(budget),
        run_seed_(run_seed),
        policy_(policy),
        parallelism_(std::max(1, parallelism)) {}

  // Evaluates as many of `genomes` as the budget allows, in order.
  std::vector<Evaluated> batch(const std::vector<Genome>& genomes) {
    const int n = std::min(static_cast<int>(genomes.size()), budget_.remaining());
    std::vector<Evaluated> results(static_cast<std::size_t>(n));
    if (n == 0) return results;

    const std::uint64_t uid_base = next_uid_;
    next_uid_ += static_cast<std::uint64_t>(n);
    budget_.consumed += n;

    const int threads = std::min(parallelism_, n);
    if (threads <= 1) {
      for (int i = 0; i < n; ++i) {
        results[static_cast<std::size_t>(i)] =
            decode(genomes[static_cast<std::size_t>(i)],
                   uid_base + static_cast<std::uint64_t>(i));
      }
      return results;
    }

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t]() {
        try {
          for (int i = t; i < n; i += threads) {
            results[static_cast<std::size_t>(i)] =
                decode(genomes[static_cast<std::size_t>(i)],
                       uid_base + static_cast<std::uint64_t>(i));
          }
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (std::thread& worker : pool) worker.join();
    for (const std::exception_ptr& error : errors) {
      if (error) std::rethrow_exception(error);
    }
    return results;
  }

  std::optional<Evaluated> single(const Genome& genome) {
    std::vector<Evaluated> out = batch({genome});
    if (out.empty()) return std::nullopt;
    return std::move(out.front());
  }

 private:
  Evaluated decode(const Genome& genome, std::uint64_t uid) const {
    SimResult sim;
    if (policy_ != nullptr) {
      AgentHandler handler(*policy_, ActMode::Greedy, mix_seed(run_seed_, uid));
      sim = simulate(inst_, genome, &handler);
    } else {
      sim = simulate(inst_, genome);
    }
    Evaluated out;
    out.raw = inst_.weight_makespan * sim.metrics.makespan +
              inst_.weight_tardiness * sim.metrics.total_tardiness;
    out.genome = std::move(sim.effective_genome);
    out.schedule = std::move(sim.schedule);
    out.metrics = std::move(sim.metrics);
    return out;
  }

  const ProblemInstance& inst_;
  SearchBudget& budget_;
  std::uint64_t run_seed_;
  const Agent* policy_;
  int parallelism_;
  std::uint64_t next_uid_ = 0;
};

double zscore(const ProblemInstance& inst, const ScheduleMetrics& m,
              const ScheduleMetrics& baseline) {
  return scalarize(m, baseline, inst.weight_makespan, inst.weight_tardiness);
}

void sort_by_z(std::vector<Evaluated>& population) {
  std::stable_sort(population.begin(), population.end(),
                   [](const Evaluated& a, const Evaluated& b) { return a.z < b.z; });
}

void track_best(const Evaluated& candidate, Evaluated& best) {
  if (candidate.z < best.z) best = candidate;
}

// Calibrated geometric-cooling annealing walk shared by the standalone
// trajectory method and the GA-embedded exploitation step. Walks `max_steps`
// proposals (budget permitting) from `current`; returns the best visited.
struct SaWalk {
  Evaluated best;
  Evaluated current;
  double gen_z_sum = 0.0;  // per-proposal z, for generation statistics
  int evaluated = 0;
};

SaWalk sa_walk(const ProblemInstance& inst, Evaluator& evaluator,
               const SearchBudget& budget, const Evaluated& start,
               const ScheduleMetrics& baseline, int max_steps,
               int calibration_samples, double calibration_accept, double cooling,
               int restart_after_stall, Rng& rng) {
  SaWalk walk;
  walk.best = start;
  walk.current = start;

  std::vector<double> calibration;
  double temperature = 0.0;
  int stall = 0;

  for (int step = 0; step < max_steps && !budget.exhausted(); ++step) {
    Genome neighbor = walk.current.genome;
    mutate(neighbor, inst, rng);
    std::optional<Evaluated> proposal = evaluator.single(neighbor);
    if (!proposal) break;
    proposal->z = zscore(inst, proposal->metrics, baseline);
    walk.gen_z_sum += proposal->z;
    walk.evaluated += 1;

    const double dz = proposal->z - walk.current.z;
    bool accept = dz < 0.0;
    if (static_cast<int>(calibration.size()) < calibration_samples) {
      // Calibration phase: greedy acceptance while collecting step sizes.
      calibration.push_back(std::fabs(dz));
      if (static_cast<int>(calibration.size()) == calibration_samples) {
        std::sort(calibration.begin(), calibration.end());
        const std::size_t mid = calibration.size() / 2;
        const double median =
            calibration.size() % 2 == 1
                ? calibration[mid]
                : 0.5 * (calibration[mid - 1] + calibration[mid]);
        // Temperature at which the median uphill step is accepted with the
        // target probability.
        temperature = median > 0.0
                          ? median / std::log(1.0 / calibration_accept)
                          : 1e-12;
      }
    } else {
      if (!accept && temperature > 0.0) {
        accept = rng.uniform_real(0.0, 1.0) < std::exp(-dz / temperature);
      }
      temperature *= cooling;
    }

    if (accept) walk.current = std::move(*proposal);
    if (walk.current.z < walk.best.z) {
      walk.best = walk.current;
      stall = 0;
    } else if (++stall >= restart_after_stall) {
      walk.current = walk.best;
      stall = 0;
    }
  }
  return walk;
}

SearchResult run_memetic(const ProblemInstance& inst, const GaConfig& config,
                         SearchBudget& budget, std::uint64_t seed, int parallelism,
                         const Agent* policy, bool annealing) {
  const auto start_time = Clock::now();
  const int initial_consumed = budget.consumed;
  const int initial_remaining = budget.remaining();
  if (initial_remaining <= 0) {
    throw std::invalid_argument("search budget is already exhausted");
  }

  Evaluator evaluator(inst, budget, seed, policy, parallelism);
  Rng master(mix_seed(seed, 0xa11));

  // The linear operator-probability schedules span the generation count the
  // budget implies.
  const int plan_generations = std::max(
      1, static_cast<int>(std::ceil(
             static_cast<double>(initial_remaining - config.population_size) /
             config.offspring)));

  SearchResult result;

  // Generation zero: random population, reference pick, first ranking.
  std::vector<Genome> seeds =
      init_population(inst, config.population_size, mix_seed(seed, 0xbee));
  auto gen_start = Clock::now();
  std::vector<Evaluated> population = evaluator.batch(seeds);
  if (population.empty()) {
    throw std::invalid_argument("search budget cannot cover a single decode");
  }
  const Evaluated* reference = &population.front();
  for (const Evaluated& member : population) {
    if (member.raw < reference->raw) reference = &member;
  }
  result.baseline = reference->metrics;
  for (Evaluated& member : population) {
    member.z = zscore(inst, member.metrics, result.baseline);
  }
  sort_by_z(population);
  Evaluated best = population.front();

  {
    GenerationStat stat;
    stat.generation = 0;
    stat.best_z = best.z;
    stat.best_makespan = best.metrics.makespan;
    stat.best_tardiness = best.metrics.total_tardiness;
    double sum = 0.0;
    for (const Evaluated& member : population) sum += member.z;
    stat.mean_z = sum / static_cast<double>(population.size());
    stat.evaluations = budget.consumed - initial_consumed;
    stat.seconds = seconds_since(gen_start);
    result.trajectory.push_back(stat);
  }

  for (int generation = 1; !budget.exhausted(); ++generation) {
    gen_start = Clock::now();
    const double t = plan_generations > 1
                         ? std::min(1.0, static_cast<double>(generation - 1) /
                                             (plan_generations - 1))
                         : 1.0;
    const double p_mut =
        config.mutation_start + t * (config.mutation_end - config.mutation_start);
    const double p_cross = config.crossover_start +
                           t * (config.crossover_end - config.crossover_start);

    if (static_cast<int>(population.size()) > config.survivors) {
      population.resize(static_cast<std::size_t>(config.survivors));
    }

    std::vector<Genome> offspring;
    offspring.reserve(static_cast<std::size_t>(config.offspring));
    for (int k = 0; k < config.offspring; ++k) {
      Genome child;
      if (population.size() >= 2 && master.bernoulli(p_cross)) {
        const int a = master.below(static_cast<int>(population.size()));
        int b = master.below(static_cast<int>(population.size()) - 1);
        if (b >= a) ++b;
        child = jox_crossover(population[static_cast<std::size_t>(a)].genome,
                              population[static_cast<std::size_t>(b)].genome,
                              master);
      } else {
        child =
            population[static_cast<std::size_t>(
                           master.below(static_cast<int>(population.size())))]
                .genome;
      }
      if (master.bernoulli(p_mut)) mutate(child, inst, master);
      offspring.push_back(std::move(child));
    }

    std::vector<Evaluated> evaluated = evaluator.batch(offspring);
    double gen_z_sum = 0.0;
    int gen_evals = static_cast<int>(evaluated.size());
    for (Evaluated& member : evaluated) {
      member.z = zscore(inst, member.metrics, result.baseline);
      gen_z_sum += member.z;
      track_best(member, best);
      population.push_back(std::move(member));
    }
    sort_by_z(population);

    if (annealing && !budget.exhausted() &&
        master.bernoulli(config.sa_probability)) {
      const SaWalk walk =
          sa_walk(inst, evaluator, budget, population.front(), result.baseline,
                  config.sa_steps, 5, 0.8, 0.95, config.sa_steps + 1, master);
      gen_z_sum += walk.gen_z_sum;
      gen_evals += walk.evaluated;
      track_best(walk.best, best);
      if (walk.best.z < population.front().z) {
        population.front() = walk.best;
        sort_by_z(population);
      }
    }

    if (gen_evals == 0) break;  // budget ended before this generation started

    GenerationStat stat;
    stat.generation = generation;
    stat.best_z = best.z;
    stat.best_makespan = best.metrics.makespan;
    stat.best_tardiness = best.metrics.total_tardiness;
    stat.mean_z = gen_z_sum / gen_evals;
    stat.evaluations = budget.consumed - initial_consumed;
    stat.seconds = seconds_since(gen_start);
    result.trajectory.push_back(stat);
  }

  result.best_genome = best.genome;
  result.best_schedule = best.schedule;
  result.best_metrics = best.metrics;
  result.best_z = best.z;
  result.evaluations = budget.consumed - initial_consumed;
  result.wall_seconds = seconds_since(start_time);
  return result;
}

SearchResult run_trajectory(const ProblemInstance& inst, const Genome& start,
                            SearchBudget& budget, std::uint64_t seed,
                            bool tabu, const SaConfig& sa_config,
                            const TsConfig& ts_config) {
  const auto start_time = Clock::now();
  const int initial_consumed = budget.consumed;
  Evaluator evaluator(inst, budget, seed, nullptr, 1);
  Rng master(mix_seed(seed, 0x7a57e));

  std::optional<Evaluated> initial = evaluator.single(start);
  if (!initial) {
    throw std::invalid_argument("search budget is already exhausted");
  }
  SearchResult result;
  result.baseline = initial->metrics;
  initial->z = zscore(inst, initial->metrics, result.baseline);
  Evaluated best = *initial;
  Evaluated current = *initial;

  {
    GenerationStat stat;
    stat.generation = 0;
    stat.best_z = best.z;
    stat.best_makespan = best.metrics.makespan;
    stat.best_tardiness = best.metrics.total_tardiness;
    stat.mean_z = current.z;
    stat.evaluations = budget.consumed - initial_consumed;
    stat.seconds = seconds_since(start_time);
    result.trajectory.push_back(stat);
  }

  if (!tabu) {
    // Annealing with restart-to-best.
    std::vector<double> calibration;
    double temperature = 0.0;
    int stall = 0;
    int step = 0;
    while (!budget.exhausted()) {
      const auto step_start = Clock::now();
      Genome neighbor = current.genome;
      mutate(neighbor, inst, master);
      std::optional<Evaluated> proposal = evaluator.single(neighbor);
      if (!proposal) break;
      proposal->z = zscore(inst, proposal->metrics, result.baseline);

      const double dz = proposal->z - current.z;
      bool accept = dz < 0.0;
      if (static_cast<int>(calibration.size()) < sa_config.calibration_samples) {
        calibration.push_back(std::fabs(dz));
        if (static_cast<int>(calibration.size()) == sa_config.calibration_samples) {
          std::sort(calibration.begin(), calibration.end());
          const std::size_t mid = calibration.size() / 2;
          const double median =
              calibration.size() % 2 == 1
                  ? calibration[mid]
                  : 0.5 * (calibration[mid - 1] + calibration[mid]);
          temperature =
              median > 0.0
                  ? median / std::log(1.0 / sa_config.calibration_accept)
                  : 1e-12;
        }
      } else {
        if (!accept && temperature > 0.0) {
          accept = master.uniform_real(0.0, 1.0) < std::exp(-dz / temperature);
        }
        temperature *= sa_config.cooling;
      }

      if (accept) current = std::move(*proposal);
      if (current.z < best.z) {
        best = current;
        stall = 0;
      } else if (++stall >= sa_config.restart_after_stall) {
        current = best;
        stall = 0;
      }

      ++step;
      GenerationStat stat;
      stat.generation = step;
      stat.best_z = best.z;
      stat.best_makespan = best.metrics.makespan;
      stat.best_tardiness = best.metrics.total_tardiness;
      stat.mean_z = current.z;
      stat.evaluations = budget.consumed - initial_consumed;
      stat.seconds = seconds_since(step_start);
      result.trajectory.push_back(stat);
    }
  } else {
    // Tabu walk over move signatures.
    auto signature = [](const MutationMove& move) {
      if (move.kind == MutationMove::Kind::Resource) {
        return "r:" + std::to_string(move.task.job) + "." +
               std::to_string(move.task.task) + ":" +
               std::to_string(move.station) + ":" +
               std::to_string(move.setup_worker) + ":" +
               std::to_string(move.processing_worker);
      }
      return "d:" + std::to_string(move.rule_station) + ":" +
             std::string(to_string(move.rule));
    };
    std::deque<std::string> tabu_list;
    auto is_tabu = [&](const std::string& sig) {
      return std::find(tabu_list.begin(), tabu_list.end(), sig) != tabu_list.end();
    };

    int step = 0;
    while (!budget.exhausted()) {
      const auto step_start = Clock::now();
      std::vector<Genome> neighbors;
      std::vector<MutationMove> moves;
      for (int k = 0; k < ts_config.neighborhood; ++k) {
        Genome neighbor = current.genome;
        MutationMove move;
        mutate(neighbor, inst, master, &move);
        neighbors.push_back(std::move(neighbor));
        moves.push_back(move);
      }
      std::vector<Evaluated> evaluated = evaluator.batch(neighbors);
      if (evaluated.empty()) break;
      double z_sum = 0.0;
      std::vector<int> order(evaluated.size());
      for (std::size_t i = 0; i < evaluated.size(); ++i) {
        evaluated[i].z = zscore(inst, evaluated[i].metrics, result.baseline);
        z_sum += evaluated[i].z;
        order[i] = static_cast<int>(i);
      }
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return evaluated[static_cast<std::size_t>(a)].z <
               evaluated[static_cast<std::size_t>(b)].z;
      });

      int chosen = -1;
      for (int idx : order) {
        const std::string sig = signature(moves[static_cast<std::size_t>(idx)]);
        const bool aspirates =
            evaluated[static_cast<std::size_t>(idx)].z < best.z;
        if (!is_tabu(sig) || aspirates) {
          chosen = idx;
          break;
        }
      }
      if (chosen < 0) {  // everything tabu: evict the oldest entry, take the best
        if (!tabu_list.empty()) tabu_list.pop_front();
        chosen = order.front();
      }

      current = evaluated[static_cast<std::size_t>(chosen)];
      track_best(current, best);
      tabu_list.push_back(signature(moves[static_cast<std::size_t>(chosen)]));
      while (static_cast<int>(tabu_list.size()) > ts_config.tenure) {
        tabu_list.pop_front();
      }

      ++step;
      GenerationStat stat;
      stat.generation = step;
      stat.best_z = best.z;
      stat.best_makespan = best.metrics.makespan;
      stat.best_tardiness = best.metrics.total_tardiness;
      stat.mean_z = z_sum / static_cast<double>(evaluated.size());
      stat.evaluations = budget.consumed - initial_consumed;
      stat.seconds = seconds_since(step_start);
      result.trajectory.push_back(stat);
    }
  }

  result.best_genome = best.genome;
  result.best_schedule = best.schedule;
  result.best_metrics = best.metrics;
  result.best_z = best.z;
  result.evaluations = budget.consumed - initial_consumed;
  result.wall_seconds = seconds_since(start_time);
  return result;
}

}  // namespace

SearchResult run_ga(const ProblemInstance& inst, const GaConfig& config,
                    SearchBudget& budget, std::uint64_t seed, int parallelism) {
  return run_memetic(inst, config, budget, seed, parallelism, nullptr, false);
}

SearchResult run_gasa(const ProblemInstance& inst, const GaConfig& config,
                      SearchBudget& budget, std::uint64_t seed, int parallelism) {
  return run_memetic(inst, config, budget, seed, parallelism, nullptr, true);
}

SearchResult run_gasa_rl(const ProblemInstance& inst, const GaConfig& config,
                         SearchBudget& budget, const Agent& policy,
                         std::uint64_t seed, int parallelism) {
  return run_memetic(inst, config, budget, seed, parallelism, &policy, true);
}

SearchResult run_sars(const ProblemInstance& inst, const Genome& start,
                      const SaConfig& config, SearchBudget& budget,
                      std::uint64_t seed) {
  return run_trajectory(inst, start, budget, seed, false, config, TsConfig{});
}

SearchResult run_ts(const ProblemInstance& inst, const Genome& start,
                    const TsConfig& config, SearchBudget& budget,
                    std::uint64_t seed) {
  return run_trajectory(inst, start, budget, seed, true, SaConfig{}, config);
}

SearchResult run_dispatch_baseline(const ProblemInstance& inst, DispatchRule rule,
                                   SearchBudget& budget) {
  const auto start_time = Clock::now();
  const int initial_consumed = budget.consumed;
  Evaluator evaluator(inst, budget, 0, nullptr, 1);
  std::optional<Evaluated> decoded = evaluator.single(balanced_genome(inst, rule));
  if (!decoded) {
    throw std::invalid_argument("search budget is already exhausted");
  }
  SearchResult result;
  result.baseline = decoded->metrics;
  result.best_genome = decoded->genome;
  result.best_schedule = decoded->schedule;
  result.best_metrics = decoded->metrics;
  result.best_z = zscore(inst, decoded->metrics, result.baseline);

  GenerationStat stat;
  stat.generation = 0;
  stat.best_z = result.best_z;
  stat.best_makespan = result.best_metrics.makespan;
  stat.best_tardiness = result.best_metrics.total_tardiness;
  stat.mean_z = result.best_z;
  stat.evaluations = budget.consumed - initial_consumed;
  stat.seconds = seconds_since(start_time);
  result.trajectory.push_back(stat);

  result.evaluations = budget.consumed - initial_consumed;
  result.wall_seconds = seconds_since(start_time);
  return result;
}

}  // namespace shopsched
