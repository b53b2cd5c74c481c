#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "shopsched/dataio.hpp"
#include "shopsched/rng.hpp"

namespace shopsched {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("generator config: " + what);
}

void validate_config(const GeneratorConfig& cfg) {
  require(cfg.jobs >= 1, "jobs must be >= 1");
  require(cfg.tasks_per_job_min >= 1, "tasks_per_job_min must be >= 1");
  require(cfg.tasks_per_job_max >= cfg.tasks_per_job_min,
          "tasks_per_job range is inverted");
  require(cfg.stations >= 1, "stations must be >= 1");
  require(cfg.workers >= 1, "workers must be >= 1");
  require(cfg.slots_min >= 1, "slots_min must be >= 1");
  require(cfg.slots_max >= cfg.slots_min, "slots range is inverted");
  require(cfg.station_density >= 0.0 && cfg.station_density <= 1.0,
          "station_density must be in [0, 1]");
  require(cfg.capability_density >= 0.0 && cfg.capability_density <= 1.0,
          "capability_density must be in [0, 1]");
  require(cfg.setup_duration_min > 0.0 &&
              cfg.setup_duration_max >= cfg.setup_duration_min,
          "setup duration range is empty or non-positive");
  require(cfg.processing_duration_min > 0.0 &&
              cfg.processing_duration_max >= cfg.processing_duration_min,
          "processing duration range is empty or non-positive");
  require(cfg.sequence_factor_min >= -1.0 && cfg.sequence_factor_max <= 0.5 &&
              cfg.sequence_factor_min <= cfg.sequence_factor_max,
          "sequence factor range must sit inside [-1, 0.5]");
  require(cfg.sequence_factor_density >= 0.0 &&
              cfg.sequence_factor_density <= 1.0,
          "sequence_factor_density must be in [0, 1]");
  require(cfg.automation_min > 0.0 && cfg.automation_max <= 1.0 &&
              cfg.automation_min <= cfg.automation_max,
          "automation range must sit inside (0, 1]");
  require(cfg.due_date_tightness > 0.0, "due_date_tightness must be positive");
  require(cfg.release_spread >= 0.0, "release_spread must be >= 0");
  require(cfg.precedence_probability >= 0.0 &&
              cfg.precedence_probability <= 1.0,
          "precedence_probability must be in [0, 1]");
}

// Pick an anchor index plus each remaining index with `density`; returns a
// sorted, non-empty index set.
std::vector<int> pick_subset(int count, double density, Rng& rng) {
  const int anchor = rng.below(count);
  std::vector<int> chosen;
  for (int i = 0; i < count; ++i) {
    if (i == anchor || rng.bernoulli(density)) chosen.push_back(i);
  }
  return chosen;
}

}  // namespace

ProblemInstance generate_instance(const GeneratorConfig& cfg) {
  validate_config(cfg);
  Rng rng(cfg.seed);
  ProblemInstance inst;

  for (int k = 0; k < cfg.stations; ++k) {
    Station st;
    st.id = k;
    st.slots = rng.uniform_int(cfg.slots_min, cfg.slots_max);
    st.requires_setup = st.slots == 1;
    inst.stations.push_back(st);
  }

  const double mean_processing =
      0.5 * (cfg.processing_duration_min + cfg.processing_duration_max);

  for (int j = 0; j < cfg.jobs; ++j) {
    Job job;
    job.id = j;
    const int n_tasks = rng.uniform_int(cfg.tasks_per_job_min, cfg.tasks_per_job_max);
    for (int t = 0; t < n_tasks; ++t) {
      TaskSpec spec;
      if (t == 0 && cfg.release_spread > 0.0) {
        spec.release_time =
            rng.uniform_real(0.0, cfg.release_spread * mean_processing);
      }
      for (int k : pick_subset(cfg.stations, cfg.station_density, rng)) {
        TaskAlternative alt;
        alt.station = k;
        for (int w : pick_subset(cfg.workers, cfg.capability_density, rng)) {
          alt.setup_workers[w] =
              rng.uniform_real(cfg.setup_duration_min, cfg.setup_duration_max);
        }
        for (int w : pick_subset(cfg.workers, cfg.capability_density, rng)) {
          alt.processing_workers[w] = rng.uniform_real(
              cfg.processing_duration_min, cfg.processing_duration_max);
        }
        spec.automation[k] =
            rng.uniform_real(cfg.automation_min, cfg.automation_max);
        spec.alternatives.push_back(alt);
      }
      job.tasks.push_back(spec);
    }
    inst.jobs.push_back(job);
  }

  for (int w = 0; w < cfg.workers; ++w) inst.workers.push_back({w});

  // Precedence edges always point from a lower to a higher job id, so the job
  // DAG is acyclic by construction.
  for (int pred = 0; pred < cfg.jobs; ++pred) {
    for (int succ = pred + 1; succ < cfg.jobs; ++succ) {
      if (rng.bernoulli(cfg.precedence_probability)) {
        inst.job_precedence.insert({succ, pred});
      }
    }
  }

  // Sequence factors on setup-requiring stations, for ordered pairs of
  // distinct tasks that can both run there.
  for (Station& st : inst.stations) {
    if (!st.requires_setup) continue;
    std::vector<TaskId> eligible;
    for (const Job& job : inst.jobs) {
      for (int t = 0; t < static_cast<int>(job.tasks.size()); ++t) {
        if (inst.find_alternative({job.id, t}, st.id) != nullptr) {
          eligible.push_back({job.id, t});
        }
      }
    }
    for (const TaskId& prev : eligible) {
      for (const TaskId& next : eligible) {
        if (prev == next) continue;
        if (rng.bernoulli(cfg.sequence_factor_density)) {
          st.sequence_factors[{prev, next}] = rng.uniform_real(
              cfg.sequence_factor_min, cfg.sequence_factor_max);
        }
      }
    }
  }

  // Chain lower bound per job: releases plus cheapest processing durations,
  // started no earlier than every predecessor job's own bound. Ascending job
  // ids are a topological order because edges point forward.
  std::vector<double> bound(cfg.jobs, 0.0);
  for (const Job& job : inst.jobs) {
    double start = 0.0;
    for (const auto& [succ, pred] : inst.job_precedence) {
      if (succ == job.id) start = std::max(start, bound[pred]);
    }
    double t = start;
    for (const TaskSpec& spec : job.tasks) {
      double cheapest = cfg.processing_duration_max;
      for (const TaskAlternative& alt : spec.alternatives) {
        for (const auto& [w, d] : alt.processing_workers) {
          cheapest = std::min(cheapest, d);
        }
      }
      t = std::max(t, spec.release_time) + cheapest;
    }
    bound[job.id] = t;
  }

  // Due dates only on jobs without successors.
  for (Job& job : inst.jobs) {
    bool has_successor = false;
    for (const auto& [succ, pred] : inst.job_precedence) {
      if (pred == job.id) has_successor = true;
    }
    if (!has_successor) {
      job.due_date = cfg.due_date_tightness * bound[job.id];
    }
  }

  const ValidationReport report = validate_instance(inst);
  if (!report.ok()) {
    throw std::logic_error("generator produced an invalid instance: " +
                           report.problems.front());
  }
  return inst;
}

GeneratorConfig preset_config(const std::string& name) {
  GeneratorConfig cfg;
  if (name == "gbrt01") {
    // Deep job chains, few assignable resources: 6 jobs / 14 tasks on
    // 2 stations with 2 workers.
    cfg.jobs = 6;
    cfg.tasks_per_job_min = 2;
    cfg.tasks_per_job_max = 3;
    cfg.stations = 2;
    cfg.workers = 2;
    cfg.station_density = 0.6;
    cfg.capability_density = 0.7;
    cfg.precedence_probability = 0.3;
    cfg.seed = 1;  // pinned so the shape lands on 14 tasks
    return cfg;
  }
  if (name == "gbrt02") {
    // Flat jobs, many flexible stations: 3 jobs / 10 tasks on 6 stations
    // with 3 workers.
    cfg.jobs = 3;
    cfg.tasks_per_job_min = 3;
    cfg.tasks_per_job_max = 4;
    cfg.stations = 6;
    cfg.workers = 3;
    cfg.station_density = 0.75;
    cfg.capability_density = 0.7;
    cfg.precedence_probability = 0.0;
    cfg.seed = 3;  // pinned so the shape lands on 10 tasks
    return cfg;
  }
  if (name == "realworld") {
    // Sparse capability matrix, few flexible stations per task.
    cfg.jobs = 10;
    cfg.tasks_per_job_min = 2;
    cfg.tasks_per_job_max = 4;
    cfg.stations = 5;
    cfg.workers = 4;
    cfg.slots_min = 1;
    cfg.slots_max = 2;
    cfg.station_density = 0.2;
    cfg.capability_density = 0.3;
    cfg.precedence_probability = 0.1;
    cfg.seed = 7;
    return cfg;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<std::string> preset_names() { return {"gbrt01", "gbrt02", "realworld"}; }

}  // namespace shopsched
