#pragma once

// Hand-built micro instances shared across the test suite.

#include "shopsched/instance.hpp"

namespace shopsched::testing {

// One job, one task: release 10, setup base 2, processing 5, single worker.
// A left-shifted decode runs the setup over [0, 2] and processing [10, 15].
inline ProblemInstance single_task_instance() {
  ProblemInstance inst;
  Station st;
  st.id = 0;
  st.slots = 1;
  st.requires_setup = true;
  inst.stations.push_back(st);
  inst.workers.push_back({0});

  Job job;
  job.id = 0;
  TaskSpec spec;
  spec.release_time = 10.0;
  TaskAlternative alt;
  alt.station = 0;
  alt.setup_workers[0] = 2.0;
  alt.processing_workers[0] = 5.0;
  spec.alternatives.push_back(alt);
  spec.automation[0] = 1.0;
  job.tasks.push_back(spec);
  inst.jobs.push_back(job);
  return inst;
}

// Four single-task jobs in a diamond: job 0 before jobs 1 and 2, both before
// job 3. No setups, independent stations are unnecessary: one two-slot bench.
inline ProblemInstance diamond_instance() {
  ProblemInstance inst;
  Station st;
  st.id = 0;
  st.slots = 2;
  st.requires_setup = false;
  inst.stations.push_back(st);
  inst.workers.push_back({0});
  inst.workers.push_back({1});

  for (int j = 0; j < 4; ++j) {
    Job job;
    job.id = j;
    TaskSpec spec;
    TaskAlternative alt;
    alt.station = 0;
    alt.setup_workers[0] = 1.0;
    alt.setup_workers[1] = 1.0;
    alt.processing_workers[0] = 4.0;
    alt.processing_workers[1] = 4.0;
    spec.alternatives.push_back(alt);
    spec.automation[0] = 1.0;
    job.tasks.push_back(spec);
    inst.jobs.push_back(job);
  }
  inst.job_precedence.insert({1, 0});
  inst.job_precedence.insert({2, 0});
  inst.job_precedence.insert({3, 1});
  inst.job_precedence.insert({3, 2});
  return inst;
}

// Two single-task jobs on separate stations sharing the lone worker, with a
// configurable attention fraction. At 0.5 both run concurrently; above it
// they serialize.
inline ProblemInstance shared_worker_instance(double attention) {
  ProblemInstance inst;
  for (int k = 0; k < 2; ++k) {
    Station st;
    st.id = k;
    st.slots = 1;
    st.requires_setup = false;
    inst.stations.push_back(st);
  }
  inst.workers.push_back({0});

  for (int j = 0; j < 2; ++j) {
    Job job;
    job.id = j;
    TaskSpec spec;
    TaskAlternative alt;
    alt.station = j;
    alt.setup_workers[0] = 1.0;
    alt.processing_workers[0] = 10.0;
    spec.alternatives.push_back(alt);
    spec.automation[j] = attention;
    job.tasks.push_back(spec);
    inst.jobs.push_back(job);
  }
  return inst;
}

// Single station with `slots` workplaces, two single-task jobs with their own
// workers: parallel iff slots > 1.
inline ProblemInstance slot_instance(int slots) {
  ProblemInstance inst;
  Station st;
  st.id = 0;
  st.slots = slots;
  st.requires_setup = false;
  inst.stations.push_back(st);
  inst.workers.push_back({0});
  inst.workers.push_back({1});

  for (int j = 0; j < 2; ++j) {
    Job job;
    job.id = j;
    TaskSpec spec;
    TaskAlternative alt;
    alt.station = 0;
    alt.setup_workers[j] = 1.0;
    alt.processing_workers[j] = 10.0;
    spec.alternatives.push_back(alt);
    spec.automation[0] = 1.0;
    job.tasks.push_back(spec);
    inst.jobs.push_back(job);
  }
  return inst;
}

// Two tasks on a setup station with asymmetric sequence factors, used for the
// sequence-dependent setup oracle d * (1 + s).
inline ProblemInstance sequence_factor_instance() {
  ProblemInstance inst;
  Station st;
  st.id = 0;
  st.slots = 1;
  st.requires_setup = true;
  st.sequence_factors[{{0, 0}, {1, 0}}] = 0.5;
  st.sequence_factors[{{1, 0}, {0, 0}}] = -1.0;
  inst.stations.push_back(st);
  inst.workers.push_back({0});

  for (int j = 0; j < 2; ++j) {
    Job job;
    job.id = j;
    TaskSpec spec;
    TaskAlternative alt;
    alt.station = 0;
    alt.setup_workers[0] = 10.0;
    alt.processing_workers[0] = 5.0;
    spec.alternatives.push_back(alt);
    spec.automation[0] = 1.0;
    job.tasks.push_back(spec);
    inst.jobs.push_back(job);
  }
  return inst;
}

}  // namespace shopsched::testing
