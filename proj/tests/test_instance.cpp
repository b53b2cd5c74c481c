#include <doctest.h>

#include <stdexcept>

#include "shopsched/instance.hpp"
#include "test_support.hpp"

using namespace shopsched;
using namespace shopsched::testing;

TEST_CASE("layered topology groups on a diamond") {
  const ProblemInstance inst = diamond_instance();
  const std::map<TaskId, int> groups = topology_groups(inst);
  CHECK(groups.at({0, 0}) == 1);
  CHECK(groups.at({1, 0}) == 2);
  CHECK(groups.at({2, 0}) == 2);
  CHECK(groups.at({3, 0}) == 3);
}

TEST_CASE("topology groups follow within-job chains") {
  ProblemInstance inst = single_task_instance();
  inst.jobs[0].tasks.push_back(inst.jobs[0].tasks[0]);
  inst.jobs[0].tasks.back().release_time = 0.0;
  const auto groups = topology_groups(inst);
  CHECK(groups.at({0, 0}) == 1);
  CHECK(groups.at({0, 1}) == 2);
}

TEST_CASE("topology groups reject cyclic precedence") {
  ProblemInstance inst = diamond_instance();
  inst.job_precedence.insert({0, 3});  // closes the cycle
  CHECK_THROWS_AS(topology_groups(inst), std::invalid_argument);
}

TEST_CASE("tardiness accounting") {
  ProblemInstance inst;
  Station st;
  st.id = 0;
  st.slots = 3;
  st.requires_setup = false;
  inst.stations.push_back(st);
  inst.workers.push_back({0});
  Schedule schedule;
  const double completions[3] = {15.0, 10.0, 20.0};
  const double dues[3] = {12.0, 12.0, 18.0};
  for (int j = 0; j < 3; ++j) {
    Job job;
    job.id = j;
    TaskSpec spec;
    TaskAlternative alt;
    alt.station = 0;
    alt.setup_workers[0] = 1.0;
    alt.processing_workers[0] = completions[j];
    spec.alternatives.push_back(alt);
    spec.automation[0] = 1.0;
    job.tasks.push_back(spec);
    job.due_date = dues[j];
    inst.jobs.push_back(job);
    schedule.ops.push_back(
        {j, 0, OpKind::Processing, 0, 0, 0.0, completions[j]});
  }
  CHECK(total_tardiness(schedule, inst) == doctest::Approx(5.0));
  CHECK(makespan(schedule) == doctest::Approx(20.0));
}

TEST_CASE("weighted normalized objective") {
  ScheduleMetrics m;
  m.makespan = 0.8;
  m.total_tardiness = 0.4;
  ScheduleMetrics base;
  base.makespan = 1.0;
  base.total_tardiness = 1.0;
  CHECK(scalarize(m, base, 0.5, 0.5) == doctest::Approx(0.6));

  // Zero-tardiness baselines divide by one instead.
  base.total_tardiness = 0.0;
  CHECK(scalarize(m, base, 0.5, 0.5) == doctest::Approx(0.6));

  base.makespan = 0.0;
  CHECK_THROWS_AS(scalarize(m, base, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("instance validation flags structural defects") {
  CHECK(validate_instance(single_task_instance()).ok());

  SUBCASE("duplicate station ids") {
    ProblemInstance inst = single_task_instance();
    inst.stations.push_back(inst.stations[0]);
    CHECK_FALSE(validate_instance(inst).ok());
  }
  SUBCASE("alternative names unknown station") {
    ProblemInstance inst = single_task_instance();
    inst.jobs[0].tasks[0].alternatives[0].station = 9;
    CHECK_FALSE(validate_instance(inst).ok());
  }
  SUBCASE("empty worker pool") {
    ProblemInstance inst = single_task_instance();
    inst.jobs[0].tasks[0].alternatives[0].processing_workers.clear();
    CHECK_FALSE(validate_instance(inst).ok());
  }
  SUBCASE("cyclic job precedence") {
    ProblemInstance inst = diamond_instance();
    inst.job_precedence.insert({0, 3});
    CHECK_FALSE(validate_instance(inst).ok());
  }
  SUBCASE("sequence factor out of range") {
    ProblemInstance inst = sequence_factor_instance();
    inst.stations[0].sequence_factors[{{0, 0}, {1, 0}}] = 0.9;
    CHECK_FALSE(validate_instance(inst).ok());
  }
}

TEST_CASE("schedule feasibility checker") {
  const ProblemInstance inst = single_task_instance();
  Schedule good;
  good.ops.push_back({0, 0, OpKind::Setup, 0, 0, 0.0, 2.0});
  good.ops.push_back({0, 0, OpKind::Processing, 0, 0, 10.0, 15.0});
  good.tardiness_by_job[0] = 0.0;
  CHECK(check_schedule_feasibility(inst, good).empty());

  SUBCASE("release violation") {
    Schedule bad = good;
    bad.ops[1].start = 4.0;
    bad.ops[1].end = 9.0;
    const auto violations = check_schedule_feasibility(inst, bad);
    REQUIRE_FALSE(violations.empty());
    bool found = false;
    for (const Violation& v : violations) found |= v.family == "release_time";
    CHECK(found);
  }
  SUBCASE("missing operation row") {
    Schedule bad;
    bad.ops.push_back(good.ops[1]);
    CHECK_FALSE(check_schedule_feasibility(inst, bad).empty());
  }
  SUBCASE("wrong setup duration") {
    Schedule bad = good;
    bad.ops[0].end = 1.0;
    CHECK_FALSE(check_schedule_feasibility(inst, bad).empty());
  }
  SUBCASE("uncapable worker") {
    ProblemInstance two = single_task_instance();
    two.workers.push_back({1});
    Schedule bad = good;
    bad.ops[1].worker = 1;
    CHECK_FALSE(check_schedule_feasibility(two, bad).empty());
  }
}
