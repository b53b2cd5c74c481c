#include <doctest.h>

#include <json.hpp>
#include <string>

#include "shopsched/dataio.hpp"
#include "shopsched/genome.hpp"
#include "shopsched/sim.hpp"
#include "test_support.hpp"

using namespace shopsched;
using namespace shopsched::testing;

namespace {

std::string replace_once(std::string text, const std::string& from,
                         const std::string& to) {
  const std::size_t at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

int count_constraint_rows(const std::string& lp) {
  const std::size_t begin = lp.find("Subject To\n");
  const std::size_t end = lp.find("Binary\n");
  REQUIRE(begin != std::string::npos);
  REQUIRE(end != std::string::npos);
  int rows = 0;
  for (std::size_t i = begin + 11; i < end; ++i) {
    if (lp[i] == '\n') rows += 1;
  }
  return rows;
}

}  // namespace

TEST_CASE("mean and sample standard deviation") {
  const auto [mean, stddev] = mean_and_sample_std({10.0, 20.0});
  CHECK(mean == doctest::Approx(15.0));
  CHECK(stddev == doctest::Approx(7.0710678));
  const auto single = mean_and_sample_std({4.0});
  CHECK(single.first == doctest::Approx(4.0));
  CHECK(single.second == doctest::Approx(0.0));
  CHECK_THROWS_AS(mean_and_sample_std({}), std::invalid_argument);
}

TEST_CASE("generator presets have their documented shapes") {
  const ProblemInstance small = generate_instance(preset_config("gbrt01"));
  CHECK(small.jobs.size() == 6);
  CHECK(small.stations.size() == 2);
  CHECK(small.workers.size() == 2);
  int small_tasks = 0;
  for (const Job& job : small.jobs) small_tasks += static_cast<int>(job.tasks.size());
  CHECK(small_tasks == 14);

  const ProblemInstance wide = generate_instance(preset_config("gbrt02"));
  CHECK(wide.jobs.size() == 3);
  CHECK(wide.stations.size() == 6);
  CHECK(wide.workers.size() == 3);
  int wide_tasks = 0;
  for (const Job& job : wide.jobs) wide_tasks += static_cast<int>(job.tasks.size());
  CHECK(wide_tasks == 10);

  CHECK(validate_instance(generate_instance(preset_config("realworld"))).ok());
  CHECK(preset_names().size() == 3);
  CHECK_THROWS_AS(preset_config("nope"), std::invalid_argument);
}

TEST_CASE("generation is deterministic and config-validated") {
  GeneratorConfig cfg = preset_config("gbrt01");
  cfg.seed = 77;
  CHECK(save_instance(generate_instance(cfg)) ==
        save_instance(generate_instance(cfg)));
  GeneratorConfig other = cfg;
  other.seed = 78;
  CHECK(save_instance(generate_instance(cfg)) !=
        save_instance(generate_instance(other)));

  GeneratorConfig bad = cfg;
  bad.jobs = 0;
  CHECK_THROWS_WITH_AS(generate_instance(bad),
                       doctest::Contains("jobs must be >= 1"),
                       std::invalid_argument);
  bad = cfg;
  bad.tasks_per_job_min = 5;
  bad.tasks_per_job_max = 2;
  CHECK_THROWS_AS(generate_instance(bad), std::invalid_argument);
  bad = cfg;
  bad.sequence_factor_max = 0.9;
  CHECK_THROWS_AS(generate_instance(bad), std::invalid_argument);
}

TEST_CASE("instance files round-trip byte for byte") {
  for (const std::string& name : preset_names()) {
    const ProblemInstance inst = generate_instance(preset_config(name));
    const std::string text = save_instance(inst);
    const ProblemInstance loaded = load_instance_text(text);
    CHECK(save_instance(loaded) == text);
  }

  ProblemInstance hand = sequence_factor_instance();
  hand.jobs[0].due_date = 42.5;
  hand.job_precedence.insert({1, 0});
  const std::string text = save_instance(hand);
  const ProblemInstance loaded = load_instance_text(text);
  CHECK(save_instance(loaded) == text);
  CHECK(loaded.jobs[0].due_date == doctest::Approx(42.5));
  CHECK(loaded.job_precedence.count({1, 0}) == 1);
  CHECK(loaded.stations[0].sequence_factors.at({{0, 0}, {1, 0}}) ==
        doctest::Approx(0.5));
}

TEST_CASE("instance loader errors name the offending field") {
  CHECK_THROWS_WITH_AS(load_instance_text("{"),
                       doctest::Contains("instance JSON:"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(load_instance_text("[]"),
                       doctest::Contains("$: expected a JSON object"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(load_instance_text(R"({"format": "nope"})"),
                       doctest::Contains("$.format"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      load_instance_text(R"({"format": "shopsched-instance", "version": 9})"),
      doctest::Contains("$.version"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      load_instance_text(R"({"format": "shopsched-instance", "version": 1})"),
      doctest::Contains("missing"), std::invalid_argument);

  const std::string valid = save_instance(sequence_factor_instance());

  SUBCASE("sequence factor out of range") {
    const std::string bad =
        replace_once(valid, "\"factor\": 0.5", "\"factor\": 0.9");
    CHECK_THROWS_WITH_AS(load_instance_text(bad),
                         doctest::Contains("outside [-1, 0.5]"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        load_instance_text(bad),
        doctest::Contains("stations[0].sequence_factors[0].factor"),
        std::invalid_argument);
  }
  SUBCASE("worker keys must be ids") {
    const std::string bad = replace_once(valid, "\"0\": 10.0", "\"x\": 10.0");
    CHECK_THROWS_WITH_AS(load_instance_text(bad),
                         doctest::Contains("key is not a worker id"),
                         std::invalid_argument);
  }
  SUBCASE("automation outside [0, 1]") {
    const std::string bad =
        replace_once(valid, "\"automation\": 1.0", "\"automation\": 1.5");
    CHECK_THROWS_WITH_AS(load_instance_text(bad), doctest::Contains("[0, 1]"),
                         std::invalid_argument);
  }
  SUBCASE("semantic validation still runs") {
    // Second station duplicating id 0.
    ProblemInstance twin = sequence_factor_instance();
    Station dup = twin.stations[0];
    twin.stations.push_back(dup);
    CHECK_THROWS_WITH_AS(load_instance_text(save_instance(twin)),
                         doctest::Contains("instance invalid:"),
                         std::invalid_argument);
  }
}

TEST_CASE("schedule CSV round-trips and recomputes tardiness") {
  ProblemInstance inst = single_task_instance();
  inst.jobs[0].due_date = 12.0;
  const SimResult result = simulate(inst, balanced_genome(inst, DispatchRule::Fifo));
  const std::string csv = export_schedule_csv(result.schedule);
  CHECK(csv.substr(0, csv.find('\n')) == "job,task,kind,station,worker,start,end");

  const Schedule parsed = parse_schedule_csv(csv, inst);
  CHECK(export_schedule_csv(parsed) == csv);
  CHECK(parsed.tardiness_by_job.at(0) == doctest::Approx(3.0));  // 15 vs due 12
  CHECK(check_schedule_feasibility(inst, parsed).empty());
}

TEST_CASE("schedule CSV parser reports row-level errors") {
  const ProblemInstance inst = single_task_instance();
  const std::string header = "job,task,kind,station,worker,start,end\n";

  CHECK_THROWS_WITH_AS(parse_schedule_csv("nope\n", inst),
                       doctest::Contains("row 1"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_schedule_csv(header + "0,0,setup,0,0,0\n", inst),
                       doctest::Contains("row 2: expected 7 fields"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_schedule_csv(header + "0,0,cleanup,0,0,0,2\n", inst),
                       doctest::Contains("kind must be setup or processing"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_schedule_csv(header + "0,0,setup,0,0,5,2\n", inst),
                       doctest::Contains("end precedes start"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_schedule_csv(header + "3,0,setup,0,0,0,2\n", inst),
                       doctest::Contains("unknown task 3.0"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_schedule_csv(header + "0,0,setup,9,0,0,2\n", inst),
                       doctest::Contains("unknown station 9"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_schedule_csv(header + "0,0,setup,0,9,0,2\n", inst),
                       doctest::Contains("unknown worker 9"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_schedule_csv(header + "0,0,setup,0,0,zero,2\n", inst),
                       doctest::Contains("is not a number"),
                       std::invalid_argument);
}

TEST_CASE("gantt export keeps one lane per station, empty ones included") {
  ProblemInstance inst = slot_instance(1);
  Station idle;
  idle.id = 7;
  idle.slots = 3;
  idle.requires_setup = false;
  inst.stations.push_back(idle);

  const SimResult result = simulate(inst, balanced_genome(inst, DispatchRule::Fifo));
  const std::string text = export_gantt_json(result.schedule, inst);
  const nlohmann::json doc = nlohmann::json::parse(text);

  REQUIRE(doc.at("lanes").size() == 2);
  CHECK(doc["lanes"][0]["station"] == 0);
  CHECK(doc["lanes"][0]["bars"].size() == 2);
  CHECK(doc["lanes"][1]["station"] == 7);
  CHECK(doc["lanes"][1]["slots"] == 3);
  CHECK(doc["lanes"][1]["bars"].empty());
  CHECK(doc["lanes"][0]["bars"][0]["label"] == "0.0 processing");
  double prev = -1.0;
  for (const auto& bar : doc["lanes"][0]["bars"]) {
    CHECK(double(bar["start"]) >= prev);
    prev = bar["start"];
  }
}

TEST_CASE("event trace orders completions before starts at equal times") {
  const ProblemInstance inst = slot_instance(1);
  const SimResult result = simulate(inst, balanced_genome(inst, DispatchRule::Fifo));
  const std::string trace = export_event_trace(result.schedule);

  CHECK(trace.substr(0, trace.find('\n')) ==
        "time,event,job,task,kind,station,worker");
  const std::size_t complete_at_10 = trace.find("10,complete,0,0,processing");
  const std::size_t start_at_10 = trace.find("10,start,1,0,processing");
  REQUIRE(complete_at_10 != std::string::npos);
  REQUIRE(start_at_10 != std::string::npos);
  CHECK(complete_at_10 < start_at_10);
}

TEST_CASE("exact-model export: single-task shape") {
  const MilpDocument doc = export_milp(single_task_instance());
  const auto& fam = doc.rows_per_family;

  CHECK(fam.at("release") == 1);
  CHECK(fam.at("processing_duration") == 1);
  CHECK(fam.at("setup_duration") == 1);
  CHECK(fam.at("station_choice") == 1);
  CHECK(fam.at("worker_choice_processing") == 1);
  CHECK(fam.at("worker_choice_setup") == 1);
  CHECK(fam.at("setup_before_processing") == 1);
  CHECK(fam.at("setup_self_sequence") == 1);
  CHECK(fam.at("psi_assignment_link") == 1);
  CHECK(fam.at("setup_pin_no_setup_station") == 1);
  CHECK(fam.at("makespan_link") == 2);
  CHECK(fam.count("tardiness_link") == 0);   // no due date
  CHECK(fam.count("worker_capacity") == 0);  // single task
  CHECK(fam.count("slot_capacity") == 0);

  CHECK(doc.binaries == 4);     // station, two worker picks, self-sequence
  CHECK(doc.continuous == 5);   // two ops x (start, end) + cmax

  int total = 0;
  for (const auto& [name, count] : fam) total += count;
  CHECK(total == count_constraint_rows(doc.lp_text));

  CHECK(doc.lp_text.find("Minimize") != std::string::npos);
  CHECK(doc.lp_text.find("a_0_0_0 >= 10") != std::string::npos);  // release
  CHECK(doc.lp_text.find("cmax") != std::string::npos);
  CHECK(doc.lp_text.rfind("End\n") == doc.lp_text.size() - 4);
}

TEST_CASE("exact-model export: contention families") {
  SUBCASE("single-slot station separation") {
    const MilpDocument doc = export_milp(slot_instance(1));
    const auto& fam = doc.rows_per_family;
    CHECK(fam.at("slot_capacity") == 1);
    CHECK(fam.at("lambda_time_link") == 2);
    CHECK(fam.count("lambda_exclusive") == 0);  // reverse binaries not in model
    CHECK(fam.count("worker_capacity") == 0);   // disjoint worker pools
    CHECK(fam.count("slot_pair_capacity") == 0);
  }
  SUBCASE("multi-slot stations use slot assignment binaries") {
    const MilpDocument doc = export_milp(slot_instance(2));
    const auto& fam = doc.rows_per_family;
    CHECK(fam.count("slot_capacity") == 0);
    CHECK(fam.at("slot_pair_capacity") == 2);  // one per slot
    CHECK(fam.at("slot_assignment") == 2);     // one per task
  }
  SUBCASE("shared worker attention rows") {
    const MilpDocument doc = export_milp(shared_worker_instance(0.5));
    const auto& fam = doc.rows_per_family;
    CHECK(fam.at("worker_capacity") == 4);   // 2x2 cross-task op pairs
    CHECK(fam.at("lambda_exclusive") == 4);  // both directions exist here
    CHECK(fam.at("lambda_time_link") == 8);
  }
  SUBCASE("sequence factors enter setup durations via predecessor binaries") {
    const MilpDocument doc = export_milp(sequence_factor_instance());
    const auto& fam = doc.rows_per_family;
    CHECK(fam.at("psi_station_link") == 2);
    CHECK(fam.at("psi_time_link") == 2);
    CHECK(fam.at("psi_pred_choice") == 2);
    // d * (1 + s): factor 0.5 on base 10 appears as -5, factor -1 as +10.
    CHECK(doc.lp_text.find("- 5 p_0_0_0__1_0_1_0_0") != std::string::npos);
    CHECK(doc.lp_text.find("+ 10 p_1_0_0__0_0_1_0_0") != std::string::npos);
  }
}

TEST_CASE("exact-model export: due dates and the row cap") {
  ProblemInstance inst = single_task_instance();
  inst.jobs[0].due_date = 5.0;

  const MilpDocument soft = export_milp(inst);
  CHECK(soft.rows_per_family.at("tardiness_link") == 1);
  CHECK(soft.rows_per_family.at("tardiness_nonneg") == 1);
  CHECK(soft.rows_per_family.count("deadline") == 0);
  CHECK(soft.lp_text.find("sig_0") != std::string::npos);
  CHECK(soft.continuous == 6);

  MilpOptions hard;
  hard.hard_due_dates = true;
  const MilpDocument probe = export_milp(inst, hard);
  CHECK(probe.rows_per_family.at("deadline") == 1);
  CHECK(probe.lp_text.find("b_0_0_0 <= 5") != std::string::npos);
  // Together with the release row this model is infeasible: processing must
  // start at 10 but finish by 5. The simulator-side oracle agrees: a schedule
  // meeting the due date breaks the release constraint.
  CHECK(probe.lp_text.find("a_0_0_0 >= 10") != std::string::npos);
  const Schedule early = parse_schedule_csv(
      "job,task,kind,station,worker,start,end\n"
      "0,0,setup,0,0,0,2\n"
      "0,0,processing,0,0,0,5\n",
      inst);
  bool release_flagged = false;
  for (const Violation& v : check_schedule_feasibility(inst, early)) {
    if (v.family == "release_time") release_flagged = true;
  }
  CHECK(release_flagged);

  MilpOptions tiny;
  tiny.max_rows = 5;
  CHECK_THROWS_WITH_AS(export_milp(inst, tiny),
                       doctest::Contains("exceeds the row cap"),
                       std::invalid_argument);
}

TEST_CASE("benchmark report aggregates and formats") {
  auto run = [](const std::string& dataset, const std::string& heuristic,
                std::uint64_t seed, double ms, double tt, double z, double sec,
                int par, std::vector<GenerationStat> gens) {
    BenchmarkRun r;
    r.dataset = dataset;
    r.heuristic = heuristic;
    r.seed = seed;
    r.makespan = ms;
    r.tardiness = tt;
    r.z = z;
    r.seconds = sec;
    r.parallelism = par;
    r.trajectory = std::move(gens);
    return r;
  };

  const std::vector<BenchmarkRun> runs = {
      run("alpha", "ga", 1, 10.0, 0.0, 1.0, 0.5, 1, {{0, 1.0, 1.2, 50, 0.1}}),
      run("alpha", "ga", 2, 20.0, 4.0, 0.9, 0.7, 1, {{0, 0.5, 0.8, 50, 0.1}}),
      run("alpha", "ts", 1, 12.0, 1.0, 0.95, 0.2, 2, {}),
      run("beta", "ga", 1, 30.0, 2.0, 1.1, 0.9, 1, {}),
  };
  const BenchmarkReport report = build_report(runs);

  const auto& cell = report.cells.at("alpha").at("ga");
  CHECK(cell.runs == 2);
  CHECK(cell.mean_makespan == doctest::Approx(15.0));
  CHECK(cell.std_makespan == doctest::Approx(7.0710678));
  CHECK(cell.mean_tardiness == doctest::Approx(2.0));
  CHECK(report.cells.at("alpha").at("ts").std_makespan == doctest::Approx(0.0));

  // Objective table: header + one row per dataset, tab-separated.
  CHECK(report.objective_table.substr(0, report.objective_table.find('\n')) ==
        "dataset\tga makespan\tga tardiness\tts makespan\tts tardiness");
  CHECK(report.objective_table.find("15.00 +- 7.07") != std::string::npos);
  CHECK(report.objective_table.find("\t-\t-") != std::string::npos);  // beta/ts
  int lines = 0;
  for (char c : report.objective_table) lines += c == '\n';
  CHECK(lines == 3);

  CHECK(report.timing_table.substr(0, report.timing_table.find('\n')) ==
        "dataset\theuristic\tparallelism\truns\tmean_seconds");
  CHECK(report.timing_table.find("alpha\tts\t2\t1\t0.20") != std::string::npos);

  CHECK(report.convergence_csv.substr(0, report.convergence_csv.find('\n')) ==
        "generation,heuristic,dataset,mean_best_z");
  CHECK(report.convergence_csv.find("0,ga,alpha,0.75") != std::string::npos);

  CHECK_THROWS_AS(build_report({}), std::invalid_argument);
}
