#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shopsched/cli.hpp"
#include "shopsched/dataio.hpp"
#include "shopsched/sim.hpp"

namespace shopsched {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Whole-file atomic write: temp file in the target directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

struct ManifestBuilder {
  json doc;

  ManifestBuilder(const std::string& command, const std::vector<std::string>& argv) {
    doc["command"] = command;
    doc["argv"] = argv;
    doc["tool_version"] = cli_version();
    doc["config"] = json::object();
    doc["seeds"] = json::array();
    doc["artifacts"] = json::array();
    doc["timings"] = json::object();
  }
  void config(const json& snapshot) { doc["config"] = snapshot; }
  void seed(std::uint64_t s) { doc["seeds"].push_back(s); }
  void artifact(const std::string& path) { doc["artifacts"].push_back(path); }
  void timing(const std::string& phase, double seconds) {
    doc["timings"][phase] = seconds;
  }
  void write(const std::string& path) {
    write_file_atomic(path, doc.dump(2) + "\n");
  }
};

json generator_config_to_json(const GeneratorConfig& c) {
  json j;
  j["jobs"] = c.jobs;
  j["tasks_per_job_min"] = c.tasks_per_job_min;
  j["tasks_per_job_max"] = c.tasks_per_job_max;
  j["stations"] = c.stations;
  j["workers"] = c.workers;
  j["slots_min"] = c.slots_min;
  j["slots_max"] = c.slots_max;
  j["station_density"] = c.station_density;
  j["capability_density"] = c.capability_density;
  j["setup_duration_min"] = c.setup_duration_min;
  j["setup_duration_max"] = c.setup_duration_max;
  j["processing_duration_min"] = c.processing_duration_min;
  j["processing_duration_max"] = c.processing_duration_max;
  j["sequence_factor_min"] = c.sequence_factor_min;
  j["sequence_factor_max"] = c.sequence_factor_max;
  j["sequence_factor_density"] = c.sequence_factor_density;
  j["automation_min"] = c.automation_min;
  j["automation_max"] = c.automation_max;
  j["due_date_tightness"] = c.due_date_tightness;
  j["release_spread"] = c.release_spread;
  j["precedence_probability"] = c.precedence_probability;
  j["seed"] = c.seed;
  return j;
}

void overlay_generator_config(GeneratorConfig& c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("generator config: expected a JSON object");
  const auto geti = [&](const char* k, int& slot) {
    if (j.contains(k)) slot = j.at(k).get<int>();
  };
  const auto getd = [&](const char* k, double& slot) {
    if (j.contains(k)) slot = j.at(k).get<double>();
  };
  geti("jobs", c.jobs);
  geti("tasks_per_job_min", c.tasks_per_job_min);
  geti("tasks_per_job_max", c.tasks_per_job_max);
  geti("stations", c.stations);
  geti("workers", c.workers);
  geti("slots_min", c.slots_min);
  geti("slots_max", c.slots_max);
  getd("station_density", c.station_density);
  getd("capability_density", c.capability_density);
  getd("setup_duration_min", c.setup_duration_min);
  getd("setup_duration_max", c.setup_duration_max);
  getd("processing_duration_min", c.processing_duration_min);
  getd("processing_duration_max", c.processing_duration_max);
  getd("sequence_factor_min", c.sequence_factor_min);
  getd("sequence_factor_max", c.sequence_factor_max);
  getd("sequence_factor_density", c.sequence_factor_density);
  getd("automation_min", c.automation_min);
  getd("automation_max", c.automation_max);
  getd("due_date_tightness", c.due_date_tightness);
  getd("release_spread", c.release_spread);
  getd("precedence_probability", c.precedence_probability);
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
}

ProblemInstance load_instance_file(const std::string& path) {
  return load_instance_text(read_file(path));
}

const std::vector<std::string> kHeuristics = {"str",  "mtwr", "ts",  "sars",
                                              "ga",   "gasa", "gasa-rl"};

SearchResult run_heuristic(const std::string& name, const ProblemInstance& inst,
                           SearchBudget& budget, std::uint64_t seed,
                           int parallelism, const Agent* policy) {
  if (name == "str") return run_dispatch_baseline(inst, DispatchRule::Str, budget);
  if (name == "mtwr") return run_dispatch_baseline(inst, DispatchRule::Mtwr, budget);
  if (name == "ts") {
    return run_ts(inst, balanced_genome(inst, DispatchRule::Str), TsConfig{},
                  budget, seed);
  }
  if (name == "sars") {
    return run_sars(inst, balanced_genome(inst, DispatchRule::Str), SaConfig{},
                    budget, seed);
  }
  if (name == "ga") return run_ga(inst, GaConfig{}, budget, seed, parallelism);
  if (name == "gasa") return run_gasa(inst, GaConfig{}, budget, seed, parallelism);
  if (name == "gasa-rl") {
    if (policy == nullptr) {
      throw std::invalid_argument("gasa-rl requires --policy");
    }
    return run_gasa_rl(inst, GaConfig{}, budget, *policy, seed, parallelism);
  }
  throw std::invalid_argument("unknown heuristic: " + name);
}

// Curve rows hold only deterministic quantities; wall clock lives in the
// manifest so reruns stay byte-identical.
std::string curve_csv(const std::vector<std::pair<std::uint64_t, const SearchResult*>>& runs) {
  std::string out = "seed,generation,best_z,mean_z,evaluations\n";
  json scratch;  // reuse nlohmann's shortest-round-trip double format
  for (const auto& [seed, result] : runs) {
    for (const GenerationStat& g : result->trajectory) {
      scratch = g.best_z;
      const std::string best = scratch.dump();
      scratch = g.mean_z;
      const std::string mean = scratch.dump();
      out += std::to_string(seed) + "," + std::to_string(g.generation) + "," +
             best + "," + mean + "," + std::to_string(g.evaluations) + "\n";
    }
  }
  return out;
}

json metrics_json(const SearchResult& r) {
  json j;
  j["z"] = r.best_z;
  j["makespan"] = r.best_metrics.makespan;
  j["tardiness"] = r.best_metrics.total_tardiness;
  j["evaluations"] = r.evaluations;
  j["baseline_makespan"] = r.baseline.makespan;
  j["baseline_tardiness"] = r.baseline.total_tardiness;
  return j;
}

// --- subcommand payloads ----------------------------------------------------

struct GenerateArgs {
  std::string preset;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& argv,
                 std::ostream& out, std::ostream& err) {
  (void)err;
  const auto t0 = Clock::now();
  GeneratorConfig cfg;
  if (!a.preset.empty()) cfg = preset_config(a.preset);
  if (!a.config_path.empty()) {
    overlay_generator_config(cfg, json::parse(read_file(a.config_path)));
  }
  if (a.seed) cfg.seed = *a.seed;

  const ProblemInstance inst = generate_instance(cfg);
  write_file_atomic(a.out, save_instance(inst));

  int tasks = 0;
  for (const Job& job : inst.jobs) tasks += static_cast<int>(job.tasks.size());
  out << "generated " << inst.jobs.size() << " jobs / " << tasks << " tasks / "
      << inst.stations.size() << " stations / " << inst.workers.size()
      << " workers -> " << a.out << "\n";

  ManifestBuilder manifest("generate", argv);
  manifest.config(generator_config_to_json(cfg));
  manifest.seed(cfg.seed);
  manifest.artifact(a.out);
  manifest.timing("generate_seconds", seconds_since(t0));
  manifest.write(a.out + ".manifest.json");
  return kExitOk;
}

struct SolveArgs {
  std::string instance;
  std::string heuristic;
  int budget = 500;
  int seeds = 1;
  std::uint64_t seed = 1;
  int parallelism = 1;
  std::string policy;
  std::string out;
};

int cmd_solve(const SolveArgs& a, const std::vector<std::string>& argv,
              std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  const ProblemInstance inst = load_instance_file(a.instance);

  std::optional<Agent> policy;
  if (!a.policy.empty()) {
    const std::string bytes = read_file(a.policy);
    policy = load_policy(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  }
  if (a.heuristic == "gasa-rl" && !policy) {
    throw std::invalid_argument("gasa-rl requires --policy");
  }

  std::vector<SearchResult> results;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < a.seeds; ++i) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
    SearchBudget budget{a.budget, 0};
    results.push_back(run_heuristic(a.heuristic, inst, budget, seed,
                                    a.parallelism,
                                    policy ? &*policy : nullptr));
    seeds.push_back(seed);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].best_z < results[best].best_z) best = i;
  }

  bool all_feasible = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::vector<Violation> violations =
        check_schedule_feasibility(inst, results[i].best_schedule);
    if (!violations.empty()) {
      all_feasible = false;
      err << "seed " << seeds[i] << ": infeasible schedule\n";
      for (const Violation& v : violations) {
        err << "  [" << v.family << "] " << v.detail << "\n";
      }
    }
  }

  const fs::path dir(a.out);
  write_file_atomic((dir / "schedule.csv").string(),
                    export_schedule_csv(results[best].best_schedule));
  write_file_atomic((dir / "gantt.json").string(),
                    export_gantt_json(results[best].best_schedule, inst));

  json metrics;
  metrics["heuristic"] = a.heuristic;
  metrics["budget"] = a.budget;
  metrics["best_seed"] = seeds[best];
  metrics["best"] = metrics_json(results[best]);
  metrics["per_seed"] = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    json row = metrics_json(results[i]);
    row["seed"] = seeds[i];
    metrics["per_seed"].push_back(row);
  }
  write_file_atomic((dir / "metrics.json").string(), metrics.dump(2) + "\n");

  std::vector<std::pair<std::uint64_t, const SearchResult*>> curve_rows;
  for (std::size_t i = 0; i < results.size(); ++i) {
    curve_rows.push_back({seeds[i], &results[i]});
  }
  write_file_atomic((dir / "curve.csv").string(), curve_csv(curve_rows));

  ManifestBuilder manifest("solve", argv);
  json cfg;
  cfg["instance"] = a.instance;
  cfg["heuristic"] = a.heuristic;
  cfg["budget"] = a.budget;
  cfg["parallelism"] = a.parallelism;
  if (!a.policy.empty()) cfg["policy"] = a.policy;
  manifest.config(cfg);
  for (std::uint64_t s : seeds) manifest.seed(s);
  for (const char* name : {"schedule.csv", "gantt.json", "metrics.json", "curve.csv"}) {
    manifest.artifact((dir / name).string());
  }
  manifest.timing("solve_seconds", seconds_since(t0));
  manifest.write((dir / "manifest.json").string());

  for (std::size_t i = 0; i < results.size(); ++i) {
    out << "seed " << seeds[i] << ": z=" << results[i].best_z
        << " makespan=" << results[i].best_metrics.makespan
        << " tardiness=" << results[i].best_metrics.total_tardiness
        << " evaluations=" << results[i].evaluations << "\n";
  }
  out << "best seed " << seeds[best] << " -> " << (dir / "schedule.csv").string()
      << "\n";
  return all_feasible ? kExitOk : kExitInfeasible;
}

struct TrainArgs {
  std::string instance;
  std::string out;
  std::uint64_t seed = 1;
  int steps = 30000;
  int warmup_budget = 300;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv,
              std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  const ProblemInstance inst = load_instance_file(a.instance);

  // Short memetic warm start supplies the fitness label, the sample genome the
  // episodes replay, and the normalization baseline.
  SearchBudget warm{a.warmup_budget, 0};
  const SearchResult warm_result = run_gasa(inst, GaConfig{}, warm, a.seed);
  const double warm_seconds = seconds_since(t0);

  TrainerConfig cfg;
  cfg.total_steps = a.steps;
  cfg.seed = a.seed;

  std::string log = "update,steps_done,learning_rate,policy_loss,value_loss,entropy,mean_episode_reward\n";
  json scratch;
  const auto append_log = [&](const UpdateLog& u) {
    log += std::to_string(u.update) + "," + std::to_string(u.steps_done);
    for (double v : {u.learning_rate, u.policy_loss, u.value_loss, u.entropy,
                     u.mean_episode_reward}) {
      scratch = v;
      log += "," + scratch.dump();
    }
    log += "\n";
  };

  const auto t1 = Clock::now();
  TrainResult result;
  try {
    result = ppo_train(inst, warm_result.best_genome, warm_result.best_z,
                       warm_result.baseline, cfg, append_log);
  } catch (const TrainingDiverged& e) {
    err << "training diverged at update " << e.update_index << ": " << e.what()
        << "\n";
    return kExitDiverged;
  }

  const std::vector<std::uint8_t> bytes = save_policy(result.agent);
  write_file_atomic(a.out, std::string(bytes.begin(), bytes.end()));
  write_file_atomic(a.out + ".log.csv", log);

  ManifestBuilder manifest("train", argv);
  json snapshot;
  snapshot["instance"] = a.instance;
  snapshot["steps"] = a.steps;
  snapshot["warmup_budget"] = a.warmup_budget;
  snapshot["fitness_label"] = warm_result.best_z;
  manifest.config(snapshot);
  manifest.seed(a.seed);
  manifest.artifact(a.out);
  manifest.artifact(a.out + ".log.csv");
  manifest.timing("warmup_seconds", warm_seconds);
  manifest.timing("train_seconds", seconds_since(t1));
  manifest.write(a.out + ".manifest.json");

  out << "trained " << result.updates.size() << " updates / "
      << result.steps_done << " steps / " << result.episodes_done
      << " episodes";
  if (!result.updates.empty()) {
    out << "; episode reward " << result.updates.front().mean_episode_reward
        << " -> " << result.updates.back().mean_episode_reward;
  }
  out << " -> " << a.out << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::string dataset;
  std::vector<std::string> heuristics = {"str", "mtwr", "ts", "sars", "ga", "gasa"};
  int seeds = 3;
  std::uint64_t seed = 1;
  int budget = 500;
  std::vector<int> parallelism = {1};
  std::string policy;
  std::string out;
};

int cmd_bench(const BenchArgs& a, const std::vector<std::string>& argv,
              std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.dataset)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw std::invalid_argument("no instance files (*.json) in " + a.dataset);
  }

  std::optional<Agent> policy;
  if (!a.policy.empty()) {
    const std::string bytes = read_file(a.policy);
    policy = load_policy(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  }

  std::vector<BenchmarkRun> runs;
  int attempted = 0, failed = 0, loaded = 0;
  for (const fs::path& file : files) {
    ProblemInstance inst;
    try {
      inst = load_instance_file(file.string());
    } catch (const std::exception& e) {
      err << "warning: skipping " << file.string() << ": " << e.what() << "\n";
      continue;
    }
    ++loaded;
    // Shared per-instance reference so every heuristic's objective is
    // normalized against the same solution.
    SearchBudget ref_budget{1, 0};
    const ScheduleMetrics reference =
        run_dispatch_baseline(inst, DispatchRule::Str, ref_budget).best_metrics;

    for (const std::string& heuristic : a.heuristics) {
      for (int parallelism : a.parallelism) {
        for (int i = 0; i < a.seeds; ++i) {
          const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
          attempted += 1;
          try {
            SearchBudget budget{a.budget, 0};
            const auto run_start = Clock::now();
            const SearchResult result =
                run_heuristic(heuristic, inst, budget, seed, parallelism,
                              policy ? &*policy : nullptr);
            BenchmarkRun row;
            row.dataset = file.stem().string();
            row.heuristic = heuristic;
            row.seed = seed;
            row.makespan = result.best_metrics.makespan;
            row.tardiness = result.best_metrics.total_tardiness;
            row.z = scalarize(result.best_metrics, reference,
                              inst.weight_makespan, inst.weight_tardiness);
            row.seconds = seconds_since(run_start);
            row.parallelism = parallelism;
            row.trajectory = result.trajectory;
            runs.push_back(row);
          } catch (const std::exception& e) {
            failed += 1;
            err << "warning: " << file.stem().string() << "/" << heuristic
                << "/seed " << seed << " failed: " << e.what() << "\n";
          }
        }
      }
    }
  }

  if (runs.empty()) {
    err << "all " << attempted << " cells failed\n";
    return kExitUsage;
  }

  const BenchmarkReport report = build_report(runs);
  const fs::path dir(a.out);
  write_file_atomic((dir / "objective_table.tsv").string(), report.objective_table);
  write_file_atomic((dir / "timing_table.tsv").string(), report.timing_table);
  write_file_atomic((dir / "convergence.csv").string(), report.convergence_csv);

  json scratch;
  std::string raw = "dataset,heuristic,seed,parallelism,makespan,tardiness,z,seconds\n";
  for (const BenchmarkRun& run : runs) {
    raw += run.dataset + "," + run.heuristic + "," + std::to_string(run.seed) +
           "," + std::to_string(run.parallelism);
    for (double v : {run.makespan, run.tardiness, run.z, run.seconds}) {
      scratch = v;
      raw += "," + scratch.dump();
    }
    raw += "\n";
  }
  write_file_atomic((dir / "runs.csv").string(), raw);

  ManifestBuilder manifest("bench", argv);
  json cfg;
  cfg["dataset"] = a.dataset;
  cfg["heuristics"] = a.heuristics;
  cfg["budget"] = a.budget;
  cfg["parallelism"] = a.parallelism;
  cfg["seed_count"] = a.seeds;
  if (!a.policy.empty()) cfg["policy"] = a.policy;
  manifest.config(cfg);
  for (int i = 0; i < a.seeds; ++i) manifest.seed(a.seed + static_cast<std::uint64_t>(i));
  for (const char* name :
       {"objective_table.tsv", "timing_table.tsv", "convergence.csv", "runs.csv"}) {
    manifest.artifact((dir / name).string());
  }
  manifest.timing("bench_seconds", seconds_since(t0));
  manifest.write((dir / "manifest.json").string());

  out << runs.size() << " runs over " << loaded << " instances -> "
      << a.out << "\n";
  if (failed > 0) out << failed << " of " << attempted << " cells failed\n";
  out << report.objective_table;
  return kExitOk;
}

struct CheckArgs {
  std::string instance;
  std::string schedule;
};

int cmd_check(const CheckArgs& a, const std::vector<std::string>& argv,
              std::ostream& out, std::ostream& err) {
  (void)argv;
  const ProblemInstance inst = load_instance_file(a.instance);
  Schedule schedule;
  try {
    schedule = parse_schedule_csv(read_file(a.schedule), inst);
  } catch (const std::invalid_argument& e) {
    err << "schedule rejected: " << e.what() << "\n";
    return kExitInfeasible;
  }
  const std::vector<Violation> violations =
      check_schedule_feasibility(inst, schedule);
  if (!violations.empty()) {
    for (const Violation& v : violations) {
      err << "[" << v.family << "] " << v.detail << "\n";
    }
    return kExitInfeasible;
  }
  out << "feasible\n";
  return kExitOk;
}

}  // namespace

std::string cli_version() { return "shopsched 1.0.0"; }

int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"dual-resource flexible job shop scheduling toolkit"};
  app.name("shopsched");
  app.set_version_flag("--version", cli_version());

  GenerateArgs gen;
  std::uint64_t gen_seed = 0;
  bool gen_seed_set = false;
  CLI::App* generate = app.add_subcommand("generate", "generate an instance file");
  generate->add_option("--preset", gen.preset,
                       "named configuration: " + [] {
                         std::string names;
                         for (const auto& n : preset_names()) {
                           if (!names.empty()) names += ", ";
                           names += n;
                         }
                         return names;
                       }());
  generate->add_option("--config", gen.config_path, "generator config JSON file");
  generate->add_option("--seed", gen_seed, "seed override");
  generate->add_option("--out", gen.out, "output instance path")->required();

  SolveArgs solve;
  CLI::App* solve_cmd = app.add_subcommand("solve", "run one heuristic");
  solve_cmd->add_option("--instance", solve.instance, "instance file")->required();
  solve_cmd->add_option("--heuristic", solve.heuristic, "one of str, mtwr, ts, sars, ga, gasa, gasa-rl")
      ->required()
      ->check(CLI::IsMember(kHeuristics));
  solve_cmd->add_option("--budget", solve.budget, "evaluation budget per seed");
  solve_cmd->add_option("--seeds", solve.seeds, "number of seeds");
  solve_cmd->add_option("--seed", solve.seed, "first seed");
  solve_cmd->add_option("--parallelism", solve.parallelism, "evaluation threads");
  solve_cmd->add_option("--policy", solve.policy, "policy checkpoint (gasa-rl)");
  solve_cmd->add_option("--out", solve.out, "output directory")->required();

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train a dispatching policy");
  train_cmd->add_option("--instance", train.instance, "instance file")->required();
  train_cmd->add_option("--out", train.out, "policy checkpoint path")->required();
  train_cmd->add_option("--seed", train.seed, "training seed");
  train_cmd->add_option("--steps", train.steps, "environment steps");
  train_cmd->add_option("--warmup-budget", train.warmup_budget,
                        "evaluations for the warm-start search");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "benchmark heuristics over a dataset");
  bench_cmd->add_option("--dataset", bench.dataset, "directory of instance files")
      ->required();
  bench_cmd->add_option("--heuristics", bench.heuristics, "heuristics to run")
      ->delimiter(',')
      ->check(CLI::IsMember(kHeuristics));
  bench_cmd->add_option("--seeds", bench.seeds, "seeds per cell");
  bench_cmd->add_option("--seed", bench.seed, "first seed");
  bench_cmd->add_option("--budget", bench.budget, "evaluation budget per run");
  bench_cmd->add_option("--parallelism", bench.parallelism, "parallelism levels")
      ->delimiter(',');
  bench_cmd->add_option("--policy", bench.policy, "policy checkpoint (gasa-rl)");
  bench_cmd->add_option("--out", bench.out, "output directory")->required();

  CheckArgs check;
  CLI::App* check_cmd = app.add_subcommand("check", "verify a schedule against an instance");
  check_cmd->add_option("--instance", check.instance, "instance file")->required();
  check_cmd->add_option("--schedule", check.schedule, "schedule csv")->required();

  app.require_subcommand(1);

  std::vector<const char*> cargv;
  cargv.push_back("shopsched");
  for (const std::string& arg : argv) cargv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << cli_version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  gen_seed_set = generate->count("--seed") > 0;
  if (gen_seed_set) gen.seed = gen_seed;

  try {
    if (generate->parsed()) return cmd_generate(gen, argv, out, err);
    if (solve_cmd->parsed()) return cmd_solve(solve, argv, out, err);
    if (train_cmd->parsed()) return cmd_train(train, argv, out, err);
    if (bench_cmd->parsed()) return cmd_bench(bench, argv, out, err);
    if (check_cmd->parsed()) return cmd_check(check, argv, out, err);
  } catch (const TrainingDiverged& e) {
    err << "training diverged at update " << e.update_index << ": " << e.what()
        << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << "no subcommand\n";
  return kExitUsage;
}

}  // namespace shopsched
