#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "shopsched/cli.hpp"
#include "shopsched/dataio.hpp"
#include "shopsched/sim.hpp"

namespace py = pybind11;
using namespace shopsched;

namespace {

py::dict metrics_dict(const ScheduleMetrics& m) {
  py::dict d;
  d["makespan"] = m.makespan;
  d["total_tardiness"] = m.total_tardiness;
  d["horizon"] = m.horizon;
  py::list stations;
  for (const StationMetrics& st : m.stations) {
    py::dict s;
    s["station"] = st.station;
    s["avg_wip"] = st.avg_wip;
    s["throughput"] = st.throughput;
    s["mean_flow_time"] = st.mean_flow_time;
    s["completed"] = st.completed;
    stations.append(s);
  }
  d["stations"] = stations;
  return d;
}

py::dict result_dict(const SearchResult& r, const ProblemInstance& inst) {
  py::dict d;
  d["z"] = r.best_z;
  d["metrics"] = metrics_dict(r.best_metrics);
  d["schedule_csv"] = export_schedule_csv(r.best_schedule);
  d["evaluations"] = r.evaluations;
  py::list curve;
  for (const GenerationStat& g : r.trajectory) {
    py::dict row;
    row["generation"] = g.generation;
    row["best_z"] = g.best_z;
    row["mean_z"] = g.mean_z;
    row["evaluations"] = g.evaluations;
    curve.append(row);
  }
  d["trajectory"] = curve;
  d["gantt_json"] = export_gantt_json(r.best_schedule, inst);
  return d;
}

}  // namespace

PYBIND11_MODULE(_shopsched, m) {
  m.doc() = "dual-resource flexible job shop scheduling toolkit";

  m.def("version", &cli_version);

  m.def(
      "preset_names", [] { return preset_names(); },
      "named generator configurations");

  m.def(
      "generate",
      [](const std::string& preset, std::uint64_t seed) {
        GeneratorConfig cfg = preset_config(preset);
        if (seed != 0) cfg.seed = seed;
        return save_instance(generate_instance(cfg));
      },
      py::arg("preset"), py::arg("seed") = 0,
      "generate an instance from a preset; returns the instance JSON text");

  m.def(
      "validate",
      [](const std::string& instance_text) {
        const ProblemInstance inst = load_instance_text(instance_text);
        int tasks = 0;
        for (const Job& job : inst.jobs) tasks += static_cast<int>(job.tasks.size());
        py::dict d;
        d["jobs"] = inst.jobs.size();
        d["tasks"] = tasks;
        d["stations"] = inst.stations.size();
        d["workers"] = inst.workers.size();
        return d;
      },
      py::arg("instance_text"),
      "parse + validate an instance document; returns its shape");

  m.def(
      "simulate",
      [](const std::string& instance_text, DispatchRule rule) {
        const ProblemInstance inst = load_instance_text(instance_text);
        const Genome genome = balanced_genome(inst, rule);
        const SimResult sim = simulate(inst, genome);
        py::dict d;
        d["metrics"] = metrics_dict(sim.metrics);
        d["schedule_csv"] = export_schedule_csv(sim.schedule);
        d["gantt_json"] = export_gantt_json(sim.schedule, inst);
        d["event_trace"] = export_event_trace(sim.schedule);
        return d;
      },
      py::arg("instance_text"), py::arg("rule") = DispatchRule::Str,
      "decode the balanced genome under one dispatching rule");

  m.def(
      "solve",
      [](const std::string& instance_text, const std::string& heuristic,
         int budget, std::uint64_t seed, int parallelism) {
        const ProblemInstance inst = load_instance_text(instance_text);
        SearchBudget b{budget, 0};
        SearchResult r;
        if (heuristic == "str") {
          r = run_dispatch_baseline(inst, DispatchRule::Str, b);
        } else if (heuristic == "mtwr") {
          r = run_dispatch_baseline(inst, DispatchRule::Mtwr, b);
        } else if (heuristic == "ts") {
          r = run_ts(inst, balanced_genome(inst, DispatchRule::Str), TsConfig{}, b, seed);
        } else if (heuristic == "sars") {
          r = run_sars(inst, balanced_genome(inst, DispatchRule::Str), SaConfig{}, b, seed);
        } else if (heuristic == "ga") {
          r = run_ga(inst, GaConfig{}, b, seed, parallelism);
        } else if (heuristic == "gasa") {
          r = run_gasa(inst, GaConfig{}, b, seed, parallelism);
        } else {
          throw std::invalid_argument("unknown heuristic: " + heuristic);
        }
        return result_dict(r, inst);
      },
      py::arg("instance_text"), py::arg("heuristic") = "gasa",
      py::arg("budget") = 500, py::arg("seed") = 1, py::arg("parallelism") = 1,
      "run a heuristic under an evaluation budget");

  m.def(
      "check",
      [](const std::string& instance_text, const std::string& schedule_csv) {
        const ProblemInstance inst = load_instance_text(instance_text);
        const Schedule schedule = parse_schedule_csv(schedule_csv, inst);
        py::list out;
        for (const Violation& v : check_schedule_feasibility(inst, schedule)) {
          out.append(py::make_tuple(v.family, v.detail));
        }
        return out;
      },
      py::arg("instance_text"), py::arg("schedule_csv"),
      "feasibility violations of a schedule (empty == feasible)");

  m.def(
      "export_milp",
      [](const std::string& instance_text, bool hard_due_dates) {
        const ProblemInstance inst = load_instance_text(instance_text);
        MilpOptions opt;
        opt.hard_due_dates = hard_due_dates;
        const MilpDocument doc = export_milp(inst, opt);
        py::dict d;
        d["lp_text"] = doc.lp_text;
        d["rows_per_family"] = doc.rows_per_family;
        d["binaries"] = doc.binaries;
        d["continuous"] = doc.continuous;
        return d;
      },
      py::arg("instance_text"), py::arg("hard_due_dates") = false,
      "emit the exact mixed-integer model in LP format");

  m.def(
      "cli",
      [](const std::vector<std::string>& argv) {
        std::ostringstream out, err;
        const int code = run_cli(argv, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("argv"), "run the command-line interface in-process");

  py::enum_<DispatchRule>(m, "DispatchRule")
      .value("Spt", DispatchRule::Spt)
      .value("Lpt", DispatchRule::Lpt)
      .value("Mtwr", DispatchRule::Mtwr)
      .value("Str", DispatchRule::Str)
      .value("Fifo", DispatchRule::Fifo);
}
