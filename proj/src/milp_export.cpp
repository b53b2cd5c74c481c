#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "shopsched/dataio.hpp"

namespace shopsched {

namespace {

// Op orientation used by the exported model: s = 0 is the processing
// operation, s = 1 the setup operation.
struct OpRef {
  TaskId task;
  int s = 0;

  bool operator<(const OpRef& other) const {
    return std::tuple(task.job, task.task, s) <
           std::tuple(other.task.job, other.task.task, other.s);
  }
  bool operator==(const OpRef& other) const {
    return task == other.task && s == other.s;
  }
};

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string op_suffix(const OpRef& op) {
  return std::to_string(op.task.job) + "_" + std::to_string(op.task.task) + "_" +
         std::to_string(op.s);
}

std::string alpha(const OpRef& op) { return "a_" + op_suffix(op); }
std::string beta(const OpRef& op) { return "b_" + op_suffix(op); }
std::string gamma_var(TaskId t, int k) {
  return "g_" + std::to_string(t.job) + "_" + std::to_string(t.task) + "_" +
         std::to_string(k);
}
std::string delta_var(TaskId t, int s, int k, int w) {
  return "d_" + std::to_string(t.job) + "_" + std::to_string(t.task) + "_" +
         std::to_string(s) + "_" + std::to_string(k) + "_" + std::to_string(w);
}
std::string lambda_var(const OpRef& a, const OpRef& b) {
  return "l_" + op_suffix(a) + "__" + op_suffix(b);
}
std::string psi_var(const OpRef& a, const OpRef& b, int k, int w) {
  return "p_" + op_suffix(a) + "__" + op_suffix(b) + "_" + std::to_string(k) +
         "_" + std::to_string(w);
}
std::string slot_var(TaskId t, int k, int q) {
  return "q_" + std::to_string(t.job) + "_" + std::to_string(t.task) + "_" +
         std::to_string(k) + "_" + std::to_string(q);
}
std::string sigma_var(int job) { return "sig_" + std::to_string(job); }

// Linear expression assembled as signed terms; keeps LP output deterministic.
class Row {
 public:
  Row& add(double coef, const std::string& var) {
    if (coef != 0.0) terms_.push_back({coef, var});
    return *this;
  }
  std::string render(const std::string& op, double rhs) const {
    std::string out;
    bool first = true;
    for (const auto& [coef, var] : terms_) {
      if (first) {
        if (coef == 1.0) {
          out += var;
        } else if (coef == -1.0) {
          out += "- " + var;
        } else {
          out += num(coef) + " " + var;
        }
        first = false;
        continue;
      }
      const double mag = std::fabs(coef);
      out += coef < 0.0 ? " - " : " + ";
      if (mag == 1.0) {
        out += var;
      } else {
        out += num(mag) + " " + var;
      }
    }
    if (first) out += "0 " + std::string("zero_pad");  // never hit: rows have terms
    out += " " + op + " " + num(rhs);
    return out;
  }

 private:
  std::vector<std::pair<double, std::string>> terms_;
};

struct Emitter {
  std::ostringstream rows;
  std::map<std::string, int> families;
  int row_count = 0;

  void emit(const std::string& family, const std::string& alias, const Row& row,
            const std::string& op, double rhs) {
    families[family] += 1;
    row_count += 1;
    rows << " " << alias << row_count << ": " << row.render(op, rhs) << "\n";
  }
};

}  // namespace

MilpDocument export_milp(const ProblemInstance& inst, const MilpOptions& options) {
  // ---- index sets ----------------------------------------------------------
  std::vector<TaskId> tasks;
  for (const Job& job : inst.jobs) {
    for (int t = 0; t < static_cast<int>(job.tasks.size()); ++t) {
      tasks.push_back({job.id, t});
    }
  }
  std::sort(tasks.begin(), tasks.end());

  auto station_requires_setup = [&](int k) {
    const Station* st = inst.find_station(k);
    return st != nullptr && st->requires_setup;
  };
  auto station_slots = [&](int k) {
    const Station* st = inst.find_station(k);
    return st == nullptr ? 1 : st->slots;
  };

  // Capable workers per op across all alternatives, and per (op, worker) the
  // stations where that worker can run it (the model's Q set).
  auto worker_stations = [&](const OpRef& op) {
    std::map<int, std::map<int, double>> by_worker;  // worker -> station -> dur
    const TaskSpec& spec = inst.task_at(op.task);
    for (const TaskAlternative& alt : spec.alternatives) {
      const auto& pool = op.s == 1 ? alt.setup_workers : alt.processing_workers;
      for (const auto& [w, dur] : pool) by_worker[w][alt.station] = dur;
    }
    return by_worker;
  };

  // Big-M: scaled bound on the horizon from the largest possible durations.
  double horizon = 0.0;
  for (const TaskId& t : tasks) {
    const TaskSpec& spec = inst.task_at(t);
    double max_proc = 0.0, max_setup = 0.0;
    for (const TaskAlternative& alt : spec.alternatives) {
      for (const auto& [w, d] : alt.processing_workers) max_proc = std::max(max_proc, d);
      if (station_requires_setup(alt.station)) {
        for (const auto& [w, d] : alt.setup_workers) max_setup = std::max(max_setup, d);
      }
    }
    // Worst sequence factor is +0.5.
    horizon += max_proc + 1.5 * max_setup;
  }
  const double big_m = options.big_m_scale * horizon;

  // Ordering binaries: needed for worker-attention pairs and station slot
  // pairs; collected first so each gets exactly one time-link row.
  std::set<std::pair<OpRef, OpRef>> lambda_pairs;
  // Worker-capacity rows: unordered op pairs of distinct tasks sharing a
  // capable worker.
  struct WorkerPair {
    OpRef a, b;
    int worker;
    double load_a, load_b;  // placeholder, coefficients resolved at emit
  };
  std::vector<std::tuple<OpRef, OpRef, int>> worker_pairs;
  std::vector<OpRef> ops;
  for (const TaskId& t : tasks) {
    ops.push_back({t, 0});
    ops.push_back({t, 1});
  }
  for (std::size_t x = 0; x < ops.size(); ++x) {
    for (std::size_t y = x + 1; y < ops.size(); ++y) {
      if (ops[x].task == ops[y].task) continue;  // same-task ops never overlap
      const auto wa = worker_stations(ops[x]);
      const auto wb = worker_stations(ops[y]);
      for (const auto& [w, stations] : wa) {
        if (wb.count(w) == 0) continue;
        worker_pairs.push_back({ops[x], ops[y], w});
        lambda_pairs.insert({ops[x], ops[y]});
        lambda_pairs.insert({ops[y], ops[x]});
      }
    }
  }

  // Slot-capacity pairs: distinct tasks sharing an eligible station. Task
  // occupancy spans setup start .. processing end, so the ordering binaries
  // relate one task's processing to the other's setup.
  std::vector<std::tuple<TaskId, TaskId, int>> slot_pairs;
  for (std::size_t x = 0; x < tasks.size(); ++x) {
    for (std::size_t y = x + 1; y < tasks.size(); ++y) {
      const TaskSpec& sa = inst.task_at(tasks[x]);
      for (const TaskAlternative& alt : sa.alternatives) {
        if (inst.find_alternative(tasks[y], alt.station) == nullptr) continue;
        slot_pairs.push_back({tasks[x], tasks[y], alt.station});
        lambda_pairs.insert({{tasks[x], 0}, {tasks[y], 1}});
        lambda_pairs.insert({{tasks[y], 0}, {tasks[x], 1}});
      }
    }
  }

  // Cross-task setup-sequence binaries, per setup-requiring shared station.
  std::vector<std::tuple<TaskId, TaskId, int, int>> psi_cross;  // a, b, k, w(setup of b)
  for (const TaskId& b : tasks) {
    const TaskSpec& sb = inst.task_at(b);
    for (const TaskAlternative& alt : sb.alternatives) {
      if (!station_requires_setup(alt.station)) continue;
      for (const TaskId& a : tasks) {
        if (a == b) continue;
        if (inst.find_alternative(a, alt.station) == nullptr) continue;
        for (const auto& [w, dur] : alt.setup_workers) {
          psi_cross.push_back({a, b, alt.station, w});
        }
      }
    }
  }

  // ---- variable inventory --------------------------------------------------
  std::vector<std::string> binaries;
  int continuous = 0;

  // ---- rows ------------------------------------------------------------------
  Emitter em;

  // Tardiness linking: sigma >= completion - due, sigma >= 0.
  for (const Job& job : inst.jobs) {
    if (!job.due_date) continue;
    const OpRef last{{job.id, static_cast<int>(job.tasks.size()) - 1}, 0};
    em.emit("tardiness_link", "tdl",
            Row().add(1.0, sigma_var(job.id)).add(-1.0, beta(last)), ">=",
            -*job.due_date);
    em.emit("tardiness_nonneg", "tnn", Row().add(1.0, sigma_var(job.id)), ">=",
            0.0);
    if (options.hard_due_dates) {
      em.emit("deadline", "ddl", Row().add(1.0, beta(last)), "<=", *job.due_date);
    }
  }

  // Releases gate the first processing start of each job.
  for (const TaskId& t : tasks) {
    em.emit("release", "rel", Row().add(1.0, alpha({t, 0})), ">=",
            inst.task_at(t).release_time);
  }

  // Durations. Processing: beta - alpha = sum delta*d. Setup adds the
  // sequence-dependent term over the direct-predecessor binaries.
  for (const TaskId& t : tasks) {
    const TaskSpec& spec = inst.task_at(t);
    Row proc;
    proc.add(1.0, beta({t, 0})).add(-1.0, alpha({t, 0}));
    for (const TaskAlternative& alt : spec.alternatives) {
      for (const auto& [w, d] : alt.processing_workers) {
        proc.add(-d, delta_var(t, 0, alt.station, w));
      }
    }
    em.emit("processing_duration", "pdur", proc, "=", 0.0);

    Row setup;
    setup.add(1.0, beta({t, 1})).add(-1.0, alpha({t, 1}));
    for (const TaskAlternative& alt : spec.alternatives) {
      if (!station_requires_setup(alt.station)) continue;  // zero-duration setups
      for (const auto& [w, d] : alt.setup_workers) {
        setup.add(-d, delta_var(t, 1, alt.station, w));
      }
    }
    for (const auto& [a, b, k, w] : psi_cross) {
      if (!(b == t)) continue;
      const TaskAlternative* alt = inst.find_alternative(t, k);
      const double base = alt->setup_workers.at(w);
      const double factor = inst.sequence_factor(a, t, k);
      if (factor == 0.0) continue;
      setup.add(-base * factor, psi_var({a, 0}, {t, 1}, k, w));
    }
    em.emit("setup_duration", "sdur", setup, "=", 0.0);
  }

  // Station choice once per task; worker choice per kind follows the station.
  for (const TaskId& t : tasks) {
    const TaskSpec& spec = inst.task_at(t);
    Row choice;
    for (const TaskAlternative& alt : spec.alternatives) {
      choice.add(1.0, gamma_var(t, alt.station));
      binaries.push_back(gamma_var(t, alt.station));
    }
    em.emit("station_choice", "stc", choice, "=", 1.0);

    for (const TaskAlternative& alt : spec.alternatives) {
      Row proc_choice;
      for (const auto& [w, d] : alt.processing_workers) {
        proc_choice.add(1.0, delta_var(t, 0, alt.station, w));
        binaries.push_back(delta_var(t, 0, alt.station, w));
      }
      proc_choice.add(-1.0, gamma_var(t, alt.station));
      em.emit("worker_choice_processing", "wcp", proc_choice, "=", 0.0);

      Row setup_choice;
      for (const auto& [w, d] : alt.setup_workers) {
        setup_choice.add(1.0, delta_var(t, 1, alt.station, w));
        binaries.push_back(delta_var(t, 1, alt.station, w));
      }
      setup_choice.add(-1.0, gamma_var(t, alt.station));
      em.emit("worker_choice_setup", "wcs", setup_choice, "=", 0.0);
    }
  }

  // Pairwise worker attention. Overlaps of three or more fractional
  // operations are not cut off by this family (see header note).
  for (const auto& [a, b, w] : worker_pairs) {
    Row row;
    row.add(1.0, lambda_var(a, b)).add(1.0, lambda_var(b, a));
    const auto add_load = [&](const OpRef& op, double sign) {
      const auto by_worker = worker_stations(op);
      for (const auto& [k, d] : by_worker.at(w)) {
        const double load =
            op.s == 0 ? inst.automation_degree(op.task, k) : 1.0;
        row.add(sign * load, delta_var(op.task, op.s, k, w));
      }
    };
    add_load(a, -1.0);
    add_load(b, -1.0);
    em.emit("worker_capacity", "wcap", row, ">=", -1.0);
  }

  // Station slot capacity over task occupancy intervals. Single-slot
  // stations use the assignment binaries directly; multi-slot stations get
  // slot-assignment binaries.
  std::set<std::pair<TaskId, int>> slotted;  // tasks needing slot binaries per station
  for (const auto& [a, b, k] : slot_pairs) {
    if (station_slots(k) == 1) {
      Row row;
      row.add(1.0, lambda_var({a, 0}, {b, 1}))
          .add(1.0, lambda_var({b, 0}, {a, 1}))
          .add(-1.0, gamma_var(a, k))
          .add(-1.0, gamma_var(b, k));
      em.emit("slot_capacity", "slc", row, ">=", -1.0);
    } else {
      slotted.insert({a, k});
      slotted.insert({b, k});
      for (int q = 0; q < station_slots(k); ++q) {
        Row row;
        row.add(1.0, lambda_var({a, 0}, {b, 1}))
            .add(1.0, lambda_var({b, 0}, {a, 1}))
            .add(-1.0, slot_var(a, k, q))
            .add(-1.0, slot_var(b, k, q));
        em.emit("slot_pair_capacity", "slp", row, ">=", -1.0);
      }
    }
  }
  for (const auto& [t, k] : slotted) {
    Row row;
    for (int q = 0; q < station_slots(k); ++q) {
      row.add(1.0, slot_var(t, k, q));
      binaries.push_back(slot_var(t, k, q));
    }
    row.add(-1.0, gamma_var(t, k));
    em.emit("slot_assignment", "sla", row, "=", 0.0);
  }

  // Op ordering: setup-before-processing, task chains, job precedence.
  for (const TaskId& t : tasks) {
    em.emit("setup_before_processing", "sbp",
            Row().add(1.0, alpha({t, 0})).add(-1.0, beta({t, 1})), ">=", 0.0);
    if (t.task > 0) {
      em.emit("job_task_order", "jto",
              Row()
                  .add(1.0, alpha({t, 0}))
                  .add(-1.0, beta({{t.job, t.task - 1}, 0})),
              ">=", 0.0);
    }
  }
  for (const auto& [succ, pred] : inst.job_precedence) {
    const Job* pred_job = inst.find_job(pred);
    const OpRef first{{succ, 0}, 0};
    const OpRef last{{pred, static_cast<int>(pred_job->tasks.size()) - 1}, 0};
    em.emit("job_precedence", "jpr",
            Row().add(1.0, alpha(first)).add(-1.0, beta(last)), ">=", 0.0);
  }

  // Each station choice pairs the setup with its own processing op.
  for (const TaskId& t : tasks) {
    const TaskSpec& spec = inst.task_at(t);
    for (const TaskAlternative& alt : spec.alternatives) {
      Row row;
      row.add(1.0, gamma_var(t, alt.station));
      for (const auto& [w, d] : alt.processing_workers) {
        row.add(-1.0, psi_var({t, 1}, {t, 0}, alt.station, w));
        binaries.push_back(psi_var({t, 1}, {t, 0}, alt.station, w));
        // The self-sequencing binary must match the processing worker choice.
        em.emit("psi_assignment_link", "pal",
                Row()
                    .add(1.0, psi_var({t, 1}, {t, 0}, alt.station, w))
                    .add(-1.0, delta_var(t, 0, alt.station, w)),
                "<=", 0.0);
      }
      em.emit("setup_self_sequence", "sss", row, "=", 0.0);
    }
  }

  // Ordering-binary plumbing the printed model leaves implicit: mutual
  // exclusion and big-M time linking.
  for (const auto& [a, b] : lambda_pairs) {
    binaries.push_back(lambda_var(a, b));
    Row link;
    link.add(1.0, alpha(b)).add(-1.0, beta(a)).add(-big_m, lambda_var(a, b));
    em.emit("lambda_time_link", "ltl", link, ">=", -big_m);
    // Mutual exclusion only where both directions exist (worker pairs);
    // slot pairs order one task's processing against the other's setup, so
    // the reverse binary may not be part of the model.
    if (a < b && lambda_pairs.count({b, a}) > 0) {
      em.emit("lambda_exclusive", "lex",
              Row().add(1.0, lambda_var(a, b)).add(1.0, lambda_var(b, a)), "<=",
              1.0);
    }
  }

  // Cross-task setup-sequence binaries: assignment consistency, at most one
  // direct predecessor, and time linking.
  std::map<std::pair<TaskId, int>, Row> pred_choice;
  for (const auto& [a, b, k, w] : psi_cross) {
    const std::string name = psi_var({a, 0}, {b, 1}, k, w);
    binaries.push_back(name);
    em.emit("psi_assignment_link", "pal",
            Row().add(1.0, name).add(-1.0, delta_var(b, 1, k, w)), "<=", 0.0);
    em.emit("psi_station_link", "psl",
            Row().add(1.0, name).add(-1.0, gamma_var(a, k)), "<=", 0.0);
    Row time;
    time.add(1.0, alpha({b, 1})).add(-1.0, beta({a, 0})).add(-big_m, name);
    em.emit("psi_time_link", "ptl", time, ">=", -big_m);
    pred_choice[{b, k}].add(1.0, name);
  }
  for (auto& [key, row] : pred_choice) {
    row.add(-1.0, gamma_var(key.first, key.second));
    em.emit("psi_pred_choice", "ppc", row, "<=", 0.0);
  }

  // Tasks assignable to stations without setups: the zero-duration setup op is
  // pinned at the processing start unless a setup-requiring station is chosen.
  for (const TaskId& t : tasks) {
    const TaskSpec& spec = inst.task_at(t);
    Row row;
    row.add(1.0, alpha({t, 1})).add(-1.0, alpha({t, 0}));
    for (const TaskAlternative& alt : spec.alternatives) {
      if (station_requires_setup(alt.station)) {
        row.add(big_m, gamma_var(t, alt.station));
      }
    }
    em.emit("setup_pin_no_setup_station", "pin", row, ">=", 0.0);
  }

  // Makespan linearization over every completion.
  for (const OpRef& op : ops) {
    em.emit("makespan_link", "msl",
            Row().add(1.0, "cmax").add(-1.0, beta(op)), ">=", 0.0);
  }

  if (static_cast<std::uint64_t>(em.row_count) > options.max_rows) {
    throw std::invalid_argument(
        "model exceeds the row cap: " + std::to_string(em.row_count) +
        " rows, about " + std::to_string(binaries.size()) +
        " binary and " + std::to_string(2 * ops.size() + tasks.size() + 2) +
        " continuous variables");
  }

  // Continuous inventory: alpha/beta per op, sigma per due job, cmax.
  continuous = static_cast<int>(2 * ops.size()) + 1;
  for (const Job& job : inst.jobs) {
    if (job.due_date) continuous += 1;
  }

  std::sort(binaries.begin(), binaries.end());
  binaries.erase(std::unique(binaries.begin(), binaries.end()), binaries.end());

  // ---- assemble --------------------------------------------------------------
  std::ostringstream out;
  out << "\\ Dual-resource flexible job shop, full mixed-integer model.\n";
  out << "\\ Objective: weighted sum of the makespan bound and total tardiness\n";
  out << "\\ (weights " << num(inst.weight_makespan) << " / "
      << num(inst.weight_tardiness) << "; normalization constants omitted as\n";
  out << "\\ they do not change the argmin).\n";
  out << "\\ big-M = " << num(big_m) << " (" << num(options.big_m_scale)
      << " x summed worst-case op durations).\n";
  out << "\\ Notes: worker attention is enforced pairwise only, so\n";
  out << "\\ three-way overlaps of fractional-attention operations are not cut\n";
  out << "\\ off; setup-sequence binaries are linked by assignment, station and\n";
  out << "\\ time but immediacy itself is chosen by the solver, which can only\n";
  out << "\\ relax setup durations downward. Bounds from this file are valid\n";
  out << "\\ lower bounds on the simulator's achievable objective.\n";
  out << "Minimize\n obj: " << num(inst.weight_makespan) << " cmax";
  for (const Job& job : inst.jobs) {
    if (job.due_date) {
      out << " + " << num(inst.weight_tardiness) << " " << sigma_var(job.id);
    }
  }
  out << "\nSubject To\n";
  out << em.rows.str();
  out << "Binary\n";
  for (const std::string& name : binaries) out << " " << name << "\n";
  out << "End\n";

  MilpDocument doc;
  doc.lp_text = out.str();
  doc.rows_per_family = em.families;
  doc.binaries = static_cast<int>(binaries.size());
  doc.continuous = continuous;
  return doc;
}

}  // namespace shopsched
