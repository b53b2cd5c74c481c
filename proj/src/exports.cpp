#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "shopsched/dataio.hpp"

namespace shopsched {

namespace {

using json = nlohmann::json;

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

const char* kind_name(OpKind kind) {
  return kind == OpKind::Setup ? "setup" : "processing";
}

[[noreturn]] void row_fail(std::size_t row, const std::string& what) {
  throw std::invalid_argument("row " + std::to_string(row) + ": " + what);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

int parse_int(const std::string& s, std::size_t row, const char* what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    row_fail(row, std::string(what) + " is not an integer: '" + s + "'");
  }
  return value;
}

double parse_double(const std::string& s, std::size_t row, const char* what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    row_fail(row, std::string(what) + " is not a number: '" + s + "'");
  }
  return value;
}

}  // namespace

std::string export_schedule_csv(const Schedule& schedule) {
  std::string out = "job,task,kind,station,worker,start,end\n";
  for (const ScheduledOp& op : schedule.ops) {
    out += std::to_string(op.job) + "," + std::to_string(op.task) + "," +
           kind_name(op.kind) + "," + std::to_string(op.station) + "," +
           std::to_string(op.worker) + "," + num(op.start) + "," +
           num(op.end) + "\n";
  }
  return out;
}

Schedule parse_schedule_csv(const std::string& text, const ProblemInstance& inst) {
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  Schedule schedule;
  while (std::getline(in, line)) {
    row += 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row == 1) {
      if (line != "job,task,kind,station,worker,start,end") {
        row_fail(1, "unexpected header '" + line + "'");
      }
      continue;
    }
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != 7) {
      row_fail(row, "expected 7 fields, got " + std::to_string(fields.size()));
    }
    ScheduledOp op;
    op.job = parse_int(fields[0], row, "job");
    op.task = parse_int(fields[1], row, "task");
    if (fields[2] == "setup") {
      op.kind = OpKind::Setup;
    } else if (fields[2] == "processing") {
      op.kind = OpKind::Processing;
    } else {
      row_fail(row, "kind must be setup or processing, got '" + fields[2] + "'");
    }
    op.station = parse_int(fields[3], row, "station");
    op.worker = parse_int(fields[4], row, "worker");
    op.start = parse_double(fields[5], row, "start");
    op.end = parse_double(fields[6], row, "end");
    if (op.end < op.start) row_fail(row, "end precedes start");
    if (inst.find_job(op.job) == nullptr ||
        op.task >= static_cast<int>(inst.find_job(op.job)->tasks.size()) ||
        op.task < 0) {
      row_fail(row, "unknown task " + std::to_string(op.job) + "." +
                        std::to_string(op.task));
    }
    if (inst.find_station(op.station) == nullptr) {
      row_fail(row, "unknown station " + std::to_string(op.station));
    }
    const bool worker_known =
        std::any_of(inst.workers.begin(), inst.workers.end(),
                    [&](const Worker& w) { return w.id == op.worker; });
    if (!worker_known) {
      row_fail(row, "unknown worker " + std::to_string(op.worker));
    }
    schedule.ops.push_back(op);
  }
  std::sort(schedule.ops.begin(), schedule.ops.end(),
            [](const ScheduledOp& a, const ScheduledOp& b) {
              return std::tuple(a.job, a.task, a.kind != OpKind::Setup) <
                     std::tuple(b.job, b.task, b.kind != OpKind::Setup);
            });
  for (const Job& job : inst.jobs) {
    double completion = 0.0;
    for (const ScheduledOp& op : schedule.ops) {
      if (op.job == job.id && op.kind == OpKind::Processing) {
        completion = std::max(completion, op.end);
      }
    }
    schedule.tardiness_by_job[job.id] =
        job.due_date ? std::max(0.0, completion - *job.due_date) : 0.0;
  }
  return schedule;
}

std::string export_gantt_json(const Schedule& schedule, const ProblemInstance& inst) {
  json lanes = json::array();
  for (const Station& st : inst.stations) {
    json lane;
    lane["station"] = st.id;
    lane["slots"] = st.slots;
    json bars = json::array();
    std::vector<ScheduledOp> ops;
    for (const ScheduledOp& op : schedule.ops) {
      if (op.station == st.id) ops.push_back(op);
    }
    std::sort(ops.begin(), ops.end(), [](const ScheduledOp& a, const ScheduledOp& b) {
      return std::tuple(a.start, a.job, a.task, a.kind != OpKind::Setup) <
             std::tuple(b.start, b.job, b.task, b.kind != OpKind::Setup);
    });
    for (const ScheduledOp& op : ops) {
      json bar;
      bar["label"] = std::to_string(op.job) + "." + std::to_string(op.task) +
                     " " + kind_name(op.kind);
      bar["job"] = op.job;
      bar["task"] = op.task;
      bar["kind"] = kind_name(op.kind);
      bar["worker"] = op.worker;
      bar["start"] = op.start;
      bar["end"] = op.end;
      bars.push_back(bar);
    }
    lane["bars"] = bars;
    lanes.push_back(lane);
  }
  json doc;
  doc["lanes"] = lanes;
  return doc.dump(2) + "\n";
}

std::string export_event_trace(const Schedule& schedule) {
  struct Event {
    double time;
    std::string event;
    const ScheduledOp* op;
  };
  std::vector<Event> events;
  for (const ScheduledOp& op : schedule.ops) {
    events.push_back({op.start, "start", &op});
    events.push_back({op.end, "complete", &op});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return std::tuple(a.time, a.event, a.op->job, a.op->task,
                      a.op->kind != OpKind::Setup) <
           std::tuple(b.time, b.event, b.op->job, b.op->task,
                      b.op->kind != OpKind::Setup);
  });
  std::string out = "time,event,job,task,kind,station,worker\n";
  for (const Event& e : events) {
    out += num(e.time) + "," + e.event + "," + std::to_string(e.op->job) + "," +
           std::to_string(e.op->task) + "," + kind_name(e.op->kind) + "," +
           std::to_string(e.op->station) + "," + std::to_string(e.op->worker) +
           "\n";
  }
  return out;
}

}  // namespace shopsched
