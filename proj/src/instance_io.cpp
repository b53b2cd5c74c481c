#include <stdexcept>
#include <string>

#include <json.hpp>

#include "shopsched/dataio.hpp"

namespace shopsched {

namespace {

using json = nlohmann::json;  // std::map-backed: keys serialize sorted

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument(path + ": " + what);
}

const json& member(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected a boolean");
  return v.get<bool>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array");
  return v;
}

TaskId as_task_ref(const json& v, const std::string& path) {
  const json& arr = as_array(v, path);
  if (arr.size() != 2) fail(path, "expected [job, task]");
  return {as_int(arr[0], path + "[0]"), as_int(arr[1], path + "[1]")};
}

std::map<int, double> as_worker_map(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object keyed by worker id");
  std::map<int, double> out;
  for (auto it = v.begin(); it != v.end(); ++it) {
    int worker = 0;
    try {
      std::size_t used = 0;
      worker = std::stoi(it.key(), &used);
      if (used != it.key().size()) throw std::invalid_argument("");
    } catch (...) {
      fail(path + "." + it.key(), "key is not a worker id");
    }
    const std::string entry = path + "." + it.key();
    const double duration = as_number(it.value(), entry);
    if (duration <= 0.0) fail(entry, "duration must be > 0");
    out[worker] = duration;
  }
  return out;
}

}  // namespace

std::string save_instance(const ProblemInstance& inst) {
  json doc;
  doc["format"] = "shopsched-instance";
  doc["version"] = 1;
  doc["weight_makespan"] = inst.weight_makespan;
  doc["weight_tardiness"] = inst.weight_tardiness;
  doc["workers"] = static_cast<int>(inst.workers.size());

  json stations = json::array();
  for (const Station& st : inst.stations) {
    json s;
    s["id"] = st.id;
    s["slots"] = st.slots;
    s["requires_setup"] = st.requires_setup;
    json factors = json::array();
    for (const auto& [pair, factor] : st.sequence_factors) {
      json f;
      f["prev"] = {pair.first.job, pair.first.task};
      f["next"] = {pair.second.job, pair.second.task};
      f["factor"] = factor;
      factors.push_back(f);
    }
    s["sequence_factors"] = factors;
    stations.push_back(s);
  }
  doc["stations"] = stations;

  json jobs = json::array();
  for (const Job& job : inst.jobs) {
    json j;
    j["id"] = job.id;
    if (job.due_date) j["due_date"] = *job.due_date;
    json tasks = json::array();
    for (const TaskSpec& spec : job.tasks) {
      json t;
      t["release_time"] = spec.release_time;
      json alts = json::array();
      for (const TaskAlternative& alt : spec.alternatives) {
        json a;
        a["station"] = alt.station;
        a["automation"] = spec.automation.at(alt.station);
        json setup, processing;
        for (const auto& [w, d] : alt.setup_workers) setup[std::to_string(w)] = d;
        for (const auto& [w, d] : alt.processing_workers) {
          processing[std::to_string(w)] = d;
        }
        a["setup_workers"] = setup;
        a["processing_workers"] = processing;
        alts.push_back(a);
      }
      t["alternatives"] = alts;
      tasks.push_back(t);
    }
    j["tasks"] = tasks;
    jobs.push_back(j);
  }
  doc["jobs"] = jobs;

  json precedence = json::array();
  for (const auto& [succ, pred] : inst.job_precedence) {
    precedence.push_back({succ, pred});
  }
  doc["job_precedence"] = precedence;

  return doc.dump(2) + "\n";
}

ProblemInstance load_instance_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("instance JSON: ") + e.what());
  }

  if (!doc.is_object()) fail("$", "expected a JSON object");
  const std::string format =
      member(doc, "$", "format").is_string()
          ? member(doc, "$", "format").get<std::string>()
          : "";
  if (format != "shopsched-instance") fail("$.format", "not a shopsched instance file");
  if (as_int(member(doc, "$", "version"), "$.version") != 1) {
    fail("$.version", "unsupported version");
  }

  ProblemInstance inst;
  inst.weight_makespan =
      as_number(member(doc, "$", "weight_makespan"), "$.weight_makespan");
  inst.weight_tardiness =
      as_number(member(doc, "$", "weight_tardiness"), "$.weight_tardiness");

  const int workers = as_int(member(doc, "$", "workers"), "$.workers");
  if (workers < 1) fail("$.workers", "must be >= 1");
  for (int w = 0; w < workers; ++w) inst.workers.push_back({w});

  const json& stations = as_array(member(doc, "$", "stations"), "$.stations");
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const std::string path = "stations[" + std::to_string(i) + "]";
    const json& s = stations[i];
    Station st;
    st.id = as_int(member(s, path, "id"), path + ".id");
    st.slots = as_int(member(s, path, "slots"), path + ".slots");
    if (st.slots < 1) fail(path + ".slots", "must be >= 1");
    st.requires_setup =
        as_bool(member(s, path, "requires_setup"), path + ".requires_setup");
    const json& factors =
        as_array(member(s, path, "sequence_factors"), path + ".sequence_factors");
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const std::string fp = path + ".sequence_factors[" + std::to_string(f) + "]";
      const json& entry = factors[f];
      const TaskId prev = as_task_ref(member(entry, fp, "prev"), fp + ".prev");
      const TaskId next = as_task_ref(member(entry, fp, "next"), fp + ".next");
      const double factor = as_number(member(entry, fp, "factor"), fp + ".factor");
      if (factor < -1.0 || factor > 0.5) {
        fail(fp + ".factor",
             std::to_string(factor) + " outside [-1, 0.5]");
      }
      st.sequence_factors[{prev, next}] = factor;
    }
    inst.stations.push_back(st);
  }

  const json& jobs = as_array(member(doc, "$", "jobs"), "$.jobs");
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string jp = "jobs[" + std::to_string(i) + "]";
    const json& j = jobs[i];
    Job job;
    job.id = as_int(member(j, jp, "id"), jp + ".id");
    if (j.is_object() && j.contains("due_date")) {
      job.due_date = as_number(j["due_date"], jp + ".due_date");
      if (*job.due_date < 0.0) fail(jp + ".due_date", "must be >= 0");
    }
    const json& tasks = as_array(member(j, jp, "tasks"), jp + ".tasks");
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const std::string tp = jp + ".tasks[" + std::to_string(t) + "]";
      const json& tv = tasks[t];
      TaskSpec spec;
      spec.release_time =
          as_number(member(tv, tp, "release_time"), tp + ".release_time");
      if (spec.release_time < 0.0) fail(tp + ".release_time", "must be >= 0");
      const json& alts =
          as_array(member(tv, tp, "alternatives"), tp + ".alternatives");
      for (std::size_t a = 0; a < alts.size(); ++a) {
        const std::string ap = tp + ".alternatives[" + std::to_string(a) + "]";
        const json& av = alts[a];
        TaskAlternative alt;
        alt.station = as_int(member(av, ap, "station"), ap + ".station");
        alt.setup_workers = as_worker_map(member(av, ap, "setup_workers"),
                                          ap + ".setup_workers");
        alt.processing_workers = as_worker_map(
            member(av, ap, "processing_workers"), ap + ".processing_workers");
        const double automation =
            as_number(member(av, ap, "automation"), ap + ".automation");
        if (automation < 0.0 || automation > 1.0) {
          fail(ap + ".automation",
               std::to_string(automation) + " outside [0, 1]");
        }
        spec.automation[alt.station] = automation;
        spec.alternatives.push_back(alt);
      }
      job.tasks.push_back(spec);
    }
    inst.jobs.push_back(job);
  }

  const json& precedence =
      as_array(member(doc, "$", "job_precedence"), "$.job_precedence");
  for (std::size_t i = 0; i < precedence.size(); ++i) {
    const std::string pp = "job_precedence[" + std::to_string(i) + "]";
    const json& pair = as_array(precedence[i], pp);
    if (pair.size() != 2) fail(pp, "expected [successor, predecessor]");
    inst.job_precedence.insert(
        {as_int(pair[0], pp + "[0]"), as_int(pair[1], pp + "[1]")});
  }

  const ValidationReport report = validate_instance(inst);
  if (!report.ok()) {
    throw std::invalid_argument("instance invalid: " + report.problems.front());
  }
  return inst;
}

}  // namespace shopsched
