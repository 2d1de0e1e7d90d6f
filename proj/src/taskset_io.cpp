#include "mcs/taskset_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mcs {

using nlohmann::ordered_json;

namespace {

ordered_json weibull_to_json(const WeibullParams& w) {
  ordered_json j;
  j["shape"] = w.shape;
  j["scale"] = w.scale;
  j["location"] = w.location.ticks();
  return j;
}

class Reader {
 public:
  explicit Reader(std::string path) : path_(std::move(path)) {}

  const ordered_json& field(const ordered_json& obj, const char* key) const {
    if (!obj.is_object()) fail("expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field '") + key + "'");
    return *it;
  }
  Reader at(const char* key) const { return Reader(path_ + "." + key); }
  Reader at(std::size_t index) const { return Reader(path_ + "[" + std::to_string(index) + "]"); }

  SimTime time(const ordered_json& obj, const char* key) const {
    const auto& v = field(obj, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      at(key).fail("expected a non-negative integer tick count");
    }
    return SimTime{v.get<std::uint64_t>()};
  }
  double real(const ordered_json& obj, const char* key) const {
    const auto& v = field(obj, key);
    if (!v.is_number()) at(key).fail("expected a number");
    return v.get<double>();
  }
  std::string text(const ordered_json& obj, const char* key) const {
    const auto& v = field(obj, key);
    if (!v.is_string()) at(key).fail("expected a string");
    return v.get<std::string>();
  }
  CriticalityLevel level(const ordered_json& obj, const char* key) const {
    const std::string s = text(obj, key);
    if (s != "HI" && s != "LO") at(key).fail("expected \"HI\" or \"LO\"");
    return parse_criticality(s);
  }
  const ordered_json& array(const ordered_json& obj, const char* key) const {
    const auto& v = field(obj, key);
    if (!v.is_array()) at(key).fail("expected an array");
    return v;
  }
  WeibullParams weibull(const ordered_json& obj, const char* key) const {
    const auto& w = field(obj, key);
    Reader r = at(key);
    return WeibullParams{r.real(w, "shape"), r.real(w, "scale"), r.time(w, "location")};
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_ + ": " + what); }

 private:
  std::string path_;
};

}  // namespace

std::string serialize_taskset(const TaskSet& ts) {
  ordered_json doc;
  doc["format"] = kTaskSetFormat;
  doc["version"] = kTaskSetVersion;
  doc["time_unit"] = "10ns";
  ordered_json tasks = ordered_json::array();
  std::vector<const Task*> sorted;
  for (const auto& t : ts.tasks) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(), [](const Task* a, const Task* b) { return a->id < b->id; });
  for (const Task* t : sorted) {
    ordered_json jt;
    jt["id"] = t->id;
    jt["period"] = t->period.ticks();
    jt["deadline"] = t->deadline.ticks();
    jt["criticality"] = to_string(t->criticality);
    jt["c_lo"] = t->c_lo.ticks();
    jt["c_hi"] = t->c_hi ? ordered_json(t->c_hi->ticks()) : ordered_json(nullptr);
    jt["priority"] = t->priority;
    ordered_json runs = ordered_json::array();
    for (const auto& r : t->runnables) {
      ordered_json jr;
      jr["period"] = r.period.ticks();
      jr["acet"] = r.acet.ticks();
      jr["bcet"] = r.bcet.ticks();
      jr["wcet"] = r.wcet.ticks();
      jr["criticality"] = to_string(r.criticality);
      jr["weibull"] = weibull_to_json(r.weibull);
      runs.push_back(std::move(jr));
    }
    jt["runnables"] = std::move(runs);
    tasks.push_back(std::move(jt));
  }
  doc["tasks"] = std::move(tasks);
  ordered_json agent;
  agent["min_interarrival"] = ts.agent_task.min_interarrival.ticks();
  agent["weibull"] = weibull_to_json(ts.agent_task.weibull);
  doc["agent_task"] = std::move(agent);
  return doc.dump(2) + "\n";
}

TaskSet deserialize_taskset(std::string_view document) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document.begin(), document.end());
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, document.size());
    const auto line = 1 + std::count(document.begin(), document.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  }
  Reader root("$");
  if (root.text(doc, "format") != kTaskSetFormat) root.at("format").fail("unknown document format");
  const auto& version = root.field(doc, "version");
  if (!version.is_number_integer() || version.get<int>() != kTaskSetVersion) {
    root.at("version").fail("unsupported version (expected " + std::to_string(kTaskSetVersion) + ")");
  }

  TaskSet ts;
  const auto& tasks = root.array(doc, "tasks");
  Reader tr = root.at("tasks");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& jt = tasks[i];
    Reader r = tr.at(i);
    Task t;
    const auto& id = r.field(jt, "id");
    if (!id.is_number_unsigned()) r.at("id").fail("expected a task index");
    t.id = id.get<TaskId>();
    t.period = r.time(jt, "period");
    t.deadline = r.time(jt, "deadline");
    t.criticality = r.level(jt, "criticality");
    t.c_lo = r.time(jt, "c_lo");
    if (!r.field(jt, "c_hi").is_null()) t.c_hi = r.time(jt, "c_hi");
    const auto& prio = r.field(jt, "priority");
    if (!prio.is_number_integer()) r.at("priority").fail("expected an integer");
    t.priority = prio.get<int>();
    const auto& runs = r.array(jt, "runnables");
    Reader rr = r.at("runnables");
    for (std::size_t k = 0; k < runs.size(); ++k) {
      Reader rk = rr.at(k);
      const auto& jr = runs[k];
      Runnable run;
      run.period = rk.time(jr, "period");
      run.acet = rk.time(jr, "acet");
      run.bcet = rk.time(jr, "bcet");
      run.wcet = rk.time(jr, "wcet");
      run.criticality = rk.level(jr, "criticality");
      run.weibull = rk.weibull(jr, "weibull");
      t.runnables.push_back(run);
    }
    ts.tasks.push_back(std::move(t));
  }
  std::sort(ts.tasks.begin(), ts.tasks.end(), [](const Task& a, const Task& b) { return a.id < b.id; });
  const auto& agent = root.field(doc, "agent_task");
  Reader ar = root.at("agent_task");
  ts.agent_task.min_interarrival = ar.time(agent, "min_interarrival");
  ts.agent_task.weibull = ar.weibull(agent, "weibull");
  check_invariants(ts);
  return ts;
}

TaskSet load_taskset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open task-set file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_taskset(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_taskset(const TaskSet& ts, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write task-set file " + path);
  out << serialize_taskset(ts);
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

}  // namespace mcs
