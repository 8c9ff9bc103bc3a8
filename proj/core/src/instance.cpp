#include "stochplan/instance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "stochplan/rng.hpp"

#include "json.hpp"

namespace stochplan {

namespace {

void fail(const std::string& field, const std::string& what) {
  throw std::invalid_argument("instance: field '" + field + "': " + what);
}

}  // namespace

void Instance::validate() const {
  if (num_facilities < 1) fail("facilities", "must be >= 1");
  if (num_tasks < 1) fail("tasks", "must be >= 1");
  const auto m = static_cast<std::size_t>(num_facilities);
  const auto n = static_cast<std::size_t>(num_tasks);
  if (capacity.size() != m) fail("capacity", "length != facilities");
  if (release.size() != n) fail("release", "length != tasks");
  if (deadline.size() != n) fail("deadline", "length != tasks");
  if (due_date && due_date->size() != n) fail("due_date", "length != tasks");
  if (consumption.size() != m) fail("consumption", "row count != facilities");
  if (assign_cost && assign_cost->size() != m) fail("assign_cost", "row count != facilities");
  for (std::size_t i = 0; i < m; ++i) {
    if (capacity[i] < 1) fail("capacity", "must be positive");
    if (consumption[i].size() != n) fail("consumption", "row length != tasks");
    for (std::size_t j = 0; j < n; ++j) {
      if (consumption[i][j] < 1 || consumption[i][j] > capacity[i])
        fail("consumption", "entries must lie in [1, capacity]");
    }
    if (assign_cost) {
      if ((*assign_cost)[i].size() != n) fail("assign_cost", "row length != tasks");
      for (double c : (*assign_cost)[i])
        if (c < 0.0 || !std::isfinite(c)) fail("assign_cost", "entries must be finite and >= 0");
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (release[j] < 0) fail("release", "must be >= 0");
    if (due_date && (*due_date)[j] < 0) fail("due_date", "must be >= 0");
  }
  if (scenarios.empty()) fail("scenarios", "at least one scenario required");
  double prob_sum = 0.0;
  for (const Scenario& sc : scenarios) {
    if (sc.probability < 0.0) fail("scenarios.probability", "must be >= 0");
    prob_sum += sc.probability;
    if (sc.processing.size() != m) fail("scenarios.processing", "row count != facilities");
    for (std::size_t i = 0; i < m; ++i) {
      if (sc.processing[i].size() != n) fail("scenarios.processing", "row length != tasks");
      for (int p : sc.processing[i])
        if (p < 1) fail("scenarios.processing", "entries must be >= 1");
    }
  }
  if (std::abs(prob_sum - 1.0) > 1e-12)
    fail("scenarios.probability", "sum is " + std::to_string(prob_sum) + ", expected 1");
}

std::vector<int> Assignment::jobs_on(int facility) const {
  std::vector<int> jobs;
  for (int j = 0; j < static_cast<int>(facility_of.size()); ++j)
    if (facility_of[j] == facility) jobs.push_back(j);
  return jobs;
}

Instance generate(int num_facilities, int num_tasks, int num_scenarios,
                  std::uint64_t seed, PerturbationMode mode) {
  if (num_facilities < 1 || num_tasks < 1 || num_scenarios < 1)
    throw std::invalid_argument("generate: all sizes must be >= 1");
  const int m = num_facilities;
  const int n = num_tasks;
  Rng rng(seed);

  Instance inst;
  inst.num_facilities = m;
  inst.num_tasks = n;
  inst.capacity.assign(m, 10);

  inst.consumption.assign(m, std::vector<int>(n));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) inst.consumption[i][j] = rng.uniform_int(1, 10);

  const int release_ub = static_cast<int>(std::floor(2.5 * n * (m + 1) / m));
  inst.release.resize(n);
  for (int j = 0; j < n; ++j) inst.release[j] = rng.uniform_int(0, release_ub);
  inst.deadline.assign(n, kNoDeadline);

  // Facilities with higher index process faster; divisor clamped for m = 1.
  std::vector<std::vector<int>> mean(m, std::vector<int>(n));
  const int denom = std::max(m - 1, 1);
  for (int i = 0; i < m; ++i) {
    const int ub = static_cast<int>(std::floor(25.0 - 10.0 * i / denom));
    for (int j = 0; j < n; ++j) mean[i][j] = rng.uniform_int(2, ub);
  }

  auto draw_eps = [&rng](bool group1) {
    if (group1)
      return rng.uniform01() < 0.9 ? rng.uniform_real(-0.1, 0.5) : rng.uniform_real(2.0, 3.0);
    return rng.uniform01() < 0.99 ? rng.uniform_real(-0.1, 0.5) : rng.uniform_real(1.0, 1.5);
  };

  inst.scenarios.resize(num_scenarios);
  for (Scenario& sc : inst.scenarios) {
    sc.probability = 1.0 / num_scenarios;
    sc.processing.assign(m, std::vector<int>(n));
    if (mode == PerturbationMode::PerScenarioGroup) {
      const double eps1 = draw_eps(true);
      const double eps2 = draw_eps(false);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const double eps = mean[i][j] <= 16 ? eps1 : eps2;
          sc.processing[i][j] = static_cast<int>(std::ceil(mean[i][j] * (1.0 + eps)));
        }
    } else {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const double eps = draw_eps(mean[i][j] <= 16);
          sc.processing[i][j] = static_cast<int>(std::ceil(mean[i][j] * (1.0 + eps)));
        }
    }
  }
  return inst;
}

namespace {

using nlohmann::json;

std::string probability_string(double p) {
  std::ostringstream out;
  out.precision(17);
  out << p;
  return out.str();
}

json deadline_to_json(int d) {
  if (d == kNoDeadline) return nullptr;
  return d;
}

}  // namespace

std::string to_json_string(const Instance& instance) {
  instance.validate();
  json doc;
  doc["facilities"] = instance.num_facilities;
  doc["tasks"] = instance.num_tasks;
  doc["capacity"] = instance.capacity;
  doc["release"] = instance.release;
  doc["deadline"] = json::array();
  for (int d : instance.deadline) doc["deadline"].push_back(deadline_to_json(d));
  if (instance.due_date) doc["due_date"] = *instance.due_date;
  doc["consumption"] = instance.consumption;
  if (instance.assign_cost) doc["assign_cost"] = *instance.assign_cost;
  doc["scenarios"] = json::array();
  for (const Scenario& sc : instance.scenarios) {
    json s;
    s["probability"] = probability_string(sc.probability);
    s["processing"] = sc.processing;
    doc["scenarios"].push_back(std::move(s));
  }
  return doc.dump(2);
}

Instance from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("instance: malformed JSON: ") + e.what());
  }
  auto require = [&doc](const char* key) -> const json& {
    if (!doc.contains(key))
      throw std::invalid_argument(std::string("instance: field '") + key + "': missing");
    return doc.at(key);
  };
  Instance inst;
  try {
    inst.num_facilities = require("facilities").get<int>();
    inst.num_tasks = require("tasks").get<int>();
    inst.capacity = require("capacity").get<std::vector<int>>();
    inst.release = require("release").get<std::vector<int>>();
    for (const json& d : require("deadline"))
      inst.deadline.push_back(d.is_null() ? kNoDeadline : d.get<int>());
    if (doc.contains("due_date")) inst.due_date = doc["due_date"].get<std::vector<int>>();
    inst.consumption = require("consumption").get<std::vector<std::vector<int>>>();
    if (doc.contains("assign_cost"))
      inst.assign_cost = doc["assign_cost"].get<std::vector<std::vector<double>>>();
    for (const json& s : require("scenarios")) {
      Scenario sc;
      if (!s.contains("probability"))
        throw std::invalid_argument("instance: field 'scenarios.probability': missing");
      const json& p = s["probability"];
      sc.probability = p.is_string() ? std::stod(p.get<std::string>()) : p.get<double>();
      sc.processing = s.at("processing").get<std::vector<std::vector<int>>>();
      inst.scenarios.push_back(std::move(sc));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("instance: malformed field: ") + e.what());
  }
  inst.validate();
  return inst;
}

void to_file(const Instance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("instance: cannot open for writing: " + path);
  out << to_json_string(instance) << '\n';
  if (!out) throw std::runtime_error("instance: write failed: " + path);
}

Instance from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("instance: cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

}  // namespace stochplan
