#include "lmpinfer/case_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <sstream>

#include "lmpinfer/native_io.hpp"

namespace lmpinfer {

std::unordered_map<int, int> GridCase::bus_index() const {
  std::unordered_map<int, int> map;
  map.reserve(buses.size());
  for (std::size_t i = 0; i < buses.size(); ++i) {
    map.emplace(buses[i].id, static_cast<int>(i));
  }
  return map;
}

std::vector<int> GridCase::in_service_generators() const {
  std::vector<int> idx;
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (generators[i].in_service) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

double GridCase::total_nominal_load() const {
  double total = 0.0;
  for (const auto& b : buses) total += b.p_load_nominal;
  return total;
}

void normalize_case(GridCase& gc) {
  std::sort(gc.buses.begin(), gc.buses.end(),
            [](const Bus& x, const Bus& y) { return x.id < y.id; });
  std::sort(gc.generators.begin(), gc.generators.end(),
            [](const Generator& x, const Generator& y) { return x.id < y.id; });
}

namespace {

bool connected(const GridCase& gc) {
  if (gc.buses.size() <= 1) return true;
  auto index = gc.bus_index();
  std::vector<std::vector<int>> adj(gc.buses.size());
  for (const auto& ln : gc.lines) {
    auto f = index.find(ln.from_bus);
    auto t = index.find(ln.to_bus);
    if (f == index.end() || t == index.end()) continue;  // reported separately
    adj[f->second].push_back(t->second);
    adj[t->second].push_back(f->second);
  }
  std::vector<char> seen(gc.buses.size(), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == gc.buses.size();
}

}  // namespace

std::vector<Violation> validate_case(const GridCase& gc) {
  std::vector<Violation> out;
  auto add = [&out](const char* code, const std::string& msg) {
    out.push_back({code, msg});
  };

  if (!(gc.base_mva > 0.0) || !std::isfinite(gc.base_mva)) {
    add("case/base-mva", "base_mva must be a positive finite number");
  }

  auto index = gc.bus_index();
  if (index.size() != gc.buses.size()) {
    add("bus/duplicate-id", "bus ids are not unique");
  }
  if (!gc.buses.empty() && index.find(gc.slack_bus) == index.end()) {
    add("case/slack-missing",
        "slack_bus " + std::to_string(gc.slack_bus) + " is not a bus");
  }

  for (const auto& g : gc.generators) {
    const std::string tag = "generator " + std::to_string(g.id);
    if (index.find(g.bus) == index.end()) {
      add("gen/missing-bus", tag + " references absent bus " + std::to_string(g.bus));
    }
    if (!(g.cost.a > 0.0) || !std::isfinite(g.cost.a)) {
      add("cost/nonconvex", tag + " has non-positive quadratic coefficient");
    }
    if (g.cost.b < 0.0) add("cost/negative-linear", tag + " has b < 0");
    if (g.cost.c < 0.0) add("cost/negative-fixed", tag + " has c < 0");
    if (g.p_min < 0.0 || g.p_min > g.p_max) {
      add("capacity/order", tag + " violates 0 <= p_min <= p_max");
    }
  }

  for (std::size_t i = 0; i < gc.lines.size(); ++i) {
    const auto& ln = gc.lines[i];
    const std::string tag = "line " + std::to_string(i);
    if (ln.from_bus == ln.to_bus) add("line/self-loop", tag + " connects a bus to itself");
    if (index.find(ln.from_bus) == index.end() || index.find(ln.to_bus) == index.end()) {
      add("line/missing-bus", tag + " references an absent bus");
    }
    if (!(ln.susceptance > 0.0) || !std::isfinite(ln.susceptance)) {
      add("line/susceptance", tag + " must have susceptance > 0");
    }
  }

  if (gc.in_service_generators().empty()) {
    add("gen/none-in-service", "no in-service generator");
  }
  if (!connected(gc)) {
    add("net/disconnected", "network is not connected over its lines");
  }
  return out;
}

void require_valid(const GridCase& gc) {
  auto violations = validate_case(gc);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid case:";
  for (const auto& v : violations) msg << " [" << v.code << "] " << v.message << ";";
  throw Error(errc::kNativeSchema, msg.str());
}

std::string case_fingerprint(const GridCase& gc) {
  const std::string canonical = write_native_case(gc);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace lmpinfer
