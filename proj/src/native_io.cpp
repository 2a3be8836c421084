#include "lmpinfer/native_io.hpp"

#include <cstdio>
#include <string>

#include <json.hpp>

namespace lmpinfer {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(errc::kNativeSchema, path + ": " + what);
}

const ordered_json& member(const ordered_json& obj, const std::string& key,
                           const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "." + key, "missing required field");
  return *it;
}

double number_at(const ordered_json& obj, const std::string& key, const std::string& path) {
  const auto& v = member(obj, key, path);
  if (!v.is_number()) schema_error(path + "." + key, "expected a number");
  return v.get<double>();
}

int int_at(const ordered_json& obj, const std::string& key, const std::string& path) {
  const auto& v = member(obj, key, path);
  if (!v.is_number_integer()) schema_error(path + "." + key, "expected an integer");
  return v.get<int>();
}

bool bool_at(const ordered_json& obj, const std::string& key, const std::string& path) {
  const auto& v = member(obj, key, path);
  if (!v.is_boolean()) schema_error(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

const ordered_json& array_at(const ordered_json& obj, const std::string& key,
                             const std::string& path) {
  const auto& v = member(obj, key, path);
  if (!v.is_array()) schema_error(path + "." + key, "expected an array");
  return v;
}

}  // namespace

GridCase parse_native_case(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(errc::kNativeSchema, std::string("document is not valid JSON: ") + e.what());
  }

  GridCase gc;
  gc.base_mva = number_at(doc, "base_mva", "$");
  gc.slack_bus = int_at(doc, "slack_bus", "$");

  const auto& buses = array_at(doc, "buses", "$");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string path = "$.buses[" + std::to_string(i) + "]";
    Bus b;
    b.id = int_at(buses[i], "id", path);
    b.p_load_nominal = number_at(buses[i], "p_load_nominal", path);
    b.q_load_nominal = number_at(buses[i], "q_load_nominal", path);
    gc.buses.push_back(b);
  }

  const auto& gens = array_at(doc, "generators", "$");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const std::string path = "$.generators[" + std::to_string(i) + "]";
    Generator g;
    g.id = int_at(gens[i], "id", path);
    g.bus = int_at(gens[i], "bus", path);
    g.p_min = number_at(gens[i], "p_min", path);
    g.p_max = number_at(gens[i], "p_max", path);
    g.in_service = bool_at(gens[i], "in_service", path);
    const auto& cost = member(gens[i], "cost", path);
    g.cost.a = number_at(cost, "a", path + ".cost");
    g.cost.b = number_at(cost, "b", path + ".cost");
    g.cost.c = number_at(cost, "c", path + ".cost");
    gc.generators.push_back(g);
  }

  const auto& lines = array_at(doc, "lines", "$");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string path = "$.lines[" + std::to_string(i) + "]";
    Line ln;
    ln.from_bus = int_at(lines[i], "from_bus", path);
    ln.to_bus = int_at(lines[i], "to_bus", path);
    ln.susceptance = number_at(lines[i], "susceptance", path);
    if (lines[i].contains("flow_limit") && !lines[i]["flow_limit"].is_null()) {
      if (!lines[i]["flow_limit"].is_number()) {
        schema_error(path + ".flow_limit", "expected a number or null");
      }
      ln.flow_limit = lines[i]["flow_limit"].get<double>();
    }
    gc.lines.push_back(ln);
  }

  normalize_case(gc);

  // Referential integrity is a hard parse failure here (unlike validate_case,
  // which reports it as data) so a broken document never escapes the parser.
  auto index = gc.bus_index();
  for (const auto& g : gc.generators) {
    if (index.find(g.bus) == index.end()) {
      throw Error(errc::kNativeReference,
                  "generator " + std::to_string(g.id) + " references absent bus " +
                      std::to_string(g.bus));
    }
  }
  for (std::size_t i = 0; i < gc.lines.size(); ++i) {
    if (index.find(gc.lines[i].from_bus) == index.end() ||
        index.find(gc.lines[i].to_bus) == index.end()) {
      throw Error(errc::kNativeReference,
                  "line " + std::to_string(i) + " references an absent bus");
    }
  }
  return gc;
}

std::string write_native_case(const GridCase& gc) {
  ordered_json doc;
  doc["base_mva"] = gc.base_mva;
  doc["slack_bus"] = gc.slack_bus;

  doc["buses"] = ordered_json::array();
  for (const auto& b : gc.buses) {
    ordered_json jb;
    jb["id"] = b.id;
    jb["p_load_nominal"] = b.p_load_nominal;
    jb["q_load_nominal"] = b.q_load_nominal;
    doc["buses"].push_back(jb);
  }

  doc["generators"] = ordered_json::array();
  for (const auto& g : gc.generators) {
    ordered_json jg;
    jg["id"] = g.id;
    jg["bus"] = g.bus;
    jg["p_min"] = g.p_min;
    jg["p_max"] = g.p_max;
    jg["cost"] = {{"a", g.cost.a}, {"b", g.cost.b}, {"c", g.cost.c}};
    jg["in_service"] = g.in_service;
    doc["generators"].push_back(jg);
  }

  doc["lines"] = ordered_json::array();
  for (const auto& ln : gc.lines) {
    ordered_json jl;
    jl["from_bus"] = ln.from_bus;
    jl["to_bus"] = ln.to_bus;
    jl["susceptance"] = ln.susceptance;
    if (ln.flow_limit) jl["flow_limit"] = *ln.flow_limit;
    doc["lines"].push_back(jl);
  }
  return doc.dump(2) + "\n";
}

}  // namespace lmpinfer
