#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmpinfer/errors.hpp"

namespace lmpinfer {

// Quadratic generation cost a*P^2 + b*P + c in $/h with P in MW.
// a > 0 is required: every downstream algorithm relies on strict convexity.
struct CostFunction {
  double a = 0.0;  // $/MW^2 h
  double b = 0.0;  // $/MWh
  double c = 0.0;  // $/h
};

struct Generator {
  int id = 0;   // original id (1-based for MATPOWER row order)
  int bus = 0;  // original bus id
  double p_min = 0.0;  // MW
  double p_max = 0.0;  // MW
  CostFunction cost;
  bool in_service = true;
};

struct Bus {
  int id = 0;
  double p_load_nominal = 0.0;  // MW
  double q_load_nominal = 0.0;  // MVAr, parsed for fidelity; dispatch ignores it
};

struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double susceptance = 0.0;  // p.u. (1/x)
  std::optional<double> flow_limit;  // MW; absent = unlimited
};

struct GridCase {
  double base_mva = 100.0;
  int slack_bus = 0;  // original bus id
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Line> lines;

  // Dense 0-based bus index in ascending original-id order.
  std::unordered_map<int, int> bus_index() const;

  // Indices into `generators` of in-service units, in ascending original id.
  std::vector<int> in_service_generators() const;

  double total_nominal_load() const;
};

// Normalizes bus/generator ordering in place: buses ascending by id,
// generators ascending by id. Called by both parsers.
void normalize_case(GridCase& gc);

// Checks every structural invariant. Empty result means the case is valid.
// Violation codes: "cost/nonconvex", "cost/negative-linear", "cost/negative-fixed",
// "capacity/order", "bus/duplicate-id", "gen/missing-bus", "line/missing-bus",
// "line/self-loop", "line/susceptance", "net/disconnected", "gen/none-in-service",
// "case/base-mva", "case/slack-missing".
std::vector<Violation> validate_case(const GridCase& gc);

// Throws Error(errc::kNativeSchema) listing every violation.
void require_valid(const GridCase& gc);

// Content hash over the canonical native serialization (FNV-1a 64, hex).
// Identical cases hash identically regardless of input format.
std::string case_fingerprint(const GridCase& gc);

}  // namespace lmpinfer
