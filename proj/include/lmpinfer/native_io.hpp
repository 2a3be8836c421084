#pragma once

#include <string>

#include "lmpinfer/case_model.hpp"

namespace lmpinfer {

// Native case format: a JSON document with top-level keys base_mva, slack_bus,
// buses[], generators[], lines[]. Field names match the domain types. A line's
// flow_limit key may be omitted (unlimited); an explicit value, including 0,
// is an enforced limit.
//
// parse_native_case(write_native_case(c)) == c field for field.
GridCase parse_native_case(const std::string& text);

std::string write_native_case(const GridCase& gc);

}  // namespace lmpinfer
