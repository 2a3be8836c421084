#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "lmpinfer/errors.hpp"
#include "lmpinfer/native_io.hpp"

using namespace lmpinfer;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTinyCase = R"({
  "base_mva": 1.0,
  "slack_bus": 2,
  "buses": [
    {"id": 2, "p_load_nominal": 0.5, "q_load_nominal": 0.0},
    {"id": 1, "p_load_nominal": 1.5, "q_load_nominal": 0.1}
  ],
  "generators": [
    {"id": 1, "bus": 1, "p_min": 0.0, "p_max": 5.0,
     "cost": {"a": 0.1, "b": 2.0, "c": 0.0}, "in_service": true}
  ],
  "lines": [
    {"from_bus": 1, "to_bus": 2, "susceptance": 8.0}
  ]
})";

}  // namespace

TEST_CASE("parses and normalizes a native document") {
  GridCase gc = parse_native_case(kTinyCase);
  CHECK(gc.base_mva == doctest::Approx(1.0));
  CHECK(gc.slack_bus == 2);
  REQUIRE(gc.buses.size() == 2);
  CHECK(gc.buses[0].id == 1);  // sorted on parse
  CHECK(gc.buses[1].id == 2);
  CHECK(gc.buses[0].p_load_nominal == doctest::Approx(1.5));
  REQUIRE(gc.generators.size() == 1);
  CHECK(gc.generators[0].cost.b == doctest::Approx(2.0));
  REQUIRE(gc.lines.size() == 1);
  CHECK(!gc.lines[0].flow_limit.has_value());
}

TEST_CASE("serialization round trip is the identity") {
  GridCase gc = parse_native_case(slurp(std::string(FIXTURE_DIR) + "/threebus.json"));
  const std::string once = write_native_case(gc);
  GridCase again = parse_native_case(once);
  CHECK(write_native_case(again) == once);

  CHECK(again.slack_bus == gc.slack_bus);
  REQUIRE(again.lines.size() == gc.lines.size());
  for (std::size_t i = 0; i < gc.lines.size(); ++i) {
    CHECK(again.lines[i].flow_limit.has_value() == gc.lines[i].flow_limit.has_value());
  }
}

TEST_CASE("null flow_limit means unlimited, zero means zero") {
  std::string text = kTinyCase;
  auto pos = text.find("\"susceptance\": 8.0");
  text.insert(pos + 18, ", \"flow_limit\": null");
  GridCase gc = parse_native_case(text);
  CHECK(!gc.lines[0].flow_limit.has_value());

  text = kTinyCase;
  text.insert(text.find("\"susceptance\": 8.0") + 18, ", \"flow_limit\": 0.0");
  gc = parse_native_case(text);
  REQUIRE(gc.lines[0].flow_limit.has_value());
  CHECK(*gc.lines[0].flow_limit == doctest::Approx(0.0));

  // An explicit limit must survive a round trip.
  const std::string out = write_native_case(gc);
  CHECK(out.find("flow_limit") != std::string::npos);
  GridCase again = parse_native_case(out);
  REQUIRE(again.lines[0].flow_limit.has_value());
}

TEST_CASE("schema errors name the offending path") {
  std::string text = kTinyCase;
  auto pos = text.find("\"base_mva\": 1.0,");
  text.erase(pos, 16);
  try {
    parse_native_case(text);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::kNativeSchema);
    CHECK(std::string(e.what()).find("$.base_mva") != std::string::npos);
  }

  text = kTinyCase;
  pos = text.find("\"id\": 2, ");
  text.erase(pos, 9);
  try {
    parse_native_case(text);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::kNativeSchema);
    CHECK(std::string(e.what()).find("$.buses[0].id") != std::string::npos);
  }

  text = kTinyCase;
  pos = text.find("\"a\": 0.1");
  text.replace(pos, 8, "\"a\": \"x\"");
  try {
    parse_native_case(text);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::kNativeSchema);
    std::string what = e.what();
    CHECK(what.find("$.generators[0].cost.a") != std::string::npos);
    CHECK(what.find("expected a number") != std::string::npos);
  }
}

TEST_CASE("malformed JSON is reported as a schema error") {
  try {
    parse_native_case("{ this is not json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::kNativeSchema);
    CHECK(std::string(e.what()).find("not valid JSON") != std::string::npos);
  }
}

TEST_CASE("dangling references fail the parse") {
  std::string text = kTinyCase;
  auto pos = text.find("\"bus\": 1");
  text.replace(pos, 8, "\"bus\": 9");
  try {
    parse_native_case(text);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::kNativeReference);
    CHECK(std::string(e.what()).find("generator 1") != std::string::npos);
  }

  text = kTinyCase;
  pos = text.find("\"to_bus\": 2");
  text.replace(pos, 11, "\"to_bus\": 9");
  try {
    parse_native_case(text);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::kNativeReference);
    CHECK(std::string(e.what()).find("line 0") != std::string::npos);
  }
}
