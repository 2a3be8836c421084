#include "lmpinfer/dataset_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "lmpinfer/errors.hpp"

namespace lmpinfer {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::vector<std::string> expected_header(const GridCase& gc) {
  std::vector<std::string> h;
  h.push_back("point_id");
  for (const auto& b : gc.buses) h.push_back("P_D_" + std::to_string(b.id));
  for (const auto& g : gc.generators) {
    if (g.in_service) h.push_back("P_G_" + std::to_string(g.id));
  }
  for (const auto& b : gc.buses) h.push_back("lambda_" + std::to_string(b.id));
  h.push_back("P_GA");
  return h;
}

double parse_number(const std::string& s, std::size_t line_no, std::size_t col) {
  const char* start = s.c_str();
  char* end = nullptr;
  double v = std::strtod(start, &end);
  if (end == start || *end != '\0') {
    std::ostringstream msg;
    msg << "dataset line " << line_no << ", column " << col + 1
        << ": not a number: '" << s << "'";
    throw Error(errc::kIo, msg.str());
  }
  return v;
}

}  // namespace

std::string metadata_path_for(const std::string& csv_path) {
  return csv_path + ".meta.json";
}

void write_dataset_csv(const Dataset& ds, const GridCase& gc,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(errc::kIo, "cannot open for writing: " + path);

  const auto header = expected_header(gc);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';

  for (std::size_t k = 0; k < ds.points.size(); ++k) {
    const auto& pt = ds.points[k];
    out << k;
    for (double v : pt.loads) out << ',' << fmt17(v);
    for (double v : pt.p_gen) out << ',' << fmt17(v);
    for (double v : pt.lmp) out << ',' << fmt17(v);
    out << ',' << fmt17(pt.p_agg) << '\n';
  }
  if (!out) throw Error(errc::kIo, "write failed: " + path);
  out.close();

  nlohmann::ordered_json meta;
  meta["case_fingerprint"] = ds.case_fingerprint;
  meta["seed"] = ds.seed;
  meta["range_fraction"] = ds.range_fraction;
  meta["solver"] = to_string(ds.solver_kind);
  meta["points"] = ds.points.size();
  meta["retries"] = ds.retries;
  std::ofstream mout(metadata_path_for(path));
  if (!mout) throw Error(errc::kIo, "cannot open for writing: " + metadata_path_for(path));
  mout << meta.dump(2) << '\n';
}

Dataset read_dataset_csv(const std::string& path, const GridCase& gc) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kIo, "cannot open dataset: " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(errc::kIo, "dataset is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto expected = expected_header(gc);
  const auto header = split_csv_line(line);
  if (header != expected) {
    throw Error(errc::kIo,
                "dataset header does not match the case's buses and in-service "
                "generators");
  }

  const std::size_t nb = gc.buses.size();
  const std::size_t ng = gc.in_service_generators().size();

  Dataset ds;
  ds.case_fingerprint = case_fingerprint(gc);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != expected.size()) {
      std::ostringstream msg;
      msg << "dataset line " << line_no << ": expected " << expected.size()
          << " fields, got " << fields.size();
      throw Error(errc::kIo, msg.str());
    }
    DataPoint pt;
    std::size_t col = 1;
    pt.loads.reserve(nb);
    for (std::size_t i = 0; i < nb; ++i, ++col) {
      pt.loads.push_back(parse_number(fields[col], line_no, col));
    }
    pt.p_gen.reserve(ng);
    for (std::size_t i = 0; i < ng; ++i, ++col) {
      pt.p_gen.push_back(parse_number(fields[col], line_no, col));
    }
    pt.lmp.reserve(nb);
    for (std::size_t i = 0; i < nb; ++i, ++col) {
      pt.lmp.push_back(parse_number(fields[col], line_no, col));
    }
    pt.p_agg = parse_number(fields[col], line_no, col);
    ds.points.push_back(std::move(pt));
  }

  const std::string meta_path = metadata_path_for(path);
  std::ifstream min(meta_path);
  if (min) {
    nlohmann::json meta;
    try {
      min >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::kIo, "bad dataset metadata " + meta_path + ": " + e.what());
    }
    if (meta.contains("case_fingerprint")) {
      const std::string fp = meta["case_fingerprint"].get<std::string>();
      if (fp != ds.case_fingerprint) {
        throw Error(errc::kIo,
                    "dataset was generated from a different case (fingerprint " +
                        fp + " vs " + ds.case_fingerprint + ")");
      }
    }
    if (meta.contains("seed")) ds.seed = meta["seed"].get<std::uint64_t>();
    if (meta.contains("range_fraction")) ds.range_fraction = meta["range_fraction"].get<double>();
    if (meta.contains("solver")) ds.solver_kind = solver_kind_from_string(meta["solver"].get<std::string>());
    if (meta.contains("retries")) ds.retries = meta["retries"].get<int>();
  }
  return ds;
}

}  // namespace lmpinfer
