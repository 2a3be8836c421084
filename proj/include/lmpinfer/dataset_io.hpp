#pragma once

#include <string>

#include "lmpinfer/case_model.hpp"
#include "lmpinfer/dispatch.hpp"

namespace lmpinfer {

// CSV layout: point_id,P_D_<busid>...,P_G_<genid>...,lambda_<busid>...,P_GA
// with bus and generator columns in ascending original-id order and values
// printed with 17 significant digits. A metadata sidecar (seed, range,
// solver, case fingerprint, retry count) is written next to the CSV as
// <path>.meta.json.
void write_dataset_csv(const Dataset& ds, const GridCase& gc,
                       const std::string& path);

// Reads a dataset written by write_dataset_csv. The header ids must match
// the case's buses and in-service generators; if the sidecar exists its
// fingerprint must match the case.
Dataset read_dataset_csv(const std::string& path, const GridCase& gc);

std::string metadata_path_for(const std::string& csv_path);

}  // namespace lmpinfer
