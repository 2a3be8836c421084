#pragma once

#include <string>

#include "lmpinfer/case_model.hpp"

namespace lmpinfer {

// Parses the MATPOWER case-file subset: `<prefix>.baseMVA = <num>;` plus the
// bus, gen, branch and gencost matrices in MATLAB matrix syntax. Consumed
// columns:
//   bus:     id, type, Pd, Qd
//   gen:     bus, Pg, Qg, Qmax, Qmin, Vg, mBase, status, Pmax, Pmin
//   branch:  from, to, r, x, b, rateA      (x -> susceptance 1/x, rateA -> limit)
//   gencost: model, startup, shutdown, ncost, c2, c1, c0
// Everything else is ignored. rateA <= 0 means unlimited. status <= 0 marks
// the generator out of service but keeps it in the case.
//
// Errors: errc::kParseMissingMatrix (names the matrix), errc::kParseSyntax
// (line:column of the offending token), errc::kParseUnsupportedCostModel
// (model != 2 polynomial or ncost != 3).
GridCase parse_matpower_case(const std::string& text);

}  // namespace lmpinfer
