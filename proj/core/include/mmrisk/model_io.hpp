#pragma once

#include <iosfwd>
#include <string>

#include "mmrisk/model.hpp"

namespace mmrisk {

// Reads a model from the JSON format
//   {"states": m, "Q": [[...]], "laws": [{"pos_rate": ..., "pos_law":
//    [{"w": ..., "n": ..., "delta": ...}], "neg_rate": ..., "c": ...}]}
// Unknown keys, missing keys, non-finite numbers, non-integer shapes and
// weights that do not sum to one are SchemaError; the message names the
// offending field by path. The result is unvalidated; run validate_spec.
ProcessSpec read_model(const std::string& path);
ProcessSpec read_model_stream(std::istream& in, const std::string& origin);

// Inverse of read_model, used by tests to round-trip specifications.
std::string write_model(const ProcessSpec& spec);

} // namespace mmrisk
