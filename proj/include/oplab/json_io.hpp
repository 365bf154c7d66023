#ifndef OPLAB_JSON_IO_HPP
#define OPLAB_JSON_IO_HPP

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "oplab/czd.hpp"
#include "oplab/opmeasure.hpp"
#include "oplab/scattering.hpp"

namespace oplab {

using Json = nlohmann::json;

// Malformed document: wrong types, ragged matrices, missing keys.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// {"re": [[...]], "im": [[...]]}, rows outermost. "im" may be omitted.
Json matrix_to_json(const ComplexMatrix& a);
ComplexMatrix matrix_from_json(const Json& j);

// {"rows": r, "cols": c, "atoms": [{"x", "re", "im"}], "cells": [{"lo", "hi", "re", "im"}]}
// rows/cols are optional on input when at least one atom or cell is present.
Json measure_to_json(const OpMeasure& mu);
OpMeasure measure_from_json(const Json& j);

// {"H0": matrix, "G": matrix, "J": matrix}
Json model_to_json(const ScatteringModel& model);
ScatteringModel model_from_json(const Json& j);

// {"s", "norm", "intervals": [{"j", "n"}], "checks": {...}, "integral", "integral_limit"}
Json decomposition_to_json(const CZDecomposition& dec, const CZReport& report);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace oplab

#endif  // OPLAB_JSON_IO_HPP
