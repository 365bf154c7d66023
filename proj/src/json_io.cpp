#include "oplab/json_io.hpp"

#include <fstream>
#include <sstream>

namespace oplab {

namespace {

Json real_rows(const ComplexMatrix& a, bool imag) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(imag ? a(r, c).imag() : a(r, c).real());
    rows.push_back(std::move(row));
  }
  return rows;
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) throw FormatError(std::string("expected a number for ") + what);
  return j.get<double>();
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
  return j.at(key);
}

}  // namespace

Json matrix_to_json(const ComplexMatrix& a) {
  return Json{{"re", real_rows(a, false)}, {"im", real_rows(a, true)}};
}

ComplexMatrix matrix_from_json(const Json& j) {
  const Json& re = field(j, "re");
  if (!re.is_array() || re.empty() || !re[0].is_array()) throw FormatError("matrix 're' must be a non-empty array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(re.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(re[0].size());
  if (cols == 0) throw FormatError("matrix rows must be non-empty");
  ComplexMatrix a(rows, cols);
  const Json* im = j.contains("im") ? &j.at("im") : nullptr;
  if (im && (!im->is_array() || static_cast<Eigen::Index>(im->size()) != rows))
    throw FormatError("matrix 'im' shape differs from 're'");
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!re[r].is_array() || static_cast<Eigen::Index>(re[r].size()) != cols) throw FormatError("ragged matrix");
    if (im && (!(*im)[r].is_array() || static_cast<Eigen::Index>((*im)[r].size()) != cols))
      throw FormatError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c)
      a(r, c) = {number(re[r][c], "matrix entry"), im ? number((*im)[r][c], "matrix entry") : 0.0};
  }
  if (!all_finite(a)) throw FormatError("matrix has non-finite entries");
  return a;
}

Json measure_to_json(const OpMeasure& mu) {
  Json atoms = Json::array();
  for (const auto& a : mu.atoms.atoms()) {
    Json e = matrix_to_json(a.value);
    e["x"] = a.x;
    atoms.push_back(std::move(e));
  }
  Json cells = Json::array();
  for (const auto& c : mu.density.cells()) {
    Json e = matrix_to_json(c.density);
    e["lo"] = c.lo;
    e["hi"] = c.hi;
    cells.push_back(std::move(e));
  }
  return Json{{"rows", mu.rows()}, {"cols", mu.cols()}, {"atoms", std::move(atoms)}, {"cells", std::move(cells)}};
}

OpMeasure measure_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("measure must be an object");
  std::vector<Atom> atoms;
  std::vector<DensityCell> cells;
  if (j.contains("atoms")) {
    if (!j["atoms"].is_array()) throw FormatError("'atoms' must be an array");
    for (const auto& e : j["atoms"]) atoms.push_back({number(field(e, "x"), "x"), matrix_from_json(e)});
  }
  if (j.contains("cells")) {
    if (!j["cells"].is_array()) throw FormatError("'cells' must be an array");
    for (const auto& e : j["cells"])
      cells.push_back({number(field(e, "lo"), "lo"), number(field(e, "hi"), "hi"), matrix_from_json(e)});
  }
  Eigen::Index rows = 0, cols = 0;
  if (j.contains("rows") || j.contains("cols")) {
    rows = static_cast<Eigen::Index>(number(field(j, "rows"), "rows"));
    cols = static_cast<Eigen::Index>(number(field(j, "cols"), "cols"));
  } else if (!atoms.empty()) {
    rows = atoms.front().value.rows();
    cols = atoms.front().value.cols();
  } else if (!cells.empty()) {
    rows = cells.front().density.rows();
    cols = cells.front().density.cols();
  } else {
    throw FormatError("empty measure needs explicit rows/cols");
  }
  try {
    return OpMeasure(SimpleOpMeasure(rows, cols, std::move(atoms)), DensityOpMeasure(rows, cols, std::move(cells)));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid measure: ") + e.what());
  }
}

Json model_to_json(const ScatteringModel& model) {
  return Json{{"H0", matrix_to_json(model.H0())}, {"G", matrix_to_json(model.G())}, {"J", matrix_to_json(model.J())}};
}

ScatteringModel model_from_json(const Json& j) {
  try {
    return ScatteringModel(matrix_from_json(field(j, "H0")), matrix_from_json(field(j, "G")),
                           matrix_from_json(field(j, "J")));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
}

Json decomposition_to_json(const CZDecomposition& dec, const CZReport& report) {
  Json intervals = Json::array();
  for (const auto& q : dec.intervals)
    intervals.push_back({{"j", q.index()}, {"n", q.scale()}, {"lo", q.left()}, {"hi", q.right()}});
  Json checks = Json::object();
  for (const auto& c : report.checks)
    checks[c.name] = {{"pass", c.pass}, {"worst", c.worst}, {"evaluated", c.evaluated}, {"detail", c.detail}};
  return Json{{"s", dec.s},
              {"norm", dec.norm.to_string()},
              {"intervals", std::move(intervals)},
              {"checks", std::move(checks)},
              {"integral", report.integral},
              {"integral_limit", report.integral_limit},
              {"pass", report.all_pass()}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace oplab
