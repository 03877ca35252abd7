#ifndef SKLAB_IO_HPP
#define SKLAB_IO_HPP

// File formats: domain and run-config JSON, path CSVs, coefficient registry
// and test-function battery descriptions.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sklab/errors.hpp"
#include "sklab/generator.hpp"
#include "sklab/geometry.hpp"
#include "sklab/skorokhod.hpp"
#include "sklab/types.hpp"

namespace sklab::io {

using json = nlohmann::json;
using Warn = std::function<void(const std::string&)>;

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ParseError("cannot write " + p.string());
  out << text;
}

/// Parses JSON, reporting syntax errors with line and column.
inline json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    const auto last_nl = text.rfind('\n', upto > 0 ? upto - 1 : 0);
    const std::size_t col = last_nl == std::string::npos ? upto + 1 : upto - last_nl;
    throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

inline json load_json(const std::filesystem::path& p) { return parse_json(read_text(p), p.string()); }

inline Vector to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(what + "[" + std::to_string(i) + "] is not a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Matrix to_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + " must be a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = to_vector(j[r], what + "[" + std::to_string(r) + "]");
    if (static_cast<std::size_t>(row.size()) != cols) throw ParseError(what + " rows have different lengths");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

inline json from_vector(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline json from_matrix(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(from_vector(m.row(r).transpose()));
  return rows;
}

/// Builds a domain from {"dimension": J, "faces": [{"normal", "offset",
/// "direction"}]}. Non-unit vectors are normalized with a warning.
inline PolyhedralDomain domain_from_json(const json& j, const Warn& warn = {}) {
  if (!j.is_object()) throw ParseError("domain must be a JSON object");
  if (!j.contains("dimension") || !j["dimension"].is_number_integer()) throw ParseError("domain needs integer 'dimension'");
  if (!j.contains("faces") || !j["faces"].is_array()) throw ParseError("domain needs a 'faces' array");
  const int dim = j["dimension"].get<int>();
  std::vector<Face> faces;
  for (std::size_t i = 0; i < j["faces"].size(); ++i) {
    const json& f = j["faces"][i];
    const std::string where = "faces[" + std::to_string(i) + "]";
    if (!f.is_object() || !f.contains("normal") || !f.contains("offset") || !f.contains("direction")) {
      throw ParseError(where + " needs normal, offset and direction");
    }
    if (!f["offset"].is_number()) throw ParseError(where + ".offset is not a number");
    const Vector n = to_vector(f["normal"], where + ".normal");
    const Vector d = to_vector(f["direction"], where + ".direction");
    if (n.size() != dim || d.size() != dim) throw ParseError(where + " vectors must have length " + std::to_string(dim));
    if (warn && (std::abs(n.norm() - 1.0) > 1e-12 || std::abs(d.norm() - 1.0) > 1e-12)) {
      warn(where + ": normal/direction normalized to unit length");
    }
    faces.push_back(make_face(n, f["offset"].get<double>(), d));
  }
  return PolyhedralDomain(dim, std::move(faces));
}

inline json domain_to_json(const PolyhedralDomain& d) {
  json j;
  j["dimension"] = d.dimension();
  j["faces"] = json::array();
  for (const Face& f : d.faces()) {
    j["faces"].push_back({{"normal", from_vector(f.normal)}, {"offset", f.offset}, {"direction", from_vector(f.direction)}});
  }
  return j;
}

inline PolyhedralDomain load_domain(const std::filesystem::path& p, const Warn& warn = {}) {
  return domain_from_json(load_json(p), warn);
}

/// Coefficient registry: "constant", "ou", "state-diag".
inline Coefficients coefficients_from_json(const json& j, int dimension) {
  if (!j.is_object() || !j.contains("name")) throw ParseError("coefficients need a 'name'");
  const std::string name = j["name"].get<std::string>();
  const double floor = j.value("ellipticity_floor", 0.0);
  auto vec_or_zero = [&](const char* key) {
    return j.contains(key) ? to_vector(j[key], key) : Vector(Vector::Zero(dimension));
  };
  auto sigma = [&]() {
    return j.contains("dispersion") ? to_matrix(j["dispersion"], "dispersion") : Matrix(Matrix::Identity(dimension, dimension));
  };
  Coefficients c;
  if (name == "constant") {
    c = constant_coefficients(vec_or_zero("drift"), sigma(), floor);
  } else if (name == "ou") {
    if (!j.contains("B")) throw ParseError("ou coefficients need matrix 'B'");
    c = ou_coefficients(to_matrix(j["B"], "B"), sigma(), floor);
  } else if (name == "state-diag") {
    c = state_diag_coefficients(vec_or_zero("drift"), to_vector(j.at("base"), "base"), to_vector(j.at("slope"), "slope"), floor);
  } else {
    throw ParseError("unknown coefficient model '" + name + "'");
  }
  if (c.dimension != dimension) throw ParseError("coefficient dimension does not match the domain");
  return c;
}

inline TestFunction test_function_from_json(const PolyhedralDomain& domain, const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "linear") return make_linear_test_fn(domain, to_vector(j.at("v"), "v"));
  if (type == "bump") {
    return make_bump_test_fn(domain, to_vector(j.at("center"), "center"), j.at("radius").get<double>(),
                             j.value("sign", -1));
  }
  if (type == "interior-bump") {
    return make_interior_bump_test_fn(domain, to_vector(j.at("center"), "center"), j.at("radius").get<double>());
  }
  if (type == "constant") return constant_test_fn(domain.dimension(), j.value("value", 1.0));
  if (type == "scaled") {
    const double alpha = j.at("alpha").get<double>();
    if (!(alpha > 0.0)) throw ParseError("scaled test functions need alpha > 0");
    return scale(test_function_from_json(domain, j.at("of")), alpha);
  }
  if (type == "sum") {
    const json& parts = j.at("of");
    if (!parts.is_array() || parts.empty()) throw ParseError("sum needs a nonempty 'of' array");
    TestFunction f = test_function_from_json(domain, parts[0]);
    for (std::size_t k = 1; k < parts.size(); ++k) f = sum(f, test_function_from_json(domain, parts[k]));
    return f;
  }
  throw ParseError("unknown test function type '" + type + "'");
}

/// Default battery: admissible linear functions along face normals and
/// their sum, plus a negative bump at each U stratum.
inline std::vector<TestFunction> default_battery(const PolyhedralDomain& domain) {
  std::vector<TestFunction> out;
  Vector total = Vector::Zero(domain.dimension());
  for (int i = 0; i < domain.num_faces(); ++i) {
    const Vector& n = domain.face(i).normal;
    total += n;
    try {
      TestFunction f = make_linear_test_fn(domain, n);
      f.id = "linear:n" + std::to_string(i);
      out.push_back(std::move(f));
    } catch (const ObliqueSignViolation&) {
    }
  }
  try {
    TestFunction f = make_linear_test_fn(domain, total);
    f.id = "linear:sum";
    out.push_back(std::move(f));
  } catch (const ObliqueSignViolation&) {
  }
  for (const Stratum& st : is_completely_s(domain).strata) {
    if (st.cls != BoundaryClass::kU) continue;
    double reach = 1.0;
    for (int i = 0; i < domain.num_faces(); ++i) {
      if (std::find(st.faces.begin(), st.faces.end(), i) == st.faces.end()) {
        reach = std::min(reach, 0.5 * domain.slack(i, st.point));
      }
    }
    try {
      TestFunction f = make_bump_test_fn(domain, st.point, reach, -1);
      f.id = "bump:" + format_face_set(st.faces);
      out.push_back(std::move(f));
    } catch (const Error&) {
    }
  }
  return out;
}

inline std::vector<TestFunction> battery_from_json(const PolyhedralDomain& domain, const json& j) {
  if (j.is_null()) return default_battery(domain);
  if (!j.is_array()) throw ParseError("battery must be an array");
  std::vector<TestFunction> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    TestFunction f = test_function_from_json(domain, j[k]);
    f.id = j[k].value("id", f.id + "#" + std::to_string(k));
    out.push_back(std::move(f));
  }
  return out;
}

// --- CSV -------------------------------------------------------------------

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string path_to_csv(const DiscretePath& p, const std::string& prefix = "x") {
  std::string out = "t";
  for (int c = 0; c < p.dimension(); ++c) out += "," + prefix + std::to_string(c + 1);
  out += "\n";
  for (int k = 0; k < p.size(); ++k) {
    out += format_double(p.times[k]);
    for (int c = 0; c < p.dimension(); ++c) out += "," + format_double(p.values(c, k));
    out += "\n";
  }
  return out;
}

inline DiscretePath path_from_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(origin + ": empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int cols = 0;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) ++cols;
  }
  if (cols < 2 || line.rfind("t,", 0) != 0) throw ParseError(origin + ":1: header must be t,x1,...,xJ");
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(origin + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(vals.size()) != cols) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) + " fields");
    }
    times.push_back(vals[0]);
    rows.emplace_back(vals.begin() + 1, vals.end());
  }
  Matrix values(cols - 1, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (int c = 0; c < cols - 1; ++c) values(c, static_cast<Eigen::Index>(k)) = rows[k][static_cast<std::size_t>(c)];
  }
  try {
    return DiscretePath(std::move(times), std::move(values));
  } catch (const GridMismatch& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

inline DiscretePath load_path(const std::filesystem::path& p) { return path_from_csv(read_text(p), p.string()); }

/// FNV-1a, used for config and file fingerprints in manifests.
inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace sklab::io

#endif  // SKLAB_IO_HPP
