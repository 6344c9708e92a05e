#pragma once

// JSON and CSV serialization for the command-line tool.
// Matrices are {"dim": [rows, cols], "entries": [[re, im], ...]} row-major;
// a scalar "dim" means a square matrix.

#include <nilorbit/vhs.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace nilorbit {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

class SchemaError : public Error {
 public:
  using Error::Error;
};

inline Json complex_to_json(Complex c) { return Json::array({c.real(), c.imag()}); }

inline Complex complex_from_json(const Json& j) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SchemaError("complex number must be [re, im]");
  return Complex(j[0].get<double>(), j[1].get<double>());
}

inline Json matrix_to_json(const Matrix& m) {
  Json entries = Json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) entries.push_back(complex_to_json(m(i, j)));
  return Json{{"dim", Json::array({m.rows(), m.cols()})}, {"entries", entries}};
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("entries")) throw SchemaError("matrix needs dim and entries");
  Index rows = 0, cols = 0;
  const Json& d = j.at("dim");
  if (d.is_number_integer()) {
    rows = cols = d.get<Index>();
  } else if (d.is_array() && d.size() == 2 && d[0].is_number_integer() && d[1].is_number_integer()) {
    rows = d[0].get<Index>();
    cols = d[1].get<Index>();
  } else {
    throw SchemaError("matrix dim must be an integer or [rows, cols]");
  }
  const Json& e = j.at("entries");
  if (rows < 0 || cols < 0 || !e.is_array() || static_cast<Index>(e.size()) != rows * cols)
    throw SchemaError("matrix entries do not match dim");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) m(i, k) = complex_from_json(e[static_cast<std::size_t>(i * cols + k)]);
  return m;
}

inline Json hodge_data_to_json(const PolarizedHodgeData& phd) {
  return Json{{"weight", phd.weight()}, {"hodge_numbers", phd.hodge_numbers()}, {"Q", matrix_to_json(phd.Q())}};
}

inline PolarizedHodgeData hodge_data_from_json(const Json& j) {
  try {
    return PolarizedHodgeData(j.at("weight").get<int>(), j.at("hodge_numbers").get<std::vector<int>>(),
                              matrix_from_json(j.at("Q")));
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("hodge data: ") + e.what());
  }
}

/// Step bases F^m, ..., F^0 of a flag.
inline Json flag_to_json(const FlagPoint& f) {
  Json steps = Json::array();
  for (int p = f.weight(); p >= 0; --p) steps.push_back(matrix_to_json(f.step_basis(p)));
  return Json{{"hodge_numbers", f.hodge_numbers()}, {"steps", steps}};
}

inline FlagPoint flag_from_json(const Json& j) {
  try {
    std::vector<Matrix> steps;
    for (const auto& s : j.at("steps")) steps.push_back(matrix_from_json(s));
    return FlagPoint::from_steps(steps, j.at("hodge_numbers").get<std::vector<int>>());
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("flag: ") + e.what());
  }
}

inline Json decomposition_to_json(const MonodromyDecomposition& dec) {
  Json blocks = Json::array();
  for (const auto& b : dec.blocks) {
    Json lam = Json::array();
    for (const auto& l : b.lambdas) lam.push_back(complex_to_json(l));
    blocks.push_back(Json{{"dim", b.space.dim()}, {"lambdas", lam}, {"betas", b.betas}});
  }
  Json s = Json::array(), n = Json::array();
  for (const auto& m : dec.S) s.push_back(matrix_to_json(m));
  for (const auto& m : dec.N) n.push_back(matrix_to_json(m));
  return Json{{"alpha", dec.alpha},
              {"blocks", blocks},
              {"S", s},
              {"N", n},
              {"reconstruction_residual", dec.reconstruction_residual},
              {"commutator_residual", dec.commutator_residual},
              {"basis_condition", dec.cond}};
}

// ---------------------------------------------------------------------------
// Family manifests
//
//   {"example": "<registry name>", "params": {"beta": -0.5}}
//   {"example": "orbit", "weight": 1, "hodge_numbers": [1, 1], "Q": M,
//    "a": M, "S": [M, ...], "N": [M, ...], "box": {"x_max": -1},
//    "reference": M, "name": "..."}
// where M is a matrix; "a" and "reference" are adapted frames.

inline VHSFamily family_from_manifest(const Json& j) {
  if (!j.is_object() || !j.contains("example") || !j.at("example").is_string())
    throw SchemaError("manifest needs an \"example\" name");
  const std::string example = j.at("example").get<std::string>();
  try {
    if (example != "orbit") {
      std::map<std::string, double> params;
      if (j.contains("params")) {
        for (const auto& [k, v] : j.at("params").items()) {
          if (!v.is_number()) throw SchemaError("manifest param " + k + " must be a number");
          params[k] = v.get<double>();
        }
      }
      return registry_family(example, params);
    }
    const PolarizedHodgeData phd = hodge_data_from_json(j);
    const Matrix a = matrix_from_json(j.at("a"));
    std::vector<Matrix> s, n;
    for (const auto& m : j.at("S")) s.push_back(matrix_from_json(m));
    for (const auto& m : j.at("N")) n.push_back(matrix_from_json(m));
    DomainBox box;
    if (j.contains("box")) box.x_max = j.at("box").value("x_max", -1.0);
    const Matrix ref = matrix_from_json(j.at("reference"));
    const auto h = phd.hodge_numbers();
    auto orb = make_orbit([a](const WPoint&) { return a; }, h, s, n);
    return make_orbit_family(orb, phd, box, FlagPoint::from_frame(ref, h), j.value("name", std::string("orbit")));
  } catch (const Json::exception& e) {
    throw SchemaError("manifest: " + std::string(e.what()));
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

/// Registry name or path to a JSON manifest.
inline VHSFamily load_family(const std::string& spec) {
  if (std::filesystem::exists(spec)) return family_from_manifest(read_json_file(spec));
  return registry_family(spec);
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180, floats at 17 significant digits)

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw ContractViolation("csv: row width differs from header");
    rows_.push_back(std::move(row));
  }
  bool empty() const { return rows_.empty(); }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_field(r[i]);
      out += "\r\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Sample dump table: (series, Re z, Im z, |w|, quantity).
inline CsvTable sample_table() { return CsvTable({"series", "re_z", "im_z", "abs_w", "quantity"}); }

inline void add_sample(CsvTable& t, const std::string& series, double re_z, std::optional<double> im_z, double abs_w,
                       double value) {
  t.add({series, format_double(re_z), im_z ? format_double(*im_z) : std::string(), format_double(abs_w),
         format_double(value)});
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace nilorbit
