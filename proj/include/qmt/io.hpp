#pragma once

// JSON forms:
//   functional  {"labels": [...], "matrix": [[[re, im], ...], ...]}  row = bra
//   measure     {"labels": [...], "weights": [...]}
//   structured  {"past": [...], "atoms": [{"alpha":"a","i":1,"beta":"b","j":-1,"c":"c0"}, ...],
//                "weights": [...]} or "matrix" in place of "weights"
//   directions  {"a": [x,y,z], "a'": [...], "b": [...], "b'": [...]}
//   state       {"state": [[re,im], ...]} or {"density": [[[re,im], ...], ...]}

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "qmt/epr.hpp"
#include "qmt/measure.hpp"
#include "qmt/quantum_model.hpp"
#include "qmt/screening.hpp"

namespace qmt::io {

using Json = nlohmann::json;

// Malformed input; the CLI maps it to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

struct LoadedText {
  std::string path;
  std::string bytes;
  std::string digest() const { return "fnv1a64:" + hex64(fnv1a(bytes)); }
};

inline LoadedText read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return {path, s.str()};
}

// Parse errors carry 1-based line and column.
inline Json parse(const std::string& text, const std::string& source = "<input>") {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t k = 0; k < end; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (const auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    throw InputError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

namespace detail {

inline const Json& field(const Json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string(what) + " needs a \"" + key + "\" field");
  return j.at(key);
}

inline double number(const Json& j, const char* what) {
  if (!j.is_number()) throw InputError(std::string(what) + " must be a number");
  return j.get<double>();
}

inline Complex complex_entry(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InputError("matrix entries must be [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<std::string> labels(const Json& j) {
  const auto& l = field(j, "labels", "functional");
  if (!l.is_array()) throw InputError("\"labels\" must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : l) {
    if (!s.is_string()) throw InputError("\"labels\" must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

inline SpacePtr space_for(std::vector<std::string> labels) {
  // The canonical 16-atom space is shared so EPR operations accept it.
  if (labels == EprScenario::space()->labels()) return EprScenario::space();
  try {
    return SampleSpace::make(std::move(labels));
  } catch (const InvalidArgument& e) {
    throw InputError(e.what());
  }
}

}  // namespace detail

inline ComplexMatrix matrix_from_json(const Json& m, Eigen::Index n) {
  if (!m.is_array() || static_cast<Eigen::Index>(m.size()) != n)
    throw InputError("\"matrix\" must have " + std::to_string(n) + " rows");
  ComplexMatrix out(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = m[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw InputError("matrix row " + std::to_string(r) + " must have " + std::to_string(n) + " entries");
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = detail::complex_entry(row[static_cast<std::size_t>(c)]);
  }
  if (!out.allFinite()) throw InputError("matrix has non-finite entries");
  return out;
}

inline Json matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

// Labels and raw matrix without axiom checks, so audits can report them.
struct RawFunctional {
  SpacePtr space;
  ComplexMatrix matrix;
};

inline RawFunctional raw_functional_from_json(const Json& j) {
  auto space = detail::space_for(detail::labels(j));
  auto m = matrix_from_json(detail::field(j, "matrix", "functional"), static_cast<Eigen::Index>(space->size()));
  return {std::move(space), std::move(m)};
}

inline DecoherenceFunctional functional_from_json(const Json& j) {
  auto raw = raw_functional_from_json(j);
  return DecoherenceFunctional(raw.space, std::move(raw.matrix));
}

inline Json to_json(const DecoherenceFunctional& d) {
  return {{"labels", d.space()->labels()}, {"matrix", matrix_to_json(d.matrix())}};
}

inline ClassicalMeasure measure_from_json(const Json& j) {
  auto space = detail::space_for(detail::labels(j));
  const auto& w = detail::field(j, "weights", "measure");
  if (!w.is_array()) throw InputError("\"weights\" must be an array");
  std::vector<double> weights;
  for (const auto& v : w) weights.push_back(detail::number(v, "weight"));
  if (weights.size() != space->size()) throw InputError("need one weight per label");
  return ClassicalMeasure(std::move(space), std::move(weights));
}

inline Json to_json(const ClassicalMeasure& m) { return {{"labels", m.space()->labels()}, {"weights", m.weights()}}; }

inline bool is_functional(const Json& j) { return j.is_object() && j.contains("matrix"); }

inline Json to_json(const StructuredModel& m) {
  Json atoms = Json::array();
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t cell = 0; cell < 4; ++cell)
      for (std::size_t c = 0; c < m.past_count(); ++c)
        atoms.push_back({{"alpha", std::string(setting_name(kSettingPairs[p].alpha))},
                         {"i", bit_sign(static_cast<int>(cell >> 1))},
                         {"beta", std::string(setting_name(kSettingPairs[p].beta))},
                         {"j", bit_sign(static_cast<int>(cell & 1U))},
                         {"c", m.past_labels()[c]}});
  Json out = {{"past", m.past_labels()}, {"atoms", std::move(atoms)}};
  if (m.is_classical())
    out["weights"] = m.classical().weights();
  else
    out["matrix"] = matrix_to_json(m.functional().matrix());
  return out;
}

// Atoms may be listed in any order; unlisted atoms carry zero weight.
inline StructuredModel structured_from_json(const Json& j) {
  const auto& atoms = detail::field(j, "atoms", "structured model");
  if (!atoms.is_array() || atoms.empty()) throw InputError("\"atoms\" must be a nonempty array");
  std::vector<std::string> past;
  if (j.contains("past")) {
    for (const auto& c : j.at("past")) {
      if (!c.is_string()) throw InputError("\"past\" must list strings");
      past.push_back(c.get<std::string>());
    }
  }
  auto past_index = [&](const std::string& label, bool declared) -> std::size_t {
    for (std::size_t k = 0; k < past.size(); ++k)
      if (past[k] == label) return k;
    if (declared) throw InputError("past cell '" + label + "' is not declared in \"past\"");
    past.push_back(label);
    return past.size() - 1;
  };
  const bool declared = j.contains("past");
  struct Parsed {
    std::size_t pair, cell, c;
  };
  std::vector<Parsed> parsed;
  for (const auto& a : atoms) {
    auto setting = [&](const char* key, bool a_side) {
      const auto& v = detail::field(a, key, "atom");
      const auto s = v.is_string() ? parse_setting(v.get<std::string>()) : std::nullopt;
      if (!s || is_a_side(*s) != a_side) throw InputError(std::string("bad setting in atom field \"") + key + "\"");
      return *s;
    };
    auto outcome = [&](const char* key) {
      const auto& v = detail::field(a, key, "atom");
      if (!v.is_number_integer() || (v.get<int>() != 1 && v.get<int>() != -1))
        throw InputError(std::string("atom field \"") + key + "\" must be +1 or -1");
      return v.get<int>();
    };
    const auto alpha = setting("alpha", true);
    const auto beta = setting("beta", false);
    const int i = outcome("i"), jj = outcome("j");
    const auto& c = detail::field(a, "c", "atom");
    if (!c.is_string()) throw InputError("atom field \"c\" must be a string");
    parsed.push_back({pair_index({alpha, beta}), static_cast<std::size_t>(2 * sign_bit(i) + sign_bit(jj)),
                      past_index(c.get<std::string>(), declared)});
  }
  if (past.empty()) throw InputError("structured model has no past cells");
  const auto space = StructuredModel::make_space(past);
  const std::size_t nc = past.size();
  std::vector<std::size_t> slot;
  std::vector<bool> seen(space->size(), false);
  for (const auto& p : parsed) {
    const std::size_t k = (p.pair * 4 + p.cell) * nc + p.c;
    if (seen[k]) throw InputError("atom " + space->label(k) + " is listed twice");
    seen[k] = true;
    slot.push_back(k);
  }
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (!w.is_array() || w.size() != parsed.size()) throw InputError("need one weight per listed atom");
    std::vector<double> weights(space->size(), 0.0);
    for (std::size_t k = 0; k < slot.size(); ++k) weights[slot[k]] = detail::number(w[k], "weight");
    return StructuredModel(past, ClassicalMeasure(space, std::move(weights)));
  }
  const auto m = matrix_from_json(detail::field(j, "matrix", "structured model"),
                                  static_cast<Eigen::Index>(parsed.size()));
  const auto n = static_cast<Eigen::Index>(space->size());
  ComplexMatrix full = ComplexMatrix::Zero(n, n);
  for (std::size_t r = 0; r < slot.size(); ++r)
    for (std::size_t c = 0; c < slot.size(); ++c)
      full(static_cast<Eigen::Index>(slot[r]), static_cast<Eigen::Index>(slot[c])) =
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return StructuredModel(past, DecoherenceFunctional(space, std::move(full)));
}

inline SpinDirections directions_from_json(const Json& j) {
  auto vec = [&](const char* key) {
    const auto& v = detail::field(j, key, "directions");
    if (!v.is_array() || v.size() != 3) throw InputError(std::string("direction \"") + key + "\" needs 3 components");
    return Vec3(detail::number(v[0], "component"), detail::number(v[1], "component"), detail::number(v[2], "component"));
  };
  SpinDirections d{vec("a"), vec("a'"), vec("b"), vec("b'")};
  try {
    d.validate(1e-9);
  } catch (const InvalidArgument& e) {
    throw InputError(e.what());
  }
  return d;
}

struct StateSpec {
  std::optional<Eigen::VectorXcd> vector;
  ComplexMatrix density;
};

inline StateSpec state_from_json(const Json& j) {
  StateSpec s;
  if (j.contains("state")) {
    const auto& v = j.at("state");
    if (!v.is_array() || v.size() != 4) throw InputError("\"state\" needs 4 amplitudes");
    Eigen::VectorXcd psi(4);
    for (int k = 0; k < 4; ++k) psi(k) = detail::complex_entry(v[static_cast<std::size_t>(k)]);
    if (std::abs(psi.norm() - 1.0) > 1e-9) throw InputError("\"state\" must be normalised");
    s.vector = psi;
    s.density = psi * psi.adjoint();
    return s;
  }
  s.density = matrix_from_json(detail::field(j, "density", "state"), 4);
  return s;
}

}  // namespace qmt::io
