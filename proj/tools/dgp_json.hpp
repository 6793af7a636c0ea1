#pragma once

// JSON description of a data-generating process for `robvar simulate`.
//
//   {"variant": "var_t", "lags": [B_1, ...], "noise": {...}}
//   {"variant": "arch_var", "B": M, "f": [..], "F": [M, ...], "noise": {...}}
//   {"variant": "univariate_arch", "b": [..], "d0": x, "d": [..], "noise": {...}}
//   {"variant": "bekk_var", "B": M, "C": M, "F": M, "noise": {...}}
//   {"variant": "threshold_var", "B": [M, ...], "partition": {...}, "noise": {...}}
//   {"variant": "rc_var", "B": M, "gamma_sd": x, "noise": {...}}
//
// Matrices are arrays of rows. Noise is {"kind": "student_t", "df": x},
// {"kind": "gaussian", "sd": x} or {"kind": "mixture", "components": [[w, sd], ...]}.
// Partitions are {"kind": "sign", "coord": i} or
// {"kind": "boxes", "cuts": [{"coord": i, "at": [..]}, ...]}.

#include <set>
#include <string>
#include <vector>

#include "robvar/robvar.hpp"

namespace robvar::cli {

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw SpecError(what + " must be a nonempty array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw SpecError(what + " rows differ in length");
    for (Index k = 0; k < cols; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

inline json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw SpecError(what + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

inline std::vector<Matrix> matrices_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw SpecError(what + " must be a nonempty array of matrices");
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(matrix_from_json(j[k], what + "[" + std::to_string(k) + "]"));
  return out;
}

inline NoiseSpec noise_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "student_t") return StudentT{j.at("df").get<double>()};
  if (kind == "gaussian") return Gaussian{j.value("sd", 1.0)};
  if (kind == "mixture") {
    ScaleMixture m;
    for (const auto& c : j.at("components")) m.components.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    return m;
  }
  throw SpecError("noise.kind must be student_t, gaussian or mixture");
}

inline Partition partition_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sign") return Partition::sign_of(j.at("coord").get<Index>());
  if (kind == "boxes") {
    std::vector<std::pair<Index, std::vector<double>>> cuts;
    for (const auto& c : j.at("cuts")) cuts.emplace_back(c.at("coord").get<Index>(), c.at("at").get<std::vector<double>>());
    return Partition::boxes(std::move(cuts));
  }
  throw SpecError("partition.kind must be sign or boxes");
}

inline void check_keys(const json& j, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw SpecError("unknown dgp key '" + key + "'");
}

/// Accepts a DGP document or a provenance document of a simulate run.
inline DgpSpec dgp_from_json(const json& doc) {
  const json& j = doc.contains("provenance_version") ? doc.at("spec").at("dgp") : doc;
  if (!j.is_object()) throw SpecError("dgp must be a JSON object");
  try {
    const std::string variant = j.at("variant").get<std::string>();
    const NoiseSpec noise = j.contains("noise") ? noise_from_json(j.at("noise")) : NoiseSpec{};
    if (variant == "var_t") {
      check_keys(j, {"variant", "noise", "lags", "B"});
      if (j.contains("lags")) return VarT(VarModel(matrices_from_json(j.at("lags"), "lags")), noise);
      return VarT(VarModel(matrix_from_json(j.at("B"), "B")), noise);
    }
    if (variant == "arch_var") {
      check_keys(j, {"variant", "noise", "B", "f", "F"});
      return ArchVar(matrix_from_json(j.at("B"), "B"), vector_from_json(j.at("f"), "f"),
                     matrices_from_json(j.at("F"), "F"), noise);
    }
    if (variant == "univariate_arch") {
      check_keys(j, {"variant", "noise", "b", "d0", "d"});
      return UnivariateArch(vector_from_json(j.at("b"), "b"), j.at("d0").get<double>(),
                            vector_from_json(j.at("d"), "d"), j.contains("noise") ? noise : NoiseSpec(Gaussian{1.0}));
    }
    if (variant == "bekk_var") {
      check_keys(j, {"variant", "noise", "B", "C", "F"});
      return BekkVar(matrix_from_json(j.at("B"), "B"), matrix_from_json(j.at("C"), "C"),
                     matrix_from_json(j.at("F"), "F"), noise);
    }
    if (variant == "threshold_var") {
      check_keys(j, {"variant", "noise", "B", "partition"});
      return ThresholdVar(matrices_from_json(j.at("B"), "B"), partition_from_json(j.at("partition")), noise);
    }
    if (variant == "rc_var") {
      check_keys(j, {"variant", "noise", "B", "gamma_sd"});
      return RcVar(matrix_from_json(j.at("B"), "B"), j.at("gamma_sd").get<double>(), noise);
    }
    throw SpecError("unknown dgp variant '" + variant + "'");
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed dgp spec: ") + e.what());
  } catch (const DomainError& e) {
    throw SpecError(std::string("invalid dgp spec: ") + e.what());
  } catch (const ShapeError& e) {
    throw SpecError(std::string("invalid dgp spec: ") + e.what());
  }
}

}  // namespace robvar::cli
