#pragma once

#include <fstream>
#include <json.hpp>
#include <string>

#include "model.hpp"

namespace qbh {

using json = nlohmann::json;

namespace detail {

inline CMat read_matrix(const json& rec, int d) {
  CMat M = CMat::Zero(d, d);
  for (const char* part : {"re", "im"}) {
    if (!rec.contains(part)) continue;
    const auto& rows = rec.at(part);
    if (!rows.is_array() || static_cast<int>(rows.size()) != d)
      throw ConfigError(std::string("field '") + part + "' must be a d x d array");
    for (int i = 0; i < d; ++i) {
      if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != d)
        throw ConfigError(std::string("field '") + part + "' must be a d x d array");
      for (int j = 0; j < d; ++j) {
        double v = rows[i][j].get<double>();
        M(i, j) += part[0] == 'r' ? cplx(v, 0.0) : cplx(0.0, v);
      }
    }
  }
  return M;
}

inline json write_matrix_part(const CMat& M, bool imag) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(imag ? M(i, j).imag() : M(i, j).real());
    rows.push_back(row);
  }
  return rows;
}

inline void read_couplings(QBHSpec& spec, const json& arr, bool hopping) {
  if (!arr.is_array()) throw ConfigError(std::string(hopping ? "hopping" : "pairing") + " must be an array");
  std::map<Offset, CMat> given;
  for (const auto& rec : arr) {
    if (!rec.contains("offset")) throw ConfigError("coupling record without 'offset'");
    Offset r = rec.at("offset").get<Offset>();
    CMat M = read_matrix(rec, spec.d());
    if (given.count(r)) throw ConfigError("duplicate offset in coupling list");
    given[r] = M;
  }
  for (const auto& [r, M] : given) {
    auto it = given.find(negate(r));
    if (it != given.end() && !is_zero_offset(r)) {
      CMat partner = hopping ? CMat(it->second.adjoint()) : CMat(it->second.transpose());
      if ((partner - M).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
        throw ConfigError(hopping ? "inconsistent hopping: K_{-r} != K_r^dag" : "inconsistent pairing: Delta_{-r} != Delta_r^T");
    }
    if (hopping)
      spec.set_hopping(r, M);
    else
      spec.set_pairing(r, M);
  }
}

}  // namespace detail

// Either {"model": name, "params": {...}} or explicit {"D","d","R","hopping","pairing"}.
inline QBHSpec spec_from_json(const json& j) {
  try {
    if (j.contains("model")) {
      ModelParams p = default_params(j.at("model").get<std::string>());
      if (j.contains("params")) {
        for (const auto& [name, v] : j.at("params").items()) set_param(p, name, v.get<double>());
      }
      return build_model(p);
    }
    QBHSpec spec(j.at("D").get<int>(), j.at("d").get<int>(), j.at("R").get<int>());
    if (j.contains("hopping")) detail::read_couplings(spec, j.at("hopping"), true);
    if (j.contains("pairing")) detail::read_couplings(spec, j.at("pairing"), false);
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model document: ") + e.what());
  }
}

inline json spec_to_json(const QBHSpec& spec) {
  json j;
  j["D"] = spec.D();
  j["d"] = spec.d();
  j["R"] = spec.R();
  for (const auto& [key, half] : {std::pair{"hopping", &spec.hopping_half()}, std::pair{"pairing", &spec.pairing_half()}}) {
    json arr = json::array();
    for (const auto& [r, M] : *half) {
      arr.push_back({{"offset", r}, {"re", detail::write_matrix_part(M, false)}, {"im", detail::write_matrix_part(M, true)}});
    }
    j[key] = arr;
  }
  return j;
}

inline QBHSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse model file '" + path + "': " + e.what());
  }
  return spec_from_json(j);
}

inline json params_to_json(const ModelParams& p) {
  json j;
  j["model"] = model_name(p);
  json ps = json::object();
  for (const auto& n : param_names(p)) ps[n] = get_param(p, n);
  j["params"] = ps;
  return j;
}

}  // namespace qbh
