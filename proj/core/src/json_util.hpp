#pragma once

// Private helpers shared by the serializers; not installed.

#include <string>

#include <Eigen/Dense>

#include "json.hpp"
#include "specdec/error.hpp"
#include "specdec/spectral.hpp"

namespace specdec::detail {

using json = nlohmann::json;

inline json to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline json to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

inline Eigen::VectorXd vector_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ParameterError(std::string(what) + ": expected numeric array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ParameterError(std::string(what) + ": expected nested array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ParameterError(std::string(what) + ": ragged matrix");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

inline json to_json(const ShrinkageSpec& s) {
    json out{{"kind", std::string(to_string(s.kind))}};
    if (s.kind == ShrinkageKind::pinsker) {
        out["alpha"] = s.alpha;
        out["mu"] = s.mu;
    }
    return out;
}

inline ShrinkageSpec shrinkage_from_json(const json& j) {
    ShrinkageSpec s;
    if (j.is_string()) {
        s.kind = parse_shrinkage_kind(j.get<std::string>());
        return s;
    }
    s.kind = parse_shrinkage_kind(j.at("kind").get<std::string>());
    s.alpha = j.value("alpha", s.alpha);
    s.mu = j.value("mu", s.mu);
    return s;
}

}  // namespace specdec::detail
