#pragma once

#include "json.hpp"  // vendored nlohmann/json single header

#include "kzlab/linalg.hpp"

namespace kzlab {

using Json = nlohmann::json;

/// Complex matrices serialize as an array of rows, each entry a [re, im] pair.
inline Json cmat_to_json(const CMat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(row);
    }
    return rows;
}

inline CMat cmat_from_json(const Json& j) {
    if (!j.is_array()) throw StructureError("matrix json: expected array of rows");
    const auto nrows = static_cast<Eigen::Index>(j.size());
    Eigen::Index ncols = 0;
    if (nrows > 0) ncols = static_cast<Eigen::Index>(j.at(0).size());
    CMat m(nrows, ncols);
    for (Eigen::Index i = 0; i < nrows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != ncols)
            throw StructureError("matrix json: ragged rows");
        for (Eigen::Index c = 0; c < ncols; ++c) {
            const auto& e = row.at(static_cast<std::size_t>(c));
            if (e.is_array()) {
                if (e.size() != 2) throw StructureError("matrix json: entry is not [re, im]");
                m(i, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
            } else {
                m(i, c) = Complex(e.get<double>(), 0.0);
            }
        }
    }
    return m;
}

inline Json rmat_to_json(const RMat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline RMat rmat_from_json(const Json& j) {
    const CMat c = cmat_from_json(j);
    return c.real();
}

}  // namespace kzlab
