#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gridid/common.hpp"

namespace gridid::detail {

using json = nlohmann::json;

inline json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx from_cjson(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InvalidInput(where + ": complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(what + ": " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path);
    out << text;
    if (!out) throw InvalidInput("write failed: " + path);
}

// Matrix as flat row-major list of [re, im] pairs.
inline json cmatrix_json(const CMatrix& m) {
    json a = json::array();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) a.push_back(cjson(m(i, j)));
    return a;
}

// Accepts a flat row-major list or a list of rows.
inline CMatrix cmatrix_from_json(const json& j, Index n, const std::string& where) {
    if (!j.is_array()) throw InvalidInput(where + ": expected an array");
    CMatrix m(n, n);
    if (static_cast<Index>(j.size()) == n * n && (n == 0 || j[0].size() == 2) &&
        (n == 0 || j[0][0].is_number())) {
        for (Index i = 0; i < n; ++i)
            for (Index k = 0; k < n; ++k)
                m(i, k) = from_cjson(j[static_cast<size_t>(i * n + k)], where);
        return m;
    }
    if (static_cast<Index>(j.size()) != n) throw InvalidInput(where + ": wrong matrix size");
    for (Index i = 0; i < n; ++i) {
        const auto& row = j[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != n)
            throw InvalidInput(where + ": wrong matrix size");
        for (Index k = 0; k < n; ++k) m(i, k) = from_cjson(row[static_cast<size_t>(k)], where);
    }
    return m;
}

}  // namespace gridid::detail

namespace gridid::netmodel {
class AdmittanceMatrix;
}

namespace gridid::detail {
// Defined in netmodel.cpp.
json ybus_json(const netmodel::AdmittanceMatrix& y, const std::vector<Index>* trusted);
netmodel::AdmittanceMatrix ybus_from(const json& j, std::vector<Index>* trusted);
}  // namespace gridid::detail
