#pragma once

// JSON records for hybrid numbers, JSON-lines data files and atomic writes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"

#include "hrfna/hybrid.hpp"
#include "hrfna/number_text.hpp"

namespace hrfna {

using Json = nlohmann::json;

/// {"residues": [decimal strings], "exponent": f, "bound": decimal string}
inline Json to_json(const HybridNumber& x) {
    Json residues = Json::array();
    for (const auto r : x.residues().residues()) residues.push_back(std::to_string(r));
    return Json{{"residues", std::move(residues)}, {"exponent", x.exponent()}, {"bound", x.bound().str()}};
}

/// Inverse of to_json. Checks channel count, residue ranges and that the
/// bound really covers the encoded integer. `line` tags parse errors.
inline HybridNumber hybrid_from_json(const Json& j, const ModulusSetPtr& ms, std::size_t line = 0) {
    try {
        if (!j.is_object() || !j.contains("residues") || !j.contains("exponent") || !j.contains("bound"))
            throw ParseError(line, "record needs residues, exponent and bound");
        const Json& rs = j.at("residues");
        if (!rs.is_array()) throw ParseError(line, "residues must be an array");
        ResidueVector::Storage store;
        for (const auto& r : rs) {
            const BigInt v = parse_bigint(r.is_string() ? r.get<std::string>() : r.dump());
            if (v < 0 || bit_length(v) > 32) throw ParseError(line, "residue out of range");
            store.push_back(v.convert_to<std::uint32_t>());
        }
        ResidueVector rv(ms, std::move(store));
        const Json& e = j.at("exponent");
        if (!e.is_number_integer()) throw ParseError(line, "exponent must be an integer");
        const Json& b = j.at("bound");
        BigInt bound = parse_bigint(b.is_string() ? b.get<std::string>() : b.dump());
        if (boost::multiprecision::abs(crt_reconstruct(rv)) > bound)
            throw ParseError(line, "bound is smaller than the encoded magnitude");
        return HybridNumber(std::move(rv), e.get<std::int64_t>(), std::move(bound));
    } catch (const ParseError&) {
        throw;
    } catch (const Error& err) {
        throw ParseError(line, err.what());
    } catch (const Json::exception& err) {
        throw ParseError(line, err.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Non-blank lines of a JSON-lines document, parsed, with 1-based line numbers.
struct JsonLine {
    std::size_t line;
    Json value;
};

inline std::vector<JsonLine> parse_jsonl(const std::string& text) {
    std::vector<JsonLine> out;
    std::istringstream in(text);
    std::string s;
    std::size_t n = 0;
    while (std::getline(in, s)) {
        ++n;
        if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back({n, Json::parse(s)});
        } catch (const Json::exception& e) {
            throw ParseError(n, e.what());
        }
    }
    return out;
}

/// The exact number carried by a {"v": "..."} record.
inline Ratio value_record(const JsonLine& rec) {
    if (!rec.value.is_object() || !rec.value.contains("v")) throw ParseError(rec.line, "expected {\"v\": ...}");
    const Json& v = rec.value.at("v");
    try {
        return parse_number(v.is_string() ? v.get<std::string>() : v.dump());
    } catch (const Error& e) {
        throw ParseError(rec.line, e.what());
    }
}

struct MatrixText {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Ratio> values;  // row-major
};

/// Header {"rows": n, "cols": m} followed by n*m value records.
inline MatrixText parse_matrix_jsonl(const std::string& text) {
    const auto lines = parse_jsonl(text);
    if (lines.empty()) throw ParseError(0, "empty matrix file");
    const Json& h = lines.front().value;
    if (!h.is_object() || !h.contains("rows") || !h.contains("cols") || !h.at("rows").is_number_unsigned() ||
        !h.at("cols").is_number_unsigned())
        throw ParseError(lines.front().line, "expected header {\"rows\": n, \"cols\": m}");
    MatrixText m;
    m.rows = h.at("rows").get<std::size_t>();
    m.cols = h.at("cols").get<std::size_t>();
    if (lines.size() - 1 != m.rows * m.cols)
        throw ParseError(lines.back().line, "matrix has " + std::to_string(lines.size() - 1) + " values, expected " +
                                                std::to_string(m.rows * m.cols));
    for (std::size_t i = 1; i < lines.size(); ++i) m.values.push_back(value_record(lines[i]));
    return m;
}

inline std::vector<Ratio> parse_vector_jsonl(const std::string& text) {
    std::vector<Ratio> out;
    for (const auto& rec : parse_jsonl(text)) out.push_back(value_record(rec));
    return out;
}

/// Writes via a temporary file in the same directory and renames it into place.
inline void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot move report into '" + path + "'");
    }
}

}  // namespace hrfna
