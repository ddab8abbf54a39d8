#pragma once

#include "fields.hpp"
#include "measures.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace bdforge {

using Json = nlohmann::ordered_json;

struct FormatError : FieldError {
    using FieldError::FieldError;
};

// ---- deterministic writer ----------------------------------------------------

namespace detail {

inline void write_json(std::ostream& os, const Json& j, int indent, int depth)
{
    auto pad = [&](int d) {
        if (indent > 0) {
            os << '\n';
            for (int i = 0; i < d * indent; ++i)
                os << ' ';
        }
    };
    // Arrays of scalars stay on one line; so does everything below depth 3.
    auto flat = [&](const Json& v) {
        if (depth >= 3)
            return true;
        for (const auto& e : v)
            if (e.is_structured())
                return false;
        return true;
    };
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first)
                os << ',';
            first = false;
            pad(depth + 1);
            os << Json(it.key()).dump() << (indent > 0 ? ": " : ":");
            write_json(os, it.value(), indent, depth + 1);
        }
        pad(depth);
        os << '}';
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        bool one_line = flat(j);
        os << '[';
        bool first = true;
        for (const auto& e : j) {
            if (!first)
                os << ',';
            first = false;
            if (!one_line)
                pad(depth + 1);
            write_json(os, e, one_line ? 0 : indent, depth + 1);
        }
        if (!one_line)
            pad(depth);
        os << ']';
        return;
    }
    case Json::value_t::number_float: {
        double v = j.get<double>();
        if (!std::isfinite(v))
            os << "null";
        else
            os << fmt17(v);
        return;
    }
    default:
        os << j.dump();
    }
}

} // namespace detail

// Canonical text: 1-space indentation, doubles as %.17g, keys in insertion order.
inline std::string dump_json(const Json& j)
{
    std::ostringstream os;
    detail::write_json(os, j, 1, 0);
    os << '\n';
    return os.str();
}

// ---- field documents ---------------------------------------------------------

inline Json rect_json(const Rect& r)
{
    Json j;
    j["x"] = {to_string(r.x0), to_string(r.x1)};
    j["y"] = {to_string(r.y0), to_string(r.y1)};
    return j;
}

inline Json to_json(const NormIntegral& n) { return Json{{"value", n.value}, {"err", n.abs_error_bound}}; }

inline Json to_json(const PAField& f)
{
    Json j;
    j["kind"] = "PAField";
    j["domain"] = rect_json(f.domain);
    Json cells = Json::array();
    for (const auto& c : f.cells) {
        Json cj;
        cj["rect"] = rect_json(c.r);
        cj["A"] = Json::array({Json::array({to_string(c.f.A(0, 0)), to_string(c.f.A(0, 1))}),
                              Json::array({to_string(c.f.A(1, 0)), to_string(c.f.A(1, 1))})});
        cj["b"] = {to_string(c.f.b.x), to_string(c.f.b.y)};
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    return j;
}

// Coefficient grid g[i][j] of x^i y^j, square and at least 3x3.
inline Json poly_json(const Poly2& p)
{
    int d = std::max({p.dx, p.dy, 2});
    Json g = Json::array();
    for (int i = 0; i <= d; ++i) {
        Json row = Json::array();
        for (int k = 0; k <= d; ++k)
            row.push_back(to_string(p.get(i, k)));
        g.push_back(std::move(row));
    }
    return g;
}

inline Json to_json(const PPField& f)
{
    Json j;
    j["kind"] = "PPField";
    j["ncomp"] = f.ncomp;
    j["domain"] = rect_json(f.domain);
    Json cells = Json::array();
    for (const auto& c : f.cells) {
        Json cj;
        cj["rect"] = rect_json(c.r);
        Json co = Json::array();
        for (const auto& p : c.comp)
            co.push_back(poly_json(p));
        cj["coeffs"] = std::move(co);
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    return j;
}

namespace detail {

inline std::string where(long cell) { return cell < 0 ? std::string("domain") : "cell " + std::to_string(cell); }

inline Rat rat_at(const Json& v, long cell)
{
    if (!v.is_string())
        throw FormatError(where(cell) + ": expected a \"p/q\" string, got " + v.dump());
    try {
        return parse_rat(v.get<std::string>());
    } catch (const std::exception& e) {
        throw FormatError(where(cell) + ": " + e.what());
    }
}

inline Rect rect_from(const Json& j, long cell)
{
    if (!j.is_object() || !j.contains("x") || !j.contains("y") || !j["x"].is_array() || !j["y"].is_array() ||
        j["x"].size() != 2 || j["y"].size() != 2)
        throw FormatError(where(cell) + ": rect must be {\"x\":[lo,hi],\"y\":[lo,hi]}");
    Rect r(rat_at(j["x"][0], cell), rat_at(j["x"][1], cell), rat_at(j["y"][0], cell), rat_at(j["y"][1], cell));
    if (!r.valid())
        throw FormatError(where(cell) + ": degenerate rectangle");
    return r;
}

inline const Json& member(const Json& j, const char* key, long cell)
{
    if (!j.is_object() || !j.contains(key))
        throw FormatError(where(cell) + ": missing \"" + key + "\"");
    return j[key];
}

} // namespace detail

inline std::string field_kind(const Json& j)
{
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw FormatError("document has no \"kind\"");
    return j["kind"].get<std::string>();
}

inline PAField pa_from_json(const Json& j)
{
    if (field_kind(j) != "PAField")
        throw FormatError("expected kind PAField, got " + field_kind(j));
    PAField f;
    f.domain = detail::rect_from(detail::member(j, "domain", -1), -1);
    const Json& cells = detail::member(j, "cells", -1);
    if (!cells.is_array())
        throw FormatError("\"cells\" must be an array");
    f.cells.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        long id = static_cast<long>(i);
        const Json& c = cells[i];
        PACell cell;
        cell.r = detail::rect_from(detail::member(c, "rect", id), id);
        const Json& A = detail::member(c, "A", id);
        const Json& b = detail::member(c, "b", id);
        if (!A.is_array() || A.size() != 2 || !A[0].is_array() || A[0].size() != 2 || !A[1].is_array() || A[1].size() != 2)
            throw FormatError(detail::where(id) + ": \"A\" must be a 2x2 array");
        if (!b.is_array() || b.size() != 2)
            throw FormatError(detail::where(id) + ": \"b\" must have 2 entries");
        for (int r = 0; r < 2; ++r)
            for (int k = 0; k < 2; ++k)
                cell.f.A(r, k) = detail::rat_at(A[r][k], id);
        cell.f.b = {detail::rat_at(b[0], id), detail::rat_at(b[1], id)};
        f.cells.push_back(std::move(cell));
    }
    if (auto err = partition_error(f))
        throw FormatError("invalid partition: " + *err);
    return f;
}

inline PPField pp_from_json(const Json& j)
{
    if (field_kind(j) != "PPField")
        throw FormatError("expected kind PPField, got " + field_kind(j));
    PPField f;
    f.domain = detail::rect_from(detail::member(j, "domain", -1), -1);
    const Json& nc = detail::member(j, "ncomp", -1);
    if (!nc.is_number_integer() || nc.get<int>() < 1)
        throw FormatError("\"ncomp\" must be a positive integer");
    f.ncomp = nc.get<int>();
    const Json& cells = detail::member(j, "cells", -1);
    if (!cells.is_array())
        throw FormatError("\"cells\" must be an array");
    f.cells.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        long id = static_cast<long>(i);
        const Json& c = cells[i];
        PPCell cell;
        cell.r = detail::rect_from(detail::member(c, "rect", id), id);
        const Json& co = detail::member(c, "coeffs", id);
        if (!co.is_array() || static_cast<int>(co.size()) != f.ncomp)
            throw FormatError(detail::where(id) + ": \"coeffs\" must hold ncomp grids");
        for (const auto& g : co) {
            if (!g.is_array() || g.size() < 3)
                throw FormatError(detail::where(id) + ": coefficient grid must be square, at least 3x3");
            int d = static_cast<int>(g.size()) - 1;
            Poly2 p(d, d);
            for (int a = 0; a <= d; ++a) {
                if (!g[a].is_array() || static_cast<int>(g[a].size()) != d + 1)
                    throw FormatError(detail::where(id) + ": coefficient grid must be square, at least 3x3");
                for (int b = 0; b <= d; ++b)
                    p.at(a, b) = detail::rat_at(g[a][b], id);
            }
            p.trim();
            cell.comp.push_back(std::move(p));
        }
        f.cells.push_back(std::move(cell));
    }
    if (auto err = partition_error(f))
        throw FormatError("invalid partition: " + *err);
    return f;
}

inline Json parse_json_text(const std::string& text)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw FormatError(std::string("malformed JSON: ") + e.what());
    }
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + path);
}

inline Json to_json(const StrainReport& r)
{
    Json j;
    j["cells"] = r.cells;
    j["jumps"] = r.jumps;
    j["bulk_grad_l1"] = to_json(r.bulk_grad_l1);
    j["bulk_strain_l1"] = to_json(r.bulk_strain_l1);
    j["axis_grad_l1"] = to_json(r.axis_grad_l1);
    j["skew_exact"] = r.skew_exact;
    j["jump_length"] = to_string(r.jump_length);
    j["jump_du"] = to_json(r.jump_du);
    j["jump_eu"] = to_json(r.jump_eu);
    j["du_total"] = to_json(r.du_total);
    j["eu_total"] = to_json(r.eu_total);
    j["sup_norm"] = to_json(r.sup_norm);
    return j;
}

} // namespace bdforge
