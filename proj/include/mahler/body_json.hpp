#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "body.hpp"
#include "bound2d.hpp"

namespace mahler {

using Json = nlohmann::ordered_json;

// A parsed body file: three-dimensional body or planar polygon.
struct BodyFile {
    int dim = 3;
    std::optional<ConvexBody3> body;
    std::optional<Polygon2> polygon;
};

namespace detail {

inline const Json& field(const Json& j, const char* key)
{
    if (!j.contains(key))
        throw Error(ErrorKind::ParseError, std::string("missing field '") + key + "'");
    return j.at(key);
}

inline double number(const Json& j)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "infinity")
            return std::numeric_limits<double>::infinity();
        throw Error(ErrorKind::ParseError, "expected a number, got '" + s + "'");
    }
    if (!j.is_number())
        throw Error(ErrorKind::ParseError, "expected a number");
    return j.get<double>();
}

inline Vec3 vec3(const Json& j)
{
    if (!j.is_array() || j.size() != 3)
        throw Error(ErrorKind::ParseError, "expected a 3-vector");
    return {number(j[0]), number(j[1]), number(j[2])};
}

inline Vec2 vec2(const Json& j)
{
    if (!j.is_array() || j.size() != 2)
        throw Error(ErrorKind::ParseError, "expected a 2-vector");
    return {number(j[0]), number(j[1])};
}

inline Mat3 mat3(const Json& j)
{
    if (!j.is_array() || j.size() != 3)
        throw Error(ErrorKind::ParseError, "expected a 3x3 matrix");
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        m.row(i) = vec3(j[i]).transpose();
    return m;
}

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
inline Json to_json(const Vec2& v) { return Json::array({v.x(), v.y()}); }

inline Json to_json(const Mat3& m)
{
    Json j = Json::array();
    for (int i = 0; i < 3; ++i)
        j.push_back(to_json(Vec3(m.row(i).transpose())));
    return j;
}

inline ConvexBody3 parse_body3(const Json& j)
{
    if (!j.is_object())
        throw Error(ErrorKind::ParseError, "body must be a JSON object");
    const std::string type = field(j, "type").get<std::string>();
    const std::string label = j.value("label", type);
    if (type == "polytope") {
        std::vector<Vec3> v;
        for (const auto& p : field(j, "vertices"))
            v.push_back(vec3(p));
        return make_polytope(v, label);
    }
    if (type == "lp") {
        const Vec3 axes = j.contains("axes") ? vec3(j.at("axes")) : Vec3::Ones();
        return make_lp_ball(number(field(j, "p")), axes, label);
    }
    if (type == "ellipsoid") {
        if (j.contains("axes")) {
            const Vec3 a = vec3(j.at("axes"));
            const Mat3 m = a.array().square().inverse().matrix().asDiagonal();
            return make_ellipsoid(m, label);
        }
        return make_ellipsoid(mat3(field(j, "matrix")), label);
    }
    if (type == "lpnorm") {
        const auto& rows = field(j, "rows");
        if (!rows.is_array() || rows.empty())
            throw Error(ErrorKind::ParseError, "'rows' must be a non-empty array");
        RowMatrix w(static_cast<Eigen::Index>(rows.size()), 3);
        for (std::size_t i = 0; i < rows.size(); ++i)
            w.row(static_cast<Eigen::Index>(i)) = vec3(rows[i]).transpose();
        return make_norm_ball(w, number(field(j, "p")), label);
    }
    if (type == "radial") {
        std::vector<double> rho;
        for (const auto& r : field(j, "rho"))
            rho.push_back(number(r));
        return make_radial_field(field(j, "n_alpha").get<int>(), field(j, "n_beta").get<int>(), std::move(rho),
                                 label);
    }
    if (type == "transformed") {
        const ConvexBody3 base = parse_body3(field(j, "base"));
        ConvexBody3 out = apply_linear(base, LinearMap3(mat3(field(j, "matrix"))));
        return ConvexBody3(out.rep(), label);
    }
    if (type == "polar") {
        const ConvexBody3 p = polar(parse_body3(field(j, "base")));
        return ConvexBody3(p.rep(), label);
    }
    throw Error(ErrorKind::ParseError, "unknown body type '" + type + "'");
}

} // namespace detail

inline BodyFile parse_body(const Json& j)
{
    try {
        BodyFile f;
        f.dim = j.is_object() ? j.value("dim", 3) : 3;
        if (f.dim == 2) {
            if (detail::field(j, "type").get<std::string>() != "polytope")
                throw Error(ErrorKind::ParseError, "planar bodies must be polytopes");
            std::vector<Vec2> v;
            for (const auto& p : detail::field(j, "vertices"))
                v.push_back(detail::vec2(p));
            f.polygon = make_polygon2(v);
        } else if (f.dim == 3) {
            f.body = detail::parse_body3(j);
        } else {
            throw Error(ErrorKind::ParseError, "dim must be 2 or 3");
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
}

inline std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline BodyFile parse_body_text(const std::string& text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    return parse_body(j);
}

inline BodyFile parse_body_file(const std::string& path) { return parse_body_text(read_text_file(path)); }

inline Json body_to_json(const ConvexBody3& k)
{
    struct V {
        const ConvexBody3& k;
        Json operator()(const Polytope& p) const
        {
            Json v = Json::array();
            for (const auto& x : p.vertices())
                v.push_back(detail::to_json(x));
            return {{"type", "polytope"}, {"dim", 3}, {"vertices", v}};
        }
        Json operator()(const LpBall& b) const
        {
            return {{"type", "lp"}, {"p", b.p}, {"axes", detail::to_json(b.axes)}};
        }
        Json operator()(const Ellipsoid& e) const { return {{"type", "ellipsoid"}, {"matrix", detail::to_json(e.m)}}; }
        Json operator()(const NormBall& n) const
        {
            Json rows = Json::array();
            for (Eigen::Index i = 0; i < n.w.rows(); ++i)
                rows.push_back(detail::to_json(Vec3(n.w.row(i).transpose())));
            return {{"type", "lpnorm"}, {"p", n.p}, {"rows", rows}};
        }
        Json operator()(const RadialField& r) const
        {
            return {{"type", "radial"}, {"n_alpha", r.n_alpha}, {"n_beta", r.n_beta}, {"rho", r.rho}};
        }
        Json operator()(const Transformed& t) const
        {
            return {{"type", "transformed"}, {"matrix", detail::to_json(t.map.matrix())}, {"base", body_to_json(*t.base)}};
        }
        Json operator()(const PolarOf& p) const { return {{"type", "polar"}, {"base", body_to_json(*p.base)}}; }
    };
    Json j = std::visit(V{k}, k.rep());
    j["label"] = k.label();
    return j;
}

inline Json polygon_to_json(const Polygon2& p)
{
    Json v = Json::array();
    for (const auto& x : p.vertices)
        v.push_back(detail::to_json(x));
    return {{"type", "polytope"}, {"dim", 2}, {"vertices", v}};
}

} // namespace mahler
