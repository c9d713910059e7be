#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "dual.hpp"
#include "equilibrium.hpp"
#include "multiclass.hpp"
#include "policies.hpp"
#include "reward.hpp"
#include "simulator.hpp"

namespace reprice {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Parse text, reporting line and column on syntax errors.
inline json parse_json_text(const std::string& text, const std::string& origin = "config") {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        size_t line = 1, col = 1;
        for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        auto pos = what.find("parse error");
        throw invalid_input(origin + ": syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                            ": " + (pos == std::string::npos ? what : what.substr(pos)));
    }
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    require(bool(in), "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

namespace cfg {

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string join(const std::string& path, size_t i) { return path + "[" + std::to_string(i) + "]"; }

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
    throw invalid_input("config field '" + path + "': " + msg);
}

inline const json& at(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(join(path, key), "missing");
    return *it;
}

inline bool has(const json& j, const std::string& key) { return j.is_object() && j.contains(key); }

inline double num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
}
inline double num(const json& j, const std::string& key, const std::string& path) { return num(at(j, key, path), join(path, key)); }
inline double num_or(const json& j, const std::string& key, const std::string& path, double dflt) {
    return has(j, key) ? num(j, key, path) : dflt;
}

inline long long integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<long long>();
}
inline long long integer(const json& j, const std::string& key, const std::string& path) {
    return integer(at(j, key, path), join(path, key));
}
inline long long integer_or(const json& j, const std::string& key, const std::string& path, long long dflt) {
    return has(j, key) ? integer(j, key, path) : dflt;
}

inline std::string str(const json& j, const std::string& key, const std::string& path) {
    const json& v = at(j, key, path);
    if (!v.is_string()) fail(join(path, key), "expected a string");
    return v.get<std::string>();
}
inline std::string str_or(const json& j, const std::string& key, const std::string& path, const std::string& dflt) {
    return has(j, key) ? str(j, key, path) : dflt;
}

inline std::vector<double> nums(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (size_t i = 0; i < j.size(); ++i) out.push_back(num(j[i], join(path, i)));
    return out;
}
inline std::vector<double> nums(const json& j, const std::string& key, const std::string& path) {
    return nums(at(j, key, path), join(path, key));
}

// rethrow a validation error from a constructor with the field path attached
template <class F>
auto with_path(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const invalid_input& e) {
        std::string w = e.what();
        if (w.rfind("config field", 0) == 0) throw;
        fail(path, w);
    }
}

} // namespace cfg

// ------------------------------------------------------------------------------------------------

inline WtpDistribution parse_wtp(const json& j, const std::string& path) {
    if (cfg::has(j, "uniform")) {
        auto lh = cfg::nums(j, "uniform", path);
        if (lh.size() != 2) cfg::fail(cfg::join(path, "uniform"), "expected [lo, hi]");
        return cfg::with_path(cfg::join(path, "uniform"), [&] { return WtpDistribution::uniform(lh[0], lh[1]); });
    }
    auto v = cfg::nums(j, "values", path);
    auto p = cfg::nums(j, "probs", path);
    if (v.size() != p.size()) cfg::fail(cfg::join(path, "probs"), "length differs from values");
    return cfg::with_path(cfg::join(path, "probs"), [&] { return WtpDistribution::discrete(v, p); });
}

/// {"type": "min_affine", "pieces": [[a, b], ...]}     g = min_k a_k + b_k x
/// {"type": "quadratic", "b1": 2, "b2": -1}
/// {"type": "tabulated", "points": [[0, 0], ..., [1, y]]}
/// {"type": "revenue_wtp" | "welfare_wtp", "values": [...], "probs": [...]} or {"uniform": [lo, hi]}
inline RewardFunction parse_reward(const json& j, const std::string& path) {
    std::string type = cfg::str(j, "type", path);
    if (type == "min_affine") {
        const json& arr = cfg::at(j, "pieces", path);
        std::string pp = cfg::join(path, "pieces");
        if (!arr.is_array() || arr.empty()) cfg::fail(pp, "expected a nonempty array");
        std::vector<AffinePiece> pieces;
        for (size_t i = 0; i < arr.size(); ++i) {
            std::string ip = cfg::join(pp, i);
            if (arr[i].is_array()) {
                auto ab = cfg::nums(arr[i], ip);
                if (ab.size() != 2) cfg::fail(ip, "expected [a, b]");
                pieces.push_back({ab[0], ab[1]});
            } else {
                pieces.push_back({cfg::num(arr[i], "a", ip), cfg::num(arr[i], "b", ip)});
            }
        }
        return cfg::with_path(pp, [&] { return RewardFunction::min_affine(pieces); });
    }
    if (type == "quadratic") {
        double b1 = cfg::num(j, "b1", path), b2 = cfg::num(j, "b2", path);
        return cfg::with_path(path, [&] { return RewardFunction::quadratic(b1, b2); });
    }
    if (type == "tabulated") {
        const json& arr = cfg::at(j, "points", path);
        std::string pp = cfg::join(path, "points");
        if (!arr.is_array()) cfg::fail(pp, "expected an array");
        std::vector<std::pair<double, double>> pts;
        for (size_t i = 0; i < arr.size(); ++i) {
            auto xy = cfg::nums(arr[i], cfg::join(pp, i));
            if (xy.size() != 2) cfg::fail(cfg::join(pp, i), "expected [x, y]");
            pts.emplace_back(xy[0], xy[1]);
        }
        return cfg::with_path(pp, [&] { return RewardFunction::tabulated(pts); });
    }
    if (type == "revenue_wtp" || type == "welfare_wtp") {
        auto w = parse_wtp(j, path);
        if (type == "welfare_wtp") return welfare_from_wtp(w);
        return w.kind == WtpDistribution::Kind::Uniform ? revenue_from_uniform_wtp(w) : revenue_from_discrete_wtp(w);
    }
    cfg::fail(cfg::join(path, "type"), "unknown reward type '" + type +
                                           "' (expected min_affine, quadratic, tabulated, revenue_wtp, welfare_wtp)");
}

inline ProblemInstance parse_instance(const json& j, const std::string& path, bool quiet = false) {
    long long c = cfg::integer(j, "c", path);
    if (c < 1 || c > 100000000) cfg::fail(cfg::join(path, "c"), "must be in [1, 1e8]");
    double lam = cfg::num(j, "lambda", path);
    if (!(lam > 0.0)) cfg::fail(cfg::join(path, "lambda"), "must be positive");
    double d = cfg::num(j, "d", path);
    if (!(d > 0.0)) cfg::fail(cfg::join(path, "d"), "must be positive");
    RewardFunction g = parse_reward(cfg::at(j, "g", path), cfg::join(path, "g"));
    return ProblemInstance(int(c), lam, d, g, quiet);
}

inline std::vector<std::string> parse_policies(const json& j, const std::string& path) {
    if (!j.is_array()) cfg::fail(path, "expected an array of policy names");
    std::vector<std::string> out;
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) cfg::fail(cfg::join(path, i), "expected a string");
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

inline DurationDistribution parse_duration(const json& j, const std::string& path) {
    std::string type = cfg::str(j, "type", path);
    return cfg::with_path(path, [&] {
        if (type == "exponential") return DurationDistribution::exponential(cfg::num(j, "mean", path));
        if (type == "deterministic") return DurationDistribution::deterministic(cfg::num(j, "value", path));
        if (type == "uniform") return DurationDistribution::uniform(cfg::num(j, "lo", path), cfg::num(j, "hi", path));
        if (type == "lognormal") return DurationDistribution::lognormal(cfg::num(j, "mean", path), cfg::num(j, "cv", path));
        if (type == "hyperexponential") {
            if (cfg::has(j, "cv"))
                return DurationDistribution::hyperexponential_with_cv(cfg::num(j, "mean", path), cfg::num(j, "cv", path));
            return DurationDistribution::hyperexponential(cfg::nums(j, "means", path), cfg::nums(j, "weights", path));
        }
        cfg::fail(cfg::join(path, "type"), "unknown duration type '" + type + "'");
    });
}

inline MultiClassInstance parse_multiclass(const json& j, const std::string& path) {
    MultiClassInstance mc;
    const json& arr = cfg::at(j, "classes", path);
    std::string cp = cfg::join(path, "classes");
    if (!arr.is_array() || arr.empty()) cfg::fail(cp, "expected a nonempty array");
    for (size_t i = 0; i < arr.size(); ++i) {
        std::string ip = cfg::join(cp, i);
        CustomerClass k;
        k.lambda = cfg::num(arr[i], "lambda", ip);
        k.d = cfg::num(arr[i], "d", ip);
        k.g = parse_reward(cfg::at(arr[i], "g", ip), cfg::join(ip, "g"));
        mc.classes.push_back(std::move(k));
    }
    if (cfg::has(j, "resources")) {
        mc.caps = cfg::nums(j, "resources", path);
        const json& a = cfg::at(j, "consumption", path);
        std::string ap = cfg::join(path, "consumption");
        if (!a.is_array()) cfg::fail(ap, "expected a matrix");
        for (size_t i = 0; i < a.size(); ++i) mc.a.push_back(cfg::nums(a[i], cfg::join(ap, i)));
    } else {
        mc.c = cfg::num(j, "c", path);
    }
    cfg::with_path(path, [&] {
        mc.validate();
        return 0;
    });
    return mc;
}

// ------------------------------------------------------------------------------------------------

inline DualProgram::Tag tag_from_string(const std::string& s, const std::string& path) {
    for (auto t : {DualProgram::Tag::Lpsd, DualProgram::Tag::Alpha1, DualProgram::Tag::AlphaInf, DualProgram::Tag::Static})
        if (s == to_string(t)) return t;
    cfg::fail(path, "unknown program tag '" + s + "'");
}

inline ordered_json certificate_to_json(const DualCertificate& cert) {
    const DualProgram& p = cert.program;
    ordered_json pieces = ordered_json::array();
    for (auto& q : p.pieces) pieces.push_back({q.a, q.b});
    ordered_json prog{{"tag", to_string(p.tag)}, {"c", p.c},
                      {"lambda", p.lambda},      {"d", p.d},
                      {"pieces", pieces},        {"capacity_rows", p.capacity_rows}};
    prog["static_q"] = p.has_static() ? ordered_json(p.static_q) : ordered_json(nullptr);
    ordered_json j{{"label", cert.label}, {"program", prog}, {"zeta", cert.zeta}, {"mu", cert.mu}};
    j["nu"] = cert.nu;
    j["beta_eq"] = cert.beta_eq;
    return j;
}

inline DualCertificate certificate_from_json(const json& j, const std::string& path = "certificate") {
    DualCertificate cert;
    cert.label = cfg::str_or(j, "label", path, "");
    const json& p = cfg::at(j, "program", path);
    std::string pp = cfg::join(path, "program");
    cert.program.tag = tag_from_string(cfg::str(p, "tag", pp), cfg::join(pp, "tag"));
    cert.program.c = int(cfg::integer(p, "c", pp));
    if (cert.program.c < 1) cfg::fail(cfg::join(pp, "c"), "must be >= 1");
    cert.program.lambda = cfg::num(p, "lambda", pp);
    cert.program.d = cfg::num(p, "d", pp);
    const json& pc = cfg::at(p, "pieces", pp);
    if (!pc.is_array()) cfg::fail(cfg::join(pp, "pieces"), "expected an array");
    for (size_t i = 0; i < pc.size(); ++i) {
        auto ab = cfg::nums(pc[i], cfg::join(cfg::join(pp, "pieces"), i));
        if (ab.size() != 2) cfg::fail(cfg::join(cfg::join(pp, "pieces"), i), "expected [a, b]");
        cert.program.pieces.push_back({ab[0], ab[1]});
    }
    const json& cr = cfg::at(p, "capacity_rows", pp);
    if (!cr.is_boolean()) cfg::fail(cfg::join(pp, "capacity_rows"), "expected a boolean");
    cert.program.capacity_rows = cr.get<bool>();
    if (cfg::has(p, "static_q") && !p["static_q"].is_null()) cert.program.static_q = cfg::num(p, "static_q", pp);
    cert.zeta = cfg::num(j, "zeta", path);
    const json& mu = cfg::at(j, "mu", path);
    if (!mu.is_array()) cfg::fail(cfg::join(path, "mu"), "expected an array of arrays");
    for (size_t k = 0; k < mu.size(); ++k) cert.mu.push_back(cfg::nums(mu[k], cfg::join(cfg::join(path, "mu"), k)));
    if (cfg::has(j, "nu")) cert.nu = cfg::nums(j, "nu", path);
    if (cfg::has(j, "beta_eq")) cert.beta_eq = cfg::nums(j, "beta_eq", path);
    return cert;
}

inline ordered_json two_price_to_json(const TwoPricePolicy& t) {
    return ordered_json{{"type", "two_price"}, {"x_l", t.x_L}, {"x_h", t.x_H}, {"tau", t.tau}};
}

inline ordered_json allocation_to_json(const Allocation& a) {
    ordered_json cls = ordered_json::array();
    for (auto& r : a.classes) {
        ordered_json k{{"x_star", r.x_star}, {"capacity", r.capacity}, {"reward", r.reward}, {"loss", r.loss}};
        k["policy"] = r.policy ? two_price_to_json(*r.policy) : ordered_json(nullptr);
        if (r.unconstrained) k["unconstrained"] = true;
        if (!r.note.empty()) k["note"] = r.note;
        cls.push_back(std::move(k));
    }
    return ordered_json{{"fluid_objective", a.fluid_objective},
                        {"total_reward", a.total_reward},
                        {"loss", a.loss},
                        {"bound_rounding", a.bound_rounding},
                        {"bound_class_losses", a.bound_class_losses},
                        {"leftover", a.leftover},
                        {"classes", cls}};
}

} // namespace reprice
