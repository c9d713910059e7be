#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "common.hpp"
#include "reward.hpp"

namespace reprice {

/// Relaxations of LPSD sharing one layout:
///   max  lambda sum_j g_j
///   s.t. sum_j pi_j = 1                                  (zeta)
///        g_j <= a_k pi_j + b_k s_j pi_{j-1}              (mu[k][j-1] >= 0)
///        s_j pi_{j-1} <= pi_j          if capacity_rows  (nu[j-1] >= 0)
///        q pi_j = s_j pi_{j-1}         if static q set   (beta_eq[j-1] free)
/// with s_j = (c-j+1)/(lambda d), pi >= 0, g free.
struct DualProgram {
    enum class Tag { Lpsd, Alpha1, AlphaInf, Static };
    Tag tag = Tag::Lpsd;
    int c = 1;
    double lambda = 1.0, d = 1.0;
    std::vector<AffinePiece> pieces;
    bool capacity_rows = true;
    double static_q = std::numeric_limits<double>::quiet_NaN();

    bool has_static() const { return !std::isnan(static_q); }
    double s(int j) const { return double(c - j + 1) / (lambda * d); }
    double xstar() const { return double(c) / (lambda * d); }
    double majorant(double x) const {
        double v = inf;
        for (auto& p : pieces) v = std::min(v, p(x));
        return v;
    }
    // constraint scale 1 + lambda * gbar(x*)
    double scale() const { return 1.0 + std::abs(lambda * majorant(std::min(1.0, xstar()))); }
};

inline const char* to_string(DualProgram::Tag t) {
    switch (t) {
    case DualProgram::Tag::Lpsd: return "lpsd";
    case DualProgram::Tag::Alpha1: return "alpha1";
    case DualProgram::Tag::AlphaInf: return "alpha_inf";
    case DualProgram::Tag::Static: return "static";
    }
    return "?";
}

struct DualCertificate {
    DualProgram program;
    double zeta = 0.0;
    std::vector<std::vector<double>> mu; // mu[k][j-1], one vector per majorant piece
    std::vector<double> nu;              // capacity rows, empty when absent
    std::vector<double> beta_eq;         // static rows, empty when absent
    std::string label;

    // alpha, beta, gamma: multipliers of pieces 0, 1, 2
    const std::vector<double>& alpha() const { return mu.at(0); }
    const std::vector<double>& beta() const { return program.has_static() ? beta_eq : mu.at(1); }
    const std::vector<double>& gamma() const { return mu.at(2); }
};

struct DualCheck {
    bool pass = false;
    double max_violation = 0.0; // largest constraint violation (sign violations included)
    std::string where;          // which constraint attains it
    double min_multiplier = 0.0;
    double weak_margin = std::numeric_limits<double>::quiet_NaN(); // zeta - primal optimum
    double tol = 0.0;
};

/// Evaluate every dual constraint of the program. PASS iff all violations are within
/// 1e-8 * scale and, when a primal optimum is given, zeta >= optimum - 1e-6 * scale.
inline DualCheck verify_dual(const DualCertificate& cert,
                             double primal_optimum = std::numeric_limits<double>::quiet_NaN()) {
    const DualProgram& p = cert.program;
    const int c = p.c;
    const size_t K = p.pieces.size();
    require(K >= 1, "verify_dual: program has no majorant pieces");
    require(cert.mu.size() == K, "verify_dual: expected " + std::to_string(K) + " multiplier vectors");
    for (auto& m : cert.mu) require(int(m.size()) == c, "verify_dual: multiplier vector length != c");
    require(!p.capacity_rows || int(cert.nu.size()) == c, "verify_dual: capacity multipliers length != c");
    require(p.capacity_rows || cert.nu.empty(), "verify_dual: capacity multipliers given but program has none");
    require(!p.has_static() || int(cert.beta_eq.size()) == c, "verify_dual: static multipliers length != c");
    require(std::isfinite(cert.zeta), "verify_dual: zeta is not finite");

    DualCheck out;
    out.tol = 1e-8 * p.scale();
    double worst = -inf;
    auto note = [&](double v, const std::string& w) {
        if (!(v <= worst)) { // also catches NaN
            worst = std::isnan(v) ? inf : v;
            out.where = w;
        }
    };
    double minmult = inf;
    for (size_t k = 0; k < K; ++k)
        for (int j = 1; j <= c; ++j) {
            double v = cert.mu[k][size_t(j - 1)];
            minmult = std::min(minmult, v);
            note(-v - 1e-12, "sign mu[" + std::to_string(k) + "][j=" + std::to_string(j) + "]");
        }
    for (int j = 1; j <= int(cert.nu.size()); ++j) {
        double v = cert.nu[size_t(j - 1)];
        minmult = std::min(minmult, v);
        note(-v - 1e-12, "sign nu[j=" + std::to_string(j) + "]");
    }
    // columns g_j: sum_k mu = lambda
    for (int j = 1; j <= c; ++j) {
        double s = 0.0;
        for (size_t k = 0; k < K; ++k) s += cert.mu[k][size_t(j - 1)];
        note(std::abs(s - p.lambda), "column g[j=" + std::to_string(j) + "]");
    }
    // columns pi_j
    for (int j = 0; j <= c; ++j) {
        double rhs = 0.0;
        if (j >= 1) {
            for (size_t k = 0; k < K; ++k) rhs += p.pieces[k].a * cert.mu[k][size_t(j - 1)];
            if (p.capacity_rows) rhs += cert.nu[size_t(j - 1)];
            if (p.has_static()) rhs -= p.static_q * cert.beta_eq[size_t(j - 1)];
        }
        if (j < c) {
            double sj = p.s(j + 1), t = 0.0;
            for (size_t k = 0; k < K; ++k) t += p.pieces[k].b * cert.mu[k][size_t(j)];
            if (p.capacity_rows) t -= cert.nu[size_t(j)];
            if (p.has_static()) t += cert.beta_eq[size_t(j)];
            rhs += sj * t;
        }
        note(rhs - cert.zeta, "column pi[j=" + std::to_string(j) + "]");
    }
    out.max_violation = std::max(worst, 0.0);
    out.min_multiplier = minmult;
    out.pass = worst <= out.tol;
    if (!std::isnan(primal_optimum)) {
        out.weak_margin = cert.zeta - primal_optimum;
        if (out.weak_margin < -1e-6 * p.scale()) {
            out.pass = false;
            if (worst <= out.tol) out.where = "weak duality: zeta below primal optimum";
        }
    }
    return out;
}

} // namespace reprice
