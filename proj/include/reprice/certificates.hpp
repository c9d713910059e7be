#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "common.hpp"
#include "dual.hpp"
#include "equilibrium.hpp"
#include "lpsd.hpp"
#include "reward.hpp"

namespace reprice {

namespace detail {
// max over a grid of g(x) - m(x); positive means m fails to majorize g
inline double majorant_violation(const RewardFunction& g, const std::function<double(double)>& m, int n = 10001) {
    double worst = -inf;
    for (int i = 0; i < n; ++i) {
        double x = double(i) / (n - 1);
        worst = std::max(worst, g(x) - m(x));
    }
    return worst;
}

inline DualCertificate blank_certificate(const ProblemInstance& inst, DualProgram::Tag tag, std::vector<AffinePiece> pieces,
                                         bool capacity_rows) {
    DualCertificate cert;
    cert.program.tag = tag;
    cert.program.c = inst.c;
    cert.program.lambda = inst.lambda;
    cert.program.d = inst.d;
    cert.program.pieces = std::move(pieces);
    cert.program.capacity_rows = capacity_rows;
    cert.mu.assign(cert.program.pieces.size(), std::vector<double>(size_t(inst.c), 0.0));
    if (capacity_rows) cert.nu.assign(size_t(inst.c), 0.0);
    return cert;
}
} // namespace detail

/// Two-slope majorant min{R(x-x*) + gt, r(x-x*) + gt} with gt = value at x*.
struct KinkMajorant {
    double xstar = 0.5;
    double R = 0.0, r = 0.0;
    double value_at_xstar = 0.0;

    std::vector<AffinePiece> pieces() const {
        return {{value_at_xstar - R * xstar, R}, {value_at_xstar - r * xstar, r}};
    }
    double operator()(double x) const {
        return std::min(R * (x - xstar), r * (x - xstar)) + value_at_xstar;
    }
};

namespace detail {
inline DualCertificate alpha1_certificate(const ProblemInstance& inst, const KinkMajorant& k) {
    const int c = inst.c;
    const double lam = inst.lambda, R = k.R, r = k.r, xs = inst.xstar;
    auto cert = blank_certificate(inst, DualProgram::Tag::Alpha1, k.pieces(), true);
    cert.label = "alpha1";
    cert.zeta = lam * k.value_at_xstar - lam * std::min(1.0, r / 2.0) * xs * std::sqrt((R - r) / double(c));
    const double w = std::sqrt(double(c) * (R - r));
    for (int j = 1; j <= c; ++j) {
        double a = lam * std::max(1.0 - double(j) / w, 0.0);
        cert.mu[0][size_t(j - 1)] = a;
        cert.mu[1][size_t(j - 1)] = lam - a;
    }
    return cert;
}
} // namespace detail

/// Certificate for g <= min{Rx + g(x*) - Rx*, rx + g(x*) - rx*}.
inline DualCertificate build_dual_alpha1(const ProblemInstance& inst, double R, double r) {
    require(R > r && r > 0.0, "alpha1 certificate needs R > r > 0");
    require(double(inst.c) >= 1.0 / (R - r), "alpha1 certificate needs c >= 1/(R-r)");
    KinkMajorant k{inst.xstar, R, r, inst.g(inst.xstar)};
    double v = detail::majorant_violation(inst.g, k);
    require(v <= 1e-12 * (1.0 + std::abs(k.value_at_xstar)),
            "alpha1 certificate: two-slope function does not majorize g (excess " + std::to_string(v) + ")");
    return detail::alpha1_certificate(inst, k);
}

/// Certificate on a kink majorant built for a smooth g (the alpha in (1, inf) route).
inline DualCertificate build_dual_alpha1(const ProblemInstance& inst, const KinkMajorant& k) {
    require(k.R > k.r && k.r > 0.0, "alpha1 certificate needs R > r > 0");
    require(double(inst.c) >= 1.0 / (k.R - k.r), "alpha1 certificate needs c >= 1/(R-r)");
    require(std::abs(k.xstar - inst.xstar) <= 1e-12, "kink majorant was built for a different x*");
    return detail::alpha1_certificate(inst, k);
}

/// Tightest (R, r) from the supergradients of g at x*; r = 0 is rejected.
inline std::pair<double, double> fit_alpha1(const ProblemInstance& inst) {
    double R = inst.g.left_derivative(inst.xstar), r = inst.g.right_derivative(inst.xstar);
    require(R > r, "alpha1 fit: g has no kink at x*");
    require(r > 0.0, "alpha1 fit: upper slope at x* is 0, the alpha = 1 certificate does not apply");
    return {R, r};
}

/// h(x) = g(x*) + g'(x*)(x-x*) - k2|x-x*|^alpha; tangents of h at x* -+ eta meet above x*.
inline KinkMajorant build_kink_majorant(const RewardFunction& g, const ShapeModel& shape, double xstar, double eta) {
    require(shape.alpha > 1.0 && std::isfinite(shape.alpha), "kink majorant needs alpha in (1, inf)");
    require(shape.k2 > 0.0, "kink majorant needs k2 > 0");
    require(eta > 0.0 && eta < shape.eps, "kink majorant needs 0 < eta < eps");
    const double gp = shape.gprime_at_xstar;
    require(gp != 0.0, "kink majorant needs g'(x*) != 0");
    const double a = shape.alpha, k2 = shape.k2;
    KinkMajorant k;
    k.xstar = xstar;
    k.r = gp;
    k.R = gp + a * k2 * std::pow(eta, a - 1.0);
    k.value_at_xstar = g(xstar) + (a - 1.0) * k2 * std::pow(eta, a);
    double v = detail::majorant_violation(g, k);
    require(v <= 1e-12 * (1.0 + std::abs(k.value_at_xstar)),
            "kink majorant does not dominate g on [0,1] (excess " + std::to_string(v) + ")");
    return k;
}

// ------------------------------------------------------------------------------------------------

enum class AlphaInfCase { ScarceCase1, MiddleCase2, FlatCase3 };

inline const char* to_string(AlphaInfCase c) {
    switch (c) {
    case AlphaInfCase::ScarceCase1: return "case1";
    case AlphaInfCase::MiddleCase2: return "case2";
    case AlphaInfCase::FlatCase3: return "case3";
    }
    return "?";
}

struct ThreePiece {
    double r1 = 0, r2 = 0, b2 = 0, b3 = 0;
};

/// Read (r1, r2, b2, b3) off a three-piece g = min{r1 x, r2 x + b2, b3}.
inline ThreePiece fit_alpha_inf(const RewardFunction& g) {
    const auto& p = g.pieces();
    require(g.is_piecewise_linear() && p.size() == 3 && p[2].b == 0.0,
            "alpha_inf fit needs g = min{r1 x, r2 x + b2, b3}");
    return {p[0].b, p[1].b, p[1].a, p[2].a};
}

/// Which of the three pieces attains g(x*).
inline AlphaInfCase alpha_inf_case(const ThreePiece& t, double xstar) {
    double k1 = t.b2 / (t.r1 - t.r2), k2 = (t.b3 - t.b2) / t.r2;
    require(std::abs(xstar - k1) > 1e-12 && std::abs(xstar - k2) > 1e-12, "alpha_inf: x* sits on a kink");
    if (xstar < k1) return AlphaInfCase::ScarceCase1;
    if (xstar < k2) return AlphaInfCase::MiddleCase2;
    return AlphaInfCase::FlatCase3;
}

inline DualCertificate build_dual_alpha_inf(const ProblemInstance& inst, const ThreePiece& t, AlphaInfCase cs) {
    const double r1 = t.r1, r2 = t.r2, b2 = t.b2, b3 = t.b3;
    require(r1 > r2 && r2 > 0.0, "alpha_inf certificate needs r1 > r2 > 0");
    require(b3 > b2 && b2 > 0.0, "alpha_inf certificate needs b3 > b2 > 0");
    const double xs = inst.xstar, lam = inst.lambda, d = inst.d;
    const int c = inst.c;
    require(alpha_inf_case(t, xs) == cs, "alpha_inf certificate: case does not match the piece attaining g(x*)");
    auto m = [&](double x) { return std::min({r1 * x, r2 * x + b2, b3}); };
    double v = detail::majorant_violation(inst.g, m);
    require(v <= 1e-12 * (1.0 + lam), "alpha_inf certificate: three-piece function does not majorize g");

    auto cert = detail::blank_certificate(inst, DualProgram::Tag::AlphaInf, {{0.0, r1}, {b2, r2}, {b3, 0.0}}, true);
    cert.label = to_string(cs);
    auto& al = cert.mu[0];
    auto& be = cert.mu[1];
    auto& ga = cert.mu[2];
    if (cs == AlphaInfCase::ScarceCase1) {
        double beta = r1 / (2.0 * d * b2);
        cert.zeta = lam * r1 * xs - r1 / (2.0 * d);
        for (int j = 0; j < c; ++j) {
            be[size_t(j)] = beta;
            al[size_t(j)] = lam - beta;
        }
    } else if (cs == AlphaInfCase::MiddleCase2) {
        const double L = std::log(double(c));
        const double gap = xs * (r1 - r2);
        const double K = (lam / c) * (b2 / gap) * (gap - b2);
        const double eta = b2 / gap, omega = K * L / gap;
        cert.zeta = lam * (r2 * xs + b2) - std::min(K, r2 / d) * L;
        // recursion alpha_{j+1} = eta alpha_j - omega for j <= log c, kept as a_j = alpha_j / eta^j
        double a1 = lam * (b2 / gap) * L / c;
        double scaled = a1 / eta, powj = eta;
        for (int j = 1; j <= c; ++j) {
            double aj = 0.0;
            if (j == 1) {
                aj = a1;
            } else if (double(j - 1) <= L) {
                powj *= eta;
                scaled -= omega / powj;
                aj = scaled * powj;
            }
            al[size_t(j - 1)] = aj;
            be[size_t(j - 1)] = lam - aj;
        }
    } else {
        const double rho = (b3 - b2) / (2.0 * r2 * xs);
        double b = lam * b3 / (2.0 * r2 * xs);
        for (int j = 1; j <= c; ++j) {
            be[size_t(j - 1)] = b;
            ga[size_t(j - 1)] = lam - b;
            if (j < c) b *= rho;
        }
        cert.zeta = lam * b3 - (b3 - b2) * be[size_t(c - 1)];
    }
    return cert;
}

// ------------------------------------------------------------------------------------------------

/// Tangent line r x + b of g at x* (right supergradient).
inline std::pair<double, double> fit_static_majorant(const ProblemInstance& inst) {
    double r = inst.g.right_derivative(inst.xstar);
    return {r, inst.g(inst.xstar) - r * inst.xstar};
}

/// Dual of the static-policy LP at admission probability q.
inline DualCertificate build_dual_static(const ProblemInstance& inst, double r, double b, double q) {
    require(r > 0.0 && b > 0.0, "static certificate needs r, b > 0");
    require(q >= 0.0 && q <= 1.0, "static certificate needs q in [0,1]");
    const double xs = inst.xstar, lam = inst.lambda, sc = std::sqrt(double(inst.c));
    const double gs = inst.g(xs);
    require(std::abs(r * xs + b - gs) <= 1e-9 * (1.0 + gs), "static certificate: r x + b must touch g at x*");
    double v = detail::majorant_violation(inst.g, [&](double x) { return r * x + b; });
    require(v <= 1e-12 * (1.0 + gs), "static certificate: r x + b does not majorize g");

    auto cert = detail::blank_certificate(inst, DualProgram::Tag::Static, {{b, r}}, false);
    cert.program.static_q = q;
    cert.beta_eq.assign(size_t(inst.c), 0.0);
    std::fill(cert.mu[0].begin(), cert.mu[0].end(), lam);
    if (q >= xs) {
        cert.label = "static q>=x*";
        cert.zeta = lam * gs - std::min(b, r * xs / 2.0) * lam / sc;
        for (int j = 1; j <= inst.c; ++j) cert.beta_eq[size_t(j - 1)] = lam * b / xs * std::max(1.0 - j / sc, 0.0);
    } else {
        cert.label = "static q<x*";
        cert.zeta = lam * gs - lam * r * xs / (4.0 * sc);
        for (int j = 1; j <= inst.c; ++j)
            cert.beta_eq[size_t(j - 1)] = lam * r / 2.0 * std::max(-j / sc, -std::floor(sc) / sc);
    }
    return cert;
}

/// Optimum of the relaxed primal a certificate speaks about (for the weak-duality margin).
inline double relaxed_optimum(const ProblemInstance& inst, const DualCertificate& cert) {
    const DualProgram& p = cert.program;
    if (p.has_static()) {
        // pi is pinned to the Erlang distribution at load lambda q d, and g_j = pi_j (r q + b)
        const AffinePiece& m = p.pieces.front();
        double q = p.static_q;
        return (1.0 - erlang_stockout(p.c, p.lambda * q * p.d)) * p.lambda * (m.a + m.b * q);
    }
    DualProgram full = p;
    full.capacity_rows = true;
    return solve_lpsd_structured(inst, full).objective;
}

} // namespace reprice
