#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "common.hpp"
#include "dual.hpp"
#include "equilibrium.hpp"
#include "lp_solver.hpp"
#include "reward.hpp"

namespace reprice {

inline DualProgram lpsd_program(const ProblemInstance& inst, const std::vector<AffinePiece>& pieces) {
    DualProgram p;
    p.tag = DualProgram::Tag::Lpsd;
    p.c = inst.c;
    p.lambda = inst.lambda;
    p.d = inst.d;
    p.pieces = pieces;
    p.capacity_rows = true;
    return p;
}

/// Variables pi_0..pi_c then g_1..g_c.
inline LinearProgram build_lp(const DualProgram& p) {
    const int c = p.c;
    LinearProgram lp;
    for (int j = 0; j <= c; ++j) lp.add_variable(0.0);
    for (int j = 1; j <= c; ++j) lp.add_variable(p.lambda, -inf, inf);
    const int nv = lp.num_vars();
    auto gi = [c](int j) { return c + j; };

    std::vector<double> row(size_t(nv), 0.0);
    for (int j = 0; j <= c; ++j) row[size_t(j)] = 1.0;
    lp.add_row(row, LinearProgram::Rel::Eq, 1.0);
    for (size_t k = 0; k < p.pieces.size(); ++k)
        for (int j = 1; j <= c; ++j) {
            std::fill(row.begin(), row.end(), 0.0);
            row[size_t(gi(j))] = 1.0;
            row[size_t(j)] = -p.pieces[k].a;
            row[size_t(j - 1)] = -p.pieces[k].b * p.s(j);
            lp.add_row(row, LinearProgram::Rel::Le, 0.0);
        }
    if (p.capacity_rows)
        for (int j = 1; j <= c; ++j) {
            std::fill(row.begin(), row.end(), 0.0);
            row[size_t(j - 1)] = p.s(j);
            row[size_t(j)] = -1.0;
            lp.add_row(row, LinearProgram::Rel::Le, 0.0);
        }
    if (p.has_static())
        for (int j = 1; j <= c; ++j) {
            std::fill(row.begin(), row.end(), 0.0);
            row[size_t(j)] = p.static_q;
            row[size_t(j - 1)] = -p.s(j);
            lp.add_row(row, LinearProgram::Rel::Eq, 0.0);
        }
    return lp;
}

struct LpsdSolution {
    double objective = 0.0;        // certified upper end (dual value)
    double lower = 0.0;            // reward of the recovered policy under the program's pieces
    std::vector<double> pi;        // primal pi when available (dense route)
    StockDependentPolicy policy;
    DualCertificate certificate;
    int iterations = 0;
    std::string method;
};

/// Map a simplex solution's row duals onto the certificate layout.
inline DualCertificate certificate_from_lp(const DualProgram& p, const LpSolution& sol) {
    const int c = p.c;
    DualCertificate cert;
    cert.program = p;
    cert.label = "lp duals";
    size_t r = 0;
    cert.zeta = sol.duals[r++];
    cert.mu.assign(p.pieces.size(), std::vector<double>(size_t(c)));
    for (size_t k = 0; k < p.pieces.size(); ++k)
        for (int j = 1; j <= c; ++j) cert.mu[k][size_t(j - 1)] = sol.duals[r++];
    if (p.capacity_rows) {
        cert.nu.resize(size_t(c));
        for (int j = 1; j <= c; ++j) cert.nu[size_t(j - 1)] = sol.duals[r++];
    }
    if (p.has_static()) {
        cert.beta_eq.resize(size_t(c));
        for (int j = 1; j <= c; ++j) cert.beta_eq[size_t(j - 1)] = sol.duals[r++];
    }
    return cert;
}

/// x_j = min{1, (c-j+1) pi_{j-1} / (lambda d pi_j)}, x_j = 1 where pi_j = 0.
inline StockDependentPolicy recover_policy(const ProblemInstance& inst, const std::vector<double>& pi) {
    std::vector<double> x(static_cast<size_t>(inst.c));
    for (int j = 1; j <= inst.c; ++j) {
        double pj = pi[size_t(j)], pm = std::max(pi[size_t(j - 1)], 0.0);
        x[size_t(j - 1)] = pj <= 1e-300 ? 1.0 : std::clamp(inst.s(j) * pm / pj, 0.0, 1.0);
    }
    return StockDependentPolicy(std::move(x));
}

inline LpsdSolution solve_lpsd_dense(const ProblemInstance& inst, const DualProgram& p) {
    LinearProgram lp = build_lp(p);
    LpSolution sol = solve(lp);
    if (sol.status != LpSolution::Status::Optimal)
        throw internal_error(std::string("LPSD solve returned ") + to_string(sol.status));
    LpsdSolution out;
    out.method = "lpsd-simplex";
    out.iterations = sol.iterations;
    out.objective = sol.objective;
    out.pi.assign(sol.x.begin(), sol.x.begin() + inst.c + 1);
    out.policy = recover_policy(inst, out.pi);
    out.certificate = certificate_from_lp(p, sol);
    return out;
}

namespace detail {

// concave piecewise-linear majorant queried through best responses
struct PwlOracle {
    std::vector<AffinePiece> pieces; // decreasing slopes
    std::vector<double> breaks;

    explicit PwlOracle(const std::vector<AffinePiece>& in) {
        auto env = lower_envelope(in);
        pieces = std::move(env.first);
        breaks = std::move(env.second);
    }
    size_t count_at_least(double delta) const {
        size_t lo = 0, hi = pieces.size();
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (pieces[mid].b >= delta)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }
    double value(double x) const {
        auto it = std::upper_bound(breaks.begin() + 1, breaks.end() - 1, x);
        return pieces[size_t(it - breaks.begin()) - 1](x);
    }
    // max_x g(x) - delta x and the argmax (largest)
    std::pair<double, double> phi(double delta) const {
        size_t k = count_at_least(delta);
        double x = breaks[k];
        const AffinePiece& p = pieces[k == 0 ? 0 : k - 1];
        return {p(x) - delta * x, x};
    }
    // dual weights of the inner LP at delta: (piece index, weight) pairs and the x <= 1 multiplier
    struct Inner {
        size_t k0 = 0, k1 = 0;
        double w0 = 1.0, w1 = 0.0, u = 0.0;
    };
    Inner inner(double delta) const {
        size_t k = count_at_least(delta);
        size_t m = pieces.size();
        Inner in;
        if (k == 0) {
            in.k0 = in.k1 = 0;
        } else if (k == m) {
            in.k0 = in.k1 = m - 1;
            in.u = std::max(0.0, pieces[m - 1].b - delta);
        } else {
            double hi = pieces[k - 1].b, lo = pieces[k].b;
            double th = std::clamp((delta - lo) / (hi - lo), 0.0, 1.0);
            in.k0 = k - 1;
            in.k1 = k;
            in.w0 = th;
            in.w1 = 1.0 - th;
        }
        return in;
    }
};

} // namespace detail

/// Exact LPSD optimum by bisection on the gain of the Bellman recursion
///   D_1 = rho d / c,  D_{j+1} = (rho - phi(D_j)) d / (c - j),  feasible iff phi(D_c) <= rho,
/// phi(D) = lambda max_x (g(x) - x D). The recursion at the upper end is a feasible LPSD dual.
inline LpsdSolution solve_lpsd_structured(const ProblemInstance& inst, const DualProgram& p) {
    require(p.capacity_rows && !p.has_static(), "structured LPSD needs the full LPSD program");
    const int c = p.c;
    const double lam = p.lambda, d = p.d;
    detail::PwlOracle G(p.pieces);
    const double g1 = G.value(1.0);

    std::vector<double> delta(size_t(c) + 1);
    // returns true when rho is dual feasible
    auto feasible = [&](double rho) {
        double D = rho * d / double(c);
        delta[1] = D;
        for (int j = 1; j < c; ++j) {
            if (D < 0.0 && rho <= lam * g1) return false;
            D = (rho - lam * G.phi(D).first) * d / double(c - j);
            delta[size_t(j + 1)] = D;
        }
        return lam * G.phi(D).first <= rho;
    };

    double lo = 0.0;
    double hi = lam * G.value(std::min(1.0, p.xstar()));
    int it = 0;
    while (!feasible(hi)) {
        hi = 2.0 * std::max(hi, lam * g1) + 1.0;
        if (++it > 60) throw internal_error("structured LPSD: no feasible upper bound");
    }
    if (feasible(lo)) hi = lo;
    for (it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
        double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            hi = mid;
        else
            lo = mid;
    }
    feasible(hi); // leave delta at the certified end

    LpsdSolution out;
    out.method = "lpsd-gain-bisection";
    out.iterations = it;
    out.objective = hi;
    DualCertificate cert;
    cert.program = p;
    cert.program.pieces = G.pieces;
    cert.label = "bellman recursion";
    cert.zeta = hi;
    cert.mu.assign(G.pieces.size(), std::vector<double>(size_t(c), 0.0));
    cert.nu.assign(size_t(c), 0.0);
    std::vector<double> x(static_cast<size_t>(c));
    // marginal unit values are nonincreasing in stock and >= 0; near j = c the recursion
    // amplifies the bisection error, so the policy reads a clamped copy
    double Dpol = inf;
    for (int j = 1; j <= c; ++j) {
        double D = delta[size_t(j)];
        auto in = G.inner(D);
        cert.mu[in.k0][size_t(j - 1)] += lam * in.w0;
        cert.mu[in.k1][size_t(j - 1)] += lam * in.w1;
        cert.nu[size_t(j - 1)] = lam * in.u;
        Dpol = std::clamp(D, 0.0, Dpol);
        x[size_t(j - 1)] = G.phi(Dpol).second;
    }
    out.certificate = std::move(cert);
    out.policy = StockDependentPolicy(std::move(x));
    // reward of the greedy policy under the program's majorant
    {
        ProblemInstance shadow(inst.c, inst.lambda, inst.d, inst.g, true);
        auto ss = steady_state(shadow, out.policy);
        double r = 0.0;
        for (int j = 1; j <= c; ++j) r += ss.pi[size_t(j)] * G.value(out.policy.at(j));
        out.lower = lam * r;
        out.pi = std::move(ss.pi);
    }
    return out;
}

} // namespace reprice
