#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "reward.hpp"

namespace reprice {

struct ProblemInstance {
    int c = 1;
    double lambda = 1.0;
    double d = 1.0;
    RewardFunction g;
    double xstar = 1.0; // c / (lambda d)

    ProblemInstance() = default;
    ProblemInstance(int c_, double lambda_, double d_, RewardFunction g_, bool quiet = false)
        : c(c_), lambda(lambda_), d(d_), g(std::move(g_)) {
        require(c >= 1, "instance: c must be a positive integer");
        require(std::isfinite(lambda) && lambda > 0.0, "instance: lambda must be > 0");
        require(std::isfinite(d) && d > 0.0, "instance: d must be > 0");
        xstar = double(c) / (lambda * d);
        if (xstar >= 1.0 && !quiet)
            warn("x* = " + std::to_string(xstar) + " >= 1: capacity is not scarce");
    }

    bool scarce() const { return xstar < 1.0; }
    // (c - j + 1) / (lambda d), the coefficient linking pi_{j-1} to pi_j
    double s(int j) const { return double(c - j + 1) / (lambda * d); }
};

/// x[j-1] is the admission probability with j units available.
struct StockDependentPolicy {
    std::vector<double> x;

    StockDependentPolicy() = default;
    explicit StockDependentPolicy(std::vector<double> v) : x(std::move(v)) {}
    static StockDependentPolicy constant(int c, double q) { return StockDependentPolicy(std::vector<double>(size_t(c), q)); }

    int size() const { return int(x.size()); }
    double at(int j) const { return x[size_t(j - 1)]; }

    void validate(int c) const {
        require(int(x.size()) == c, "policy length " + std::to_string(x.size()) + " != c = " + std::to_string(c));
        for (double v : x) require(std::isfinite(v) && v >= 0.0 && v <= 1.0, "policy entries must lie in [0,1]");
    }
};

struct SteadyState {
    std::vector<double> pi; // pi[j], j = 0..c units available
    double reward = 0.0;
    double loss = 0.0;
    double pi0 = 0.0;
};

inline double fluid_value(const ProblemInstance& inst) { return inst.lambda * inst.g(std::min(1.0, inst.xstar)); }

inline SteadyState steady_state(const ProblemInstance& inst, const StockDependentPolicy& pol) {
    pol.validate(inst.c);
    const int c = inst.c;
    const double ld = inst.lambda * inst.d;
    std::vector<double> w(size_t(c) + 1, 0.0);
    w[size_t(c)] = 1.0;
    for (int j = c; j >= 1; --j) {
        double v = w[size_t(j)] * ld * pol.at(j) / double(c - j + 1);
        w[size_t(j - 1)] = v;
        if (v > 1e200) {
            for (int i = j - 1; i <= c; ++i) w[size_t(i)] *= 1e-200;
        }
    }
    double total = 0.0;
    for (double v : w) total += v;
    SteadyState ss;
    ss.pi.resize(w.size());
    double r = 0.0;
    for (int j = 0; j <= c; ++j) {
        ss.pi[size_t(j)] = w[size_t(j)] / total;
        if (j >= 1) r += ss.pi[size_t(j)] * inst.g(pol.at(j));
    }
    ss.reward = inst.lambda * r;
    ss.pi0 = ss.pi[0];
    ss.loss = fluid_value(inst) - ss.reward;
    return ss;
}

/// max_j |pi_j lambda x_j - pi_{j-1}(c-j+1)/d| relative to the largest flow.
inline double balance_residual(const ProblemInstance& inst, const StockDependentPolicy& pol, const SteadyState& ss) {
    double worst = 0.0, scale = 0.0;
    for (int j = 1; j <= inst.c; ++j) {
        double in = ss.pi[size_t(j)] * inst.lambda * pol.at(j);
        double out = ss.pi[size_t(j - 1)] * double(inst.c - j + 1) / inst.d;
        worst = std::max(worst, std::abs(in - out));
        scale = std::max({scale, in, out});
    }
    return scale > 0 ? worst / scale : worst;
}

/// Erlang-B blocking probability for c servers and offered load a.
inline double erlang_stockout(int c, double a) {
    require(c >= 0, "erlang_stockout: c must be >= 0");
    require(a >= 0.0 && std::isfinite(a), "erlang_stockout: load must be finite and >= 0");
    double b = 1.0;
    for (int n = 1; n <= c; ++n) b = a * b / (double(n) + a * b);
    return b;
}

inline double performance_loss(const ProblemInstance& inst, const StockDependentPolicy& pol) {
    return steady_state(inst, pol).loss;
}

/// (sum_{1..tau} pi_j / pi_0, sum_{tau+1..c} pi_j / pi_0)
inline std::pair<double, double> varsigma_stats(const SteadyState& ss, int tau) {
    int c = int(ss.pi.size()) - 1;
    require(tau >= 0 && tau <= c, "varsigma_stats: tau out of range");
    if (ss.pi[0] <= 0.0) return {inf, inf};
    double lo = 0.0, hi = 0.0;
    for (int j = 1; j <= c; ++j) (j <= tau ? lo : hi) += ss.pi[size_t(j)];
    return {lo / ss.pi[0], hi / ss.pi[0]};
}

struct TwoPriceEval {
    double reward = 0.0;
    double pi0 = 0.0;
};

/// Steady-state reward of the two-price policy (x_L for j <= tau, x_H above).
/// Terms pi_j / pi_0 are log-concave in j when x_L <= x_H, so the tail is cut once negligible.
inline TwoPriceEval two_price_eval(const ProblemInstance& inst, double xl, double xh, int tau) {
    const int c = inst.c;
    tau = std::clamp(tau, 0, c);
    if (xl <= 0.0 || xh <= 0.0 || xl > xh) {
        std::vector<double> x(static_cast<size_t>(c));
        for (int j = 1; j <= c; ++j) x[size_t(j - 1)] = j <= tau ? xl : xh;
        auto ss = steady_state(inst, StockDependentPolicy(std::move(x)));
        return {ss.reward, ss.pi0};
    }
    const double ld = inst.lambda * inst.d;
    const double inv_l = 1.0 / (ld * xl), inv_h = 1.0 / (ld * xh);
    double base = 1.0; // weight of pi_0
    double t = 1.0, tmax = 1.0;
    double sl = 0.0, sh = 0.0;
    for (int j = 1; j <= c; ++j) {
        double ratio = double(c - j + 1) * (j <= tau ? inv_l : inv_h);
        t *= ratio;
        if (j <= tau)
            sl += t;
        else
            sh += t;
        if (t > tmax) tmax = t;
        if (t > 1e250) {
            t *= 1e-250;
            tmax *= 1e-250;
            sl *= 1e-250;
            sh *= 1e-250;
            base *= 1e-250;
        }
        if (ratio < 1.0 && t < 1e-22 * tmax) break;
    }
    double total = base + sl + sh;
    return {inst.lambda * (inst.g(xl) * sl + inst.g(xh) * sh) / total, base / total};
}

} // namespace reprice
