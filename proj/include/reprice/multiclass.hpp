#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "equilibrium.hpp"
#include "lp_solver.hpp"
#include "parallel.hpp"
#include "policies.hpp"
#include "reward.hpp"

namespace reprice {

struct CustomerClass {
    double lambda = 1.0, d = 1.0;
    RewardFunction g;
    std::optional<ShapeModel> shape; // when set, the class uses the theoretical two-price policy
};

/// Either one resource with capacity c, or resources j with capacities caps[j] and
/// consumption a[i][j] per admitted class-i customer.
struct MultiClassInstance {
    std::vector<CustomerClass> classes;
    double c = 0.0;
    std::vector<double> caps;
    std::vector<std::vector<double>> a;

    bool is_network() const { return !caps.empty(); }
    int m() const { return int(classes.size()); }

    void validate() const {
        require(!classes.empty(), "multiclass: no classes");
        for (size_t i = 0; i < classes.size(); ++i) {
            require(classes[i].lambda > 0.0 && std::isfinite(classes[i].lambda),
                    "class " + std::to_string(i) + ": lambda must be positive");
            require(classes[i].d > 0.0 && std::isfinite(classes[i].d), "class " + std::to_string(i) + ": d must be positive");
        }
        if (is_network()) {
            require(a.size() == classes.size(), "consumption matrix needs one row per class");
            for (auto& row : a) {
                require(row.size() == caps.size(), "consumption matrix needs one column per resource");
                for (double v : row) require(v >= 0.0 && std::isfinite(v), "consumption entries must be >= 0");
            }
        } else {
            require(c >= 0.0 && std::isfinite(c), "capacity must be >= 0");
        }
    }

    /// c / sum_i lambda_i d_i (single resource)
    double scarcity() const {
        double load = 0.0;
        for (auto& k : classes) load += k.lambda * k.d;
        return c / load;
    }
};

struct FluidSolution {
    std::vector<double> x;
    double objective = 0.0;
    double theta = 0.0;          // shadow price of the capacity (single resource)
    double kkt_residual = 0.0;
    double upper = 0.0;          // = objective unless a smooth g was linearized
    std::string method;
};

namespace detail {
inline double class_load(const MultiClassInstance& inst, const std::vector<double>& x) {
    double s = 0.0;
    for (int i = 0; i < inst.m(); ++i) s += inst.classes[size_t(i)].lambda * inst.classes[size_t(i)].d * x[size_t(i)];
    return s;
}
inline double class_objective(const MultiClassInstance& inst, const std::vector<double>& x) {
    double s = 0.0;
    for (int i = 0; i < inst.m(); ++i) s += inst.classes[size_t(i)].lambda * inst.classes[size_t(i)].g(x[size_t(i)]);
    return s;
}
} // namespace detail

/// max sum_i lambda_i g_i(x_i) s.t. sum_i lambda_i x_i d_i <= c, by bisection on the shadow price.
inline FluidSolution solve_fluid_multiclass(const MultiClassInstance& inst) {
    inst.validate();
    require(!inst.is_network(), "solve_fluid_multiclass needs the single-resource variant");
    const int m = inst.m();
    auto response = [&](double theta) {
        std::vector<double> x(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) {
            auto& k = inst.classes[size_t(i)];
            x[size_t(i)] = k.g.best_response(theta * k.d).x;
        }
        return x;
    };
    FluidSolution out;
    out.method = "theta-bisection";
    auto x = response(0.0);
    if (detail::class_load(inst, x) <= inst.c) {
        out.x = x;
    } else {
        double lo = 0.0, hi = 1.0;
        while (detail::class_load(inst, response(hi)) > inst.c) hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            double mid = 0.5 * (lo + hi);
            if (detail::class_load(inst, response(mid)) > inst.c)
                lo = mid;
            else
                hi = mid;
        }
        out.theta = hi;
        // largest maximizers at theta*, then waterfill down the tied classes to meet c exactly
        std::vector<double> xl(static_cast<size_t>(m)), xh(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) {
            auto& k = inst.classes[size_t(i)];
            double dl = hi * k.d;
            auto iv = k.g.maximizer_interval(dl, 1e-9 * std::max(1.0, dl));
            xl[size_t(i)] = iv.first;
            xh[size_t(i)] = iv.second;
        }
        double excess = detail::class_load(inst, xh) - inst.c;
        x = xh;
        for (int i = 0; i < m && excess > 0.0; ++i) {
            auto& k = inst.classes[size_t(i)];
            double room = (xh[size_t(i)] - xl[size_t(i)]) * k.lambda * k.d;
            double take = std::min(room, excess);
            x[size_t(i)] -= take / (k.lambda * k.d);
            excess -= take;
        }
        out.x = x;
    }
    out.objective = detail::class_objective(inst, out.x);
    out.upper = out.objective;
    // KKT: each x_i maximizes g_i - theta d_i x, slack complementary to theta
    double res = 0.0;
    for (int i = 0; i < m; ++i) {
        auto& k = inst.classes[size_t(i)];
        double best = k.g.best_response(out.theta * k.d).value;
        double here = k.g(out.x[size_t(i)]) - out.theta * k.d * out.x[size_t(i)];
        res = std::max(res, (best - here) * k.lambda);
    }
    double slack = inst.c - detail::class_load(inst, out.x);
    res = std::max(res, std::max(0.0, -slack));
    if (out.theta > 0.0) res = std::max(res, out.theta * std::abs(slack));
    out.kkt_residual = res;
    return out;
}

namespace detail {
// hypograph LP: x_i in [0,1], h_i <= a_k + b_k x_i, sum_i lambda_i a_ij d_i x_i <= c_j
inline std::pair<LpSolution, std::vector<double>> network_lp(const MultiClassInstance& inst,
                                                             const std::vector<std::vector<AffinePiece>>& pieces) {
    const int m = inst.m();
    LinearProgram lp;
    for (int i = 0; i < m; ++i) lp.add_variable(0.0, 0.0, 1.0);
    for (int i = 0; i < m; ++i) lp.add_variable(inst.classes[size_t(i)].lambda, -inf, inf);
    const int nv = lp.num_vars();
    std::vector<double> row(static_cast<size_t>(nv));
    for (int i = 0; i < m; ++i)
        for (auto& p : pieces[size_t(i)]) {
            std::fill(row.begin(), row.end(), 0.0);
            row[size_t(m + i)] = 1.0;
            row[size_t(i)] = -p.b;
            lp.add_row(row, LinearProgram::Rel::Le, p.a);
        }
    for (size_t j = 0; j < inst.caps.size(); ++j) {
        std::fill(row.begin(), row.end(), 0.0);
        bool any = false;
        for (int i = 0; i < m; ++i) {
            auto& k = inst.classes[size_t(i)];
            row[size_t(i)] = k.lambda * inst.a[size_t(i)][j] * k.d;
            any = any || row[size_t(i)] != 0.0;
        }
        if (any) lp.add_row(row, LinearProgram::Rel::Le, inst.caps[j]);
    }
    LpSolution sol = solve(lp);
    if (sol.status != LpSolution::Status::Optimal)
        throw internal_error(std::string("network fluid LP returned ") + to_string(sol.status));
    std::vector<double> x(sol.x.begin(), sol.x.begin() + m);
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    return {std::move(sol), std::move(x)};
}
} // namespace detail

/// max sum_i lambda_i g_i(x_i) s.t. sum_i lambda_i x_i a_ij d_i <= c_j for every resource j.
/// A smooth g_i is replaced by its chord minorant; the tangent LP bounds the gap.
inline FluidSolution solve_fluid_network(const MultiClassInstance& inst, int smooth_points = 256) {
    inst.validate();
    require(inst.is_network(), "solve_fluid_network needs resources");
    for (double v : inst.caps) require(v >= 0.0, "network fluid: capacity must be >= 0");
    const int m = inst.m();
    bool smooth = false;
    std::vector<std::vector<AffinePiece>> lo_p(static_cast<size_t>(m)), hi_p(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        auto& g = inst.classes[size_t(i)].g;
        if (g.is_piecewise_linear()) {
            lo_p[size_t(i)] = hi_p[size_t(i)] = g.pieces();
        } else {
            smooth = true;
            auto pts = approximation_points(0.5, smooth_points);
            lo_p[size_t(i)] = chord_minorant(g, pts).pieces();
            hi_p[size_t(i)] = tangent_pieces(g, pts);
        }
    }
    auto [sol, x] = detail::network_lp(inst, lo_p);
    // classes using no resource: g is nondecreasing, so full admission is a maximizer
    for (int i = 0; i < m; ++i) {
        auto& row = inst.a[size_t(i)];
        if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) x[size_t(i)] = 1.0;
    }
    FluidSolution out;
    out.method = smooth ? "hypograph-lp-chord" : "hypograph-lp";
    out.x = x;
    out.objective = detail::class_objective(inst, x);
    out.upper = smooth ? std::max(out.objective, detail::network_lp(inst, hi_p).first.objective) : out.objective;
    out.kkt_residual = std::max(sol.primal_residual, sol.complementarity_residual);
    return out;
}

// ------------------------------------------------------------------------------------------------

struct ClassResult {
    double x_star = 0.0;
    int capacity = 0;
    bool unconstrained = false; // no resource consumed
    std::optional<TwoPricePolicy> policy;
    double reward = 0.0;
    double class_fluid = 0.0;  // lambda_i g_i(x*_i)
    double loss = 0.0;         // FLU of the decoupled instance minus reward
    std::string note;
};

struct Allocation {
    std::vector<ClassResult> classes;
    double fluid_objective = 0.0; // FLU(m) or FLU(m, n)
    double total_reward = 0.0;
    double loss = 0.0;
    double bound_rounding = 0.0;  // sum_i g_i'(0) / d_i
    double bound_class_losses = 0.0;
    int leftover = 0;             // single resource: c - sum_i c_i
};

struct DecomposeOptions {
    int threads = 1;
    TwoPriceOptions two_price;
};

inline Allocation decompose_and_price(const MultiClassInstance& inst, const DecomposeOptions& opt = {}) {
    FluidSolution fl = inst.is_network() ? solve_fluid_network(inst) : solve_fluid_multiclass(inst);
    const int m = inst.m();
    Allocation out;
    out.fluid_objective = fl.objective;
    out.classes.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        auto& k = inst.classes[size_t(i)];
        auto& r = out.classes[size_t(i)];
        r.x_star = fl.x[size_t(i)];
        r.class_fluid = k.lambda * k.g(r.x_star);
        double load = k.lambda * r.x_star * k.d;
        if (!inst.is_network()) {
            r.capacity = int(std::floor(load + 1e-9));
        } else {
            double cap = inf;
            for (size_t j = 0; j < inst.caps.size(); ++j) {
                double aij = inst.a[size_t(i)][j];
                if (aij > 0.0) cap = std::min(cap, std::floor(std::floor(load * aij + 1e-9) / aij + 1e-9));
            }
            r.unconstrained = !std::isfinite(cap);
            r.capacity = r.unconstrained ? 0 : int(cap);
        }
        double gp0 = k.g.right_derivative(0.0);
        out.bound_rounding += gp0 / k.d;
    }
    int total_cap = 0;
    for (auto& r : out.classes) total_cap += r.capacity;
    if (!inst.is_network()) out.leftover = int(std::floor(inst.c + 1e-9)) - total_cap;

    parallel_for(m, opt.threads, [&](int i) {
        auto& k = inst.classes[size_t(i)];
        auto& r = out.classes[size_t(i)];
        if (r.unconstrained) {
            r.reward = k.lambda * k.g(r.x_star);
            r.note = "consumes no resource";
            return;
        }
        if (r.capacity == 0) {
            r.reward = 0.0;
            r.policy = TwoPricePolicy{0.0, 0.0, 0};
            r.note = "priced out (capacity 0)";
            return;
        }
        ProblemInstance sub(r.capacity, k.lambda, k.d, k.g, true);
        if (k.shape) {
            auto tp = two_price_theoretical(sub, *k.shape);
            r.policy = tp;
            r.reward = steady_state(sub, tp.expand(sub.c)).reward;
        } else {
            TwoPriceOptions o = opt.two_price;
            o.threads = 1;
            auto rep = optimize_two_price(sub, o);
            r.policy = rep.two_price;
            r.reward = rep.reward;
        }
        r.loss = fluid_value(sub) - r.reward;
    });
    for (int i = 0; i < m; ++i) {
        auto& r = out.classes[size_t(i)];
        if (r.capacity == 0 && !r.unconstrained)
            warn("class " + std::to_string(i) + " gets 0 dedicated units and is priced out");
        out.total_reward += r.reward;
        out.bound_class_losses += r.loss;
    }
    out.loss = out.fluid_objective - out.total_reward;
    return out;
}

} // namespace reprice
