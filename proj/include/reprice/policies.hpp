#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "common.hpp"
#include "dual.hpp"
#include "equilibrium.hpp"
#include "lpsd.hpp"
#include "parallel.hpp"
#include "reward.hpp"

namespace reprice {

struct TwoPricePolicy {
    double x_L = 0.0, x_H = 0.0;
    int tau = 1;

    StockDependentPolicy expand(int c) const {
        std::vector<double> x(static_cast<size_t>(c));
        for (int j = 1; j <= c; ++j) x[size_t(j - 1)] = j <= tau ? x_L : x_H;
        return StockDependentPolicy(std::move(x));
    }
};

struct OptimizationReport {
    std::string method;
    StockDependentPolicy policy;
    std::optional<TwoPricePolicy> two_price;
    double reward = 0.0;
    double loss = 0.0;
    double lower = 0.0, upper = 0.0; // bracket on the optimum of the policy class
    int iterations = 0;
    std::string diagnostics;
    std::optional<DualCertificate> certificate;
};

inline StockDependentPolicy fluid_policy(const ProblemInstance& inst) {
    return StockDependentPolicy::constant(inst.c, std::min(1.0, inst.xstar));
}

namespace detail {

template <class F>
double golden_max(F&& f, double a, double b, double& fbest, double tol = 1e-11) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
    }
    if (f1 >= f2) {
        fbest = f1;
        return x1;
    }
    fbest = f2;
    return x2;
}

struct NmResult {
    std::array<double, 2> x{};
    double f = -inf;
    int evals = 0;
};

// Nelder-Mead maximization in 2-D
template <class F>
NmResult nelder_mead_max(F&& f, std::array<double, 2> x0, double edge, int max_evals = 400) {
    using P = std::array<double, 2>;
    std::array<P, 3> s{x0, P{x0[0] + edge, x0[1]}, P{x0[0], x0[1] + edge}};
    std::array<double, 3> v;
    NmResult out;
    for (int i = 0; i < 3; ++i) v[size_t(i)] = f(s[size_t(i)]);
    out.evals = 3;
    auto lin = [](const P& a, const P& b, double t) { return P{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}; };
    while (out.evals < max_evals) {
        std::array<int, 3> o{0, 1, 2};
        std::sort(o.begin(), o.end(), [&](int a, int b) { return v[size_t(a)] > v[size_t(b)]; });
        P best = s[size_t(o[0])], mid = s[size_t(o[1])], worst = s[size_t(o[2])];
        double fb = v[size_t(o[0])], fm = v[size_t(o[1])], fw = v[size_t(o[2])];
        double size = std::max(std::hypot(mid[0] - best[0], mid[1] - best[1]), std::hypot(worst[0] - best[0], worst[1] - best[1]));
        if (size < 1e-10 || std::abs(fb - fw) <= 1e-15 * (1.0 + std::abs(fb))) break;
        P cen{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
        P xr = lin(cen, worst, -1.0);
        double fr = f(xr);
        ++out.evals;
        if (fr > fb) {
            P xe = lin(cen, worst, -2.0);
            double fe = f(xe);
            ++out.evals;
            if (fe > fr)
                s[size_t(o[2])] = xe, v[size_t(o[2])] = fe;
            else
                s[size_t(o[2])] = xr, v[size_t(o[2])] = fr;
        } else if (fr > fm) {
            s[size_t(o[2])] = xr, v[size_t(o[2])] = fr;
        } else {
            P xc = fr > fw ? lin(cen, xr, 0.5) : lin(cen, worst, 0.5);
            double fc = f(xc);
            ++out.evals;
            if (fc > std::max(fr, fw)) {
                s[size_t(o[2])] = xc, v[size_t(o[2])] = fc;
            } else {
                for (int i : {o[1], o[2]}) {
                    s[size_t(i)] = lin(best, s[size_t(i)], 0.5);
                    v[size_t(i)] = f(s[size_t(i)]);
                    ++out.evals;
                }
            }
        }
    }
    int bi = 0;
    for (int i = 1; i < 3; ++i)
        if (v[size_t(i)] > v[size_t(bi)]) bi = i;
    out.x = s[size_t(bi)];
    out.f = v[size_t(bi)];
    return out;
}

inline std::vector<double> segment_breaks(const RewardFunction& g) {
    std::vector<double> b{0.0};
    if (g.is_piecewise_linear()) {
        for (double k : g.kinks()) b.push_back(k);
    } else if (g.quad_flat_from() < 1.0) {
        b.push_back(g.quad_flat_from());
    }
    b.push_back(1.0);
    return b;
}

} // namespace detail

/// Long-run reward of the static policy x: (1 - ErlangB(c, lambda x d)) lambda g(x).
inline double static_reward(const ProblemInstance& inst, double x) {
    x = std::clamp(x, 0.0, 1.0);
    return (1.0 - erlang_stockout(inst.c, inst.lambda * x * inst.d)) * inst.lambda * inst.g(x);
}

inline OptimizationReport optimize_static(const ProblemInstance& inst) {
    auto f = [&](double x) { return static_reward(inst, x); };
    double xf = std::min(1.0, inst.xstar);
    double best_x = xf, best = f(xf);
    auto consider = [&](double x, double v) {
        if (v > best) {
            best = v;
            best_x = x;
        }
    };
    auto br = detail::segment_breaks(inst.g);
    int evals = 0;
    for (size_t s = 0; s + 1 < br.size(); ++s) {
        double a = br[s], b = br[s + 1];
        consider(a, f(a));
        consider(b, f(b));
        const int starts = 16;
        for (int i = 0; i < starts; ++i) {
            double lo = a + (b - a) * i / starts, hi = a + (b - a) * (i + 1) / starts;
            double v;
            double x = detail::golden_max(f, lo, hi, v);
            consider(x, v);
            evals += 60;
        }
    }
    OptimizationReport rep;
    rep.method = "static-golden";
    rep.policy = StockDependentPolicy::constant(inst.c, best_x);
    rep.two_price = TwoPricePolicy{best_x, best_x, inst.c};
    rep.reward = best;
    rep.loss = fluid_value(inst) - best;
    rep.lower = best;
    rep.upper = fluid_value(inst);
    rep.iterations = evals;
    return rep;
}

/// x_L = x* - delta, x_H = x* + delta, tau = ceil(log c / log(1 + delta/x*)), delta = c^{-1/(alpha+1)}.
inline TwoPricePolicy two_price_theoretical(const ProblemInstance& inst, const ShapeModel& shape) {
    require(!(shape.alpha <= 1.0), "two_price_theoretical: alpha = 1 has no theoretical recipe; use optimize_two_price");
    double xs = inst.xstar;
    require(xs > 0.0 && xs < 1.0, "two_price_theoretical: need x* in (0,1)");
    double delta = std::isinf(shape.alpha) ? shape.eps : std::pow(double(inst.c), -1.0 / (shape.alpha + 1.0));
    double cap = std::min(xs / 2.0, (1.0 - xs) / 2.0);
    if (delta > cap) {
        warn("two_price_theoretical: delta " + std::to_string(delta) + " clamped to " + std::to_string(cap));
        delta = cap;
    }
    require(delta > 0.0, "two_price_theoretical: delta must be positive");
    double t = std::ceil(std::log(double(inst.c)) / std::log(1.0 + delta / xs));
    int tau = int(std::clamp(t, 1.0, double(inst.c)));
    return {xs - delta, xs + delta, tau};
}

struct TwoPriceOptions {
    unsigned long long seed = 12345;
    int threads = 1;
    int restarts = 4;
    int polish_top = 3; // tau values that get the random restarts
};

inline OptimizationReport optimize_two_price(const ProblemInstance& inst, const TwoPriceOptions& opt = {}) {
    const int c = inst.c;
    const double xc = std::min(inst.xstar, 1.0);
    const double fl = fluid_value(inst);
    OptimizationReport stat = optimize_static(inst);
    const double xs = stat.policy.x.empty() ? xc : stat.policy.x[0];

    auto project = [](std::array<double, 2> p, double& pen) {
        double l = std::clamp(p[0], 0.0, 1.0), h = std::clamp(p[1], 0.0, 1.0);
        pen = std::abs(p[0] - l) + std::abs(p[1] - h);
        if (l > h) {
            pen += l - h;
            l = h = 0.5 * (l + h);
        }
        return std::array<double, 2>{l, h};
    };
    auto objective = [&](int tau) {
        return [&, tau](std::array<double, 2> p) {
            double pen;
            auto q = project(p, pen);
            return two_price_eval(inst, q[0], q[1], tau).reward - pen * pen * (1.0 + fl);
        };
    };

    std::vector<int> taus;
    if (c <= 4096) {
        for (int t = 1; t <= c; ++t) taus.push_back(t);
    } else {
        std::set<int> st;
        for (int i = 0; i < 256; ++i) st.insert(int(std::lround(std::pow(double(c), i / 255.0))));
        taus.assign(st.begin(), st.end());
    }
    double dth = std::min({std::pow(double(c), -1.0 / 3.0), xc / 2.0, (1.0 - xc) / 2.0});
    const double edge = 0.25 * std::max(1e-3, std::min(xc, 1.0 - xc));

    struct Cand {
        int tau = 1;
        double xl = 0, xh = 0, f = -inf;
        int evals = 0;
    };
    auto better = [](const Cand& a, const Cand& b) {
        if (a.f != b.f) return a.f > b.f;
        if (a.tau != b.tau) return a.tau < b.tau;
        return a.xh < b.xh;
    };
    auto run_tau = [&](int tau, const std::vector<std::array<double, 2>>& seeds) {
        Cand best;
        best.tau = tau;
        auto f = objective(tau);
        for (auto& s0 : seeds) {
            auto r = detail::nelder_mead_max(f, s0, edge);
            best.evals += r.evals;
            double pen;
            auto q = project(r.x, pen);
            double v = two_price_eval(inst, q[0], q[1], tau).reward;
            Cand cnd{tau, q[0], q[1], v, 0};
            if (better(cnd, best)) {
                cnd.evals = best.evals;
                best = cnd;
            }
        }
        return best;
    };
    auto scan = [&](const std::vector<int>& ts) {
        std::vector<Cand> res(ts.size());
        parallel_for(int(ts.size()), opt.threads, [&](int i) {
            res[size_t(i)] = run_tau(ts[size_t(i)], {{xc - dth, xc + dth}, {xs, xs}});
        });
        return res;
    };

    std::vector<Cand> all = scan(taus);
    if (c > 4096) {
        int bt = std::max_element(all.begin(), all.end(), [&](auto& a, auto& b) { return better(b, a); })->tau;
        std::vector<int> extra;
        for (int t = std::max(1, bt - 3); t <= std::min(c, bt + 3); ++t)
            if (!std::binary_search(taus.begin(), taus.end(), t)) extra.push_back(t);
        auto more = scan(extra);
        all.insert(all.end(), more.begin(), more.end());
    }
    std::sort(all.begin(), all.end(), better);

    // random restarts on the most promising thresholds
    int top = std::min<int>(opt.polish_top, int(all.size()));
    std::vector<Cand> polished(static_cast<size_t>(top));
    parallel_for(top, opt.threads, [&](int i) {
        std::mt19937_64 rng(opt.seed + 7919ULL * unsigned(all[size_t(i)].tau));
        std::uniform_real_distribution<double> u(std::max(0.0, xc - 0.3), std::min(1.0, xc + 0.3));
        std::vector<std::array<double, 2>> seeds{{all[size_t(i)].xl, all[size_t(i)].xh}};
        for (int r = 0; r < opt.restarts; ++r) {
            double a = u(rng), b = u(rng);
            seeds.push_back({std::min(a, b), std::max(a, b)});
        }
        polished[size_t(i)] = run_tau(all[size_t(i)].tau, seeds);
    });
    Cand best = all.front();
    int evals = 0;
    for (auto& cnd : all) evals += cnd.evals;
    for (auto& cnd : polished) {
        evals += cnd.evals;
        if (better(cnd, best)) best = cnd;
    }
    // static is the x_L = x_H special case
    double fs = two_price_eval(inst, xs, xs, c).reward;
    if (fs > best.f) best = Cand{c, xs, xs, fs, 0};

    OptimizationReport rep;
    rep.method = "two-price-nelder-mead";
    rep.two_price = TwoPricePolicy{best.xl, best.xh, best.tau};
    rep.policy = rep.two_price->expand(c);
    rep.reward = best.f;
    rep.loss = fl - best.f;
    rep.lower = best.f;
    rep.upper = fl;
    rep.iterations = evals;
    return rep;
}

// ------------------------------------------------------------------------------------------------

struct SdOptions {
    enum class Method { Auto, Dense, Structured };
    Method method = Method::Auto;
    int m_start = 16;     // tangents/chords for non-piecewise g
    int m_max = 1024;
    double rel_tol = 1e-7; // bracket width relative to FLU
};

/// Support points for tangent/chord approximations: 3/4 log-clustered within 0.1 of x*, rest uniform.
inline std::vector<double> approximation_points(double xstar, int m) {
    std::set<double> pts{0.0, 1.0};
    double xc = std::clamp(xstar, 0.0, 1.0);
    pts.insert(xc);
    int local = (3 * m) / 4, side = std::max(1, local / 2);
    for (int i = 0; i < side; ++i) {
        double t = 0.1 * std::pow(1e-3, double(i) / std::max(1, side - 1));
        for (double x : {xc - t, xc + t})
            if (x > 0.0 && x < 1.0) pts.insert(x);
    }
    int uni = std::max(2, m - local);
    for (int i = 1; i < uni; ++i) pts.insert(double(i) / uni);
    return {pts.begin(), pts.end()};
}

inline std::vector<AffinePiece> tangent_pieces(const RewardFunction& g, const std::vector<double>& pts) {
    std::vector<AffinePiece> out;
    for (double p : pts) {
        double s = p < 1.0 ? g.right_derivative(p) : g.left_derivative(p);
        out.push_back({g(p) - s * p, s});
    }
    return out;
}

inline RewardFunction chord_minorant(const RewardFunction& g, const std::vector<double>& pts) {
    std::vector<std::pair<double, double>> tab;
    for (double p : pts) tab.emplace_back(p, g(p));
    tab.front().second = 0.0;
    return RewardFunction::tabulated(tab);
}

namespace detail {
// one improvement step: unit values from the policy's evaluation equations
//   D_1 = rho d / c,  D_{j+1} = (rho - lambda (g(x_j) - x_j D_j)) d / (c - j)
// then x_j = argmax g(x) - x D_j. Values are clamped monotone as in the LPSD recursion.
inline StockDependentPolicy improve_policy(const ProblemInstance& inst, const StockDependentPolicy& pol, double rho) {
    const int c = inst.c;
    std::vector<double> x(static_cast<size_t>(c));
    double D = rho * inst.d / c, Dpol = inf;
    for (int j = 1; j <= c; ++j) {
        Dpol = std::clamp(D, 0.0, Dpol);
        x[size_t(j - 1)] = inst.g.best_response(Dpol).x;
        if (j < c) {
            double xj = pol.at(j);
            D = (rho - inst.lambda * (inst.g(xj) - xj * D)) * inst.d / double(c - j);
        }
    }
    return StockDependentPolicy(std::move(x));
}
} // namespace detail

inline OptimizationReport optimize_stock_dependent(const ProblemInstance& inst, const SdOptions& opt = {}) {
    const double fl = fluid_value(inst);
    OptimizationReport rep;
    if (inst.g.is_piecewise_linear()) {
        DualProgram prog = lpsd_program(inst, inst.g.pieces());
        bool dense = opt.method == SdOptions::Method::Dense;
        LpsdSolution sol = dense ? solve_lpsd_dense(inst, prog) : solve_lpsd_structured(inst, prog);
        auto ss = steady_state(inst, sol.policy);
        auto chk = verify_dual(sol.certificate);
        rep.method = sol.method;
        rep.policy = sol.policy;
        rep.reward = ss.reward;
        rep.lower = ss.reward;
        rep.upper = std::max(sol.objective, ss.reward);
        rep.iterations = sol.iterations;
        rep.diagnostics = std::string("dual check ") + (chk.pass ? "PASS" : "FAIL") +
                          " max_violation=" + std::to_string(chk.max_violation);
        rep.certificate = std::move(sol.certificate);
    } else {
        double lower = -inf, upper = inf;
        StockDependentPolicy best_pol;
        int m = std::max(2, opt.m_start), iters = 0;
        std::string diag;
        std::optional<DualCertificate> cert;
        while (true) {
            auto pts = approximation_points(inst.xstar, m);
            auto tan = tangent_pieces(inst.g, pts);
            auto up = solve_lpsd_structured(inst, lpsd_program(inst, tan));
            auto chord = chord_minorant(inst.g, pts);
            auto dn = solve_lpsd_structured(inst, lpsd_program(inst, chord.pieces()));
            iters += up.iterations + dn.iterations;
            upper = std::min(upper, up.objective);
            for (auto* pol : {&dn.policy, &up.policy}) {
                double r = steady_state(inst, *pol).reward;
                if (r > lower) {
                    lower = r;
                    best_pol = *pol;
                }
            }
            auto chk = verify_dual(up.certificate);
            diag = "m=" + std::to_string(m) + " tangent dual " + (chk.pass ? "PASS" : "FAIL");
            cert = std::move(up.certificate);
            if (upper - lower <= opt.rel_tol * fl || m >= opt.m_max) break;
            m = std::min(2 * m, opt.m_max);
        }
        // polish the lower end with policy iteration on the true g
        for (int it = 0; it < 20; ++it) {
            auto cand = detail::improve_policy(inst, best_pol, lower);
            double r = steady_state(inst, cand).reward;
            if (!(r > lower * (1.0 + 1e-15))) break;
            lower = r;
            best_pol = std::move(cand);
            ++iters;
        }
        upper = std::max(upper, lower);
        rep.method = "lpsd-tangent-chord";
        rep.policy = best_pol;
        rep.reward = lower;
        rep.lower = lower;
        rep.upper = std::max(upper, lower);
        rep.iterations = iters;
        rep.diagnostics = diag;
        rep.certificate = std::move(cert);
    }
    rep.loss = fl - rep.reward;
    return rep;
}

// ------------------------------------------------------------------------------------------------

/// lambda sum_j pi_j g(s_j pi_{j-1} / pi_j), with 0 g(0/0) := 0.
inline double lpsd_objective(const ProblemInstance& inst, const std::vector<double>& pi) {
    double r = 0.0;
    for (int j = 1; j <= inst.c; ++j) {
        double pj = pi[size_t(j)];
        if (pj <= 0.0) continue;
        r += pj * inst.g(std::min(1.0, inst.s(j) * pi[size_t(j - 1)] / pj));
    }
    return inst.lambda * r;
}

struct ConcavityReport {
    int trials = 0;
    int violations = 0;
    double worst = 0.0;     // most negative midpoint gap
    double min_opt_pi = 0.0;
    bool positivity_checked = false;
    bool positivity_ok = true;
};

inline ConcavityReport concavity_selfcheck(const ProblemInstance& inst, int trials, unsigned long long seed = 1) {
    ConcavityReport rep;
    rep.trials = trials;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1e-3, 1.0);
    const double tol = 1e-9 * (1.0 + fluid_value(inst));
    auto random_pi = [&] {
        std::vector<double> x(static_cast<size_t>(inst.c));
        for (auto& v : x) v = u(rng);
        return steady_state(inst, StockDependentPolicy(std::move(x))).pi;
    };
    for (int t = 0; t < trials; ++t) {
        auto a = random_pi(), b = random_pi();
        std::vector<double> m(a.size());
        for (size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
        double gap = lpsd_objective(inst, m) - 0.5 * (lpsd_objective(inst, a) + lpsd_objective(inst, b));
        rep.worst = std::min(rep.worst, gap);
        if (gap < -tol) ++rep.violations;
    }
    if (inst.g.right_derivative(0.0) > 0.0) {
        rep.positivity_checked = true;
        auto sd = optimize_stock_dependent(inst);
        auto pi = steady_state(inst, sd.policy).pi;
        rep.min_opt_pi = *std::min_element(pi.begin(), pi.end());
        rep.positivity_ok = rep.min_opt_pi > 0.0;
    }
    return rep;
}

} // namespace reprice
