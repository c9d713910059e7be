#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "common.hpp"
#include "equilibrium.hpp"
#include "parallel.hpp"
#include "policies.hpp"
#include "reward.hpp"

namespace reprice {

inline const std::vector<std::string>& policy_tags() {
    static const std::vector<std::string> tags{"fluid", "static_opt", "two_price_opt", "two_price_theory", "sd_opt"};
    return tags;
}

inline int policy_rank(const std::string& tag) {
    auto& t = policy_tags();
    auto it = std::find(t.begin(), t.end(), tag);
    require(it != t.end(), "unknown policy '" + tag + "' (expected fluid, static_opt, two_price_opt, two_price_theory, sd_opt)");
    return int(it - t.begin());
}

struct ResultRow {
    int c = 0;
    double lambda = 0.0, d = 0.0;
    std::string policy;
    double reward = 0.0, loss = 0.0, ratio = 0.0;
    std::string slope_group;
    unsigned long long seed = 0;
    double wall_ms = 0.0;
    // not in the CSV
    double flu = 0.0;
    std::string method, diagnostics;
    OptimizationReport report;
};

inline const char* csv_header() { return "c,lambda,d,policy,reward,loss,ratio,slope_group,seed,wall_ms"; }

inline std::string csv_line(const ResultRow& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%s,%.12g,%.12g,%.12g,%s,%llu,%.3f", r.c, r.lambda, r.d, r.policy.c_str(),
                  r.reward, r.loss, r.ratio, r.slope_group.c_str(), r.seed, r.wall_ms);
    return buf;
}

struct RunOptions {
    unsigned long long seed = 12345;
    bool timing = false;
    double shape_eps = 0.1; // neighbourhood for classify_shape, clamped inside (0, min(x*, 1-x*))
    SdOptions sd;
};

/// One policy on one instance.
inline ResultRow run_policy(const ProblemInstance& inst, const std::string& tag, const RunOptions& opt = {}) {
    policy_rank(tag);
    auto t0 = std::chrono::steady_clock::now();
    OptimizationReport rep;
    if (tag == "fluid") {
        rep.method = "fluid";
        rep.policy = fluid_policy(inst);
        auto ss = steady_state(inst, rep.policy);
        rep.reward = rep.lower = rep.upper = ss.reward;
        rep.two_price = TwoPricePolicy{rep.policy.x[0], rep.policy.x[0], inst.c};
    } else if (tag == "static_opt") {
        rep = optimize_static(inst);
    } else if (tag == "two_price_opt") {
        TwoPriceOptions o;
        o.seed = opt.seed;
        rep = optimize_two_price(inst, o);
    } else if (tag == "two_price_theory") {
        double xs = inst.xstar;
        require(xs > 0.0 && xs < 1.0, "two_price_theory needs x* in (0,1)");
        double eps = std::min(opt.shape_eps, 0.5 * std::min(xs, 1.0 - xs));
        ShapeModel sh = classify_shape(inst.g, xs, eps);
        auto tp = two_price_theoretical(inst, sh);
        rep.method = "two-price-theory";
        rep.two_price = tp;
        rep.policy = tp.expand(inst.c);
        rep.reward = rep.lower = rep.upper = steady_state(inst, rep.policy).reward;
        rep.diagnostics = "alpha=" + std::to_string(sh.alpha);
    } else {
        rep = optimize_stock_dependent(inst, opt.sd);
    }
    auto t1 = std::chrono::steady_clock::now();
    ResultRow row;
    row.c = inst.c;
    row.lambda = inst.lambda;
    row.d = inst.d;
    row.policy = tag;
    row.flu = fluid_value(inst);
    row.reward = rep.reward;
    row.loss = row.flu - rep.reward;
    row.ratio = row.flu > 0.0 ? rep.reward / row.flu : 1.0;
    row.seed = opt.seed;
    row.wall_ms = opt.timing ? std::chrono::duration<double, std::milli>(t1 - t0).count() : 0.0;
    row.method = rep.method;
    row.diagnostics = rep.diagnostics;
    row.report = std::move(rep);
    return row;
}

// ------------------------------------------------------------------------------------------------

struct SlopeEstimate {
    std::string policy;
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    int points = 0;
};

/// Least-squares slope of log(loss) on log(c); nonpositive losses are dropped.
inline SlopeEstimate loglog_slope(const std::vector<double>& c, const std::vector<double>& loss) {
    require(c.size() == loss.size(), "loglog_slope: size mismatch");
    std::vector<double> lx, ly;
    for (size_t i = 0; i < c.size(); ++i)
        if (c[i] > 0.0 && loss[i] > 0.0) {
            lx.push_back(std::log(c[i]));
            ly.push_back(std::log(loss[i]));
        }
    require(lx.size() >= 2, "loglog_slope: need at least two positive points");
    auto f = detail::least_squares(lx, ly);
    SlopeEstimate s;
    s.slope = f.slope;
    s.intercept = f.intercept;
    s.r2 = f.r2;
    s.points = int(lx.size());
    return s;
}

struct ScaleSpec {
    int c0 = 1000;
    double lambda0 = 2000.0, d = 1.0;
    RewardFunction g;
    std::vector<double> scales{1, 2, 5, 10, 50};
    std::vector<std::string> policies{"fluid", "static_opt", "two_price_opt", "sd_opt"};
    std::string group = "family";
};

struct ScaleResult {
    std::vector<ResultRow> rows;
    std::vector<SlopeEstimate> slopes;
};

inline ScaleResult run_scale(const ScaleSpec& spec, const RunOptions& opt = {}, int threads = 1) {
    require(spec.scales.size() >= 3, "scale experiment needs at least 3 scale points");
    for (size_t i = 0; i < spec.scales.size(); ++i) {
        require(spec.scales[i] > 0.0, "scale factors must be positive");
        require(i == 0 || spec.scales[i] > spec.scales[i - 1], "scale factors must be increasing");
    }
    for (auto& p : spec.policies) policy_rank(p);
    struct Job {
        size_t s, p;
    };
    std::vector<Job> jobs;
    for (size_t s = 0; s < spec.scales.size(); ++s)
        for (size_t p = 0; p < spec.policies.size(); ++p) jobs.push_back({s, p});
    ScaleResult out;
    out.rows.resize(jobs.size());
    parallel_for(int(jobs.size()), threads, [&](int k) {
        auto [s, p] = jobs[size_t(k)];
        int c = int(std::lround(spec.c0 * spec.scales[s]));
        ProblemInstance inst(c, spec.lambda0 * spec.scales[s], spec.d, spec.g, s > 0);
        out.rows[size_t(k)] = run_policy(inst, spec.policies[p], opt);
        out.rows[size_t(k)].slope_group = spec.group;
    });
    std::stable_sort(out.rows.begin(), out.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.c != b.c) return a.c < b.c;
        return policy_rank(a.policy) < policy_rank(b.policy);
    });
    for (auto& p : spec.policies) {
        std::vector<double> cs, ls;
        for (auto& r : out.rows)
            if (r.policy == p) {
                cs.push_back(r.c);
                ls.push_back(r.loss);
            }
        SlopeEstimate e;
        try {
            e = loglog_slope(cs, ls);
        } catch (const invalid_input&) {
            warn("policy " + p + ": fewer than two positive losses, slope not fitted");
            e.slope = std::nan("");
        }
        e.policy = p;
        out.slopes.push_back(e);
    }
    return out;
}

// ------------------------------------------------------------------------------------------------

/// Random reward functions at the admission-probability level; g is the served WTP mass.
///   alpha1:    6 distinct WTP values from 1..10, equal shares (kink at x = 1/2)
///   alpha_inf: 5 distinct WTP values from 1..10, equal shares
///   uniform:   WTP ~ Uniform[a, b], a < b from 1..10
///   single:    one WTP value (g linear)
inline RewardFunction random_small_stock_g(const std::string& family, unsigned long long seed, int index) {
    std::seed_seq seq{unsigned(seed & 0xffffffffu), unsigned(seed >> 32), unsigned(index)};
    std::mt19937_64 rng(seq);
    std::vector<double> vals(10);
    std::iota(vals.begin(), vals.end(), 1.0);
    std::shuffle(vals.begin(), vals.end(), rng);
    auto discrete = [&](int n) {
        std::vector<double> v(vals.begin(), vals.begin() + n), p(size_t(n), 1.0 / n);
        // shares 1/n each; validate() wants the exact sum 1
        p.back() = 1.0 - std::accumulate(p.begin(), p.end() - 1, 0.0);
        return welfare_from_wtp(WtpDistribution::discrete(v, p));
    };
    if (family == "alpha1") return discrete(6);
    if (family == "alpha_inf") return discrete(5);
    if (family == "single") return discrete(1);
    if (family == "uniform") {
        double a = std::min(vals[0], vals[1]), b = std::max(vals[0], vals[1]);
        return welfare_from_wtp(WtpDistribution::uniform(a, b));
    }
    throw invalid_input("unknown small-stock family '" + family + "' (expected alpha1, alpha_inf, uniform, single)");
}

struct SmallStockSpec {
    std::string family = "alpha1";
    int instances = 100;
    std::vector<int> cs{20, 40, 60, 80, 100};
    double d = 1.0;
    unsigned long long seed = 2024;
};

struct SmallStockSummary {
    int c = 0;
    std::map<std::string, double> mean_ratio;
    int ordering_violations = 0;     // beyond 1e-9 relative
    double worst_ordering_gap = 0.0; // largest relative inversion seen
};

struct SmallStockResult {
    std::vector<ResultRow> rows;
    std::vector<SmallStockSummary> summary;
};

inline SmallStockResult run_small_stock(const SmallStockSpec& spec, const RunOptions& opt = {}, int threads = 1) {
    require(spec.instances >= 1, "small-stock needs at least one instance");
    static const std::vector<std::string> order{"fluid", "static_opt", "two_price_opt", "sd_opt"};
    const int nc = int(spec.cs.size());
    for (int c : spec.cs) require(c >= 1, "small-stock capacities must be >= 1");
    std::vector<std::vector<ResultRow>> per(size_t(spec.instances) * size_t(nc));
    parallel_for(spec.instances * nc, threads, [&](int k) {
        int i = k / nc, ci = k % nc;
        RewardFunction g = random_small_stock_g(spec.family, spec.seed, i);
        int c = spec.cs[size_t(ci)];
        // x* = 1/2
        ProblemInstance inst(c, 2.0 * c / spec.d, spec.d, g, true);
        RunOptions o = opt;
        o.seed = spec.seed + (unsigned long long)i;
        auto& rows = per[size_t(k)];
        for (auto& p : order) {
            rows.push_back(run_policy(inst, p, o));
            rows.back().slope_group = spec.family;
        }
    });
    SmallStockResult out;
    for (int ci = 0; ci < nc; ++ci) {
        SmallStockSummary s;
        s.c = spec.cs[size_t(ci)];
        for (int i = 0; i < spec.instances; ++i) {
            auto& rows = per[size_t(i) * size_t(nc) + size_t(ci)];
            for (size_t p = 0; p < rows.size(); ++p) {
                s.mean_ratio[rows[p].policy] += rows[p].ratio / spec.instances;
                if (p > 0) {
                    double gap = (rows[p - 1].reward - rows[p].reward) / std::max(1e-300, rows[p].flu);
                    s.worst_ordering_gap = std::max(s.worst_ordering_gap, gap);
                    if (gap > 1e-9) ++s.ordering_violations;
                }
            }
        }
        out.summary.push_back(std::move(s));
    }
    for (int ci = 0; ci < nc; ++ci)
        for (int i = 0; i < spec.instances; ++i)
            for (auto& r : per[size_t(i) * size_t(nc) + size_t(ci)]) out.rows.push_back(std::move(r));
    return out;
}

} // namespace reprice
