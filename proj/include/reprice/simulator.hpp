#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "common.hpp"
#include "equilibrium.hpp"
#include "parallel.hpp"

namespace reprice {

class DurationDistribution {
public:
    enum class Kind { Exponential, Deterministic, Uniform, LogNormal, HyperExponential };

    static DurationDistribution exponential(double mean) {
        require(mean > 0.0 && std::isfinite(mean), "exponential duration needs a positive mean");
        DurationDistribution d(Kind::Exponential);
        d.p_ = {mean};
        return d;
    }
    static DurationDistribution deterministic(double value) {
        require(value > 0.0 && std::isfinite(value), "deterministic duration must be positive");
        DurationDistribution d(Kind::Deterministic);
        d.p_ = {value};
        return d;
    }
    static DurationDistribution uniform(double lo, double hi) {
        require(lo >= 0.0 && hi > lo && std::isfinite(hi), "uniform duration needs 0 <= lo < hi");
        DurationDistribution d(Kind::Uniform);
        d.p_ = {lo, hi};
        return d;
    }
    static DurationDistribution lognormal(double mean, double cv) {
        require(mean > 0.0 && cv > 0.0, "lognormal duration needs mean > 0 and cv > 0");
        DurationDistribution d(Kind::LogNormal);
        double s2 = std::log1p(cv * cv);
        d.p_ = {mean, cv, std::log(mean) - s2 / 2.0, std::sqrt(s2)};
        return d;
    }
    static DurationDistribution hyperexponential(std::vector<double> means, std::vector<double> weights) {
        require(!means.empty() && means.size() == weights.size(), "hyperexponential: means and weights must match");
        double w = 0.0;
        for (size_t i = 0; i < means.size(); ++i) {
            require(means[i] > 0.0, "hyperexponential: phase means must be positive");
            require(weights[i] > 0.0, "hyperexponential: phase weights must be positive");
            w += weights[i];
        }
        require(std::abs(w - 1.0) <= 1e-12, "hyperexponential: weights sum to " + std::to_string(w) + ", not 1");
        DurationDistribution d(Kind::HyperExponential);
        d.p_ = std::move(means);
        d.w_ = std::move(weights);
        return d;
    }
    /// Two balanced phases (p1 m1 = p2 m2) with the given mean and cv >= 1.
    static DurationDistribution hyperexponential_with_cv(double mean, double cv) {
        require(cv >= 1.0, "hyperexponential needs cv >= 1");
        double c2 = cv * cv;
        double p1 = 0.5 * (1.0 + std::sqrt((c2 - 1.0) / (c2 + 1.0)));
        double p2 = 1.0 - p1;
        if (p2 <= 0.0) return exponential(mean);
        return hyperexponential({mean / (2.0 * p1), mean / (2.0 * p2)}, {p1, p2});
    }

    Kind kind() const { return kind_; }

    double mean() const {
        switch (kind_) {
        case Kind::Exponential:
        case Kind::Deterministic:
        case Kind::LogNormal: return p_[0];
        case Kind::Uniform: return 0.5 * (p_[0] + p_[1]);
        case Kind::HyperExponential: {
            double m = 0.0;
            for (size_t i = 0; i < p_.size(); ++i) m += w_[i] * p_[i];
            return m;
        }
        }
        return 0.0;
    }

    std::string name() const {
        switch (kind_) {
        case Kind::Exponential: return "exponential";
        case Kind::Deterministic: return "deterministic";
        case Kind::Uniform: return "uniform";
        case Kind::LogNormal: return "lognormal(cv=" + fmt_num(p_[1]) + ")";
        case Kind::HyperExponential: return "hyperexponential(cv=" + fmt_num(cv()) + ")";
        }
        return "?";
    }

    double cv() const {
        switch (kind_) {
        case Kind::Exponential: return 1.0;
        case Kind::Deterministic: return 0.0;
        case Kind::Uniform: return (p_[1] - p_[0]) / std::sqrt(12.0) / mean();
        case Kind::LogNormal: return p_[1];
        case Kind::HyperExponential: {
            double m2 = 0.0, m = mean();
            for (size_t i = 0; i < p_.size(); ++i) m2 += w_[i] * 2.0 * p_[i] * p_[i];
            return std::sqrt(m2 - m * m) / m;
        }
        }
        return 0.0;
    }

    template <class Rng>
    double sample(Rng& rng) const {
        std::uniform_real_distribution<double> U(0.0, 1.0);
        switch (kind_) {
        case Kind::Exponential: return std::exponential_distribution<double>(1.0 / p_[0])(rng);
        case Kind::Deterministic: return p_[0];
        case Kind::Uniform: {
            double v;
            do v = p_[0] + (p_[1] - p_[0]) * U(rng);
            while (v <= 0.0);
            return v;
        }
        case Kind::LogNormal: return std::lognormal_distribution<double>(p_[2], p_[3])(rng);
        case Kind::HyperExponential: {
            double u = U(rng), acc = 0.0;
            size_t i = 0;
            for (; i + 1 < p_.size(); ++i) {
                acc += w_[i];
                if (u < acc) break;
            }
            return std::exponential_distribution<double>(1.0 / p_[i])(rng);
        }
        }
        return 0.0;
    }

private:
    explicit DurationDistribution(Kind k) : kind_(k) {}
    static std::string fmt_num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return buf;
    }
    Kind kind_;
    std::vector<double> p_, w_;
};

struct SimConfig {
    unsigned long long seed = 1;
    double horizon = 0.0; // 0 means 1e5 * d
    double warmup = -1.0; // < 0 means 10% of horizon
    int batches = 20;
};

struct SimulationRun {
    unsigned long long seed = 0;
    double horizon = 0.0, warmup = 0.0;
    std::vector<double> empirical_pi;
    double reward_rate = 0.0;
    long long events = 0;
    double half_width = 0.0;   // 95% batch-means half-width of the reward rate
    double busy_mean = 0.0;    // time-average units in use
    double little_rhs = 0.0;   // lambda * sum_j pi_j x_j * d
};

namespace detail {
inline std::mt19937_64 stream_rng(unsigned long long seed, unsigned stream) {
    std::seed_seq seq{unsigned(seed & 0xffffffffu), unsigned(seed >> 32), stream};
    return std::mt19937_64(seq);
}
// two-sided 95% Student t quantile
inline double t975(int dof) {
    static const double tab[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                 2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (dof < 1) return inf;
    if (dof <= 30) return tab[dof - 1];
    return 1.96 + 2.4 / dof;
}
} // namespace detail

inline SimulationRun simulate(const ProblemInstance& inst, const StockDependentPolicy& pol,
                              const DurationDistribution& dur, const SimConfig& cfg) {
    pol.validate(inst.c);
    const double dm = dur.mean();
    require(dm > 0.0, "simulate: duration mean must be positive");
    require(std::abs(dm - inst.d) <= 1e-9 * std::max(1.0, inst.d),
            "simulate: duration mean " + std::to_string(dm) + " differs from d = " + std::to_string(inst.d));
    const double T = cfg.horizon > 0.0 ? cfg.horizon : 1e5 * inst.d;
    const double W = cfg.warmup >= 0.0 ? cfg.warmup : 0.1 * T;
    require(T > W, "simulate: horizon must exceed warmup");
    require(cfg.batches >= 2, "simulate: need at least 2 batches");

    const int c = inst.c;
    const double lam = inst.lambda;
    auto arr = detail::stream_rng(cfg.seed, 1), thin = detail::stream_rng(cfg.seed, 2),
         durs = detail::stream_rng(cfg.seed, 3);
    std::exponential_distribution<double> gap(lam);
    std::uniform_real_distribution<double> U(0.0, 1.0);

    // reward rate and admission probability by stock level
    std::vector<double> rate(size_t(c) + 1, 0.0), xs(size_t(c) + 1, 0.0);
    for (int j = 1; j <= c; ++j) {
        xs[size_t(j)] = pol.at(j);
        rate[size_t(j)] = lam * inst.g(pol.at(j));
    }

    std::priority_queue<double, std::vector<double>, std::greater<>> departures;
    std::vector<double> occ(size_t(c) + 1, 0.0);
    const int B = cfg.batches;
    const double blen = (T - W) / B;
    std::vector<double> batch(size_t(B), 0.0);

    int S = c;
    double t = 0.0, next_arrival = gap(arr);
    long long events = 0;
    // accumulate state S over [a, b] clipped to [W, T]
    auto accrue = [&](double a, double b) {
        a = std::max(a, W);
        b = std::min(b, T);
        if (b <= a) return;
        occ[size_t(S)] += b - a;
        double r = rate[size_t(S)];
        if (r == 0.0) return;
        int k0 = std::min(B - 1, int((a - W) / blen)), k1 = std::min(B - 1, int((b - W) / blen));
        for (int k = k0; k <= k1; ++k) {
            double lo = std::max(a, W + k * blen), hi = (k == B - 1) ? b : std::min(b, W + (k + 1) * blen);
            if (hi > lo) batch[size_t(k)] += r * (hi - lo);
        }
    };
    while (true) {
        double td = departures.empty() ? inf : departures.top();
        double tn = std::min(td, next_arrival);
        if (tn >= T) {
            accrue(t, T);
            break;
        }
        accrue(t, tn);
        t = tn;
        ++events;
        if (td <= next_arrival) {
            departures.pop();
            ++S;
        } else {
            if (S > 0 && U(thin) < xs[size_t(S)]) {
                --S;
                departures.push(t + dur.sample(durs));
            }
            next_arrival = t + gap(arr);
        }
    }

    SimulationRun run;
    run.seed = cfg.seed;
    run.horizon = T;
    run.warmup = W;
    run.events = events;
    double tot = 0.0;
    for (double v : occ) tot += v;
    run.empirical_pi.resize(occ.size());
    double busy = 0.0, adm = 0.0;
    for (int j = 0; j <= c; ++j) {
        double p = occ[size_t(j)] / tot;
        run.empirical_pi[size_t(j)] = p;
        busy += p * (c - j);
        adm += p * xs[size_t(j)];
    }
    run.busy_mean = busy;
    run.little_rhs = lam * adm * inst.d;
    double sum = 0.0;
    for (double& v : batch) {
        v /= blen;
        sum += v;
    }
    run.reward_rate = sum / B;
    double var = 0.0;
    for (double v : batch) var += (v - run.reward_rate) * (v - run.reward_rate);
    var /= (B - 1);
    run.half_width = detail::t975(B - 1) * std::sqrt(var / B);
    return run;
}

/// Independent replications with seeds seed + i.
inline std::vector<SimulationRun> simulate_replications(const ProblemInstance& inst, const StockDependentPolicy& pol,
                                                        const DurationDistribution& dur, const SimConfig& cfg, int n,
                                                        int threads = 1) {
    std::vector<SimulationRun> out(static_cast<size_t>(n));
    parallel_for(n, threads, [&](int i) {
        SimConfig c = cfg;
        c.seed = cfg.seed + (unsigned long long)i;
        out[size_t(i)] = simulate(inst, pol, dur, c);
    });
    return out;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    require(p.size() == q.size(), "total_variation: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

struct InsensitivityRow {
    std::string distribution;
    double tv = 0.0;
    double reward_error = 0.0; // relative to the analytic reward
    bool pass = false;
    bool precondition_violated = false;
    std::string note;
    SimulationRun run;
};

struct InsensitivityReport {
    std::vector<InsensitivityRow> rows;
    double analytic_reward = 0.0;
    bool pass = false;
};

inline InsensitivityReport insensitivity_test(const ProblemInstance& inst, const StockDependentPolicy& pol,
                                              const std::vector<DurationDistribution>& durs, const SimConfig& cfg,
                                              int threads = 1) {
    auto ss = steady_state(inst, pol);
    InsensitivityReport rep;
    rep.analytic_reward = ss.reward;
    rep.rows.resize(durs.size());
    parallel_for(int(durs.size()), threads, [&](int i) {
        auto& row = rep.rows[size_t(i)];
        const auto& dd = durs[size_t(i)];
        row.distribution = dd.name();
        if (std::abs(dd.mean() - inst.d) > 1e-9 * std::max(1.0, inst.d)) {
            row.precondition_violated = true;
            row.note = "duration mean " + std::to_string(dd.mean()) + " != d = " + std::to_string(inst.d);
            return;
        }
        row.run = simulate(inst, pol, dd, cfg);
        row.tv = total_variation(row.run.empirical_pi, ss.pi);
        row.reward_error = ss.reward > 0.0 ? std::abs(row.run.reward_rate - ss.reward) / ss.reward
                                           : std::abs(row.run.reward_rate);
        row.pass = row.tv <= 0.02 && row.reward_error <= 0.01;
    });
    rep.pass = !rep.rows.empty();
    for (auto& r : rep.rows) rep.pass = rep.pass && r.pass;
    return rep;
}

} // namespace reprice
