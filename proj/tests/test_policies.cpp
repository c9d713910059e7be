#include <gtest/gtest.h>

#include <random>

#include "reprice/policies.hpp"

using namespace reprice;

namespace {

RewardFunction kink() { return RewardFunction::min_affine({{0, 2}, {1, 0}}); }
RewardFunction three_type() { return revenue_from_discrete_wtp(WtpDistribution::discrete({3.0, 2.0, 1.0}, {0.2, 0.4, 0.4})); }

RewardFunction random_pwl(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int n = 1 + int(rng() % 4);
    std::vector<AffinePiece> p{{0.0, 1.0 + 3.0 * U(rng)}};
    for (int i = 1; i < n; ++i) p.push_back({U(rng), 2.0 * U(rng)});
    return RewardFunction::min_affine(p);
}

// brute-force best static x on a fine grid
double grid_static(const ProblemInstance& inst, int n = 200000) {
    double best = 0.0;
    for (int i = 0; i <= n; ++i) best = std::max(best, static_reward(inst, double(i) / n));
    return best;
}

} // namespace

TEST(Policies, FluidPolicy) {
    ProblemInstance inst(2, 4.0, 1.0, kink());
    auto p = fluid_policy(inst);
    ASSERT_EQ(p.size(), 2);
    EXPECT_EQ(p.at(1), 0.5);
    EXPECT_EQ(p.at(2), 0.5);
    ProblemInstance c3(1000, 2000.0, 1.0, three_type());
    EXPECT_NEAR(steady_state(c3, fluid_policy(c3)).reward, 2047.8949729, 1e-3);
}

TEST(Policies, StaticMatchesGridSearch) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        int c = 1 + int(rng() % 60);
        ProblemInstance inst(c, c * (0.6 + 2.0 * U(rng)), 1.0, t % 3 == 0 ? RewardFunction::quadratic(2, -1) : random_pwl(rng), true);
        auto rep = optimize_static(inst);
        double ref = grid_static(inst);
        EXPECT_GE(rep.reward, ref - 1e-7 * std::max(1.0, ref));
        EXPECT_GE(rep.reward, steady_state(inst, fluid_policy(inst)).reward - 1e-9);
        EXPECT_LE(rep.reward, fluid_value(inst) + 1e-9);
        EXPECT_NEAR(rep.reward, steady_state(inst, rep.policy).reward, 1e-9 * std::max(1.0, rep.reward));
    }
}

TEST(Policies, StaticOnKinkedInstance) {
    ProblemInstance inst(1000, 2000.0, 1.0, kink());
    auto rep = optimize_static(inst);
    EXPECT_GE(rep.reward, 1950.376);
    EXPECT_LE(rep.reward, 1952.2);
}

TEST(Policies, StaticLossVanishesWithExcessSupply) {
    // Uniform[0,1] WTP revenue is flat beyond 1/2, so x* = 0.7 sits where g' = 0
    auto g = revenue_from_uniform_wtp(WtpDistribution::uniform(0.0, 1.0));
    ProblemInstance inst(200, 200.0 / 0.7, 1.0, g);
    EXPECT_LE(optimize_static(inst).loss, 1e-3);
}

TEST(Policies, StaticLossBoundedWhenLinearAtXstar) {
    auto g = RewardFunction::min_affine({{0, 1}, {0.5, 0}});
    std::vector<double> losses;
    for (int c : {100, 500, 1000, 5000}) {
        ProblemInstance inst(c, c / 0.4, 1.0, g);
        losses.push_back(optimize_static(inst).loss);
    }
    double lo = *std::min_element(losses.begin(), losses.end()), hi = *std::max_element(losses.begin(), losses.end());
    EXPECT_GT(lo, 0.0);
    EXPECT_LT(hi / lo, 1.5);
}

TEST(Policies, TwoPriceTheoreticalParameters) {
    auto q = RewardFunction::quadratic(2, -1);
    ProblemInstance inst(10000, 20000.0, 1.0, q);
    ShapeModel s;
    s.alpha = 2.0;
    auto tp = two_price_theoretical(inst, s);
    EXPECT_NEAR(0.5 - tp.x_L, 0.046416, 1e-6);
    EXPECT_NEAR(tp.x_H - 0.5, 0.046416, 1e-6);
    EXPECT_EQ(tp.tau, 104);

    ProblemInstance small(100, 200.0, 1.0, kink());
    ShapeModel si;
    si.alpha = inf;
    si.eps = 0.1;
    auto t2 = two_price_theoretical(small, si);
    EXPECT_NEAR(t2.x_L, 0.4, 1e-15);
    EXPECT_NEAR(t2.x_H, 0.6, 1e-15);
    EXPECT_EQ(t2.tau, 26);

    ProblemInstance big(1000000, 2000000.0, 1.0, q);
    auto t3 = two_price_theoretical(big, s);
    EXPECT_NEAR(t3.x_H - t3.x_L, 0.02, 1e-12);

    ShapeModel s1;
    s1.alpha = 1.0;
    EXPECT_THROW(two_price_theoretical(inst, s1), invalid_input);
}

TEST(Policies, TwoPriceTheoreticalClampsDelta) {
    std::vector<std::string> seen;
    set_warning_handler([&](const std::string& m) { seen.push_back(m); });
    ProblemInstance inst(10, 100.0, 1.0, RewardFunction::quadratic(2, -1)); // x* = 0.1, delta = 10^{-1/3}
    ShapeModel s;
    s.alpha = 2.0;
    auto tp = two_price_theoretical(inst, s);
    set_warning_handler(nullptr);
    EXPECT_NEAR(tp.x_L, 0.05, 1e-15);
    EXPECT_NEAR(tp.x_H, 0.15, 1e-15);
    EXPECT_EQ(seen.size(), 1u);
}

TEST(Policies, TwoPriceExpand) {
    TwoPricePolicy tp{0.3, 0.7, 2};
    auto p = tp.expand(4);
    EXPECT_EQ(p.x, (std::vector<double>{0.3, 0.3, 0.7, 0.7}));
}

TEST(Policies, TwoPriceSingleUnitEqualsStatic) {
    ProblemInstance inst(1, 3.0, 1.0, RewardFunction::quadratic(2, -1));
    auto tp = optimize_two_price(inst);
    auto st = optimize_static(inst);
    EXPECT_EQ(tp.two_price->tau, 1);
    EXPECT_NEAR(tp.reward, st.reward, 1e-9);
}

TEST(Policies, TwoPriceIsDeterministic) {
    ProblemInstance inst(60, 100.0, 1.0, RewardFunction::quadratic(2, -1));
    auto a = optimize_two_price(inst), b = optimize_two_price(inst);
    EXPECT_EQ(a.reward, b.reward);
    EXPECT_EQ(a.two_price->tau, b.two_price->tau);
    TwoPriceOptions par;
    par.threads = 4;
    auto c = optimize_two_price(inst, par);
    EXPECT_EQ(a.reward, c.reward);
    EXPECT_EQ(a.two_price->tau, c.two_price->tau);
}

TEST(Policies, TwoPriceSmallCaseMatchesGrid) {
    // c = 3: grid over tau and (x_L <= x_H)
    ProblemInstance inst(3, 5.0, 1.0, RewardFunction::quadratic(2, -1));
    double best = 0.0;
    for (int tau = 1; tau <= 3; ++tau)
        for (int i = 0; i <= 400; ++i)
            for (int k = i; k <= 400; ++k) best = std::max(best, two_price_eval(inst, i / 400.0, k / 400.0, tau).reward);
    auto rep = optimize_two_price(inst);
    EXPECT_GE(rep.reward, best - 1e-6);
    EXPECT_LE(rep.reward, best + 1e-3);
}

TEST(Policies, DenseAndStructuredLpsdAgree) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        int c = 1 + int(rng() % 25);
        ProblemInstance inst(c, c * (0.4 + 2.5 * U(rng)), 0.5 + U(rng), random_pwl(rng), true);
        auto prog = lpsd_program(inst, inst.g.pieces());
        auto dense = solve_lpsd_dense(inst, prog);
        auto fast = solve_lpsd_structured(inst, prog);
        double fl = fluid_value(inst);
        EXPECT_NEAR(dense.objective, fast.objective, 1e-8 * (1.0 + fl)) << "trial " << t;
        // both certificates are feasible duals
        EXPECT_TRUE(verify_dual(dense.certificate).pass) << verify_dual(dense.certificate).where;
        EXPECT_TRUE(verify_dual(fast.certificate).pass) << verify_dual(fast.certificate).where;
        // round trip through the balance equations
        double rt = steady_state(inst, dense.policy).reward;
        EXPECT_NEAR(rt, dense.objective, 1e-6 * (1.0 + dense.objective)) << "trial " << t;
        EXPECT_NEAR(steady_state(inst, fast.policy).reward, fast.objective, 1e-6 * (1.0 + fl)) << "trial " << t;
    }
}

TEST(Policies, StockDependentOnReferenceInstances) {
    ProblemInstance c3(1000, 2000.0, 1.0, three_type());
    auto sd = optimize_stock_dependent(c3);
    EXPECT_NEAR(sd.reward, 2085.587, 1.0);
    EXPECT_LE(sd.upper - sd.lower, 1e-6 * 2100.0);
    ASSERT_TRUE(sd.certificate);
    EXPECT_TRUE(verify_dual(*sd.certificate).pass);

    ProblemInstance c1(1000, 2000.0, 1.0, kink());
    auto s1 = optimize_stock_dependent(c1);
    EXPECT_GE(s1.reward, optimize_static(c1).reward - 1e-9);
    EXPECT_LE(s1.upper, 2000.0 + 1e-9);
}

TEST(Policies, SmoothBracketIsNarrow) {
    ProblemInstance inst(1000, 2000.0, 1.0, RewardFunction::quadratic(2, -1));
    auto sd = optimize_stock_dependent(inst);
    EXPECT_LE(sd.lower, sd.upper);
    EXPECT_LE(sd.upper - sd.lower, 2.0);
    EXPECT_NEAR(steady_state(inst, sd.policy).reward, sd.lower, 1e-9 * sd.lower);
    EXPECT_GE(sd.lower, 1465.008);
}

TEST(Policies, DominanceChain) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 12; ++t) {
        int c = 5 + int(rng() % 120);
        RewardFunction g = t % 4 == 0 ? RewardFunction::quadratic(1.0 + U(rng), -0.5) : random_pwl(rng);
        ProblemInstance inst(c, c / (0.2 + 0.7 * U(rng)), 1.0, g, true);
        double fl = steady_state(inst, fluid_policy(inst)).reward;
        double st = optimize_static(inst).reward;
        double tp = optimize_two_price(inst).reward;
        auto sd = optimize_stock_dependent(inst);
        double tol = 1e-9 * std::max(1.0, fluid_value(inst));
        EXPECT_LE(fl, st + tol) << t;
        EXPECT_LE(st, tp + tol) << t;
        EXPECT_LE(tp, sd.upper + tol) << t;
        EXPECT_LE(sd.upper, fluid_value(inst) + tol) << t;
        EXPECT_LE(sd.lower, sd.reward + tol);
        EXPECT_LE(sd.reward, sd.upper + tol);
    }
}

TEST(Policies, ApproximationsSandwichG) {
    auto g = RewardFunction::quadratic(2, -1);
    auto pts = approximation_points(0.5, 64);
    EXPECT_LE(int(pts.size()), 64 + 3);
    auto tan = tangent_pieces(g, pts);
    auto ch = chord_minorant(g, pts);
    for (int i = 0; i <= 1000; ++i) {
        double x = i / 1000.0, up = inf;
        for (auto& p : tan) up = std::min(up, p(x));
        EXPECT_GE(up, g(x) - 1e-12);
        EXPECT_LE(ch(x), g(x) + 1e-12);
    }
}

TEST(Policies, ConcavitySelfcheck) {
    ProblemInstance inst(50, 100.0, 1.0, kink());
    auto r = concavity_selfcheck(inst, 1000);
    EXPECT_EQ(r.violations, 0);
    ProblemInstance c100(100, 200.0, 1.0, kink());
    auto p = concavity_selfcheck(c100, 10);
    EXPECT_TRUE(p.positivity_checked);
    EXPECT_GT(p.min_opt_pi, 0.0);
}

TEST(Policies, ZeroAdmissionCutsLowerStates) {
    ProblemInstance inst(10, 20.0, 1.0, kink(), true);
    std::vector<double> x(10, 0.5);
    x[4] = 0.0;
    auto ss = steady_state(inst, StockDependentPolicy(x));
    for (int j = 0; j <= 4; ++j) EXPECT_EQ(ss.pi[size_t(j)], 0.0);
    double v = lpsd_objective(inst, ss.pi);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(v, ss.reward, 1e-12);
}
