#include <gtest/gtest.h>

#include "reprice/certificates.hpp"
#include "reprice/policies.hpp"

using namespace reprice;

namespace {

RewardFunction kinked_up() { return RewardFunction::min_affine({{0, 2}, {0.5, 1}}); }
RewardFunction three_piece() { return RewardFunction::min_affine({{0, 3}, {0.3, 1.5}, {1.2, 0}}); }

double sd_upper(const ProblemInstance& inst) { return optimize_stock_dependent(inst).upper; }

} // namespace

TEST(Certificates, Alpha1ClosedForm) {
    ProblemInstance inst(1000, 2000.0, 1.0, kinked_up());
    auto cert = build_dual_alpha1(inst, 2.0, 1.0);
    EXPECT_NEAR(cert.zeta, 2000.0 - 500.0 * std::sqrt(0.001), 1e-9);
    EXPECT_NEAR(cert.zeta, 1984.189, 1e-3);
    auto chk = verify_dual(cert, relaxed_optimum(inst, cert));
    EXPECT_TRUE(chk.pass) << chk.where << " " << chk.max_violation;
    EXPECT_GE(chk.min_multiplier, 0.0);
    // alpha_j = lambda max(1 - j / sqrt(c (R - r)), 0)
    double w = std::sqrt(1000.0);
    for (int j : {1, 10, 31, 32, 500})
        EXPECT_NEAR(cert.alpha()[size_t(j - 1)], 2000.0 * std::max(1.0 - j / w, 0.0), 1e-9);
}

TEST(Certificates, Alpha1BranchWithLargeUpperSlope) {
    // r/2 >= 1 takes the min{1, r/2} = 1 branch
    auto g = RewardFunction::min_affine({{0, 4}, {0.5, 3}});
    ProblemInstance inst(400, 800.0, 1.0, g);
    auto cert = build_dual_alpha1(inst, 4.0, 3.0);
    EXPECT_NEAR(cert.zeta, 800.0 * 2.0 - 800.0 * 0.5 * std::sqrt(1.0 / 400.0), 1e-9);
    EXPECT_TRUE(verify_dual(cert, relaxed_optimum(inst, cert)).pass);
}

TEST(Certificates, Alpha1FitAndSandwich) {
    ProblemInstance inst(1000, 2000.0, 1.0, kinked_up());
    auto [R, r] = fit_alpha1(inst);
    EXPECT_EQ(R, 2.0);
    EXPECT_EQ(r, 1.0);
    auto cert = build_dual_alpha1(inst, R, r);
    double up = sd_upper(inst);
    EXPECT_LE(up, cert.zeta + 1e-6);
    EXPECT_LE(cert.zeta, fluid_value(inst));
}

TEST(Certificates, Alpha1Preconditions) {
    ProblemInstance flat(1000, 2000.0, 1.0, RewardFunction::min_affine({{0, 2}, {1, 0}}));
    EXPECT_THROW(fit_alpha1(flat), invalid_input);
    ProblemInstance inst(1000, 2000.0, 1.0, kinked_up());
    EXPECT_THROW(build_dual_alpha1(inst, 1.0, 2.0), invalid_input);
    EXPECT_THROW(build_dual_alpha1(inst, 2.0, 0.5), invalid_input); // upper slope too flat to majorize
    ProblemInstance tiny(1, 2.0, 1.0, RewardFunction::min_affine({{0, 1.5}, {0.25, 1}}));
    EXPECT_THROW(build_dual_alpha1(tiny, 1.5, 1.0), invalid_input); // c < 1/(R-r)
}

TEST(Certificates, KinkMajorantClosedForm) {
    auto g = RewardFunction::quadratic(2, -1);
    auto shape = classify_shape(g, 0.5, 0.2);
    auto k = build_kink_majorant(g, shape, 0.5, 0.1);
    EXPECT_NEAR(k.value_at_xstar, 0.76, 1e-9);
    EXPECT_NEAR(k.R, 1.2, 1e-9);
    EXPECT_NEAR(k.r, 1.0, 1e-12);
    for (int i = 0; i <= 1000; ++i) EXPECT_GE(k(i / 1000.0), g(i / 1000.0) - 1e-12);
    auto small = build_kink_majorant(g, shape, 0.5, 1e-4);
    EXPECT_NEAR(small.value_at_xstar, g(0.5), 1e-7);
    EXPECT_THROW(build_kink_majorant(g, shape, 0.5, 0.3), invalid_input);
}

TEST(Certificates, KinkMajorantCertificateBoundsSmoothOptimum) {
    auto g = RewardFunction::quadratic(2, -1);
    ProblemInstance inst(1000, 2000.0, 1.0, g);
    auto shape = classify_shape(g, 0.5, 0.2);
    double eta = std::pow(1000.0, -1.0 / 3.0);
    auto k = build_kink_majorant(g, shape, 0.5, eta);
    auto cert = build_dual_alpha1(inst, k);
    auto chk = verify_dual(cert, relaxed_optimum(inst, cert));
    EXPECT_TRUE(chk.pass) << chk.where;
    auto sd = optimize_stock_dependent(inst);
    EXPECT_LE(sd.lower, cert.zeta + 1e-6);
    // the certificate bounds loss away from zero once the offset is removed
    double correction = inst.lambda * (shape.alpha - 1.0) * shape.k2 * std::pow(eta, shape.alpha);
    EXPECT_GT(fluid_value(inst) - (cert.zeta - correction), 0.0);
}

TEST(Certificates, ScarceCaseGapIsConstant) {
    // x* = 0.1 lies on the first piece (kink at 0.2)
    auto t = fit_alpha_inf(three_piece());
    EXPECT_EQ(alpha_inf_case(t, 0.1), AlphaInfCase::ScarceCase1);
    for (int c : {100, 1000}) {
        ProblemInstance inst(c, 10.0 * c, 1.0, three_piece());
        auto cert = build_dual_alpha_inf(inst, t, AlphaInfCase::ScarceCase1);
        EXPECT_NEAR(fluid_value(inst) - cert.zeta, t.r1 / 2.0, 1e-9);
        // the bound itself holds
        EXPECT_LE(sd_upper(inst), cert.zeta + 1e-6);
        // but constant multipliers leave column pi_0 short by beta (b2 - x*(r1 - r2)) whenever x* < b2/(r1 - r2)
        auto chk = verify_dual(cert);
        double beta = t.r1 / (2.0 * t.b2), short_by = beta * (t.b2 - inst.xstar * (t.r1 - t.r2));
        EXPECT_FALSE(chk.pass);
        EXPECT_EQ(chk.where, "column pi[j=0]");
        EXPECT_NEAR(chk.max_violation, short_by, 1e-9);
    }
}

TEST(Certificates, FlatCaseGapDecaysGeometrically) {
    auto t = fit_alpha_inf(three_piece());
    const double xs = 0.8, rho = (t.b3 - t.b2) / (2 * t.r2 * xs);
    ASSERT_LT(rho, 1.0);
    double prev = inf;
    for (int c : {20, 40, 80}) {
        ProblemInstance inst(c, c / xs, 1.0, three_piece());
        auto cert = build_dual_alpha_inf(inst, t, AlphaInfCase::FlatCase3);
        double beta1 = inst.lambda * t.b3 / (2 * t.r2 * xs);
        // the gap falls below double resolution of FLU quickly, so read it off beta_c
        double gap = (t.b3 - t.b2) * cert.beta().back();
        EXPECT_NEAR(gap, (t.b3 - t.b2) * beta1 * std::pow(rho, c - 1), 1e-12 * gap);
        EXPECT_NEAR(cert.zeta, inst.lambda * t.b3 - gap, 1e-12 * inst.lambda);
        EXPECT_LT(gap, prev);
        prev = gap;
        auto chk = verify_dual(cert, relaxed_optimum(inst, cert));
        EXPECT_TRUE(chk.pass) << chk.where << " " << chk.max_violation;
    }
}

TEST(Certificates, MiddleCaseFollowsRecursion) {
    auto t = fit_alpha_inf(three_piece());
    ProblemInstance inst(1000, 2000.0, 1.0, three_piece());
    ASSERT_EQ(alpha_inf_case(t, 0.5), AlphaInfCase::MiddleCase2);
    auto cert = build_dual_alpha_inf(inst, t, AlphaInfCase::MiddleCase2);
    // direct (unscaled) recursion as an oracle
    const double L = std::log(1000.0), gap = 0.5 * (t.r1 - t.r2);
    const double K = 2.0 * (t.b2 / gap) * (gap - t.b2), eta = t.b2 / gap, omega = K * L / gap;
    double a = 2000.0 * (t.b2 / gap) * L / 1000.0;
    for (int j = 1; j <= 1000; ++j) {
        double expect = double(j - 1) <= L ? a : 0.0;
        EXPECT_NEAR(cert.alpha()[size_t(j - 1)], expect, 1e-9) << j;
        EXPECT_NEAR(cert.alpha()[size_t(j - 1)] + cert.beta()[size_t(j - 1)], 2000.0, 1e-9);
        a = eta * a - omega;
    }
    EXPECT_NEAR(cert.zeta, 2000.0 * (t.r2 * 0.5 + t.b2) - std::min(K, t.r2) * L, 1e-9);
    EXPECT_LT(cert.zeta, 2100.0);
    // FLU - zeta is exactly linear in log c under lambda = 2c
    std::vector<double> lx, gy;
    for (int c : {1000, 2000, 5000, 10000, 50000}) {
        ProblemInstance ic(c, 2.0 * c, 1.0, three_piece());
        auto cc = build_dual_alpha_inf(ic, t, AlphaInfCase::MiddleCase2);
        lx.push_back(std::log(double(c)));
        gy.push_back(fluid_value(ic) - cc.zeta);
    }
    auto fit = detail::least_squares(lx, gy);
    EXPECT_NEAR(fit.slope, std::min(K, t.r2), 1e-9);
}

TEST(Certificates, AlphaInfPreconditions) {
    auto t = fit_alpha_inf(three_piece());
    ProblemInstance inst(1000, 2000.0, 1.0, three_piece());
    EXPECT_THROW(build_dual_alpha_inf(inst, t, AlphaInfCase::FlatCase3), invalid_input);
    EXPECT_THROW(fit_alpha_inf(RewardFunction::min_affine({{0, 2}, {1, 0}})), invalid_input);
    ProblemInstance on_kink(200, 1000.0, 1.0, three_piece()); // x* = 0.2
    EXPECT_THROW(build_dual_alpha_inf(on_kink, t, AlphaInfCase::ScarceCase1), invalid_input);
    ThreePiece low = t;
    low.b3 = 1.0; // below g(1)
    EXPECT_THROW(build_dual_alpha_inf(inst, low, AlphaInfCase::MiddleCase2), invalid_input);
}

TEST(Certificates, StaticCertificateAtFluidPrice) {
    ProblemInstance inst(1000, 2000.0, 1.0, RewardFunction::quadratic(2, -1));
    auto [r, b] = fit_static_majorant(inst);
    EXPECT_NEAR(r, 1.0, 1e-12);
    EXPECT_NEAR(b, 0.25, 1e-12);
    auto cert = build_dual_static(inst, r, b, 0.5);
    auto chk = verify_dual(cert, relaxed_optimum(inst, cert));
    EXPECT_TRUE(chk.pass) << chk.where << " " << chk.max_violation;
    EXPECT_GE(cert.zeta, static_reward(inst, 0.5));
    EXPECT_LE(cert.zeta, fluid_value(inst) - 2000.0 * std::min(b, r * 0.5 / 2) / std::sqrt(1000.0) + 1e-9);
    auto zero = build_dual_static(inst, r, b, 0.0);
    EXPECT_TRUE(verify_dual(zero, relaxed_optimum(inst, zero)).pass);
    EXPECT_EQ(static_reward(inst, 0.0), 0.0);
}

TEST(Certificates, StaticSweepDominatesBestStatic) {
    ProblemInstance inst(400, 800.0, 1.0, RewardFunction::quadratic(2, -1));
    auto [r, b] = fit_static_majorant(inst);
    double best_reward = 0.0, best_zeta = -inf;
    for (int i = 0; i <= 100; ++i) {
        double q = i / 100.0;
        auto cert = build_dual_static(inst, r, b, q);
        auto chk = verify_dual(cert, relaxed_optimum(inst, cert));
        EXPECT_TRUE(chk.pass) << "q=" << q << " " << chk.where << " " << chk.max_violation;
        EXPECT_GE(cert.zeta, static_reward(inst, q) - 1e-9);
        best_reward = std::max(best_reward, static_reward(inst, q));
        best_zeta = std::max(best_zeta, cert.zeta);
    }
    EXPECT_LE(best_reward, best_zeta);
    EXPECT_LE(optimize_static(inst).reward, best_zeta);
}

TEST(Certificates, PerturbationIsCaughtWithIndex) {
    ProblemInstance inst(1000, 2000.0, 1.0, kinked_up());
    auto cert = build_dual_alpha1(inst, 2.0, 1.0);
    double tol = 1e-8 * cert.program.scale();
    cert.mu[1][41] += 10.0 * tol;
    auto chk = verify_dual(cert);
    EXPECT_FALSE(chk.pass);
    EXPECT_NE(chk.where.find("j=42"), std::string::npos) << chk.where;
    EXPECT_GT(chk.max_violation, 5.0 * tol);
}

TEST(Certificates, AllWeightOnUpperSlopeIsFeasible) {
    // alpha = 0, beta = lambda, zeta = FLU
    ProblemInstance inst(1000, 2000.0, 1.0, kinked_up());
    auto cert = build_dual_alpha1(inst, 2.0, 1.0);
    std::fill(cert.mu[0].begin(), cert.mu[0].end(), 0.0);
    std::fill(cert.mu[1].begin(), cert.mu[1].end(), inst.lambda);
    std::fill(cert.nu.begin(), cert.nu.end(), 0.0);
    cert.zeta = fluid_value(inst);
    EXPECT_TRUE(verify_dual(cert, relaxed_optimum(inst, cert)).pass);
}

TEST(Certificates, DimensionMismatchIsRejected) {
    ProblemInstance inst(10, 20.0, 1.0, kinked_up());
    auto cert = build_dual_alpha1(inst, 2.0, 1.0);
    cert.mu[0].pop_back();
    EXPECT_THROW(verify_dual(cert), invalid_input);
    auto c2 = build_dual_alpha1(inst, 2.0, 1.0);
    c2.mu.pop_back();
    EXPECT_THROW(verify_dual(c2), invalid_input);
}

TEST(Certificates, WeakDualityFailureIsReported) {
    ProblemInstance inst(100, 200.0, 1.0, kinked_up());
    auto cert = build_dual_alpha1(inst, 2.0, 1.0);
    auto chk = verify_dual(cert, cert.zeta + 1.0);
    EXPECT_FALSE(chk.pass);
    EXPECT_NE(chk.where.find("weak duality"), std::string::npos);
}
