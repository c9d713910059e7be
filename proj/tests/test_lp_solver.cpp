#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <random>

#include "reprice/lp_solver.hpp"

using namespace reprice;
using Rel = LinearProgram::Rel;

namespace {

// solve A x = b by Gaussian elimination with partial pivoting; false if singular
bool gauss(std::vector<std::vector<double>> A, std::vector<double> b, std::vector<double>& x) {
    size_t n = b.size();
    for (size_t k = 0; k < n; ++k) {
        size_t p = k;
        for (size_t i = k + 1; i < n; ++i)
            if (std::abs(A[i][k]) > std::abs(A[p][k])) p = i;
        if (std::abs(A[p][k]) < 1e-10) return false;
        std::swap(A[k], A[p]);
        std::swap(b[k], b[p]);
        for (size_t i = k + 1; i < n; ++i) {
            double f = A[i][k] / A[k][k];
            for (size_t j = k; j < n; ++j) A[i][j] -= f * A[k][j];
            b[i] -= f * b[k];
        }
    }
    x.assign(n, 0.0);
    for (size_t k = n; k-- > 0;) {
        double s = b[k];
        for (size_t j = k + 1; j < n; ++j) s -= A[k][j] * x[j];
        x[k] = s / A[k][k];
    }
    return true;
}

bool feasible(const LinearProgram& lp, const std::vector<double>& x, double tol = 1e-7) {
    for (int j = 0; j < lp.num_vars(); ++j)
        if (x[size_t(j)] < lp.lower[size_t(j)] - tol || x[size_t(j)] > lp.upper[size_t(j)] + tol) return false;
    for (int i = 0; i < lp.num_rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < lp.num_vars(); ++j) s += lp.rows[size_t(i)][size_t(j)] * x[size_t(j)];
        double r = lp.rhs[size_t(i)];
        switch (lp.rel[size_t(i)]) {
        case Rel::Le: if (s > r + tol) return false; break;
        case Rel::Ge: if (s < r - tol) return false; break;
        case Rel::Eq: if (std::abs(s - r) > tol) return false; break;
        }
    }
    return true;
}

// best objective over all vertices of a bounded LP; nullopt if none is feasible
std::optional<double> vertex_enumeration(const LinearProgram& lp) {
    int n = lp.num_vars();
    // candidate hyperplanes: rows, then finite bounds
    std::vector<std::pair<std::vector<double>, double>> planes;
    for (int i = 0; i < lp.num_rows(); ++i) {
        planes.emplace_back(lp.rows[size_t(i)], lp.rhs[size_t(i)]);
    }
    for (int j = 0; j < n; ++j)
        for (double v : {lp.lower[size_t(j)], lp.upper[size_t(j)]})
            if (std::isfinite(v)) {
                std::vector<double> e(size_t(n), 0.0);
                e[size_t(j)] = 1.0;
                planes.emplace_back(e, v);
            }
    int P = int(planes.size());
    std::optional<double> best;
    std::vector<int> idx(static_cast<size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n) {
            std::vector<std::vector<double>> A;
            std::vector<double> b, x;
            for (int i : idx) {
                A.push_back(planes[size_t(i)].first);
                b.push_back(planes[size_t(i)].second);
            }
            if (!gauss(A, b, x) || !feasible(lp, x)) return;
            double v = 0.0;
            for (int j = 0; j < n; ++j) v += lp.objective[size_t(j)] * x[size_t(j)];
            if (!best || v > *best) best = v;
            return;
        }
        for (int i = start; i < P; ++i) {
            idx[size_t(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

LinearProgram random_lp(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    int n = 2 + int(rng() % 3), m = 1 + int(rng() % 4);
    LinearProgram lp;
    for (int j = 0; j < n; ++j) {
        double lo = (rng() % 4 == 0) ? -2.0 : 0.0;
        lp.add_variable(U(rng), lo, 1.0 + 4.0 * std::abs(U(rng)));
    }
    for (int i = 0; i < m; ++i) {
        std::vector<double> row(static_cast<size_t>(n), 0.0);
        for (auto& v : row) v = U(rng);
        int k = int(rng() % 6);
        Rel r = k < 4 ? Rel::Le : (k == 4 ? Rel::Ge : Rel::Eq);
        double b = r == Rel::Le ? 0.5 + std::abs(U(rng)) : 0.3 * U(rng);
        lp.add_row(row, r, b);
    }
    return lp;
}

} // namespace

TEST(LpSolver, RandomSmallProgramsMatchVertexEnumeration) {
    std::mt19937_64 rng(2718);
    int optimal = 0, infeasible = 0;
    for (int t = 0; t < 200; ++t) {
        auto lp = random_lp(rng);
        auto ref = vertex_enumeration(lp);
        auto sol = solve(lp);
        if (!ref) {
            EXPECT_EQ(sol.status, LpSolution::Status::Infeasible) << "trial " << t;
            ++infeasible;
            continue;
        }
        ASSERT_EQ(sol.status, LpSolution::Status::Optimal) << "trial " << t;
        ++optimal;
        EXPECT_NEAR(sol.objective, *ref, 1e-7) << "trial " << t;
        EXPECT_TRUE(feasible(lp, sol.x)) << "trial " << t;
        EXPECT_LE(sol.primal_residual, 1e-9);
        EXPECT_LE(std::abs(sol.duality_gap), 1e-7 * (1.0 + std::abs(sol.objective)));
        EXPECT_LE(sol.complementarity_residual, 1e-7);
        // dual signs: >= 0 on <=, <= 0 on >=
        for (int i = 0; i < lp.num_rows(); ++i) {
            if (lp.rel[size_t(i)] == Rel::Le) {
                EXPECT_GE(sol.duals[size_t(i)], -1e-9);
            }
            if (lp.rel[size_t(i)] == Rel::Ge) {
                EXPECT_LE(sol.duals[size_t(i)], 1e-9);
            }
        }
    }
    EXPECT_GT(optimal, 100);
    EXPECT_GT(infeasible, 0);
}

TEST(LpSolver, TextbookExample) {
    // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36; duals (0, 1.5, 1)
    LinearProgram lp;
    lp.add_variable(3.0);
    lp.add_variable(5.0);
    lp.add_row({1, 0}, Rel::Le, 4);
    lp.add_row({0, 2}, Rel::Le, 12);
    lp.add_row({3, 2}, Rel::Le, 18);
    auto s = solve(lp);
    ASSERT_EQ(s.status, LpSolution::Status::Optimal);
    EXPECT_NEAR(s.objective, 36.0, 1e-12);
    EXPECT_NEAR(s.x[0], 2.0, 1e-12);
    EXPECT_NEAR(s.x[1], 6.0, 1e-12);
    EXPECT_NEAR(s.duals[0], 0.0, 1e-12);
    EXPECT_NEAR(s.duals[1], 1.5, 1e-12);
    EXPECT_NEAR(s.duals[2], 1.0, 1e-12);
    EXPECT_NEAR(s.dual_objective, 36.0, 1e-12);
}

TEST(LpSolver, InfeasibleAndUnbounded) {
    LinearProgram a;
    a.add_variable(1.0);
    a.add_row({1}, Rel::Le, 1);
    a.add_row({1}, Rel::Ge, 2);
    EXPECT_EQ(solve(a).status, LpSolution::Status::Infeasible);

    LinearProgram b;
    b.add_variable(1.0);
    b.add_variable(-1.0);
    b.add_row({1, -1}, Rel::Ge, 0);
    EXPECT_EQ(solve(b).status, LpSolution::Status::Unbounded);

    LinearProgram f; // free variable, bounded through rows
    f.add_variable(1.0, -inf, inf);
    f.add_row({1}, Rel::Le, 3);
    auto s = solve(f);
    ASSERT_EQ(s.status, LpSolution::Status::Optimal);
    EXPECT_NEAR(s.x[0], 3.0, 1e-12);

    LinearProgram g; // free variable, unbounded below only
    g.add_variable(-1.0, -inf, inf);
    g.add_row({1}, Rel::Le, 3);
    EXPECT_EQ(solve(g).status, LpSolution::Status::Unbounded);
}

TEST(LpSolver, WeakDualityOnRandomFeasiblePoints) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        // max c'x, Ax <= b, x >= 0 with A, b, c > 0: bounded and feasible at 0
        int n = 3, m = 3;
        LinearProgram lp;
        for (int j = 0; j < n; ++j) lp.add_variable(U(rng) + 0.1);
        for (int i = 0; i < m; ++i) lp.add_row({U(rng) + 0.1, U(rng) + 0.1, U(rng) + 0.1}, Rel::Le, U(rng) + 0.5);
        auto s = solve(lp);
        ASSERT_EQ(s.status, LpSolution::Status::Optimal);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> x{U(rng), U(rng), U(rng)};
            double scale = 1.0;
            for (int i = 0; i < m; ++i) {
                double r = 0.0;
                for (int j = 0; j < n; ++j) r += lp.rows[size_t(i)][size_t(j)] * x[size_t(j)];
                scale = std::min(scale, lp.rhs[size_t(i)] / r);
            }
            double v = 0.0;
            for (int j = 0; j < n; ++j) v += lp.objective[size_t(j)] * x[size_t(j)] * scale;
            EXPECT_LE(v, s.dual_objective + 1e-10);
        }
    }
}

TEST(LpSolver, PermutationInvariance) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        auto lp = random_lp(rng);
        auto s = solve(lp);
        if (s.status != LpSolution::Status::Optimal) continue;
        std::vector<int> perm(size_t(lp.num_rows()));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        LinearProgram q;
        for (int j = 0; j < lp.num_vars(); ++j) q.add_variable(lp.objective[size_t(j)], lp.lower[size_t(j)], lp.upper[size_t(j)]);
        for (int i : perm) q.add_row(lp.rows[size_t(i)], lp.rel[size_t(i)], lp.rhs[size_t(i)]);
        auto s2 = solve(q);
        ASSERT_EQ(s2.status, LpSolution::Status::Optimal);
        EXPECT_NEAR(s.objective, s2.objective, 1e-8);
    }
}

TEST(LpSolver, DegenerateProgramTerminates) {
    // many redundant constraints through the optimum
    LinearProgram lp;
    lp.add_variable(1.0);
    lp.add_variable(1.0);
    for (int k = 0; k < 30; ++k) lp.add_row({1.0, double(k) / 30.0}, Rel::Le, 1.0);
    lp.add_row({0, 1}, Rel::Le, 0.0);
    auto s = solve(lp);
    ASSERT_EQ(s.status, LpSolution::Status::Optimal);
    EXPECT_NEAR(s.objective, 1.0, 1e-12);
}

TEST(LpSolver, RejectsMalformedInput) {
    LinearProgram lp;
    lp.add_variable(1.0, 2.0, 1.0);
    EXPECT_THROW(solve(lp), invalid_input);
    LinearProgram nan;
    nan.add_variable(std::nan(""));
    EXPECT_THROW(solve(nan), invalid_input);
}
