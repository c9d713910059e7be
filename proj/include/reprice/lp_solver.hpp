#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"

namespace reprice {

/// maximize c'x subject to rows (<=, =, >=) and lower <= x <= upper.
struct LinearProgram {
    enum class Rel { Le, Eq, Ge };

    std::vector<double> objective;
    std::vector<double> lower, upper;
    std::vector<std::vector<double>> rows; // dense, one entry per variable
    std::vector<Rel> rel;
    std::vector<double> rhs;

    int num_vars() const { return int(objective.size()); }
    int num_rows() const { return int(rows.size()); }

    int add_variable(double obj, double lo = 0.0, double hi = inf) {
        objective.push_back(obj);
        lower.push_back(lo);
        upper.push_back(hi);
        for (auto& r : rows) r.push_back(0.0);
        return num_vars() - 1;
    }

    int add_row(std::vector<double> coeffs, Rel r, double b) {
        coeffs.resize(objective.size(), 0.0);
        rows.push_back(std::move(coeffs));
        rel.push_back(r);
        rhs.push_back(b);
        return num_rows() - 1;
    }

    void validate() const {
        size_t n = objective.size();
        require(lower.size() == n && upper.size() == n, "lp: bound vectors have wrong length");
        require(rel.size() == rows.size() && rhs.size() == rows.size(), "lp: row metadata has wrong length");
        require(finite_all(objective) && finite_all(rhs), "lp: non-finite objective or rhs");
        for (auto& r : rows) {
            require(r.size() == n, "lp: row length does not match variable count");
            require(finite_all(r), "lp: non-finite coefficient");
        }
        for (size_t j = 0; j < n; ++j) {
            require(!std::isnan(lower[j]) && !std::isnan(upper[j]), "lp: NaN bound");
            require(lower[j] <= upper[j], "lp: lower bound above upper bound");
            require(lower[j] < inf && upper[j] > -inf, "lp: empty bound range");
        }
    }
};

struct LpSolution {
    enum class Status { Optimal, Infeasible, Unbounded };
    Status status = Status::Infeasible;
    std::vector<double> x;
    std::vector<double> duals;         // one per row; >= 0 for <=, <= 0 for >=
    std::vector<double> reduced_costs; // c_j - a_j'y
    double objective = 0.0;
    double dual_objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double complementarity_residual = 0.0;
    double duality_gap = 0.0;
};

inline const char* to_string(LpSolution::Status s) {
    switch (s) {
    case LpSolution::Status::Optimal: return "optimal";
    case LpSolution::Status::Infeasible: return "infeasible";
    case LpSolution::Status::Unbounded: return "unbounded";
    }
    return "?";
}

namespace detail {

// dense LU with partial pivoting, in place; returns false when singular
struct DenseLu {
    int n = 0;
    std::vector<double> a; // row-major
    std::vector<int> perm;

    bool factor(int n_, std::vector<double> m) {
        n = n_;
        a = std::move(m);
        perm.resize(size_t(n));
        for (int i = 0; i < n; ++i) perm[size_t(i)] = i;
        for (int k = 0; k < n; ++k) {
            int p = k;
            for (int i = k + 1; i < n; ++i)
                if (std::abs(a[size_t(i * n + k)]) > std::abs(a[size_t(p * n + k)])) p = i;
            if (a[size_t(p * n + k)] == 0.0) return false;
            if (p != k) {
                for (int j = 0; j < n; ++j) std::swap(a[size_t(k * n + j)], a[size_t(p * n + j)]);
                std::swap(perm[size_t(k)], perm[size_t(p)]);
            }
            double piv = a[size_t(k * n + k)];
            for (int i = k + 1; i < n; ++i) {
                double f = a[size_t(i * n + k)] /= piv;
                if (f == 0.0) continue;
                for (int j = k + 1; j < n; ++j) a[size_t(i * n + j)] -= f * a[size_t(k * n + j)];
            }
        }
        return true;
    }
    // B x = b
    std::vector<double> solve(const std::vector<double>& b) const {
        std::vector<double> x(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            double s = b[size_t(perm[size_t(i)])];
            for (int j = 0; j < i; ++j) s -= a[size_t(i * n + j)] * x[size_t(j)];
            x[size_t(i)] = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = x[size_t(i)];
            for (int j = i + 1; j < n; ++j) s -= a[size_t(i * n + j)] * x[size_t(j)];
            x[size_t(i)] = s / a[size_t(i * n + i)];
        }
        return x;
    }
    // B' y = c
    std::vector<double> solve_transposed(const std::vector<double>& c) const {
        std::vector<double> z(static_cast<size_t>(n)), y(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            double s = c[size_t(i)];
            for (int j = 0; j < i; ++j) s -= a[size_t(j * n + i)] * z[size_t(j)];
            z[size_t(i)] = s / a[size_t(i * n + i)];
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = z[size_t(i)];
            for (int j = i + 1; j < n; ++j) s -= a[size_t(j * n + i)] * y[size_t(j)];
            y[size_t(i)] = s;
        }
        std::vector<double> out(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) out[size_t(perm[size_t(i)])] = y[size_t(i)];
        return out;
    }
};

// Dense tableau simplex on: max c'z, A z = b (b >= 0), z >= 0, with a starting identity basis
class Tableau {
public:
    int m, n; // rows, structural+slack+artificial columns
    std::vector<double> t; // (m+1) x (n+1), last row = reduced costs, last column = rhs
    std::vector<int> basis;
    std::vector<char> barred; // columns not allowed to enter
    int iterations = 0;

    Tableau(int m_, int n_) : m(m_), n(n_), t(size_t(m_ + 1) * size_t(n_ + 1), 0.0), basis(size_t(m_), -1), barred(size_t(n_), 0) {}

    double& at(int i, int j) { return t[size_t(i) * size_t(n + 1) + size_t(j)]; }
    double at(int i, int j) const { return t[size_t(i) * size_t(n + 1) + size_t(j)]; }
    double& rhs(int i) { return at(i, n); }
    double& red(int j) { return at(m, j); }

    // reduced costs d_j = c_j - c_B B^{-1} a_j for the cost vector
    void set_costs(const std::vector<double>& cost) {
        for (int j = 0; j <= n; ++j) red(j) = j < n ? cost[size_t(j)] : 0.0;
        for (int i = 0; i < m; ++i) {
            double cb = cost[size_t(basis[size_t(i)])];
            if (cb == 0.0) continue;
            for (int j = 0; j <= n; ++j) red(j) -= cb * at(i, j);
        }
    }

    void pivot(int r, int e) {
        double p = at(r, e);
        double* row = &at(r, 0);
        for (int j = 0; j <= n; ++j) row[j] /= p;
        row[e] = 1.0;
        for (int i = 0; i <= m; ++i) {
            if (i == r) continue;
            double f = at(i, e);
            if (f == 0.0) continue;
            double* ri = &at(i, 0);
            for (int j = 0; j <= n; ++j) ri[j] -= f * row[j];
            ri[e] = 0.0;
        }
        basis[size_t(r)] = e;
        ++iterations;
    }

    // rebuild B^-1 A, B^-1 b and the reduced costs from the original data; pivots accumulate
    // error fast when basic values span many orders of magnitude
    bool refresh(const std::vector<double>& a0, const std::vector<double>& b0, const std::vector<double>& cost) {
        std::vector<double> B(size_t(m) * size_t(m));
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k) B[size_t(i * m + k)] = a0[size_t(i) * size_t(n) + size_t(basis[size_t(k)])];
        DenseLu lu;
        if (!lu.factor(m, std::move(B))) return false;
        std::vector<double> col(static_cast<size_t>(m));
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < m; ++i) col[size_t(i)] = a0[size_t(i) * size_t(n) + size_t(j)];
            auto v = lu.solve(col);
            for (int i = 0; i < m; ++i) at(i, j) = v[size_t(i)];
        }
        auto xb = lu.solve(b0);
        std::vector<double> cb(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) {
            rhs(i) = xb[size_t(i)];
            cb[size_t(i)] = cost[size_t(basis[size_t(i)])];
        }
        y = lu.solve_transposed(cb);
        for (int j = 0; j < n; ++j) {
            double r = cost[size_t(j)];
            for (int i = 0; i < m; ++i) r -= y[size_t(i)] * a0[size_t(i) * size_t(n) + size_t(j)];
            red(j) = r;
        }
        for (int i = 0; i < m; ++i) at(i, basis[size_t(i)]) = 1.0, red(basis[size_t(i)]) = 0.0;
        red(n) = 0.0;
        return true;
    }

    bool improvable(double opt_tol) const {
        for (int j = 0; j < n; ++j)
            if (!barred[size_t(j)] && at(m, j) > opt_tol) return true;
        return false;
    }

    // dual simplex pivots until every basic value is >= -feas_tol; false when that is impossible
    bool repair(double pivot_tol, double feas_tol, int max_iter) {
        while (true) {
            if (iterations > max_iter) throw internal_error("lp: iteration limit reached");
            int r = -1;
            double worst = -feas_tol;
            for (int i = 0; i < m; ++i)
                if (at(i, n) < worst) {
                    worst = at(i, n);
                    r = i;
                }
            if (r < 0) return true;
            int e = -1;
            double best = inf;
            for (int j = 0; j < n; ++j) {
                double a = at(r, j);
                if (barred[size_t(j)] || a >= -pivot_tol) continue;
                double q = std::min(at(m, j), 0.0) / a; // reduced costs are <= 0 up to tolerance
                if (q < best) {
                    best = q;
                    e = j;
                }
            }
            if (e < 0) return false;
            pivot(r, e);
        }
    }

    double min_rhs() const {
        double v = inf;
        for (int i = 0; i < m; ++i) v = std::min(v, at(i, n));
        return v;
    }

    // run, refresh from the original data, repair primal feasibility lost to roundoff, repeat
    bool run_refreshed(const std::vector<double>& a0, const std::vector<double>& b0, const std::vector<double>& cost,
                       double pivot_tol, double opt_tol, double feas_tol, int max_iter) {
        bool bounded = true;
        for (int pass = 0; pass < 20; ++pass) {
            bounded = run(pivot_tol, opt_tol, max_iter);
            if (!refresh(a0, b0, cost)) break;
            if (min_rhs() < -feas_tol) {
                if (!repair(pivot_tol, feas_tol, max_iter) || !refresh(a0, b0, cost)) break;
                continue;
            }
            if (!improvable(opt_tol)) return true;
        }
        return bounded;
    }

    std::vector<double> y; // simplex multipliers after the last refresh

    // returns false when unbounded
    bool run(double pivot_tol, double opt_tol, int max_iter) {
        int stalled = 0;
        const int bland_after = 3 * (m + n);
        while (true) {
            if (iterations > max_iter) throw internal_error("lp: iteration limit reached");
            bool bland = stalled > bland_after;
            int e = -1;
            double best = opt_tol;
            for (int j = 0; j < n; ++j) {
                if (barred[size_t(j)]) continue;
                double dj = red(j);
                if (dj > opt_tol) {
                    if (bland) {
                        e = j;
                        break;
                    }
                    if (dj > best) {
                        best = dj;
                        e = j;
                    }
                }
            }
            if (e < 0) return true;
            int r = -1;
            double ratio = inf;
            for (int i = 0; i < m; ++i) {
                double a = at(i, e);
                if (a > pivot_tol) {
                    double q = std::max(rhs(i), 0.0) / a;
                    if (q < ratio - 1e-12 ||
                        (q <= ratio + 1e-12 && r >= 0 && basis[size_t(i)] < basis[size_t(r)])) {
                        ratio = std::min(ratio, q);
                        r = i;
                    }
                }
            }
            if (r < 0) return false;
            if (ratio <= 1e-12)
                ++stalled;
            else
                stalled = 0;
            pivot(r, e);
        }
    }
};

} // namespace detail

/// Two-phase dense simplex; Dantzig pricing with Bland's rule after a run of degenerate pivots.
inline LpSolution solve(const LinearProgram& lp) {
    lp.validate();
    const int nv = lp.num_vars();
    const int nr = lp.num_rows();

    // variable substitution: x_j = shift_j + sign_j * z_col (+ minus part for free variables)
    struct Map {
        int col = -1, neg_col = -1;
        double shift = 0.0, sign = 1.0;
    };
    std::vector<Map> vmap(static_cast<size_t>(nv));
    int nz = 0;
    struct Row {
        std::vector<std::pair<int, double>> coef;
        LinearProgram::Rel rel;
        double b;
        int orig; // -1 for bound rows
    };
    std::vector<Row> rows;
    for (int j = 0; j < nv; ++j) {
        double lo = lp.lower[size_t(j)], hi = lp.upper[size_t(j)];
        Map& mp = vmap[size_t(j)];
        if (std::isfinite(lo)) {
            mp.col = nz++;
            mp.shift = lo;
            if (std::isfinite(hi)) rows.push_back({{{mp.col, 1.0}}, LinearProgram::Rel::Le, hi - lo, -1});
        } else if (std::isfinite(hi)) {
            mp.col = nz++;
            mp.shift = hi;
            mp.sign = -1.0;
        } else {
            mp.col = nz++;
            mp.neg_col = nz++;
        }
    }
    std::vector<Row> all;
    for (int i = 0; i < nr; ++i) {
        Row r{{}, lp.rel[size_t(i)], lp.rhs[size_t(i)], i};
        for (int j = 0; j < nv; ++j) {
            double a = lp.rows[size_t(i)][size_t(j)];
            if (a == 0.0) continue;
            const Map& mp = vmap[size_t(j)];
            r.b -= a * mp.shift;
            r.coef.emplace_back(mp.col, a * mp.sign);
            if (mp.neg_col >= 0) r.coef.emplace_back(mp.neg_col, -a);
        }
        all.push_back(std::move(r));
    }
    for (auto& r : rows) all.push_back(std::move(r));

    const int m = int(all.size());
    std::vector<double> flip(size_t(m), 1.0);
    int nslack = 0, nart = 0;
    for (int i = 0; i < m; ++i) {
        Row& r = all[size_t(i)];
        if (r.b < 0.0) {
            flip[size_t(i)] = -1.0;
            r.b = -r.b;
            for (auto& [c, a] : r.coef) a = -a;
            if (r.rel == LinearProgram::Rel::Le)
                r.rel = LinearProgram::Rel::Ge;
            else if (r.rel == LinearProgram::Rel::Ge)
                r.rel = LinearProgram::Rel::Le;
        }
        if (r.rel != LinearProgram::Rel::Eq) ++nslack;
        if (r.rel != LinearProgram::Rel::Le) ++nart;
    }
    const int ncols = nz + nslack + nart;
    detail::Tableau tab(m, ncols);
    std::vector<int> unit_col(size_t(m), -1); // column holding +e_i initially
    std::vector<char> is_art(size_t(ncols), 0);
    int sc = nz, ac = nz + nslack;
    for (int i = 0; i < m; ++i) {
        const Row& r = all[size_t(i)];
        for (auto& [c, a] : r.coef) tab.at(i, c) += a;
        tab.rhs(i) = r.b;
        if (r.rel == LinearProgram::Rel::Le) {
            tab.at(i, sc) = 1.0;
            unit_col[size_t(i)] = sc;
            tab.basis[size_t(i)] = sc++;
        } else {
            if (r.rel == LinearProgram::Rel::Ge) tab.at(i, sc++) = -1.0;
            tab.at(i, ac) = 1.0;
            is_art[size_t(ac)] = 1;
            unit_col[size_t(i)] = ac;
            tab.basis[size_t(i)] = ac++;
        }
    }

    // standardized data before any pivot, for refreshing the basis later
    std::vector<double> A0(size_t(m) * size_t(ncols)), b0(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < ncols; ++j) A0[size_t(i) * size_t(ncols) + size_t(j)] = tab.at(i, j);
        b0[size_t(i)] = tab.rhs(i);
    }

    double bnorm = 0.0;
    for (auto& r : all) bnorm = std::max(bnorm, std::abs(r.b));
    const double pivot_tol = 1e-10, opt_tol = 1e-9, feas_tol = 1e-8 * (1.0 + bnorm);
    const int max_iter = 50 * (m + ncols) + 1000;

    LpSolution sol;
    if (nart > 0) {
        std::vector<double> cost(size_t(ncols), 0.0);
        for (int j = 0; j < ncols; ++j)
            if (is_art[size_t(j)]) cost[size_t(j)] = -1.0;
        tab.set_costs(cost);
        tab.run_refreshed(A0, b0, cost, pivot_tol, opt_tol, 1e-12 * (1.0 + bnorm), max_iter);
        double infeas = 0.0;
        for (int i = 0; i < m; ++i)
            if (is_art[size_t(tab.basis[size_t(i)])]) infeas += tab.rhs(i);
        if (infeas > feas_tol) {
            sol.status = LpSolution::Status::Infeasible;
            sol.iterations = tab.iterations;
            return sol;
        }
        // drive remaining artificials out of the basis where possible
        for (int i = 0; i < m; ++i) {
            if (!is_art[size_t(tab.basis[size_t(i)])]) continue;
            int e = -1;
            double best = pivot_tol;
            for (int j = 0; j < ncols; ++j)
                if (!is_art[size_t(j)] && std::abs(tab.at(i, j)) > best) {
                    best = std::abs(tab.at(i, j));
                    e = j;
                }
            if (e >= 0) tab.pivot(i, e);
        }
        for (int j = 0; j < ncols; ++j)
            if (is_art[size_t(j)]) tab.barred[size_t(j)] = 1;
    }

    std::vector<double> cost(size_t(ncols), 0.0);
    for (int j = 0; j < nv; ++j) {
        const Map& mp = vmap[size_t(j)];
        cost[size_t(mp.col)] = lp.objective[size_t(j)] * mp.sign;
        if (mp.neg_col >= 0) cost[size_t(mp.neg_col)] = -lp.objective[size_t(j)];
    }
    tab.set_costs(cost);
    bool bounded = tab.run_refreshed(A0, b0, cost, pivot_tol, opt_tol, 1e-12 * (1.0 + bnorm), max_iter);
    sol.iterations = tab.iterations;
    if (!bounded) {
        sol.status = LpSolution::Status::Unbounded;
        return sol;
    }

    std::vector<double> z(size_t(ncols), 0.0);
    for (int i = 0; i < m; ++i) z[size_t(tab.basis[size_t(i)])] = std::max(tab.rhs(i), 0.0);
    sol.status = LpSolution::Status::Optimal;
    sol.x.resize(size_t(nv));
    for (int j = 0; j < nv; ++j) {
        const Map& mp = vmap[size_t(j)];
        double v = mp.shift + mp.sign * z[size_t(mp.col)];
        if (mp.neg_col >= 0) v -= z[size_t(mp.neg_col)];
        sol.x[size_t(j)] = v;
    }
    sol.duals.assign(size_t(nr), 0.0);
    for (int i = 0; i < m; ++i) {
        int orig = all[size_t(i)].orig;
        if (orig < 0) continue;
        // unit column has zero phase-2 cost, so its reduced cost is -y_i
        sol.duals[size_t(orig)] = -tab.red(unit_col[size_t(i)]) * flip[size_t(i)];
    }

    // certificate quantities in the original space
    double obj = 0.0;
    for (int j = 0; j < nv; ++j) obj += lp.objective[size_t(j)] * sol.x[size_t(j)];
    sol.objective = obj;
    sol.reduced_costs.assign(size_t(nv), 0.0);
    double dual_obj = 0.0, pres = 0.0, comp = 0.0;
    for (int i = 0; i < nr; ++i) {
        double ax = 0.0;
        for (int j = 0; j < nv; ++j) ax += lp.rows[size_t(i)][size_t(j)] * sol.x[size_t(j)];
        double slack = lp.rhs[size_t(i)] - ax;
        switch (lp.rel[size_t(i)]) {
        case LinearProgram::Rel::Le: pres = std::max(pres, -slack); break;
        case LinearProgram::Rel::Ge: pres = std::max(pres, slack); break;
        case LinearProgram::Rel::Eq: pres = std::max(pres, std::abs(slack)); break;
        }
        comp = std::max(comp, std::abs(sol.duals[size_t(i)] * slack));
        dual_obj += lp.rhs[size_t(i)] * sol.duals[size_t(i)];
    }
    for (int j = 0; j < nv; ++j) {
        double rc = lp.objective[size_t(j)];
        for (int i = 0; i < nr; ++i) rc -= lp.rows[size_t(i)][size_t(j)] * sol.duals[size_t(i)];
        sol.reduced_costs[size_t(j)] = rc;
        double lo = lp.lower[size_t(j)], hi = lp.upper[size_t(j)], xj = sol.x[size_t(j)];
        pres = std::max({pres, lo - xj, xj - hi});
        // the bound that absorbs the reduced cost
        if (rc > 0.0) {
            if (std::isfinite(hi)) {
                dual_obj += rc * hi;
                comp = std::max(comp, rc * (hi - xj));
            } else if (rc > 1e-9) {
                dual_obj = inf;
            }
        } else if (rc < 0.0) {
            if (std::isfinite(lo)) {
                dual_obj += rc * lo;
                comp = std::max(comp, -rc * (xj - lo));
            } else if (rc < -1e-9) {
                dual_obj = inf;
            }
        }
    }
    sol.dual_objective = dual_obj;
    sol.primal_residual = std::max(pres, 0.0);
    sol.complementarity_residual = comp;
    sol.duality_gap = dual_obj - obj;
    return sol;
}

} // namespace reprice
