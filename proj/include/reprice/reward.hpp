#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace reprice {

// a + b*x
struct AffinePiece {
    double a = 0.0;
    double b = 0.0;
    double operator()(double x) const { return a + b * x; }
};

struct BestResponse {
    double x = 0.0;     // largest maximizer of g(x) - delta*x on [0,1]
    double value = 0.0; // g(x) - delta*x at the maximizer
};

/// Minimal representation of min_k (a_k + b_k x) on [0,1]: pieces by decreasing slope,
/// piece k active on [breaks[k], breaks[k+1]], breaks from 0 to 1.
inline std::pair<std::vector<AffinePiece>, std::vector<double>> lower_envelope(std::vector<AffinePiece> in) {
    require(!in.empty(), "min_affine: no pieces");
    for (auto& p : in)
        require(std::isfinite(p.a) && std::isfinite(p.b), "min_affine: non-finite piece");
    std::sort(in.begin(), in.end(), [](const AffinePiece& u, const AffinePiece& v) {
        if (u.b != v.b) return u.b > v.b;
        return u.a < v.a;
    });
    std::vector<AffinePiece> uniq;
    for (auto& p : in)
        if (uniq.empty() || uniq.back().b != p.b) uniq.push_back(p);

    // lowest line at x = 0; steeper lines never matter on [0,1]
    size_t cur = 0;
    for (size_t k = 1; k < uniq.size(); ++k)
        if (uniq[k].a < uniq[cur].a) cur = k;
    std::vector<AffinePiece> hull{uniq[cur]};
    std::vector<double> xs{0.0};
    double x = 0.0;
    while (true) {
        const AffinePiece p = uniq[cur];
        double best_x = inf;
        size_t best_k = cur;
        for (size_t k = cur + 1; k < uniq.size(); ++k) {
            double xc = (uniq[k].a - p.a) / (p.b - uniq[k].b);
            if (xc < best_x || (xc == best_x && uniq[k].b < uniq[best_k].b)) {
                best_x = xc;
                best_k = k;
            }
        }
        if (best_x >= 1.0 || best_k == cur) break;
        cur = best_k;
        if (best_x <= x) {
            hull.back() = uniq[cur];
            continue;
        }
        hull.push_back(uniq[cur]);
        xs.push_back(best_x);
        x = best_x;
    }
    xs.push_back(1.0);
    return {hull, xs};
}

/// Concave nondecreasing reward rate per unit arrival rate, g(0) = 0.
class RewardFunction {
public:
    enum class Kind { MinAffine, Quadratic, TabulatedConcave };

    RewardFunction() : pieces_{{0.0, 0.0}}, breaks_{0.0, 1.0} {}

    /// g(x) = min_k a_k + b_k x. Pieces may be unsorted and redundant.
    static RewardFunction min_affine(std::vector<AffinePiece> pieces) {
        RewardFunction g;
        g.kind_ = Kind::MinAffine;
        g.build_envelope(std::move(pieces));
        return g;
    }

    /// g(x) = b1 x + b2 x^2 up to its maximizer (capped at 1), flat afterwards.
    static RewardFunction quadratic(double b1, double b2) {
        require(std::isfinite(b1) && std::isfinite(b2), "quadratic: non-finite coefficient");
        require(b1 >= 0.0, "quadratic: linear coefficient must be >= 0");
        require(b2 <= 0.0, "quadratic: quadratic coefficient must be <= 0 for concavity");
        RewardFunction g;
        g.kind_ = Kind::Quadratic;
        g.q1_ = b1;
        g.q2_ = b2;
        g.qbar_ = (b2 < 0.0) ? std::min(1.0, -b1 / (2.0 * b2)) : 1.0;
        return g;
    }

    /// Piecewise-linear interpolation of (x, y) points with x from 0 to 1.
    static RewardFunction tabulated(const std::vector<std::pair<double, double>>& pts) {
        require(pts.size() >= 2, "tabulated: need at least two points");
        require(pts.front().first == 0.0 && pts.back().first == 1.0,
                "tabulated: points must start at x=0 and end at x=1");
        require(std::abs(pts.front().second) <= 1e-12, "tabulated: g(0) must be 0");
        std::vector<AffinePiece> pieces;
        double prev_slope = inf;
        for (size_t i = 1; i < pts.size(); ++i) {
            double dx = pts[i].first - pts[i - 1].first;
            require(dx > 0.0, "tabulated: x values must be strictly increasing");
            double s = (pts[i].second - pts[i - 1].second) / dx;
            require(s >= -1e-12, "tabulated: g must be nondecreasing");
            require(s <= prev_slope + 1e-10, "tabulated: g must be concave");
            prev_slope = s;
            pieces.push_back({pts[i - 1].second - s * pts[i - 1].first, s});
        }
        pieces.front().a = 0.0;
        RewardFunction g;
        g.kind_ = Kind::TabulatedConcave;
        g.build_envelope(std::move(pieces));
        return g;
    }

    Kind kind() const { return kind_; }
    bool is_piecewise_linear() const { return kind_ != Kind::Quadratic; }

    // minimal pieces, decreasing slope; piece k is active on [breaks()[k], breaks()[k+1]]
    const std::vector<AffinePiece>& pieces() const { return pieces_; }
    const std::vector<double>& breaks() const { return breaks_; }

    double quad_b1() const { return q1_; }
    double quad_b2() const { return q2_; }
    double quad_flat_from() const { return qbar_; }

    double operator()(double x) const {
        x = std::clamp(x, 0.0, 1.0);
        if (kind_ == Kind::Quadratic) {
            double t = std::min(x, qbar_);
            return t * (q1_ + q2_ * t);
        }
        return pieces_[segment_of(x)](x);
    }

    /// Right derivative g'_+(x) (at x = 1 the left one).
    double right_derivative(double x) const {
        if (kind_ == Kind::Quadratic) {
            if (x >= qbar_ && qbar_ < 1.0) return 0.0;
            return q1_ + 2.0 * q2_ * std::min(x, qbar_);
        }
        auto it = std::upper_bound(breaks_.begin() + 1, breaks_.end() - 1, x);
        size_t k = size_t(it - breaks_.begin()) - 1;
        return pieces_[std::min(k, pieces_.size() - 1)].b;
    }

    /// Left derivative g'_-(x) (at x = 0 the right one).
    double left_derivative(double x) const {
        if (kind_ == Kind::Quadratic) {
            if (x > qbar_) return 0.0;
            return q1_ + 2.0 * q2_ * x;
        }
        auto it = std::lower_bound(breaks_.begin() + 1, breaks_.end() - 1, x);
        size_t k = size_t(it - breaks_.begin()) - 1;
        return pieces_[std::min(k, pieces_.size() - 1)].b;
    }

    /// Interior kinks of a piecewise-linear g (empty for Quadratic).
    std::vector<double> kinks() const {
        if (!is_piecewise_linear()) return {};
        return {breaks_.begin() + 1, breaks_.end() - 1};
    }

    /// Largest maximizer of g(x) - delta x over [0,1].
    BestResponse best_response(double delta) const {
        double x;
        if (kind_ == Kind::Quadratic) {
            if (delta <= 0.0)
                x = 1.0;
            else if (delta >= q1_)
                x = 0.0;
            else if (q2_ < 0.0)
                x = std::min(qbar_, (q1_ - delta) / (-2.0 * q2_));
            else
                x = 1.0;
        } else {
            // number of pieces with slope >= delta
            size_t k = count_slopes_at_least(delta);
            x = breaks_[k];
        }
        return {x, (*this)(x) - delta * x};
    }

    /// [smallest, largest] maximizer of g(x) - delta x, slopes within tol count as ties.
    std::pair<double, double> maximizer_interval(double delta, double tol = 1e-12) const {
        if (kind_ == Kind::Quadratic) {
            double hi = best_response(delta).x;
            double lo = hi;
            if (std::abs(delta) <= tol && qbar_ < 1.0) lo = qbar_;
            if (q2_ == 0.0 && std::abs(delta - q1_) <= tol) lo = 0.0;
            return {lo, hi};
        }
        size_t khi = count_slopes_at_least(delta - tol);
        size_t klo = count_slopes_at_least(delta + tol);
        return {breaks_[std::min(klo, khi)], breaks_[khi]};
    }

    /// g(x0) + s (x - x0) - g(x), evaluated without cancellation for Quadratic.
    double linearization_gap(double x0, double s, double x) const {
        if (kind_ == Kind::Quadratic && x0 <= qbar_ && x <= qbar_) {
            double dx = x - x0;
            double d0 = q1_ + 2.0 * q2_ * x0;
            return (s - d0) * dx - q2_ * dx * dx;
        }
        return (*this)(x0) + s * (x - x0) - (*this)(x);
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(10);
        if (kind_ == Kind::Quadratic) {
            os << "quadratic(" << q1_ << "x + " << q2_ << "x^2, flat from " << qbar_ << ")";
            return os.str();
        }
        os << (kind_ == Kind::MinAffine ? "min_affine{" : "tabulated{");
        for (size_t k = 0; k < pieces_.size(); ++k) {
            if (k) os << ", ";
            os << pieces_[k].b << "x";
            if (pieces_[k].a != 0.0) os << " + " << pieces_[k].a;
        }
        os << "}";
        return os.str();
    }

private:
    Kind kind_ = Kind::MinAffine;
    std::vector<AffinePiece> pieces_;
    std::vector<double> breaks_; // 0 = X_0 < X_1 < ... < X_m = 1
    double q1_ = 0.0, q2_ = 0.0, qbar_ = 1.0;

    size_t count_slopes_at_least(double delta) const {
        // slopes are strictly decreasing
        size_t lo = 0, hi = pieces_.size();
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (pieces_[mid].b >= delta)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

    size_t segment_of(double x) const {
        auto it = std::upper_bound(breaks_.begin() + 1, breaks_.end() - 1, x);
        return size_t(it - breaks_.begin()) - 1;
    }

    void build_envelope(std::vector<AffinePiece> in) {
        auto [hull, xs] = lower_envelope(std::move(in));
        require(std::abs(hull.front().a) <= 1e-12,
                "reward function must satisfy g(0) = 0 (got " + std::to_string(hull.front().a) + ")");
        hull.front().a = 0.0;
        for (auto& p : hull)
            require(p.b >= -1e-12, "reward function must be nondecreasing on [0,1]");
        pieces_ = std::move(hull);
        breaks_ = std::move(xs);
    }
};

// ------------------------------------------------------------------------------------------------

struct WtpDistribution {
    enum class Kind { Discrete, Uniform };
    Kind kind = Kind::Discrete;
    std::vector<double> values, probs;
    double lo = 0.0, hi = 1.0;

    static WtpDistribution discrete(std::vector<double> v, std::vector<double> p) {
        WtpDistribution d;
        d.kind = Kind::Discrete;
        d.values = std::move(v);
        d.probs = std::move(p);
        d.validate();
        return d;
    }
    static WtpDistribution discrete(const std::vector<std::pair<double, double>>& vp) {
        std::vector<double> v, p;
        for (auto& [a, b] : vp) {
            v.push_back(a);
            p.push_back(b);
        }
        return discrete(std::move(v), std::move(p));
    }
    static WtpDistribution uniform(double lo, double hi) {
        WtpDistribution d;
        d.kind = Kind::Uniform;
        d.lo = lo;
        d.hi = hi;
        d.validate();
        return d;
    }

    void validate() const {
        if (kind == Kind::Uniform) {
            require(std::isfinite(lo) && std::isfinite(hi), "wtp.uniform: bounds must be finite");
            require(lo >= 0.0, "wtp.uniform: lo must be >= 0");
            require(lo < hi, "wtp.uniform: need lo < hi");
            return;
        }
        require(!values.empty(), "wtp.discrete: empty distribution");
        require(values.size() == probs.size(), "wtp.discrete: values/probs length mismatch");
        double s = 0.0;
        for (size_t i = 0; i < values.size(); ++i) {
            require(std::isfinite(values[i]) && values[i] > 0.0, "wtp.discrete: values must be positive");
            require(std::isfinite(probs[i]) && probs[i] > 0.0, "wtp.discrete: probabilities must be positive");
            s += probs[i];
        }
        require(std::abs(s - 1.0) <= 1e-12,
                "wtp.discrete: probabilities sum to " + std::to_string(s) + ", expected 1");
        auto v = values;
        std::sort(v.begin(), v.end());
        require(std::adjacent_find(v.begin(), v.end()) == v.end(), "wtp.discrete: values must be distinct");
    }

    // values sorted descending with their probabilities
    std::vector<std::pair<double, double>> sorted_desc() const {
        std::vector<std::pair<double, double>> vp;
        for (size_t i = 0; i < values.size(); ++i) vp.emplace_back(values[i], probs[i]);
        std::sort(vp.begin(), vp.end(), [](auto& a, auto& b) { return a.first > b.first; });
        return vp;
    }

    /// F^{-1}(q), left-continuous quantile.
    double quantile(double q) const {
        if (kind == Kind::Uniform) return lo + (hi - lo) * std::clamp(q, 0.0, 1.0);
        auto vp = sorted_desc();
        std::reverse(vp.begin(), vp.end());
        double cum = 0.0;
        for (auto& [v, p] : vp) {
            cum += p;
            if (q <= cum + 1e-15) return v;
        }
        return vp.back().first;
    }
};

/// Increasing concave envelope of x F^{-1}(1-x).
inline RewardFunction revenue_from_discrete_wtp(const WtpDistribution& dist) {
    require(dist.kind == WtpDistribution::Kind::Discrete, "revenue_from_discrete_wtp: need discrete WTP");
    dist.validate();
    auto vp = dist.sorted_desc();
    std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
    double q = 0.0;
    for (auto& [v, p] : vp) {
        q += p;
        pts.emplace_back(q, q * v);
    }
    pts.back().first = 1.0;
    pts.back().second = vp.back().first;

    // upper hull, monotone chain
    std::vector<std::pair<double, double>> hull;
    for (auto& pt : pts) {
        while (hull.size() >= 2) {
            auto& o = hull[hull.size() - 2];
            auto& a = hull.back();
            double cross = (a.first - o.first) * (pt.second - o.second) - (a.second - o.second) * (pt.first - o.first);
            if (cross >= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(pt);
    }
    // flatten past the revenue maximum
    size_t top = 0;
    for (size_t i = 1; i < hull.size(); ++i)
        if (hull[i].second > hull[top].second) top = i;
    hull.resize(top + 1);
    if (hull.back().first < 1.0) hull.emplace_back(1.0, hull.back().second);
    return RewardFunction::min_affine([&] {
        std::vector<AffinePiece> pieces;
        for (size_t i = 1; i < hull.size(); ++i) {
            double s = (hull[i].second - hull[i - 1].second) / (hull[i].first - hull[i - 1].first);
            pieces.push_back({hull[i - 1].second - s * hull[i - 1].first, s});
        }
        pieces.front().a = 0.0;
        return pieces;
    }());
}

inline RewardFunction revenue_from_uniform_wtp(const WtpDistribution& dist) {
    require(dist.kind == WtpDistribution::Kind::Uniform, "revenue_from_uniform_wtp: need uniform WTP");
    dist.validate();
    return RewardFunction::quadratic(dist.hi, -(dist.hi - dist.lo));
}

/// g(x) = integral of F^{-1}(v) over [1-x, 1].
inline RewardFunction welfare_from_wtp(const WtpDistribution& dist) {
    dist.validate();
    if (dist.kind == WtpDistribution::Kind::Uniform)
        return RewardFunction::quadratic(dist.hi, -(dist.hi - dist.lo) / 2.0);
    std::vector<AffinePiece> pieces;
    double q = 0.0, w = 0.0;
    for (auto& [v, p] : dist.sorted_desc()) {
        pieces.push_back({w - v * q, v});
        q += p;
        w += p * v;
    }
    pieces.front().a = 0.0;
    return RewardFunction::min_affine(std::move(pieces));
}

// ------------------------------------------------------------------------------------------------

struct ShapeModel {
    double alpha = inf;
    double k1 = 0.0, k2 = 0.0;
    double eps = 0.0;
    double gprime_at_xstar = 0.0;
    double super_lo = 0.0; // g'_+(x*)
    double super_hi = 0.0; // g'_-(x*)
};

namespace detail {
struct SlopeFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};
inline SlopeFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    SlopeFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}
} // namespace detail

/// Local shape of g at x*: residual g(x*) + g'(x*)(x-x*) - g(x) ~ k |x-x*|^alpha.
inline ShapeModel classify_shape(const RewardFunction& g, double xstar, double eps) {
    require(xstar > 0.0 && xstar < 1.0, "classify_shape: x* must lie in (0,1)");
    require(eps > 0.0 && eps < std::min(xstar, 1.0 - xstar), "classify_shape: need 0 < eps < min(x*, 1-x*)");
    ShapeModel s;
    s.eps = eps;
    s.super_lo = g.right_derivative(xstar);
    s.super_hi = g.left_derivative(xstar);
    bool kink = s.super_hi - s.super_lo > 1e-12;
    s.gprime_at_xstar = kink ? 0.5 * (s.super_lo + s.super_hi) : s.super_lo;

    std::vector<double> offs;
    for (int i = 0; i < 64; ++i) offs.push_back(eps * std::pow(1e-6, 1.0 - i / 63.0));

    std::vector<double> lx, ly, resid;
    std::vector<double> toff;
    double scale = std::max(1.0, std::abs(g(xstar)));
    for (double t : offs) {
        for (double sign : {-1.0, 1.0}) {
            double r = g.linearization_gap(xstar, s.gprime_at_xstar, xstar + sign * t);
            resid.push_back(r);
            toff.push_back(t);
            if (r > 1e-14 * scale) {
                lx.push_back(std::log(t));
                ly.push_back(std::log(r));
            }
        }
    }

    if (g.is_piecewise_linear()) {
        s.alpha = kink ? 1.0 : inf;
    } else if (lx.size() < 8) {
        s.alpha = inf;
    } else {
        double a = detail::least_squares(lx, ly).slope;
        if (std::abs(a - 1.0) < 0.05)
            a = 1.0;
        else if (std::abs(a - 2.0) < 0.05)
            a = 2.0;
        s.alpha = a;
    }

    if (std::isinf(s.alpha)) {
        s.k1 = s.k2 = 0.0;
    } else {
        double k1 = 0.0, k2 = inf;
        for (size_t i = 0; i < resid.size(); ++i) {
            double k = std::max(resid[i], 0.0) / std::pow(toff[i], s.alpha);
            k1 = std::max(k1, k);
            k2 = std::min(k2, k);
        }
        s.k1 = k1;
        s.k2 = k2;
    }
    return s;
}

} // namespace reprice
