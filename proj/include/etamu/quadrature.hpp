#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <utility>
#include <vector>

namespace etamu::quad {

struct QuadResult {
    double value = 0.0;
    double abs_err = 0.0;
    bool converged = false;
    std::size_t evaluations = 0;
    /// Integral of the auxiliary component, when the integrand supplies one.
    double aux = 0.0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
};

struct Segment {
    double a, b, value, err, aux;
    bool operator<(const Segment& o) const { return err < o.err; }
};

// f returns (value, aux); only the value drives refinement.
template <class F>
Segment gk15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const auto fc = f(center);
    double kronrod = fc.first * kWgk[7];
    double gauss = fc.first * kWg[3];
    double aux = fc.second * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const auto f1 = f(center - dx);
        const auto f2 = f(center + dx);
        kronrod += kWgk[j] * (f1.first + f2.first);
        aux += kWgk[j] * (f1.second + f2.second);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1.first + f2.first);
    }
    const double value = kronrod * half;
    double err = std::abs((kronrod - gauss) * half);
    // Guard against a lucky cancellation of the Gauss/Kronrod difference.
    err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * std::abs(value));
    return {a, b, value, err, aux * half};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature over the panels delimited
/// by the sorted `points`. The integrand returns a (value, aux) pair; aux is
/// integrated with the same nodes and reported in QuadResult::aux.
/// Stops once the summed error estimate is below max(abs_tol, rel_tol * |I|).
template <class F>
QuadResult integrate_pair(F&& f, const std::vector<double>& points, double abs_tol, double rel_tol = 0.0,
                          std::size_t max_segments = 4000) {
    QuadResult result;
    std::priority_queue<detail::Segment> heap;
    double total = 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        if (points[i] == points[i + 1]) continue;
        const detail::Segment seg = detail::gk15(f, points[i], points[i + 1]);
        total += seg.value;
        err += seg.err;
        heap.push(seg);
        result.evaluations += 15;
    }
    if (heap.empty()) {
        result.converged = true;
        return result;
    }
    while (err > std::max(abs_tol, rel_tol * std::abs(total)) && heap.size() < max_segments) {
        const detail::Segment worst = heap.top();
        if (std::abs(worst.b - worst.a) < 1e-14 * std::max(std::abs(worst.a), std::abs(worst.b))) break;
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const detail::Segment left = detail::gk15(f, worst.a, mid);
        const detail::Segment right = detail::gk15(f, mid, worst.b);
        result.evaluations += 30;
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum in abscissa order to shed the drift of incremental updates.
    std::vector<detail::Segment> segs;
    segs.reserve(heap.size());
    while (!heap.empty()) {
        segs.push_back(heap.top());
        heap.pop();
    }
    std::sort(segs.begin(), segs.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    total = 0.0;
    err = 0.0;
    double aux = 0.0;
    for (const auto& s : segs) {
        total += s.value;
        err += s.err;
        aux += s.aux;
    }
    result.value = total;
    result.abs_err = err;
    result.aux = aux;
    result.converged = err <= std::max(abs_tol, rel_tol * std::abs(total));
    return result;
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].
template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol, double rel_tol = 0.0,
                     std::size_t max_segments = 4000) {
    auto pair = [&f](double x) { return std::pair<double, double>(f(x), 0.0); };
    return integrate_pair(pair, std::vector<double>{a, b}, abs_tol, rel_tol, max_segments);
}

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) : nodes(n), weights(n) {
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0;
                double p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }

    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double c = 0.5 * (a + b);
        const double h = 0.5 * (b - a);
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(c + h * nodes[i]);
        return s * h;
    }
};

/// Wynn epsilon extrapolation of a sequence of partial sums.
/// Returns the extrapolated limit and, as its error estimate, the smallest
/// difference between consecutive even-order extrapolants.
inline std::pair<double, double> wynn_epsilon(const std::vector<double>& partial_sums) {
    const std::size_t n = partial_sums.size();
    if (n < 3) {
        const double last = n ? partial_sums.back() : 0.0;
        const double prev = n > 1 ? partial_sums[n - 2] : 0.0;
        return {last, std::abs(last - prev)};
    }
    // table[i][k] is epsilon_{k-1}^{(i)}; column 0 is epsilon_{-1} = 0.
    std::vector<std::vector<double>> table(n + 1, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) table[i][1] = partial_sums[i];
    for (std::size_t k = 2; k <= n; ++k) {
        for (std::size_t i = 0; i + k <= n; ++i) {
            const double diff = table[i + 1][k - 1] - table[i][k - 1];
            const double prev = k >= 2 ? table[i + 1][k - 2] : 0.0;
            if (diff == 0.0) {
                table[i][k] = std::numeric_limits<double>::infinity();
            } else {
                table[i][k] = prev + 1.0 / diff;
            }
        }
    }
    // Odd columns hold the even-order estimates; keep the deepest entry of each.
    double best = partial_sums.back();
    double best_err = std::abs(partial_sums.back() - partial_sums[n - 2]);
    std::vector<double> estimates;
    for (std::size_t k = 1; k <= n; k += 2) {
        const std::size_t i = n - k;
        const double v = table[i][k];
        if (std::isfinite(v)) estimates.push_back(v);
    }
    if (estimates.size() >= 2) {
        // Pick the consecutive pair of column estimates that agree best.
        for (std::size_t j = 1; j < estimates.size(); ++j) {
            const double e = std::abs(estimates[j] - estimates[j - 1]);
            if (e < best_err) {
                best_err = e;
                best = estimates[j];
            }
        }
    }
    return {best, best_err};
}

}  // namespace etamu::quad
