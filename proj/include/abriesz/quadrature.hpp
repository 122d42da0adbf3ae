#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace abriesz {

// Subdivision or truncation budget exhausted before reaching tolerance.
struct nonconvergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Decay hypothesis of a semi-infinite integrand failed at a probe point.
struct decay_hypothesis_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class T>
struct QuadResultT {
    T value{};
    double error_estimate = 0.0;
    long evaluations = 0;
};

using QuadResult = QuadResultT<double>;
using QuadResultC = QuadResultT<std::complex<double>>;

namespace detail {

struct GaussRule {
    std::vector<double> x;  // nodes on (-1, 1), interior only
    std::vector<double> w;
};

// Gauss-Legendre nodes by Newton iteration on P_n. Machine precision for
// the small orders used here.
inline GaussRule make_gauss_rule(int n) {
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    const double pi = 3.14159265358979323846;
    for (int k = 0; k < (n + 1) / 2; ++k) {
        double x = std::cos(pi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                p0 = 1.0;
                p1 = x;
                for (int j = 2; j <= n; ++j) {
                    double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                break;
            }
        }
        r.x[k] = -x;
        r.x[n - 1 - k] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.w[k] = w;
        r.w[n - 1 - k] = w;
    }
    return r;
}

inline const GaussRule& gauss7() {
    static const GaussRule r = make_gauss_rule(7);
    return r;
}
inline const GaussRule& gauss15() {
    static const GaussRule r = make_gauss_rule(15);
    return r;
}

template <class T>
double quad_abs(const T& v) {
    if constexpr (std::is_same_v<T, double>)
        return std::abs(v);
    else
        return std::abs(v);
}

template <class F, class T>
struct Panel {
    double lo, hi;
    T value;
    double err;
    int depth;
};

}  // namespace detail

// Adaptive bisection with a nested Gauss 7/15 pair. Both rules use interior
// nodes only, so endpoint singularities (x-a)^gamma, gamma > -1, are never
// sampled at the endpoint and are resolved by bisection toward it.
// `breakpoints` seeds the initial subdivision (known kinks, phase panels).
template <class F>
auto integrate_adaptive(F&& f, double a, double b, double tol,
                        std::vector<double> breakpoints = {})
    -> QuadResultT<std::decay_t<std::invoke_result_t<F, double>>> {
    using T = std::decay_t<std::invoke_result_t<F, double>>;
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
        throw std::domain_error("integrate_adaptive: need finite a < b");
    if (!(tol > 0)) throw std::domain_error("integrate_adaptive: tol must be > 0");

    long evals = 0;
    auto panel_eval = [&](double lo, double hi, int depth) {
        const auto& g7 = detail::gauss7();
        const auto& g15 = detail::gauss15();
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        T s7{}, s15{};
        for (int i = 0; i < 7; ++i) s7 += g7.w[i] * f(c + h * g7.x[i]);
        for (int i = 0; i < 15; ++i) s15 += g15.w[i] * f(c + h * g15.x[i]);
        evals += 22;
        s7 *= h;
        s15 *= h;
        return detail::Panel<F, T>{lo, hi, s15, detail::quad_abs<T>(s15 - s7), depth};
    };

    std::vector<double> cuts;
    cuts.push_back(a);
    for (double t : breakpoints)
        if (t > a && t < b) cuts.push_back(t);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto cmp = [](const detail::Panel<F, T>& p, const detail::Panel<F, T>& q) {
        return p.err < q.err;
    };
    std::priority_queue<detail::Panel<F, T>, std::vector<detail::Panel<F, T>>, decltype(cmp)>
        heap(cmp);

    T total{};
    double toterr = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto p = panel_eval(cuts[i], cuts[i + 1], 0);
        total += p.value;
        toterr += p.err;
        heap.push(p);
    }

    const int max_depth = 120;
    const std::size_t max_panels = 200000;
    std::size_t n_panels = cuts.size() - 1;
    while (toterr > std::max(tol, tol * detail::quad_abs<T>(total))) {
        if (heap.empty()) break;
        auto worst = heap.top();
        if (worst.depth >= max_depth || n_panels >= max_panels) {
            std::ostringstream os;
            os << "integrate_adaptive: subdivision limit reached, worst subinterval ["
               << worst.lo << ", " << worst.hi << "] with error " << worst.err;
            throw nonconvergence_error(os.str());
        }
        heap.pop();
        total -= worst.value;
        toterr -= worst.err;
        double mid = 0.5 * (worst.lo + worst.hi);
        auto left = panel_eval(worst.lo, mid, worst.depth + 1);
        auto right = panel_eval(mid, worst.hi, worst.depth + 1);
        total += left.value + right.value;
        toterr += left.err + right.err;
        heap.push(left);
        heap.push(right);
        ++n_panels;
    }

    QuadResultT<T> out;
    out.value = total;
    out.error_estimate = toterr;
    out.evaluations = evals;
    return out;
}

// Semi-infinite integral of an exponentially decaying integrand. The decay
// hypothesis |f(s)| <= M exp(-decay_rate*s) is validated at probe points;
// the tail beyond the truncation point contributes at most tol, and the
// finite part is integrated to tol, so the total error is <= 2 tol.
template <class F>
auto integrate_semi_infinite(F&& f, double decay_rate, double tol,
                             std::vector<double> breakpoints = {})
    -> QuadResultT<std::decay_t<std::invoke_result_t<F, double>>> {
    using T = std::decay_t<std::invoke_result_t<F, double>>;
    if (!(decay_rate > 0))
        throw std::domain_error("integrate_semi_infinite: decay_rate must be > 0");
    if (!(tol > 0)) throw std::domain_error("integrate_semi_infinite: tol must be > 0");

    const double probe0 = 1.0 / decay_rate;
    double envelope = 0.0;
    long evals = 0;
    for (int i = 1; i <= 4; ++i) {
        double s = i * probe0;
        envelope = std::max(envelope, detail::quad_abs<T>(f(s)) * std::exp(decay_rate * s));
        ++evals;
    }
    double M = std::max(envelope, 1e-300) * 2.0;
    for (int i = 6; i <= 12; i += 3) {
        double s = i * probe0;
        double fs = detail::quad_abs<T>(f(s));
        ++evals;
        if (fs > 10.0 * M * std::exp(-decay_rate * s) && fs > tol) {
            std::ostringstream os;
            os << "integrate_semi_infinite: decay hypothesis violated at s=" << s
               << " (|f|=" << fs << ", bound=" << M * std::exp(-decay_rate * s) << ")";
            throw decay_hypothesis_error(os.str());
        }
    }

    double s_max = std::max(12.0 * probe0, std::log(M / tol) / decay_rate) + 10.0 / decay_rate;
    auto r = integrate_adaptive(f, 0.0, s_max, tol, std::move(breakpoints));
    r.error_estimate += tol;  // truncated tail allowance
    r.evaluations += evals;
    return r;
}

}  // namespace abriesz
