#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "abriesz/kernels.hpp"

namespace abriesz {

namespace detail {

// Quintic smoothstep, C^2 at both ends.
inline double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

}  // namespace detail

// chi = 1 on [0, 3/4], 0 on [1, inf), C^2 transition; beta(r) = chi(r) - chi(2r)
// is supported in [3/8, 1] (inside the [3/8, 4/3] window) and telescopes to a
// dyadic partition of unity: chi(r) + sum_{j>=1} beta(2^-j r) = 1 for r > 0.
inline double bump_chi(double r) {
    if (r <= 0.75) return 1.0;
    if (r >= 1.0) return 0.0;
    return detail::smoothstep5((1.0 - r) * 4.0);
}

inline double bump_beta(double r) { return bump_chi(r) - bump_chi(2.0 * r); }

inline double partition(int j, double r) {
    if (j < 0) throw std::domain_error("partition: j must be >= 0");
    if (j == 0) return bump_chi(r);
    return bump_beta(std::ldexp(r, -j));
}

struct DyadicPiece {
    int j = 0;
    int ell = 1;  // diffractive component index, D pieces only
    double delta = 0.0;
    FluxParameter flux{};
};

struct BoundReport {
    std::string suite;
    int j = 0;
    int ell = 0;
    double alpha = 0.0;
    double delta = 0.0;
    double sup_ratio = 0.0;
    std::array<double, 3> argmax{};  // r1, r2, dtheta (or theta / zeta)
    std::string grid_spec;
    double ceiling = 0.0;
    bool pass = false;
};

// Dyadic geometric piece: beta(2^-j |x-y|) e^{i|x-y|} (1+|x-y|)^{-3/2-delta}
// on the angular window |theta1 - theta2| <= pi, unit amplitude symbol.
inline cplx kernel_piece_G(int j, const PolarPoint& x, const PolarPoint& y, double delta,
                           const FluxParameter& /*flux*/) {
    const double pi = 3.14159265358979323846;
    double u = distance_d(x, y);
    double cutoff = partition(j, u);
    if (cutoff == 0.0) return 0.0;
    if (std::abs(x.theta - y.theta) > pi) return 0.0;
    return cutoff * std::pow(1.0 + u, -1.5 - delta) * std::polar(1.0, u);
}

namespace detail {

// The two singular ratios of the B decomposition, in the stable forms used
// by b_hyperbolic.
inline double m2_ratio(double s, double dtheta, double a0) {
    const double pi = 3.14159265358979323846;
    double sh = std::sin(0.5 * (dtheta + pi));
    double b2 = 2.0 * sh * sh;
    double shh = std::sinh(0.5 * s);
    double den = 2.0 * shh * shh + b2;
    if (den == 0.0) return -2.0 * a0;  // s, b -> 0 limit along b = 0
    if (s * s + b2 < 1e-8) return 2.0 * a0 * s * (b2 - s) / (s * s + 2.0 * b2);
    return (std::expm1(-s) + b2) * std::sinh(a0 * s) / den;
}

inline double m3_ratio(double s, double dtheta, double a0) {
    const double pi = 3.14159265358979323846;
    double hx = 0.5 * (dtheta + pi);
    double sh = std::sin(hx);
    if (std::abs(sh) <= 3e-16) sh = 0.0;  // on the front: two-sided mean
    double b2 = 2.0 * sh * sh;
    double shh = std::sinh(0.5 * s);
    double den = 2.0 * shh * shh + b2;
    if (den == 0.0) return 0.0;
    double sinfull = 2.0 * sh * std::cos(hx);
    return sinfull * std::cosh(a0 * s) / den;
}

}  // namespace detail

namespace detail {

// Raw s-integral of the ell-th diffractive integrand (no dyadic cutoff),
// including the sin(alpha pi) coefficient of the B decomposition so every
// piece vanishes at integer flux.
inline cplx d_piece_integral(int ell, const PolarPoint& x, const PolarPoint& y,
                             double delta, const FluxParameter& flux, double tol) {
    if (ell < 1 || ell > 3) throw std::domain_error("kernel_piece_D: ell must be 1, 2 or 3");
    if (flux.integer_flux()) return 0.0;
    const double pi = 3.14159265358979323846;
    const double a0 = flux.alpha0;
    const double dth = x.theta - y.theta;
    const double coeff = (ell == 1) ? std::sin(std::abs(a0) * pi) : std::sin(a0 * pi);

    GeometricFactors g(x, y);
    OscSpec spec;
    spec.freq = 1.0;
    spec.env_pow = 1.5 + delta;
    spec.rate_b = (ell == 1) ? std::abs(a0) : 1.0 - std::abs(a0);
    spec.tol_abs = tol * std::pow(1.0 + g.ds(0.0), -1.5 - delta);
    auto integrand = [&](double s) {
        double m;
        if (ell == 1)
            m = std::exp(-std::abs(a0) * s);
        else if (ell == 2)
            m = m2_ratio(s, dth, a0);
        else
            m = m3_ratio(s, dth, a0);
        double ds = g.ds(s);
        return std::polar(std::pow(1.0 + ds, -1.5 - delta) * m, ds);
    };
    return coeff * oscillatory_s_integral(g, spec, integrand).value;
}

}  // namespace detail

// Dyadic diffractive piece ell in {1,2,3}: the ell-th integrand of the B
// decomposition under the beta(2^-j(r1+r2)) cutoff.
inline cplx kernel_piece_D(int ell, int j, const PolarPoint& x, const PolarPoint& y,
                           double delta, const FluxParameter& flux, double tol = 1e-9) {
    double cutoff = partition(j, x.r + y.r);
    if (cutoff == 0.0) return 0.0;
    return cutoff * detail::d_piece_integral(ell, x, y, delta, flux, tol);
}

// Ceilings for the bound suites: 4x the sup ratios observed at j = 4 on the
// default grids during calibration, frozen here.
inline constexpr double kDBoundCeiling = 7.5;   // observed 1.88 at j=4 over the battery
inline constexpr double kIjBoundCeiling = 6.5;  // observed ~1.6
inline constexpr double kFtHLowCeiling = 8.0;
inline constexpr double kFtHHighCeiling = 8.0;

// sup over a rescaled grid (r1+r2 in [3/8, 4/3], dtheta stressing pi) of
// |K~_D^{ell,j}| / [ 2^{-j(3/2+delta)} (1 + 2^j r1 r2)^{-1/2} ].
inline BoundReport verify_D_bound(int ell, int j, double delta, const FluxParameter& flux,
                                  int q_points = 33, double tol = 1e-7) {
    if (ell < 1 || ell > 2) throw std::domain_error("verify_D_bound: ell in {1,2}");
    const double pi = 3.14159265358979323846;
    BoundReport rep;
    rep.suite = "d-bound";
    rep.j = j;
    rep.ell = ell;
    rep.alpha = flux.alpha_total;
    rep.delta = delta;
    rep.ceiling = kDBoundCeiling;
    rep.grid_spec = "q=2^j*r1*r2 geometric [1e-1,1e3] x" + std::to_string(q_points) +
                    ", sigma {0.8,1.0,1.2}, dtheta {0..pi}";
    if (flux.integer_flux()) {
        rep.sup_ratio = 0.0;
        rep.pass = true;
        return rep;
    }
    const double scale = std::ldexp(1.0, j);
    const std::vector<double> dthetas = {0.0,      0.5,        1.5,        2.5,
                                         pi - 0.1, pi - 1e-2,  pi - 1e-3,  pi,
                                         -1.0,     -(pi - 1e-2)};
    const std::vector<double> sigmas = {0.8, 1.0, 1.2};
    for (int iq = 0; iq < q_points; ++iq) {
        double q = 0.1 * std::pow(1e4, (iq + 0.5) / q_points);
        for (double sigma : sigmas) {
            double p = q / scale;
            if (sigma * sigma < 4.0 * p) continue;  // no real radii for this q
            double root = std::sqrt(sigma * sigma / 4.0 - p);
            double r1 = sigma / 2.0 + root, r2 = sigma / 2.0 - root;
            if (r2 <= 0.0) continue;
            for (double dth : dthetas) {
                PolarPoint xs(scale * r1, dth > 0 ? dth : dth + kTwoPi);
                PolarPoint ys(scale * r2, 0.0);
                // rescaled frame: the cutoff lives on the unscaled r1 + r2
                cplx k = bump_beta(r1 + r2) *
                         detail::d_piece_integral(ell, xs, ys, delta, flux, tol);
                double bound = std::pow(2.0, -double(j) * (1.5 + delta)) /
                               std::sqrt(1.0 + scale * r1 * r2);
                double ratio = std::abs(k) / bound;
                if (ratio > rep.sup_ratio) {
                    rep.sup_ratio = ratio;
                    rep.argmax = {r1, r2, dth};
                }
            }
        }
    }
    rep.pass = rep.sup_ratio <= rep.ceiling;
    return rep;
}

// F(a) = Int_0^inf e^{i a u^2} / (1+u^2) du, a >= 0, by rotating the contour
// to u = e^{i pi/4} t (no poles in the sector, arc vanishes):
//   F(a) = e^{i pi/4} [ Int_0^1 e^{-a t^2}/(1+i t^2) dt
//                     + Int_0^1 e^{-a/v^2}/(v^2+i) dv ].
// Non-oscillatory, so plain adaptive quadrature applies for any a.
inline cplx fresnel_lorentz(double a, double tol = 1e-12) {
    if (a < 0.0) throw std::domain_error("fresnel_lorentz: a must be >= 0");
    std::vector<double> cuts;
    if (a > 4.0) {  // resolve the width-1/sqrt(a) Gaussian at the left end
        for (double c = 0.25 / std::sqrt(a); c < 1.0; c *= 4.0) cuts.push_back(c);
    }
    auto head = integrate_adaptive(
        [a](double t) { return std::exp(-a * t * t) / cplx(1.0, t * t); }, 0.0, 1.0, tol,
        cuts);
    auto tail = integrate_adaptive(
        [a](double v) {
            double e = (a == 0.0) ? 1.0 : std::exp(-a / (v * v));
            return e / cplx(v * v, 1.0);
        },
        0.0, 1.0, tol);
    return std::polar(1.0, 0.25 * 3.14159265358979323846) * (head.value + tail.value);
}

// Model kernel H of the ell = 3 analysis: quadratic-phase integral against
// the theta-spike, reduced to the Fresnel-Lorentz profile. Vanishes at
// integer flux (surrogate for diffractive content).
inline cplx h_kernel(int j, double r1, double r2, double dtheta, double delta,
                     const FluxParameter& flux) {
    if (flux.integer_flux()) return 0.0;
    const double pi = 3.14159265358979323846;
    double sigma = r1 + r2;
    double cutoff = bump_beta(sigma);
    if (cutoff == 0.0) return 0.0;
    double hx = 0.5 * (dtheta + pi);
    double sh = std::sin(hx), cx = std::cos(hx);
    if (sh == 0.0) return 0.0;
    double b2 = 2.0 * sh * sh;
    double a = std::ldexp(r1 * r2 * b2 / sigma, j + 1);
    double sign = (sh > 0.0) ? 1.0 : -1.0;
    return std::pow(2.0, -double(j) * (1.5 + delta)) * cutoff *
           std::pow(sigma, -1.5 - delta) * 2.0 * cx * sign * fresnel_lorentz(a);
}

// I_j(r1, r2; theta) = beta(r1+r2) Int_0^inf e^{i 2^{j+1} r1 r2 s^2/(r1+r2)}
// sqrt(2) theta / (s^2 + 2 theta^2) ds = beta(r1+r2) F(2^{j+2} r1 r2 theta^2/(r1+r2)).
inline cplx i_j_integral(int j, double r1, double r2, double theta) {
    double sigma = r1 + r2;
    double cutoff = bump_beta(sigma);
    if (cutoff == 0.0 || theta == 0.0) return 0.0;
    double a = std::ldexp(r1 * r2 * theta * theta / sigma, j + 2);
    double sign = (theta > 0.0) ? 1.0 : -1.0;
    return cutoff * sign * fresnel_lorentz(a);
}

struct FourierHReport {
    double sup_low = 0.0;    // |H^| * 2^{j(3/2+d)} * (2^j r1 r2)^{1/2}, low-zeta regime
    double sup_high = 0.0;   // |H^| * 2^{j(3/2+d)} * |zeta|,            high-zeta regime
    double aliasing = 0.0;   // relative change under grid doubling
    double argmax_zeta_low = 0.0, argmax_zeta_high = 0.0;
    bool pass = false;
};

// Discrete Fourier bound check on H~(theta): samples the compactly supported
// model kernel on a theta grid with x8 Nyquist margin, evaluates the
// transform on zeta_grid and tests both regimes of the bound
// |H^| <= C 2^{-j(3/2+delta)} min((2^j r1 r2)^{-1/2}, |zeta|^{-1}).
inline FourierHReport fourier_bound_H(int j, double r1, double r2,
                                      const std::vector<double>& zeta_grid, double delta,
                                      const FluxParameter& flux, double eps = 0.1) {
    const double pi = 3.14159265358979323846;
    const double sigma = r1 + r2;
    const double L = 1.2 * eps;
    const double scale = std::ldexp(1.0, j);

    auto htilde = [&](double th) -> cplx {
        double w = detail::smoothstep5((eps - std::abs(th)) / (0.5 * eps));
        if (w == 0.0 || th == 0.0 || flux.integer_flux()) return 0.0;
        double a = std::ldexp(r1 * r2 * th * th / sigma, j + 2);
        double sign = (th > 0.0) ? 1.0 : -1.0;
        return std::pow(2.0, -double(j) * (1.5 + delta)) * w *
               std::pow(sigma, -1.5 - delta) * bump_beta(sigma) * sign *
               fresnel_lorentz(a);
    };

    double maxfreq = 2.0 * std::ldexp(r1 * r2 / sigma, j + 2) * eps;
    for (double z : zeta_grid) maxfreq = std::max(maxfreq, std::abs(z));
    std::size_t n = 64;
    while (pi / (L / double(n) * 2.0) < 8.0 * maxfreq) n *= 2;  // dtheta <= pi/(8 maxfreq)

    auto transform = [&](std::size_t nn, double zeta) {
        double dth = 2.0 * L / double(nn);
        cplx acc = 0.0;
        for (std::size_t m = 0; m < nn; ++m) {
            double th = -L + (m + 0.5) * dth;
            acc += htilde(th) * std::polar(1.0, -zeta * th);
        }
        return acc * dth;
    };

    FourierHReport rep;
    double zsplit = std::sqrt(scale * r1 * r2);
    for (double z : zeta_grid) {
        cplx hz = transform(n, z);
        cplx hz2 = transform(2 * n, z);
        double mag = std::abs(hz2);
        rep.aliasing = std::max(rep.aliasing,
                                std::abs(hz - hz2) / std::max(1e-300, std::abs(hz2)));
        double norm = std::pow(2.0, double(j) * (1.5 + delta));
        if (std::abs(z) <= zsplit) {
            double ratio = mag * norm * std::sqrt(scale * r1 * r2);
            if (ratio > rep.sup_low) {
                rep.sup_low = ratio;
                rep.argmax_zeta_low = z;
            }
        } else {
            double ratio = mag * norm * std::abs(z);
            if (ratio > rep.sup_high) {
                rep.sup_high = ratio;
                rep.argmax_zeta_high = z;
            }
        }
    }
    if (rep.aliasing > 0.01)
        throw nonconvergence_error("fourier_bound_H: aliasing above 1% on grid doubling");
    rep.pass = rep.sup_low <= kFtHLowCeiling && rep.sup_high <= kFtHHighCeiling;
    return rep;
}

// Closed-form determinant of the Hessian-type matrix of d_G derivatives
// (appendix lemma): r1 r2^3 (r1 cos(dtheta) - r2)^3 / d^6.
inline double det_lemma(double r1, double r2, double dtheta) {
    double d = distance_d(r1, r2, dtheta);
    if (d == 0.0) throw std::domain_error("det_lemma: coincident points");
    double c = std::cos(dtheta);
    double f = r1 * c - r2;
    return r1 * r2 * r2 * r2 * f * f * f / std::pow(d, 6.0);
}

// Closed forms of the d_G derivatives used by the determinant and the
// finite-difference cross-checks.
inline double deriv_d_theta(double r1, double r2, double t) {
    return r1 * r2 * std::sin(t) / distance_d(r1, r2, t);
}
inline double deriv_d_theta2(double r1, double r2, double t) {
    double d = distance_d(r1, r2, t);
    double s = r1 * r2 * std::sin(t);
    return r1 * r2 * std::cos(t) / d - s * s / (d * d * d);
}
inline double deriv_d_r1theta(double r1, double r2, double t) {
    double d = distance_d(r1, r2, t);
    return r2 * std::sin(t) / d -
           r1 * r2 * std::sin(t) * (r1 - r2 * std::cos(t)) / std::pow(d, 3.0);
}
inline double deriv_d_r1theta2(double r1, double r2, double t) {
    double d = distance_d(r1, r2, t);
    double st = std::sin(t), ct = std::cos(t);
    return r2 * ct / d - r1 * r2 * ct * (r1 - r2 * ct) / std::pow(d, 3.0) -
           2.0 * r1 * (r2 * st) * (r2 * st) / std::pow(d, 3.0) +
           3.0 * (r1 * r2 * st) * (r1 * r2 * st) * (r1 - r2 * ct) / std::pow(d, 5.0);
}
inline double deriv_d_theta3(double r1, double r2, double t) {
    double d = distance_d(r1, r2, t);
    double st = std::sin(t), ct = std::cos(t);
    return -r1 * r2 * st / d - 3.0 * r1 * r1 * r2 * r2 * st * ct / std::pow(d, 3.0) +
           3.0 * std::pow(r1 * r2 * st, 3.0) / std::pow(d, 5.0);
}

// Finite-difference oracle for the determinant lemma: assembles the 2x2
// matrix of mixed d_G derivatives by Richardson-extrapolated central
// differences of distance_d alone (independent of the closed forms above).
inline double det_fd_oracle(double r1, double r2, double dtheta, double h = 6e-3) {
    auto d = [](double a, double b, double t) { return distance_d(a, b, t); };
    auto d_rt = [&](double hh) {
        return (d(r1 + hh, r2, dtheta + hh) - d(r1 + hh, r2, dtheta - hh) -
                d(r1 - hh, r2, dtheta + hh) + d(r1 - hh, r2, dtheta - hh)) /
               (4.0 * hh * hh);
    };
    auto d_tt = [&](double hh) {
        return (d(r1, r2, dtheta + hh) - 2.0 * d(r1, r2, dtheta) + d(r1, r2, dtheta - hh)) /
               (hh * hh);
    };
    auto d_rtt = [&](double hh) {
        auto dtt_at = [&](double rr) {
            return (d(rr, r2, dtheta + hh) - 2.0 * d(rr, r2, dtheta) +
                    d(rr, r2, dtheta - hh)) /
                   (hh * hh);
        };
        return (dtt_at(r1 + hh) - dtt_at(r1 - hh)) / (2.0 * hh);
    };
    auto d_ttt = [&](double hh) {
        return (d(r1, r2, dtheta + 2.0 * hh) - 2.0 * d(r1, r2, dtheta + hh) +
                2.0 * d(r1, r2, dtheta - hh) - d(r1, r2, dtheta - 2.0 * hh)) /
               (2.0 * hh * hh * hh);
    };
    auto det_at = [&](double hh) {
        return d_rt(hh) * d_ttt(hh) - d_tt(hh) * d_rtt(hh);
    };
    double c1 = det_at(h), c2 = det_at(0.5 * h), c3 = det_at(0.25 * h);
    double r1a = (4.0 * c2 - c1) / 3.0, r2a = (4.0 * c3 - c2) / 3.0;
    return (16.0 * r2a - r1a) / 15.0;  // two Richardson levels, O(h^6)
}

}  // namespace abriesz
