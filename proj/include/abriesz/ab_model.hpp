#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "abriesz/quadrature.hpp"

namespace abriesz {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 6.28318530717958647692;
inline constexpr double kFourPiSq = 39.4784176043574344753;  // (2 pi)^2

// Total flux split into gauge integer part and fractional part in (-1/2, 1/2].
struct FluxParameter {
    double alpha_total = 0.0;
    int m = 0;
    double alpha0 = 0.0;

    static FluxParameter from_total(double alpha) {
        if (!std::isfinite(alpha)) throw std::domain_error("flux: alpha must be finite");
        FluxParameter f;
        f.alpha_total = alpha;
        double m = std::round(alpha);
        double a0 = alpha - m;
        if (a0 <= -0.5) {  // keep alpha0 in (-1/2, 1/2]
            a0 += 1.0;
            m -= 1.0;
        }
        f.m = static_cast<int>(m);
        f.alpha0 = a0;
        return f;
    }

    bool integer_flux() const { return alpha0 == 0.0; }
};

// Angular potential A(theta) on the circle: either the constant pure
// Aharonov-Bohm value alpha, or tabulated samples on a uniform grid with
// trigonometric interpolation. primitive(theta) = Int_0^theta A.
class AngularPotential {
  public:
    static AngularPotential pure_ab(double alpha) {
        AngularPotential p;
        p.pure_ = true;
        p.alpha_ = alpha;
        return p;
    }

    // Samples A(2 pi j / N), j = 0..N-1.
    static AngularPotential tabulated(std::vector<double> samples) {
        if (samples.size() < 4)
            throw std::invalid_argument("tabulated potential: need at least 4 samples");
        for (double v : samples)
            if (!std::isfinite(v))
                throw std::invalid_argument("tabulated potential: non-finite sample");
        AngularPotential p;
        p.pure_ = false;
        p.samples_ = std::move(samples);
        p.build_fourier();
        return p;
    }

    // Two-column delimited text (theta, A(theta)) on a uniform theta grid
    // covering [0, 2 pi). Lines starting with '#' are skipped.
    static AngularPotential load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("potential file not readable: " + path);
        std::vector<double> thetas, values;
        std::string line;
        while (std::getline(in, line)) {
            for (char& ch : line)
                if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
            std::istringstream ls(line);
            std::string first;
            if (!(ls >> first) || first[0] == '#') continue;
            double th = std::stod(first), v;
            if (!(ls >> v))
                throw std::invalid_argument("potential file: malformed line '" + line + "'");
            thetas.push_back(th);
            values.push_back(v);
        }
        const std::size_t n = thetas.size();
        if (n < 4) throw std::invalid_argument("potential file: need at least 4 rows");
        const double h = kTwoPi / double(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(thetas[j] - double(j) * h) > 1e-9 * kTwoPi)
                throw std::invalid_argument(
                    "potential file: theta grid must be uniform over [0, 2 pi)");
        }
        return tabulated(std::move(values));
    }

    bool is_pure() const { return pure_; }

    double flux_value() const { return pure_ ? alpha_ : mean_; }

    double operator()(double theta) const {
        if (pure_) return alpha_;
        double v = mean_;
        for (std::size_t k = 1; k < acos_.size(); ++k) {
            v += acos_[k] * std::cos(k * theta) + bsin_[k] * std::sin(k * theta);
        }
        return v;
    }

    // Int_0^theta A(theta') dtheta'; exactly alpha*theta for pure AB and
    // primitive(2 pi) = 2 pi * flux for tabulated data.
    double primitive(double theta) const {
        if (pure_) return alpha_ * theta;
        double v = mean_ * theta;
        for (std::size_t k = 1; k < acos_.size(); ++k) {
            v += (acos_[k] * std::sin(k * theta) - bsin_[k] * (std::cos(k * theta) - 1.0)) /
                 double(k);
        }
        return v;
    }

  private:
    void build_fourier() {
        const std::size_t n = samples_.size();
        mean_ = 0.0;
        for (double v : samples_) mean_ += v;
        mean_ /= double(n);
        const std::size_t kmax = n / 2;
        acos_.assign(kmax + 1, 0.0);
        bsin_.assign(kmax + 1, 0.0);
        for (std::size_t k = 1; k <= kmax; ++k) {
            double ca = 0.0, cb = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double th = kTwoPi * double(j) / double(n);
                ca += samples_[j] * std::cos(k * th);
                cb += samples_[j] * std::sin(k * th);
            }
            double scale = 2.0 / double(n);
            if (2 * k == n) scale = 1.0 / double(n);  // Nyquist mode
            acos_[k] = scale * ca;
            bsin_[k] = scale * cb;
        }
        if (2 * kmax == n) bsin_[kmax] = 0.0;
    }

    bool pure_ = true;
    double alpha_ = 0.0;
    double mean_ = 0.0;
    std::vector<double> samples_;
    std::vector<double> acos_, bsin_;
};

// Total magnetic flux: the mean of A over the circle.
inline double flux(const AngularPotential& potential) { return potential.flux_value(); }

struct PolarPoint {
    double r = 1.0;
    double theta = 0.0;

    PolarPoint() = default;
    PolarPoint(double r_, double theta_) : r(r_), theta(theta_) {
        if (!(r > 0.0) || !std::isfinite(r))
            throw std::domain_error("PolarPoint: r must be positive and finite");
        theta = std::fmod(theta, kTwoPi);
        if (theta < 0.0) theta += kTwoPi;
    }

    double x() const { return r * std::cos(theta); }
    double y() const { return r * std::sin(theta); }
};

inline double eigen_nu(int k, double alpha) { return std::abs(double(k) + alpha); }

inline cplx eigenfunction(int k, double theta, const AngularPotential& potential) {
    const double alpha = potential.flux_value();
    const double phase = -(theta * (double(k) + alpha) - potential.primitive(theta));
    return std::polar(1.0 / std::sqrt(kTwoPi), phase);
}

// |x - y| via (r1-r2)^2 + 4 r1 r2 sin^2(dtheta/2): the radicand is
// non-negative by construction, no cancellation near dtheta = 0.
inline double distance_d(double r1, double r2, double dtheta) {
    double a = r1 - r2;
    double s = std::sin(0.5 * dtheta);
    return std::sqrt(a * a + 4.0 * r1 * r2 * s * s);
}
inline double distance_d(const PolarPoint& x, const PolarPoint& y) {
    return distance_d(x.r, y.r, x.theta - y.theta);
}

// |n_s| = sqrt(r1^2 + r2^2 + 2 r1 r2 cosh s); rescaled form beyond s = 40
// so cosh never overflows.
inline double distance_ds(double s, double r1, double r2) {
    if (s < 0.0) throw std::domain_error("distance_ds: s must be >= 0");
    double p = r1 * r2;
    if (s <= 40.0 || p == 0.0) return std::sqrt(r1 * r1 + r2 * r2 + 2.0 * p * std::cosh(s));
    double e = std::exp(-s);
    return std::sqrt(p) * std::exp(0.5 * s) *
           std::sqrt(1.0 + ((r1 * r1 + r2 * r2) / p + e) * e);
}
inline double distance_ds(double s, const PolarPoint& x, const PolarPoint& y) {
    return distance_ds(s, x.r, y.r);
}

// Geometry shared by every kernel: the straight-line distance d, the
// diffractive distance family d_s, and b = sqrt(2) sin((dtheta+pi)/2).
struct GeometricFactors {
    double r1 = 0.0, r2 = 0.0;
    double dtheta = 0.0;  // raw theta1 - theta2 in (-2 pi, 2 pi)
    double d = 0.0;
    double b = 0.0;

    GeometricFactors() = default;
    GeometricFactors(const PolarPoint& x, const PolarPoint& y)
        : r1(x.r), r2(y.r), dtheta(x.theta - y.theta) {
        d = distance_d(r1, r2, dtheta);
        b = std::sqrt(2.0) * std::sin(0.5 * (dtheta + detailpi()));
    }

    double ds(double s) const { return distance_ds(s, r1, r2); }

  private:
    static constexpr double detailpi() { return 3.14159265358979323846; }
};

// A_alpha(theta1, theta2): phase e^{i Int_{theta2}^{theta1} A} over 4 pi^2
// times the branch factor of the angular window. The orientation of the line
// integral matches the eigenfunction product phi_k(theta1) conj(phi_k(theta2))
// (at integer flux the kernel gauges to e^{+i m dtheta} times the free one);
// the partial-wave oracle pins this. At |dtheta| = pi exactly the two
// adjacent windows are averaged (the one-sided limits' mean).
inline cplx a_factor(double theta1, double theta2, const FluxParameter& flux,
                     const AngularPotential& potential) {
    const double pi = 3.14159265358979323846;
    const double dth = theta1 - theta2;
    const double alpha = flux.alpha_total;
    cplx branch;
    // |dth| within an ulp of pi counts as on the window boundary; the front
    // test |sin((dth+pi)/2)| <= 3e-16 is shared with b_factor so the two
    // terms always sit on the same side of the jump.
    if (std::abs(std::sin(0.5 * (dth + pi))) <= 3e-16) {
        branch = (dth > 0.0) ? 0.5 * (1.0 + std::polar(1.0, -kTwoPi * alpha))
                             : 0.5 * (1.0 + std::polar(1.0, kTwoPi * alpha));
    } else if (std::abs(dth) < pi) {
        branch = 1.0;
    } else if (dth > pi) {
        branch = std::polar(1.0, -kTwoPi * alpha);
    } else {  // dth < -pi
        branch = std::polar(1.0, kTwoPi * alpha);
    }
    const double line = potential.primitive(theta1) - potential.primitive(theta2);
    return std::polar(1.0 / kFourPiSq, line) * branch;
}

namespace detail {

// The hyperbolic content of B_alpha at reduced flux a0 in (-1/2, 1/2].
// Denominator cosh s - cos(dtheta+pi) written as 2 sinh^2(s/2) + b^2 and the
// numerator through expm1, so the only remaining hazard is the simultaneous
// s, b -> 0 corner, where a series in (s, b) takes over.
inline cplx b_hyperbolic(double s, double dtheta, double a0) {
    const double pi = 3.14159265358979323846;
    const double hx = 0.5 * (dtheta + pi);
    double sh = std::sin(hx);
    // |dtheta| = pi to double precision sits on the diffractive front, where
    // the odd-in-b part takes its two-sided mean (zero), consistent with the
    // a_factor branch average and the partial-wave sum. sin(pi_double) is
    // 1.2e-16, so eps-level values mean "exactly on the front".
    if (std::abs(sh) <= 3e-16) sh = 0.0;
    const double b2 = 2.0 * sh * sh;  // 1 - cos(dtheta + pi)
    const double b = std::sqrt(2.0) * sh;
    const double cx = std::cos(hx);

    const double abs_a0 = std::abs(a0);
    const double lead = std::sin(abs_a0 * pi) * std::exp(-abs_a0 * s);

    cplx ratio;
    if (s * s + b * b < 1e-8) {
        double den = s * s + 2.0 * b * b;
        if (den == 0.0) {
            ratio = cplx(-2.0 * a0, 0.0);  // s -> 0 limit along b = 0
        } else {
            ratio = cplx(2.0 * a0 * s * (b2 - s), -2.0 * std::sqrt(2.0) * b * cx) / den;
        }
    } else {
        double shh = std::sinh(0.5 * s);
        double den = 2.0 * shh * shh + b2;
        double num_re = (std::expm1(-s) + b2) * std::sinh(a0 * s);
        double num_im = -std::sqrt(2.0) * b * cx * std::cosh(a0 * s);
        ratio = cplx(num_re, num_im) / den;
    }
    return lead + std::sin(a0 * pi) * ratio;
}

}  // namespace detail

// B_alpha(s, theta1, theta2). The hyperbolic terms are evaluated at the
// reduced flux alpha0; the integer part enters through the gauge phase
// e^{-i m (theta1-theta2)}, keeping every s-integral in the regime where the
// integrability facts hold.
inline cplx b_factor(double s, double theta1, double theta2, const FluxParameter& flux,
                     const AngularPotential& potential) {
    if (s < 0.0) throw std::domain_error("b_factor: s must be >= 0");
    if (flux.integer_flux()) return 0.0;
    const double dth = theta1 - theta2;
    const double alpha = flux.alpha_total;
    // e^{-i alpha dth + i Int_{theta2}^{theta1} A} = e^{i dchi}; the gauge part
    // of the flux enters as e^{+i m dth}, same orientation as a_factor.
    const double dchi = (potential.primitive(theta1) - alpha * theta1) -
                        (potential.primitive(theta2) - alpha * theta2);
    const cplx prefactor = std::polar(-1.0 / kFourPiSq, dchi + flux.m * dth);
    return prefactor * detail::b_hyperbolic(s, dth, flux.alpha0);
}

// The two magnetic weights of a point pair bundled together: the geometric
// weight and the diffractive weight as a function of the hyperbolic
// parameter. At integer flux b_weight vanishes identically and |a_weight|
// is 1/(4 pi^2).
struct MagneticFactors {
    cplx a_weight;
    std::function<cplx(double)> b_weight;
};

inline MagneticFactors magnetic_factors(double theta1, double theta2,
                                        const FluxParameter& flux,
                                        const AngularPotential& potential) {
    MagneticFactors m;
    m.a_weight = a_factor(theta1, theta2, flux, potential);
    m.b_weight = [theta1, theta2, flux, potential](double s) {
        return b_factor(s, theta1, theta2, flux, potential);
    };
    return m;
}

// sup over a dtheta grid of Int_0^inf |B_alpha| ds. Exercises the
// integrability facts behind the diffractive term; the near-s=0 spike at
// dtheta near pi is seeded with breakpoints at the scale of b.
inline double b_integral_check(const std::vector<double>& dtheta_grid,
                               const FluxParameter& flux, double tol = 1e-10) {
    if (flux.integer_flux()) return 0.0;
    const AngularPotential pot = AngularPotential::pure_ab(flux.alpha_total);
    double sup = 0.0;
    for (double dth : dtheta_grid) {
        const double pi = 3.14159265358979323846;
        double b = std::abs(std::sqrt(2.0) * std::sin(0.5 * (dth + pi)));
        std::vector<double> cuts = {0.5, 1.0, 2.0};
        if (b > 0.0 && b < 0.5) {
            for (double c = 0.25 * b; c < 0.5; c *= 4.0) cuts.push_back(c);
        }
        try {
            auto r = integrate_semi_infinite(
                [&](double s) { return std::abs(b_factor(s, dth, 0.0, flux, pot)); },
                std::abs(flux.alpha0), tol, cuts);
            sup = std::max(sup, r.value);
        } catch (const nonconvergence_error& e) {
            throw nonconvergence_error("b_integral_check at dtheta=" + std::to_string(dth) +
                                       ": " + e.what());
        }
    }
    return sup;
}

}  // namespace abriesz
