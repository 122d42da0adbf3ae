// Acceptance suite: one line per criterion, exit 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "abriesz/dyadic_bounds.hpp"
#include "abriesz/kernels.hpp"
#include "abriesz/operator_lab.hpp"
#include "oracles.hpp"

using namespace abriesz;
using clock_type = std::chrono::steady_clock;

namespace {

const double pi = 3.14159265358979323846;
int failures = 0;

void report(int n, bool pass, const std::string& what) {
    std::printf("%s  criterion %2d: %s\n", pass ? "PASS" : "FAIL", n, what.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

}  // namespace

// 1. closed == series over 200 randomized tuples, <= 1e-6 (1 + |series|)
static void criterion1() {
    auto t0 = clock_type::now();
    std::mt19937_64 rng(0xAB01);
    std::uniform_real_distribution<double> ul(1.0, 16.0), ur(0.05, 3.0), ut(0.0, kTwoPi);
    const double deltas[] = {0.0, 0.25, 0.5, 1.0};
    const double alphas[] = {0.3, 0.5, -0.7, 1.25};
    double worst = 0.0;
    int n = 0;
    while (n < 200) {
        double lam = ul(rng), r1 = ur(rng), r2 = ur(rng);
        if (lam * std::max(r1, r2) > 48.0) continue;
        double delta = deltas[n % 4], alpha = alphas[(n / 4) % 4];
        PolarPoint x(r1, ut(rng)), y(r2, ut(rng));
        BRParams p = BRParams::pure(lam, delta, alpha, 1e-9);
        auto kd = br_kernel_closed(x, y, p);
        auto [s, diag] = br_kernel_series(x, y, p);
        worst = std::max(worst, std::abs(kd.total - s) / (1.0 + std::abs(s)));
        ++n;
    }
    double dt = seconds_since(t0);
    report(1, worst <= 1e-6 && dt <= 600.0,
           fmt("oracle equivalence on 200 tuples: worst %.3g (<= 1e-6), %.0fs (<= 600s)",
               worst, dt));
}

// 2. free-case anchors
static void criterion2() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ur(0.1, 2.5), ut(0.0, kTwoPi), ul(1.0, 8.0);
    double worst_rel = 0.0;
    for (int i = 0; i < 25; ++i) {
        double lam = ul(rng);
        PolarPoint x(ur(rng), ut(rng)), y(ur(rng), ut(rng));
        BRParams p = BRParams::pure(lam, 0.5 * (i % 3), 0.0, 1e-10);
        auto [s, diag] = br_kernel_series(x, y, p);
        double want = free_br_kernel(distance_d(x, y), lam, p.delta) / kFourPiSq;
        worst_rel = std::max(worst_rel,
                             std::abs(s - cplx(want, 0)) / std::max(1e-300, std::abs(want)));
    }
    double worst_anchor = 0.0;
    for (double delta : {0.0, 0.5, 1.0, 2.0})
        worst_anchor = std::max(worst_anchor,
                                std::abs(free_br_kernel(0.0, 1.0, delta) - pi / (1 + delta)));
    report(2, worst_rel <= 1e-7 && worst_anchor <= 1e-12,
           fmt("free anchors: series vs (2pi)^-2 free %.3g (<= 1e-7); K(0)-pi/(1+d) %.3g "
               "(<= 1e-12)",
               worst_rel, worst_anchor));
}

// 3. gauge identity and integer-flux diffractive vanishing
static void criterion3() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ur(0.05, 2.5), ut(0.0, kTwoPi), ul(1.0, 8.0),
        ua(-1.2, 1.2);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        double lam = ul(rng), alpha = ua(rng);
        PolarPoint x(ur(rng), ut(rng)), y(ur(rng), ut(rng));
        BRParams pa = BRParams::pure(lam, 0.5, alpha, 1e-10);
        BRParams pb = BRParams::pure(lam, 0.5, alpha + 1.0, 1e-10);
        auto [sa, da] = br_kernel_series(x, y, pa);
        auto [sb, db] = br_kernel_series(x, y, pb);
        // K_{alpha+1} = e^{+i dtheta} K_alpha (orientation follows the
        // eigenfunction convention; see the decisions ledger)
        cplx expect = std::polar(1.0, x.theta - y.theta) * sa;
        worst = std::max(worst, std::abs(sb - expect) / (1.0 + std::abs(sb)));
    }
    bool dif_zero = true;
    for (double alpha : {0.0, 1.0, -2.0}) {
        BRParams p = BRParams::pure(3.0, 0.5, alpha, 1e-9);
        auto kd = br_kernel_closed(PolarPoint(1.1, 0.4), PolarPoint(0.6, 2.6), p);
        dif_zero = dif_zero && kd.diffractive == cplx(0.0, 0.0);
    }
    report(3, worst <= 1e-8 && dif_zero,
           fmt("gauge shift on 50 tuples: worst %.3g (<= 1e-8); integer-flux D == 0: %.0f",
               worst, dif_zero ? 1.0 : 0.0));
}

// 4. scaling covariance
static void criterion4() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ur(0.1, 2.0), ut(0.0, kTwoPi), ul(1.0, 6.0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        double lam = ul(rng);
        PolarPoint x(ur(rng), ut(rng)), y(ur(rng), ut(rng));
        BRParams pl = BRParams::pure(lam, 0.25 * (i % 4), 0.5, 1e-10);
        BRParams p1 = BRParams::pure(1.0, pl.delta, 0.5, 1e-10);
        auto kl = br_kernel_closed(x, y, pl).total;
        auto k1 =
            br_kernel_closed(PolarPoint(lam * x.r, x.theta), PolarPoint(lam * y.r, y.theta), p1)
                .total;
        worst = std::max(worst, std::abs(kl - lam * lam * k1) / (1.0 + std::abs(kl)));
    }
    report(4, worst <= 1e-8,
           fmt("scaling covariance on 50 tuples: worst %.3g (<= 1e-8)", worst));
}

// 5. Stone's formula consistency
static void criterion5() {
    auto fh = FluxParameter::from_total(0.5);
    auto pot = AngularPotential::pure_ab(0.5);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ur(0.2, 2.0), ut(0.0, kTwoPi);
    double worst = 0.0;
    for (double lam : {1.0, 2.0, 4.0}) {
        for (int i = 0; i < 7; ++i) {
            PolarPoint x(ur(rng), ut(rng)), y(ur(rng), ut(rng));
            if (distance_d(x, y) < 1e-3) continue;
            cplx rp = resolvent_kernel(lam, ResolventSign::outgoing, x, y, fh, pot, 1e-10);
            cplx rm = resolvent_kernel(lam, ResolventSign::incoming, x, y, fh, pot, 1e-10);
            cplx stone = lam / cplx(0.0, pi) * (rp - rm);
            cplx dE = spectral_measure_kernel(lam, x, y, fh, pot, 1e-10);
            worst = std::max(worst, std::abs(stone - dE) / (1.0 + std::abs(dE)));
        }
    }
    report(5, worst <= 1e-6,
           fmt("Stone's formula at 21 points: worst %.3g (<= 1e-6)", worst));
}

// 6. B-integrability: finite sup, refinement-stable
static void criterion6() {
    bool ok = true;
    double worst_drift = 0.0;
    for (double alpha : {0.3, 0.5, -0.49}) {
        auto flux = FluxParameter::from_total(alpha);
        auto grid = [](int n) {
            std::vector<double> g(n);
            for (int i = 0; i < n; ++i) g[i] = pi * (i + 0.5) / n;
            g.push_back(pi - 1e-3);
            g.push_back(pi);
            return g;
        };
        double s64 = b_integral_check(grid(64), flux);
        double s256 = b_integral_check(grid(256), flux);
        ok = ok && std::isfinite(s256) && s256 > 0.0;
        worst_drift = std::max(worst_drift, std::abs(s64 - s256) / s256);
    }
    report(6, ok && worst_drift < 0.01,
           fmt("B-integrability sup finite, 64->256 refinement drift %.3g (< 0.01)",
               worst_drift));
}

// 7. decay-bound suites
static void criterion7() {
    auto t0 = clock_type::now();
    bool ok = true;
    double worst_flat = 0.0;
    for (double alpha : {0.3, 0.5}) {
        for (double delta : {0.0, 0.5}) {
            for (int ell : {1, 2}) {
                double mn = 1e300, mx = 0.0;
                for (int j = 2; j <= 8; ++j) {
                    auto rep = verify_D_bound(ell, j, delta,
                                              FluxParameter::from_total(alpha), 17, 1e-6);
                    ok = ok && rep.sup_ratio <= kDBoundCeiling;
                    mn = std::min(mn, rep.sup_ratio);
                    mx = std::max(mx, rep.sup_ratio);
                }
                worst_flat = std::max(worst_flat, mx / mn);
                ok = ok && mx <= 2.0 * mn;
            }
        }
    }
    double sup_ij = 0.0;
    for (int j = 2; j <= 8; ++j)
        for (double rr : {0.1, 0.25, 0.4})
            for (double th = 1e-3; th <= 0.1; th *= 1.7) {
                double r1 = 0.5, r2 = rr / r1;
                if (bump_beta(r1 + r2) == 0.0) continue;
                sup_ij = std::max(sup_ij, std::abs(i_j_integral(j, r1, r2, th)) *
                                              std::sqrt(1.0 + std::ldexp(r1 * r2 * th * th, j)));
            }
    ok = ok && sup_ij <= kIjBoundCeiling && sup_ij > 0.0;

    bool fth_ok = true;
    for (int j : {3, 5, 7}) {
        std::vector<double> zetas;
        double zsplit = std::sqrt(std::ldexp(0.16, j));
        for (double z = 1.0; z <= 8.0 * zsplit; z *= 1.6) zetas.push_back(z);
        auto fr = fourier_bound_H(j, 0.4, 0.4, zetas, 0.25, FluxParameter::from_total(0.5));
        fth_ok = fth_ok && fr.pass;
    }
    ok = ok && fth_ok;

    std::mt19937_64 rng(0xAB01);
    std::uniform_real_distribution<double> ur(0.4, 2.2), ut(0.3, 2.8);
    double worst_det = 0.0;
    int n = 0;
    while (n < 100) {
        double r1 = ur(rng), r2 = ur(rng), t = ut(rng);
        double cf = det_lemma(r1, r2, t);
        if (std::abs(cf) < 0.05) continue;
        ++n;
        worst_det = std::max(worst_det, std::abs(cf - det_fd_oracle(r1, r2, t)) / std::abs(cf));
    }
    ok = ok && worst_det <= 1e-5;
    double dt = seconds_since(t0);
    ok = ok && dt <= 1200.0;
    report(7, ok,
           fmt("decay bounds: D log-flat %.2fx (<= 2), det-vs-FD %.2g (<= 1e-5), "
               "ij/ft-h bounded; %.0fs (<= 1200s)",
               worst_flat, worst_det, dt));
}

// 8. operator norms and dyadic slopes
static void criterion8() {
    auto grid = PolarGrid::make(2.0, 128, 128);
    BRParams p = BRParams::pure(2.0, 0.5, 0.5, 1e-7);
    BRApplier op(grid, p, ApplyMethod::closed);
    double nrm = operator_norm_2(op, 20);
    bool ok = nrm <= 1.05;

    double s25 = dyadic_norm_scaling("G", 2.0, 0.25, FluxParameter::from_total(0.5),
                                     {4, 5, 6}, 3)
                     .slope;
    double s50 = dyadic_norm_scaling("G", 2.0, 0.50, FluxParameter::from_total(0.5),
                                     {4, 5, 6}, 3)
                     .slope;
    double s8 = dyadic_norm_scaling("G", 8.0, 0.0, FluxParameter::from_total(0.5),
                                    {4, 5, 6}, 4)
                    .slope;
    ok = ok && std::abs(s25 + 0.25) <= 0.15 && std::abs(s50 + 0.50) <= 0.15 && s8 <= 0.40;
    report(8, ok,
           fmt("norms: ||S||=%.4f (<= 1.05); G slopes %.3f/%.3f (vs -0.25/-0.50 +-0.15), ",
               nrm, s25, s50) +
               fmt("p=8 slope %.3f (<= 0.40)", s8));
}

// 9. convergence trends
static void criterion9() {
    auto g2 = PolarGrid::make(2.0, 64, 256);
    auto rep2 = convergence_experiment("gaussian", 2.0, 0.0, FluxParameter::from_total(0.5),
                                       {1.0, 2.0, 3.0, 4.0}, g2, ApplyMethod::closed, 1e-7);
    auto g6 = PolarGrid::make(2.0, 64, 1024);
    double dc6 = critical_index(6.0, 2);
    auto sup6 = convergence_experiment("disk", 6.0, dc6 + 0.1, FluxParameter::from_total(0.5),
                                       {2.0, 3.0, 4.0, 6.0}, g6, ApplyMethod::closed, 1e-6);
    auto sub6 = convergence_experiment("disk", 6.0, 0.01, FluxParameter::from_total(0.5),
                                       {2.0, 3.0, 4.0, 6.0}, g6, ApplyMethod::closed, 1e-6);
    double gap = sub6.errors.back() - sup6.errors.back();
    // the comparative gap is reported, not gated: sharp necessity is not
    // desk-reproducible and sits outside pass/fail
    bool ok = rep2.status == "decreasing" && sup6.status == "decreasing";
    report(9, ok,
           "convergence: p=2 " + rep2.status + "; p=6 supercritical " + sup6.status +
               fmt("; sub-vs-super final gap %+.4g (reported, trend only)", gap));
}

// 10. specfun fixture block under a minute
static void criterion10() {
    auto t0 = clock_type::now();
    bool ok = true;
    const double h = 1e-6;
    for (double x : {0.5, 1.0, 5.0, 20.0}) {
        double jp = (bessel_j(0.0, x + h) - bessel_j(0.0, x - h)) / (2 * h);
        double yp = (bessel_y(0.0, x + h) - bessel_y(0.0, x - h)) / (2 * h);
        double w = jp * bessel_y(0.0, x) - bessel_j(0.0, x) * yp;
        ok = ok && std::abs(w + 2.0 / (pi * x)) <= 1e-6 * (2.0 / (pi * x));
    }
    for (double nu : {1.0, 2.5, 7.3}) {
        for (double x : {0.7, 3.0, 11.0, 40.0}) {
            double lhs = bessel_j(nu - 1.0, x) + bessel_j(nu + 1.0, x);
            double rhs = 2.0 * nu / x * bessel_j(nu, x);
            ok = ok && std::abs(lhs - rhs) <= 1e-8 * std::max({std::abs(lhs), 1e-3});
        }
    }
    ok = ok && std::abs(bessel_j(0.5, 1.0) - std::sqrt(2.0 / (pi * 1.0)) * std::sin(1.0)) <
                   1e-12;
    for (double nu : {0.3, 0.5, 0.7}) {
        for (double x : {0.1, 1.0, 5.0}) {
            double want = oracles::bessel_i_series_oracle(nu, x);
            ok = ok && std::abs(bessel_i(nu, x) - want) <= 1e-9 * want;
        }
    }
    double dt = seconds_since(t0);
    ok = ok && dt <= 60.0;
    report(10, ok, fmt("specfun fixtures (Wronskian, recurrence, half-integer, m-bessel): "
                       "%.1fs (<= 60s)",
                       dt));
}

int main() {
    auto t0 = clock_type::now();
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    std::printf("%s: %d/10 criteria passed (%.0fs total)\n",
                failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", 10 - failures,
                seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
