// abriesz: evaluate Aharonov-Bohm Bochner-Riesz / spectral / resolvent
// kernels, run the bound-verification suites, and drive the operator-norm
// and convergence experiments.
//
// Exit codes: 0 pass, 1 suite failure, 2 config error, 3 computational
// error, 4 resolution error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "abriesz/dyadic_bounds.hpp"
#include "abriesz/kernels.hpp"
#include "abriesz/operator_lab.hpp"

using json = nlohmann::json;
using namespace abriesz;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Emitter {
    std::ostream* os = &std::cout;
    std::ofstream file;
    json summary;
    std::string summary_path;

    void open(const std::string& out_path, const std::string& sum_path,
              const std::string& command) {
        if (!out_path.empty()) {
            file.open(out_path);
            if (!file) throw std::invalid_argument("--out: cannot open " + out_path);
            os = &file;
        }
        summary_path = sum_path;
        summary["command"] = command;
        summary["records"] = json::array();
    }

    static std::string fmt(double v) {
        if (!std::isfinite(v))
            throw nonconvergence_error("non-finite value in an output record");
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    void header(const std::string& h) { *os << h << "\n"; }
    void row(const std::string& r) { *os << r << "\n"; }

    void close(int exit_code) {
        summary["exit"] = exit_code;
        if (!summary_path.empty()) {
            std::ofstream s(summary_path);
            s << summary.dump(2) << "\n";
        }
    }
};

PolarPoint parse_point(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("point must be given as \"r,theta\": " + s);
    return PolarPoint(std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1)));
}

std::vector<int> parse_j_range(const std::string& s) {
    std::vector<int> out;
    auto colon = s.find(':');
    if (colon != std::string::npos) {
        int lo = std::stoi(s.substr(0, colon)), hi = std::stoi(s.substr(colon + 1));
        for (int j = lo; j <= hi; ++j) out.push_back(j);
    } else {
        std::istringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw std::invalid_argument("empty j-range: " + s);
    return out;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    if (out.empty()) throw std::invalid_argument("empty list: " + s);
    return out;
}

AngularPotential make_potential(double alpha, const std::string& file) {
    if (file.empty()) return AngularPotential::pure_ab(alpha);
    return AngularPotential::load(file);
}

// ---------------------------------------------------------------- eval ----
int cmd_eval(Emitter& em, double alpha, double delta, double lambda,
             const std::string& xs, const std::string& ys, const std::string& method,
             double tol, const std::string& potfile) {
    PolarPoint x = parse_point(xs), y = parse_point(ys);
    BRParams p;
    p.lambda = lambda;
    p.delta = delta;
    p.potential = make_potential(alpha, potfile);
    p.flux = FluxParameter::from_total(flux(p.potential));
    if (potfile.empty()) p.flux = FluxParameter::from_total(alpha);
    p.tol = tol;
    p.validate();

    em.header(
        "r1,theta1,r2,theta2,alpha,delta,lambda,geo_re,geo_im,dif_re,dif_im,total_re,"
        "total_im,series_re,series_im,abs_diff,k_max_used");
    cplx total(0, 0), series(0, 0);
    KernelDecomposition kd{};
    int kmax = 0;
    double diff = 0.0;
    bool have_closed = method != "series";
    bool have_series = method != "closed";
    if (have_closed) {
        kd = br_kernel_closed(x, y, p);
        total = kd.total;
    }
    if (have_series) {
        auto [s, diag] = br_kernel_series(x, y, p);
        series = s;
        kmax = diag.k_max_used;
        if (!have_closed) total = s;
    }
    if (have_closed && have_series) diff = std::abs(total - series);

    std::ostringstream row;
    row << Emitter::fmt(x.r) << ',' << Emitter::fmt(x.theta) << ',' << Emitter::fmt(y.r)
        << ',' << Emitter::fmt(y.theta) << ',' << Emitter::fmt(alpha) << ','
        << Emitter::fmt(delta) << ',' << Emitter::fmt(lambda) << ','
        << (have_closed ? Emitter::fmt(kd.geometric.real()) : "") << ','
        << (have_closed ? Emitter::fmt(kd.geometric.imag()) : "") << ','
        << (have_closed ? Emitter::fmt(kd.diffractive.real()) : "") << ','
        << (have_closed ? Emitter::fmt(kd.diffractive.imag()) : "") << ','
        << Emitter::fmt(total.real()) << ',' << Emitter::fmt(total.imag()) << ','
        << (have_series ? Emitter::fmt(series.real()) : "") << ','
        << (have_series ? Emitter::fmt(series.imag()) : "") << ','
        << (have_closed && have_series ? Emitter::fmt(diff) : "") << ','
        << (have_series ? std::to_string(kmax) : "");
    em.row(row.str());
    em.summary["records"].push_back({{"total_re", total.real()},
                                     {"total_im", total.imag()},
                                     {"abs_diff", diff},
                                     {"k_max_used", kmax}});
    return 0;
}

// -------------------------------------------------------------- verify ----
void emit_bound_report(Emitter& em, const BoundReport& r) {
    std::ostringstream row;
    row << r.suite << ',' << r.j << ',' << r.ell << ',' << Emitter::fmt(r.alpha) << ','
        << Emitter::fmt(r.delta) << ',' << Emitter::fmt(r.sup_ratio) << ','
        << Emitter::fmt(r.argmax[0]) << ',' << Emitter::fmt(r.argmax[1]) << ','
        << Emitter::fmt(r.argmax[2]) << ',' << (r.pass ? "1" : "0");
    em.row(row.str());
    em.summary["records"].push_back({{"suite", r.suite},
                                     {"j", r.j},
                                     {"ell", r.ell},
                                     {"alpha", r.alpha},
                                     {"delta", r.delta},
                                     {"sup_ratio", r.sup_ratio},
                                     {"pass", r.pass}});
}

int cmd_verify(Emitter& em, const std::string& suite, const std::string& jrange,
               const std::string& alist, const std::string& dlist, double tol) {
    auto js = parse_j_range(jrange);
    auto alphas = parse_list(alist);
    auto deltas = parse_list(dlist);
    bool all_pass = true;
    em.header("suite,j,ell,alpha,delta,sup_ratio,argmax_r1,argmax_r2,argmax_dtheta,pass");

    auto want = [&](const char* name) { return suite == name || suite == "all"; };

    if (want("b-integral")) {
        for (double a : alphas) {
            auto flux = FluxParameter::from_total(a);
            auto grid = [&](int n) {
                std::vector<double> g(n);
                for (int i = 0; i < n; ++i) g[i] = kPi * (i + 0.5) / n;
                g.push_back(kPi - 1e-3);
                g.push_back(kPi);
                return g;
            };
            double s64 = b_integral_check(grid(64), flux);
            double s256 = b_integral_check(grid(256), flux);
            BoundReport r;
            r.suite = "b-integral";
            r.alpha = a;
            r.sup_ratio = s256;
            r.pass = std::isfinite(s256) &&
                     (flux.integer_flux() || std::abs(s64 - s256) < 0.01 * s256);
            all_pass = all_pass && r.pass;
            emit_bound_report(em, r);
        }
    }
    if (want("d-bound")) {
        for (double a : alphas)
            for (double d : deltas)
                for (int ell : {1, 2}) {
                    double mn = 1e300, mx = 0.0;
                    std::vector<BoundReport> reps;
                    for (int j : js) {
                        auto r = verify_D_bound(ell, j, d, FluxParameter::from_total(a),
                                                17, tol);
                        mn = std::min(mn, r.sup_ratio);
                        mx = std::max(mx, r.sup_ratio);
                        reps.push_back(r);
                    }
                    bool flat = FluxParameter::from_total(a).integer_flux() ||
                                mx <= 2.0 * std::max(mn, 1e-300);
                    for (auto& r : reps) {
                        r.pass = r.pass && flat;
                        all_pass = all_pass && r.pass;
                        emit_bound_report(em, r);
                    }
                }
    }
    if (want("ij-bound")) {
        for (int j : js) {
            BoundReport r;
            r.suite = "ij-bound";
            r.j = j;
            r.ceiling = kIjBoundCeiling;
            for (double rr : {0.1, 0.2, 0.3, 0.4}) {
                double r1 = 0.5, r2 = rr / r1;
                if (bump_beta(r1 + r2) == 0.0) continue;
                for (double th = 1e-3; th <= 0.1; th *= 1.8) {
                    double ratio = std::abs(i_j_integral(j, r1, r2, th)) *
                                   std::sqrt(1.0 + std::ldexp(r1 * r2 * th * th, j));
                    if (ratio > r.sup_ratio) {
                        r.sup_ratio = ratio;
                        r.argmax = {r1, r2, th};
                    }
                }
            }
            r.pass = r.sup_ratio <= r.ceiling;
            all_pass = all_pass && r.pass;
            emit_bound_report(em, r);
        }
    }
    if (want("ft-h")) {
        for (double a : alphas)
            for (double d : deltas)
                for (int j : js) {
                    if (j < 3 || j > 7) continue;
                    double r1 = 0.4, r2 = 0.4;
                    std::vector<double> zetas;
                    double zsplit = std::sqrt(std::ldexp(r1 * r2, j));
                    for (double z = 1.0; z <= 8.0 * zsplit; z *= 1.6) zetas.push_back(z);
                    auto fr = fourier_bound_H(j, r1, r2, zetas, d,
                                              FluxParameter::from_total(a));
                    BoundReport r;
                    r.suite = "ft-h";
                    r.j = j;
                    r.alpha = a;
                    r.delta = d;
                    r.sup_ratio = std::max(fr.sup_low, fr.sup_high);
                    r.argmax = {fr.argmax_zeta_low, fr.argmax_zeta_high, fr.aliasing};
                    r.pass = fr.pass;
                    all_pass = all_pass && r.pass;
                    emit_bound_report(em, r);
                }
    }
    if (want("det")) {
        std::mt19937_64 rng(0xAB01);
        std::uniform_real_distribution<double> ur(0.4, 2.2), ut(0.3, 2.8);
        BoundReport r;
        r.suite = "det";
        r.pass = true;
        int n = 0;
        while (n < 100) {
            double r1 = ur(rng), r2 = ur(rng), t = ut(rng);
            double cf = det_lemma(r1, r2, t);
            if (std::abs(cf) < 0.05) continue;
            ++n;
            double rel = std::abs(cf - det_fd_oracle(r1, r2, t)) / std::abs(cf);
            if (rel > r.sup_ratio) {
                r.sup_ratio = rel;
                r.argmax = {r1, r2, t};
            }
        }
        r.pass = r.sup_ratio <= 1e-5;
        all_pass = all_pass && r.pass;
        emit_bound_report(em, r);
    }
    if (want("derivs")) {
        std::mt19937_64 rng(0xAB02);
        std::uniform_real_distribution<double> ur(0.3, 2.5), ut(0.4, 2.7);
        BoundReport r;
        r.suite = "derivs";
        const double h = 1e-5;
        for (int i = 0; i < 100; ++i) {
            double r1 = ur(rng), r2 = ur(rng), t = ut(rng);
            double fd1 =
                (distance_d(r1, r2, t + h) - distance_d(r1, r2, t - h)) / (2 * h);
            double rel =
                std::abs(deriv_d_theta(r1, r2, t) - fd1) / std::max(1e-9, std::abs(fd1));
            if (rel > r.sup_ratio) {
                r.sup_ratio = rel;
                r.argmax = {r1, r2, t};
            }
        }
        r.pass = r.sup_ratio <= 1e-6;
        all_pass = all_pass && r.pass;
        emit_bound_report(em, r);
    }
    return all_pass ? 0 : 1;
}

// ------------------------------------------------------------ converge ----
int cmd_converge(Emitter& em, double p, double delta, const std::string& fname,
                 const std::string& lamlist, const std::string& gridspec, double R,
                 const std::string& method, double alpha, double tol) {
    auto lams = parse_list(lamlist);
    auto xpos = gridspec.find('x');
    if (xpos == std::string::npos)
        throw std::invalid_argument("--grid must be NxM: " + gridspec);
    int nr = std::stoi(gridspec.substr(0, xpos));
    int nt = std::stoi(gridspec.substr(xpos + 1));
    if (nr < 2 || nt < 4 || (nt & (nt - 1)) != 0)
        throw std::invalid_argument(
            "--grid: need NxM with N >= 2 and M a power of two >= 4, got " + gridspec);
    auto grid = PolarGrid::make(R, nr, nt);
    auto m = (method == "series") ? ApplyMethod::series : ApplyMethod::closed;

    auto rep = convergence_experiment(fname, p, delta, FluxParameter::from_total(alpha),
                                      lams, grid, m, tol);

    em.header("experiment,p,delta,lambda_or_j,value,slope,status");
    for (std::size_t q = 0; q < rep.lambdas.size(); ++q) {
        std::ostringstream row;
        row << "converge-" << fname << ',' << Emitter::fmt(p) << ','
            << Emitter::fmt(delta) << ',' << Emitter::fmt(rep.lambdas[q]) << ','
            << Emitter::fmt(rep.errors[q]) << ',' << Emitter::fmt(rep.slope) << ','
            << rep.status;
        em.row(row.str());
    }
    em.summary["records"].push_back({{"experiment", "converge-" + fname},
                                     {"p", p},
                                     {"delta", delta},
                                     {"errors", rep.errors},
                                     {"lambdas", rep.lambdas},
                                     {"slope", rep.slope},
                                     {"status", rep.status}});
    std::cerr << "converge: slope=" << rep.slope << " status=" << rep.status << "\n";
    return 0;
}

// ------------------------------------------------------------- scaling ----
int cmd_scaling(Emitter& em, const std::string& piece, double p, double delta,
                const std::string& jrange, int trials, double alpha,
                std::uint64_t seed) {
    auto js = parse_j_range(jrange);
    auto rep = dyadic_norm_scaling(piece, p, delta, FluxParameter::from_total(alpha), js,
                                   trials, seed);
    em.header("experiment,p,delta,lambda_or_j,value,slope,status");
    for (std::size_t q = 0; q < rep.norms.size(); ++q) {
        std::ostringstream row;
        row << "scaling-" << piece << ',' << Emitter::fmt(p) << ',' << Emitter::fmt(delta)
            << ',' << rep.j_values[q] << ',' << Emitter::fmt(rep.norms[q]) << ','
            << Emitter::fmt(rep.slope) << ',' << (rep.pass ? "pass" : "fail");
        em.row(row.str());
    }
    em.summary["records"].push_back({{"experiment", "scaling-" + piece},
                                     {"p", p},
                                     {"delta", delta},
                                     {"norms", rep.norms},
                                     {"slope", rep.slope},
                                     {"pass", rep.pass}});
    std::cerr << "scaling: slope=" << rep.slope
              << " bound=" << critical_index(p, 2) - delta + 0.15 << "\n";
    return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aharonov-Bohm Bochner-Riesz kernel laboratory"};
    app.set_config("--config", "", "key=value configuration file");
    std::string out_path, summary_path = "abriesz_summary.json";
    std::uint64_t seed = 0xAB01;
    app.add_option("--out", out_path, "write records to a file instead of stdout");
    app.add_option("--summary", summary_path, "machine-readable summary path");
    app.add_option("--seed", seed, "random seed for reproducible batteries");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate the Bochner-Riesz kernel at a pair");
    double e_alpha = 0.5, e_delta = 0.5, e_lambda = 1.0, e_tol = 1e-9;
    std::string e_x = "1,0", e_y = "0.5,1.0", e_method = "both", e_pot;
    eval->add_option("--alpha", e_alpha, "total magnetic flux");
    eval->add_option("--delta", e_delta, "Riesz order")->check(CLI::NonNegativeNumber);
    eval->add_option("--lambda", e_lambda, "spectral cutoff")->check(CLI::PositiveNumber);
    eval->add_option("--x", e_x, "first point r,theta");
    eval->add_option("--y", e_y, "second point r,theta");
    eval->add_option("--method", e_method)->check(CLI::IsMember({"closed", "series", "both"}));
    eval->add_option("--tol", e_tol)->check(CLI::PositiveNumber);
    eval->add_option("--potential", e_pot, "tabulated potential file (theta, A)");

    // verify
    auto* verify = app.add_subcommand("verify", "run bound-verification suites");
    std::string v_suite = "all", v_jrange = "2:8", v_alist = "0.3,0.5", v_dlist = "0,0.5";
    double v_tol = 1e-6;
    verify->add_option("--suite", v_suite)
        ->check(CLI::IsMember({"b-integral", "d-bound", "ij-bound", "ft-h", "det",
                               "derivs", "all"}));
    verify->add_option("--j-range", v_jrange, "lo:hi or comma list");
    verify->add_option("--alpha-list", v_alist);
    verify->add_option("--delta-list", v_dlist);
    verify->add_option("--tol", v_tol)->check(CLI::PositiveNumber);

    // converge
    auto* conv = app.add_subcommand("converge", "convergence experiment");
    double c_p = 2.0, c_delta = 0.0, c_R = 2.0, c_alpha = 0.5, c_tol = 1e-7;
    std::string c_fun = "gaussian", c_lams = "1,2,3,4", c_grid = "64x128",
                c_method = "closed";
    conv->add_option("--p", c_p)->check(CLI::Range(1.0, 1e9));
    conv->add_option("--delta", c_delta)->check(CLI::NonNegativeNumber);
    conv->add_option("--function", c_fun)
        ->check(CLI::IsMember({"disk", "annulus", "gaussian", "packet"}));
    conv->add_option("--lambda-list", c_lams);
    conv->add_option("--grid", c_grid, "NxM radial x angular nodes");
    conv->add_option("--R", c_R, "domain radius")->check(CLI::PositiveNumber);
    conv->add_option("--method", c_method)->check(CLI::IsMember({"closed", "series"}));
    conv->add_option("--alpha", c_alpha);
    conv->add_option("--tol", c_tol)->check(CLI::PositiveNumber);

    // scaling
    auto* scal = app.add_subcommand("scaling", "dyadic operator-norm scaling");
    std::string s_piece = "G", s_jrange = "4:6";
    double s_p = 2.0, s_delta = 0.5, s_alpha = 0.5;
    int s_trials = 4;
    scal->add_option("--piece", s_piece)->check(CLI::IsMember({"G", "D1", "D2", "D3"}));
    scal->add_option("--p", s_p);
    scal->add_option("--delta", s_delta)->check(CLI::NonNegativeNumber);
    scal->add_option("--j-range", s_jrange);
    scal->add_option("--trials", s_trials)->check(CLI::PositiveNumber);
    scal->add_option("--alpha", s_alpha);

    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    Emitter em;
    int rc = 3;
    try {
        std::string cmd = app.get_subcommands().front()->get_name();
        em.open(out_path, summary_path, cmd);
        if (eval->parsed())
            rc = cmd_eval(em, e_alpha, e_delta, e_lambda, e_x, e_y, e_method, e_tol, e_pot);
        else if (verify->parsed())
            rc = cmd_verify(em, v_suite, v_jrange, v_alist, v_dlist, v_tol);
        else if (conv->parsed())
            rc = cmd_converge(em, c_p, c_delta, c_fun, c_lams, c_grid, c_R, c_method,
                              c_alpha, c_tol);
        else if (scal->parsed())
            rc = cmd_scaling(em, s_piece, s_p, s_delta, s_jrange, s_trials, s_alpha, seed);
    } catch (const resolution_error& e) {
        std::cerr << "resolution error: " << e.what() << "\n";
        em.close(4);
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        em.close(2);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "computational error: " << e.what() << "\n";
        em.close(3);
        return 3;
    }
    em.close(rc);
    return rc;
}
