#include "saddlelab/analytic.hpp"
#include "saddlelab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace saddlelab::harness {

Suite suite_from_string(const std::string& s) {
    if (s == "gradients") return Suite::Gradients;
    if (s == "closed_forms") return Suite::ClosedForms;
    if (s == "weak_order") return Suite::WeakOrder;
    if (s == "schedulers") return Suite::Schedulers;
    if (s == "figures") return Suite::Figures;
    throw Error(ErrorKind::ConfigError, "suite: unknown suite '" + s + "'");
}

const char* to_string(Suite s) {
    switch (s) {
        case Suite::Gradients: return "gradients";
        case Suite::ClosedForms: return "closed_forms";
        case Suite::WeakOrder: return "weak_order";
        case Suite::Schedulers: return "schedulers";
        case Suite::Figures: return "figures";
    }
    return "?";
}

bool ValidationReport::passed() const {
    return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass || r.informational; });
}

std::string ValidationReport::to_csv() const {
    std::ostringstream o;
    o << "criterion,check,measured,tolerance,verdict,detail\n";
    for (const auto& r : rows) {
        char m[40], t[40];
        std::snprintf(m, sizeof m, "%.6g", r.measured);
        std::snprintf(t, sizeof t, "%.6g", r.tolerance);
        o << r.criterion << "," << r.check << "," << m << "," << t << ","
          << (r.informational ? "info" : r.pass ? "pass" : "fail") << ",\"" << r.detail << "\"\n";
    }
    return o.str();
}

namespace {

using Clock = std::chrono::steady_clock;
using analytic::AnalyticMethod;
using core::DiagMatrix;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Rows {
    std::string criterion;
    ValidationReport rep;

    explicit Rows(std::string c) : criterion(std::move(c)) {}

    // Passes when measured <= tolerance.
    void at_most(const std::string& check, double measured, double tol, const std::string& detail = "") {
        rep.rows.push_back({criterion, check, measured, tol, measured <= tol, detail});
    }
    void at_least(const std::string& check, double measured, double tol, const std::string& detail = "") {
        rep.rows.push_back({criterion, check, measured, tol, measured >= tol, detail});
    }
    void verdict(const std::string& check, double measured, double tol, bool pass, const std::string& detail) {
        rep.rows.push_back({criterion, check, measured, tol, pass, detail});
    }
    void info(const std::string& check, double measured, const std::string& detail) {
        ReportRow r{criterion, check, measured, 0.0, true, detail};
        r.informational = true;
        rep.rows.push_back(r);
    }
};

std::vector<double> repeat(double v, int n) { return std::vector<double>(static_cast<std::size_t>(n), v); }

ExperimentConfig bilinear_base(int d, double lam, NoiseKind noise, double sigma, double z0) {
    ExperimentConfig c;
    c.landscape = LandscapeKind::Quadratic;
    c.lam = repeat(lam, d);
    c.noise = noise;
    c.sigma = repeat(sigma, d);
    c.z0 = repeat(z0, 2 * d);
    c.statistics = {"half-sq-norm"};
    return c;
}

const stats::MomentSeries& only(const std::vector<stats::MomentSeries>& s) { return s.front(); }

// Largest |mean - f(t)| / stderr over the series points with t > 0.
template <class F>
std::pair<double, double> max_z(const stats::MomentSeries& s, F&& f) {
    double worst = 0.0, at = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.times[k] <= 0.0) continue;
        double z = std::abs(s.mean[k] - f(s.times[k])) / s.stderr_[k];
        if (!(z <= worst)) {
            worst = z;
            at = s.times[k];
        }
    }
    return {worst, at};
}

// Mean of the Monte Carlo mean over checkpoints with t >= t0.
double tail_mean(const stats::MomentSeries& s, double t0) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < s.size(); ++k)
        if (s.times[k] >= t0) {
            sum += s.mean[k];
            ++n;
        }
    return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

// Exponential rate of the mean over the prefix that stays 10x above the stationary floor.
double decay_rate(const stats::MomentSeries& s) {
    double floor = tail_mean(s, s.times.back() * 0.9);
    double end = s.times.back();
    for (std::size_t k = 0; k < s.size(); ++k)
        if (s.mean[k] < 10.0 * floor) {
            end = s.times[k];
            break;
        }
    return stats::fit_decay_rate(s, 0.0, end);
}

// ---------------------------------------------------------------------------

ValidationReport criterion1(const ValidationOptions& opt) {
    Rows r{"1"};
    auto t0 = Clock::now();
    const RunOptions ro{opt.threads};
    // Two coordinates with Lambda = 2 I, so the stationary level is (eta/2) * sum sigma_i^2 = 1e-8.
    ExperimentConfig c = bilinear_base(2, 2.0, NoiseKind::AdditiveGradient, 0.001, 0.1);
    c.method = MethodName::ShgdSde;
    c.eta = 0.01;
    c.horizon = 20.0;
    c.dt = c.eta / 100.0;  // the EM weak bias at eta/10 is many standard errors on this tiny-noise problem
    c.record_every = 10000;
    c.n_runs = 1000;
    c.base_seed = opt.seed;
    auto s = only(simulate_arm(c, ro));
    DiagMatrix lam = DiagMatrix::constant(2, 2.0), sig = DiagMatrix::constant(2, 0.001);
    StateVector z0(Vec::Constant(4, 0.1));
    auto [z, at] = max_z(s, [&](double t) { return analytic::shgd_norm_fixed_bilinear(lam, sig, c.eta, z0, t); });
    r.at_most("sde_curve_max_z", z, 3.0, "20 checkpoints, worst at t=" + num(at));

    double expected = 0.5 * c.eta * 2 * 0.001 * 0.001;
    double tail = tail_mean(s, 10.0);
    r.at_most("sde_tail_rel_error", std::abs(tail / expected - 1.0), 0.10, "tail " + num(tail) + " vs " + num(expected));

    ExperimentConfig alg = c;
    alg.method = MethodName::SHGD;
    alg.dt.reset();
    alg.horizon.reset();
    alg.steps = 2000;
    alg.record_every = 10;
    alg.base_seed = opt.seed + 1;
    auto sa = only(simulate_arm(alg, ro));
    double tail_alg = tail_mean(sa, 10.0);
    r.at_most("shgd_tail_rel_error", std::abs(tail_alg / expected - 1.0), 0.10,
              "tail " + num(tail_alg) + " vs " + num(expected));
    r.at_most("runtime_s", seconds_since(t0), 30.0);
    return r.rep;
}

ValidationReport criterion2(const ValidationOptions& opt) {
    Rows r{"2"};
    const RunOptions ro{opt.threads};
    DiagMatrix lam = DiagMatrix::constant(2, 2.0), sig = DiagMatrix::constant(2, 0.001);
    StateVector z0(Vec::Constant(4, 0.1));
    struct Case {
        MethodName m;
        double gamma;
        double dt_div;  // dt = eta / dt_div
    };
    // The first-order EM bias grows with gamma on this problem; each case takes a step that
    // keeps it near one standard error at the earliest checkpoint.
    const Case cases[] = {{MethodName::ShgdSde, 0.0, 150}, {MethodName::ShgdSde, 0.5, 250},
                          {MethodName::ShgdSde, 1.0, 400}, {MethodName::SegSde, 0.0, 100},
                          {MethodName::SegSde, 0.5, 200},  {MethodName::SegSde, 1.0, 300}};
    int idx = 0;
    for (const auto& cs : cases) {
        ExperimentConfig c = bilinear_base(2, 2.0, NoiseKind::AdditiveGradient, 0.001, 0.1);
        c.method = cs.m;
        c.eta = 0.01;
        c.rho = cs.m == MethodName::SegSde ? 1.0 : 0.0;
        c.eta_gamma = cs.gamma;
        c.horizon = 20.0;
        c.dt = c.eta / cs.dt_div;
        c.record_every = static_cast<long>(cs.dt_div);  // every eta
        c.n_runs = 1000;
        c.base_seed = opt.seed + static_cast<std::uint64_t>(idx++);
        auto s = only(simulate_arm(c, ro));
        auto method = cs.m == MethodName::ShgdSde ? AnalyticMethod::SHGD : AnalyticMethod::SEG;
        auto sched = cs.gamma > 0 ? Scheduler::power_law(cs.gamma) : Scheduler::constant();
        std::string tag = std::string(cs.m == MethodName::ShgdSde ? "shgd" : "seg") + "_gamma" + num(cs.gamma);

        // 20 equispaced checkpoints t = 1..20.
        double worst = 0.0, at = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            double t = s.times[k];
            if (t <= 0 || std::abs(t - std::round(t)) > 1e-9) continue;
            double f = analytic::scheduled_norm(method, lam, sig, c.eta, c.rho, sched, Scheduler::constant(), z0, t);
            double z = std::abs(s.mean[k] - f) / s.stderr_[k];
            if (z > worst) {
                worst = z;
                at = t;
            }
        }
        r.at_most(tag + "_curve_max_z", worst, 3.0, "dt=eta/" + num(cs.dt_div) + ", worst at t=" + num(at));

        if (cs.gamma > 0) {
            // Block means over [T/4, T] must strictly decrease.
            const int blocks = 5;
            std::vector<double> means;
            for (int b = 0; b < blocks; ++b) {
                double lo = 5.0 + 15.0 * b / blocks, hi = 5.0 + 15.0 * (b + 1) / blocks;
                double sum = 0;
                int n = 0;
                for (std::size_t k = 0; k < s.size(); ++k)
                    if (s.times[k] >= lo && (s.times[k] < hi || (b == blocks - 1 && s.times[k] <= hi))) {
                        sum += s.mean[k];
                        ++n;
                    }
                means.push_back(sum / n);
            }
            int violations = 0;
            for (int b = 1; b < blocks; ++b)
                if (!(means[b] < means[b - 1])) ++violations;
            std::string d;
            for (double m : means) d += num(m) + " ";
            r.at_most(tag + "_tail_increases", violations, 0, "block means " + d);
        } else {
            double expected = method == AnalyticMethod::SHGD
                                  ? analytic::shgd_norm_fixed_bilinear(lam, sig, c.eta, z0, INFINITY)
                                  : analytic::seg_norm_fixed_bilinear(lam, sig, c.eta, c.rho, z0, INFINITY);
            double tail = tail_mean(s, 10.0);
            r.at_most(tag + "_plateau_rel_error", std::abs(tail / expected - 1.0), 0.10,
                      "tail " + num(tail) + " vs " + num(expected));
        }
    }
    return r.rep;
}

ValidationReport criterion3(const ValidationOptions& opt) {
    Rows r{"3"};
    auto t0 = Clock::now();
    ExperimentConfig c;
    c.landscape = LandscapeKind::Quadratic;
    c.a = {2.0};
    c.lam = {1.0};
    c.noise = NoiseKind::AdditiveGradient;
    c.sigma = {1.0};
    c.method = MethodName::SEG;
    c.eta = 0.01;
    c.z0 = {0.01, 0.01};
    c.steps = 200000;
    c.record_every = 100;
    c.n_runs = 100;
    c.base_seed = opt.seed;
    c.statistics = {"x0", "y0"};
    const std::vector<double> rhos = {-1.0 / 6, 0.0, 1.0 / 6, 1.0 / 3, 2.0 / 5, 1.0 / 2};
    auto table = sweep_rho(c, rhos, RunOptions{opt.threads});
    for (const auto& row : table.summary) {
        if (row.kind != "tail_variance") continue;
        std::string tag = row.arm + "_" + row.reference;
        if (row.flag == "diverges" || row.flag == "diverged") {
            r.verdict(tag + "_flagged_divergent", 1, 1, true, "predicate or blow-up");
            continue;
        }
        r.at_most(tag + "_rel_error", std::abs(row.value / row.expected - 1.0), 0.10,
                  "variance " + num(row.value) + " vs " + num(row.expected) + " (" + row.flag + ")");
    }
    // The divergent side of the predicate is flagged too.
    ExperimentConfig div = c;
    div.steps = 20000;
    div.n_runs = 10;
    auto t2 = sweep_rho(div, {1.0}, RunOptions{opt.threads});
    bool flagged = std::any_of(t2.summary.begin(), t2.summary.end(), [](const SummaryRow& s) {
        return s.kind == "tail_variance" && (s.flag == "diverges" || s.flag == "diverged");
    });
    r.verdict("rho1_flagged_divergent", flagged, 1, flagged, "rho(a^2-lam^2)-a = 1 >= 0");
    r.at_most("runtime_s", seconds_since(t0), 300.0);
    return r.rep;
}

ValidationReport criterion4(const ValidationOptions& opt) {
    Rows r{"4"};
    ExperimentConfig c = bilinear_base(1, 1.0, NoiseKind::AdditiveGradient, 1.0, 0.1);
    c.method = MethodName::SgdaSde;
    c.eta = 0.01;
    c.horizon = 5.0;
    c.n_runs = 10000;
    c.base_seed = opt.seed;
    auto s = only(simulate_arm(c, RunOptions{opt.threads}));
    auto [slope, icpt] = stats::linear_variance_fit(s, 0.1);
    double expected = c.eta * 1.0 * 1.0;
    r.at_most("slope_rel_error", std::abs(slope / expected - 1.0), 0.10,
              "slope " + num(slope) + " vs " + num(expected) + ", intercept " + num(icpt));
    return r.rep;
}

ValidationReport criterion5(const ValidationOptions& opt) {
    Rows r{"5"};
    struct Case {
        MethodName m;
        double rho;
    };
    const Case cases[] = {{MethodName::SHGD, 0.0}, {MethodName::SEG, 0.5}, {MethodName::SEG, 1.0}, {MethodName::SEG, 2.0}};
    const double lam = 2.0, sigma = 1.0, eta = 0.01;
    int idx = 0;
    for (const auto& cs : cases) {
        ExperimentConfig c = bilinear_base(2, lam, NoiseKind::MatrixEntry, sigma, 0.1);
        c.method = cs.m;
        c.eta = eta;
        c.rho = cs.rho;
        c.sampling = Sampling::IndependentSample;
        c.steps = 200;
        c.n_runs = 5000;
        c.base_seed = opt.seed + static_cast<std::uint64_t>(idx++);
        auto s = only(simulate_arm(c, RunOptions{opt.threads}));
        double rate = stats::fit_decay_rate(s, 0.0, 2.0);
        double expected = cs.m == MethodName::SHGD ? analytic::shgd_stochastic_exponent(lam, sigma, eta)
                                                   : analytic::seg_stochastic_exponent(lam, sigma, eta, cs.rho);
        std::string tag = cs.m == MethodName::SHGD ? "shgd" : "seg_rho" + num(cs.rho);
        r.at_most(tag + "_rate_rel_error", std::abs(rate / expected - 1.0), 0.10,
                  "rate " + num(rate) + " vs " + num(expected));
    }
    return r.rep;
}

ValidationReport criterion6(const ValidationOptions& opt) {
    Rows r{"6"};
    const RunOptions ro{opt.threads};
    ExperimentConfig base;
    base.landscape = LandscapeKind::NonBilinear2;
    base.eps = 0.01;
    base.noise = NoiseKind::AdditiveGradient;
    base.sigma = {1.0};
    base.eta = 0.01;
    base.z0 = {1.0, 1.0};
    base.horizon = 2.0;
    base.n_runs = 10000;
    base.statistics = {"half-sq-norm"};

    ExperimentConfig sgda_sde = base;
    sgda_sde.method = MethodName::SgdaSde;
    sgda_sde.base_seed = opt.seed;
    auto s_sgda = only(simulate_arm(sgda_sde, ro));
    int idx = 1;
    for (double rho : {0.001, 0.3}) {
        ExperimentConfig seg = base;
        seg.method = MethodName::SEG;
        seg.rho = rho;
        seg.base_seed = opt.seed + static_cast<std::uint64_t>(idx++);
        ExperimentConfig seg_sde = seg;
        seg_sde.method = MethodName::SegSde;
        seg_sde.base_seed = opt.seed + static_cast<std::uint64_t>(idx++);
        auto a = only(simulate_arm(seg, ro));
        auto b = only(simulate_arm(seg_sde, ro));
        auto w_sgda = stats::weak_error(a, s_sgda);
        auto w_seg = stats::weak_error(a, b);
        double gap = w_sgda.value - w_seg.value;
        double se = stats::combined_stderr(w_sgda.combined_stderr, w_seg.combined_stderr);
        std::string detail = "we(SEG,SgdaSde)=" + num(w_sgda.value) + " we(SEG,SegSde)=" + num(w_seg.value) +
                             " se=" + num(se);
        if (rho < 0.01)
            r.at_most("rho" + num(rho) + "_gap_over_se", std::abs(gap) / se, 3.0, detail);
        else
            r.at_least("rho" + num(rho) + "_gap_over_se", gap / se, 3.0, detail);
    }
    return r.rep;
}

ValidationReport criterion7(const ValidationOptions& opt) {
    Rows r{"7"};
    const RunOptions ro{opt.threads};
    std::vector<double> etas = {0.04, 0.02, 0.01}, errs;
    int idx = 0;
    std::string detail;
    for (double eta : etas) {
        ExperimentConfig c = bilinear_base(1, 1.0, NoiseKind::AdditiveGradient, 1.0, 1.0);
        c.method = MethodName::SGDA;
        c.eta = eta;
        c.horizon = 1.0;
        c.n_runs = 20000;
        c.base_seed = opt.seed + static_cast<std::uint64_t>(idx++);
        ExperimentConfig sde = c;
        sde.method = MethodName::SgdaSde;
        sde.base_seed = opt.seed + static_cast<std::uint64_t>(idx++);
        auto w = stats::weak_error(only(simulate_arm(c, ro)), only(simulate_arm(sde, ro)));
        errs.push_back(w.value);
        detail += "eta=" + num(eta) + ":" + num(w.value) + "+-" + num(w.combined_stderr) + " ";
    }
    double slope = stats::order_fit(etas, errs);
    r.verdict("order_fit_slope", slope, 0.3, slope >= 0.7 && slope <= 1.3, detail + "(band [0.7, 1.3])");
    return r.rep;
}

ValidationReport criterion8(const ValidationOptions& opt) {
    Rows r{"8"};
    const RunOptions ro{opt.threads};
    auto game = [](double a, double lam, double eta, long steps) {
        ExperimentConfig c;
        c.landscape = LandscapeKind::Quadratic;
        c.a = {a};
        c.lam = {lam};
        c.noise = NoiseKind::AdditiveGradient;
        c.sigma = {0.1};
        c.eta = eta;
        c.z0 = {1.0, 1.0};
        c.steps = steps;
        c.n_runs = 1000;
        c.statistics = {"norm"};
        return c;
    };
    int idx = 0;
    auto rate_of = [&](ExperimentConfig c, MethodName m, double rho) {
        c.method = m;
        c.rho = rho;
        c.base_seed = opt.seed + static_cast<std::uint64_t>(idx++);
        return decay_rate(only(simulate_arm(c, ro)));
    };

    // Well-conditioned game a = 3, lambda = 1.
    ExperimentConfig good = game(3.0, 1.0, 0.01, 1000);
    analytic::QuadraticGameParams p{DiagMatrix::constant(1, 3.0), DiagMatrix::constant(1, 1.0),
                                    DiagMatrix::constant(1, 0.1), 0.01, 0.0};
    double rho_h = analytic::optimal_rho(p, analytic::RhoObjective::MatchShgdDecay)[0];
    double shgd_rate = 3.0 * 3.0 + 1.0;
    double seg_h = rate_of(good, MethodName::SEG, rho_h);
    r.at_most("seg_rhoH_rate_rel_error", std::abs(seg_h / shgd_rate - 1.0), 0.15,
              "rho_H=" + num(rho_h) + " rate " + num(seg_h) + " vs " + num(shgd_rate));
    double sgda = rate_of(good, MethodName::SGDA, 0.0);
    double seg_v = rate_of(good, MethodName::SEG, 0.25);
    r.verdict("seg_rho0.25_slower_than_sgda", sgda - seg_v, 0.0, seg_v < sgda,
              "SEG(0.25) rate " + num(seg_v) + " vs SGDA " + num(sgda));

    // Bad saddle f = -x^2/2 + 2xy + y^2/2 (a = -1, lambda = 2) where rho_H = 2.
    ExperimentConfig bad = game(-1.0, 2.0, 0.001, 2000);
    analytic::QuadraticGameParams q{DiagMatrix::constant(1, -1.0), DiagMatrix::constant(1, 2.0),
                                    DiagMatrix::constant(1, 0.1), 0.001, 0.0};
    double rho_hb = analytic::optimal_rho(q, analytic::RhoObjective::MatchShgdDecay)[0];
    auto fitted = [&](MethodName m, double rho) {
        ExperimentConfig c = bad;
        c.method = m;
        c.rho = rho;
        c.base_seed = opt.seed + static_cast<std::uint64_t>(idx++);
        auto s = only(simulate_arm(c, ro));
        return stats::fit_decay_rate(s, 0.0, s.times.back());
    };
    double shgd_b = fitted(MethodName::SHGD, 0.0);
    r.verdict("bad_saddle_shgd_norm_decreases", shgd_b, 0.0, shgd_b > 0, "fitted decay rate " + num(shgd_b));
    double seg_b = fitted(MethodName::SEG, rho_hb);
    r.verdict("bad_saddle_seg_rhoH_norm_increases", -seg_b, 0.0, seg_b < 0,
              "rho_H=" + num(rho_hb) + " fitted decay rate " + num(seg_b) + " (growth needs a negative rate)");
    double seg_esc = fitted(MethodName::SEG, -1.0);
    r.info("bad_saddle_seg_rho-1_growth", -seg_esc, "fitted decay rate " + num(seg_esc));
    return r.rep;
}

// ---------------------------------------------------------------------------
// Property checks

std::vector<Landscape> fd_landscapes(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.2, 2.0);
    std::vector<Landscape> out;
    Vec a(2), l(2);
    a << u(gen), u(gen);
    l << pos(gen), pos(gen);
    out.push_back(Landscape::quadratic(DiagMatrix(a), DiagMatrix(l)));
    out.push_back(Landscape::bilinear(DiagMatrix(l)));
    out.push_back(Landscape::nonbilinear1());
    out.push_back(Landscape::nonbilinear2(0.01));
    out.push_back(Landscape::nonbilinear3());
    return out;
}

double rel(double err, double scale) { return err / std::max(1.0, scale); }

void gradient_checks(Rows& r, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-5;
    for (const auto& l : fd_landscapes(gen)) {
        const int n = 2 * l.dim();
        double e_field = 0, e_jac = 0, e_ham = 0, e_hess = 0;
        for (int p = 0; p < 100; ++p) {
            Vec z(n);
            for (int i = 0; i < n; ++i) z[i] = u(gen);
            StateVector s(z);
            Vec grad(n);
            Mat jac(n, n), hess(n, n);
            Vec hg(n);
            for (int i = 0; i < n; ++i) {
                Vec zp = z, zm = z;
                zp[i] += h;
                zm[i] -= h;
                StateVector sp(zp), sm(zm);
                grad[i] = (l.value(sp) - l.value(sm)) / (2 * h);
                jac.col(i) = (l.field(sp).z() - l.field(sm).z()) / (2 * h);
                hg[i] = (l.hamiltonian(sp) - l.hamiltonian(sm)) / (2 * h);
                // Hessian of f from differences of (grad_x f, grad_y f) = (F_x, -F_y).
                Vec gp = l.field(sp).z(), gm = l.field(sm).z();
                gp.tail(n / 2) *= -1.0;
                gm.tail(n / 2) *= -1.0;
                hess.col(i) = (gp - gm) / (2 * h);
            }
            Vec f = l.field(s).z();
            Vec fd_field = grad;
            fd_field.tail(n / 2) *= -1.0;
            e_field = std::max(e_field, rel((f - fd_field).cwiseAbs().maxCoeff(), f.cwiseAbs().maxCoeff()));
            Mat jm = l.field_jacobian(s);
            e_jac = std::max(e_jac, rel((jm - jac).cwiseAbs().maxCoeff(), jm.cwiseAbs().maxCoeff()));
            Vec hm = l.hamiltonian_gradient(s).z();
            e_ham = std::max(e_ham, rel((hm - hg).cwiseAbs().maxCoeff(), hm.cwiseAbs().maxCoeff()));
            Mat hs = l.hessian(s);
            e_hess = std::max(e_hess, rel((hs - hess).cwiseAbs().maxCoeff(), hs.cwiseAbs().maxCoeff()));
        }
        std::string tag = landscapes::to_string(l.kind());
        if (l.is_bilinear()) tag = "bilinear";
        r.at_most(tag + "_field_fd", e_field, 1e-5, "100 random points");
        r.at_most(tag + "_jacobian_fd", e_jac, 1e-5, "100 random points");
        r.at_most(tag + "_hamiltonian_gradient_fd", e_ham, 1e-5, "100 random points");
        r.at_most(tag + "_hessian_fd", e_hess, 1e-5, "100 random points");
    }
}

void psd_checks(Rows& r, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        int n = 1 + trial % 6;
        int rank = 1 + trial % n;
        Mat g(n, rank);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < rank; ++j) g(i, j) = nd(gen);
        Mat m = g * g.transpose();
        Mat s = core::psd_sqrt(m);
        worst = std::max(worst, rel((s * s - m).cwiseAbs().maxCoeff(), m.cwiseAbs().maxCoeff()));
    }
    r.at_most("psd_sqrt_reconstruction", worst, 1e-8, "50 random PSD matrices incl. rank-deficient");
}

void closed_form_identity(Rows& r, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> pos(0.2, 3.0), u(-1.0, 1.0), small(0.001, 0.1), tt(0.0, 5.0);
    double worst_seg = 0, worst_shgd = 0;
    for (int k = 0; k < 50; ++k) {
        int d = 1 + k % 3;
        Vec l(d), s(d), z(2 * d);
        for (int i = 0; i < d; ++i) {
            l[i] = pos(gen);
            s[i] = pos(gen);
        }
        for (int i = 0; i < 2 * d; ++i) z[i] = u(gen);
        double eta = small(gen), rho = pos(gen) * 0.5, t = tt(gen);
        DiagMatrix L(l), S(s);
        StateVector z0(z);
        analytic::QuadraticGameParams p{DiagMatrix::constant(d, 0.0), L, S, eta, rho};
        double seg_d = analytic::seg_norm_fixed_bilinear(L, S, eta, rho, z0, t);
        double seg_f = analytic::expected_half_sq_norm(analytic::seg_quadratic_mean(p, z0, t),
                                                       analytic::seg_quadratic_cov(p, t));
        worst_seg = std::max(worst_seg, std::abs(seg_d - seg_f) / std::max(1.0, std::abs(seg_d)));
        double shgd_d = analytic::shgd_norm_fixed_bilinear(L, S, eta, z0, t);
        double shgd_f = analytic::expected_half_sq_norm(analytic::shgd_quadratic_mean(p, z0, t),
                                                        analytic::shgd_quadratic_cov(p, t));
        worst_shgd = std::max(worst_shgd, std::abs(shgd_d - shgd_f) / std::max(1.0, std::abs(shgd_d)));
    }
    r.at_most("bilinear_vs_quadratic_a0_seg", worst_seg, 1e-12, "50 random parameter draws");
    r.at_most("bilinear_vs_quadratic_a0_shgd", worst_shgd, 1e-12, "50 random parameter draws");
}

void seg_rho0_identity(Rows& r, std::uint64_t seed) {
    std::vector<Landscape> ls = {
        Landscape::bilinear(DiagMatrix::constant(2, 1.5),
                            landscapes::NoiseSpec::additive(DiagMatrix::constant(2, 0.5))),
        Landscape::bilinear(DiagMatrix::constant(2, 1.5),
                            landscapes::NoiseSpec::matrix_entry(DiagMatrix::constant(2, 0.5))),
        Landscape::nonbilinear1(landscapes::NoiseSpec::additive(DiagMatrix::constant(1, 1.0))),
    };
    int mismatches = 0;
    for (const auto& l : ls) {
        for (auto sampling : {Sampling::SameSample, Sampling::IndependentSample}) {
            optimizers::OptimizerConfig seg, sgda;
            seg.method = optimizers::Method::SEG;
            seg.rho = 0.0;
            seg.sampling = sampling;
            sgda.method = optimizers::Method::SGDA;
            StateVector z0(Vec::Constant(2 * l.dim(), 0.5));
            core::RngStream r1(seed, 3), r2(seed, 3);
            auto a = optimizers::run_optimizer(l, seg, z0, 500, r1);
            auto b = optimizers::run_optimizer(l, sgda, z0, 500, r2);
            if (a.states.size() != b.states.size()) {
                ++mismatches;
                continue;
            }
            for (std::size_t k = 0; k < a.states.size(); ++k)
                if (!(a.states[k] == b.states[k])) {
                    ++mismatches;
                    break;
                }
        }
    }
    r.at_most("seg_rho0_equals_sgda_bitwise", mismatches, 0, "3 landscapes x 2 sampling policies, 500 steps");
}

std::string strip_timestamp(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line))
        if (line.rfind("# timestamp:", 0) != 0) out += line + "\n";
    return out;
}

void determinism(Rows& r, std::uint64_t seed) {
    ExperimentConfig c = bilinear_base(1, 1.0, NoiseKind::AdditiveGradient, 1.0, 0.5);
    c.method = MethodName::SEG;
    c.rho = 0.1;
    c.steps = 300;
    c.n_runs = 150;
    c.base_seed = seed;
    c.compare = {"SegSde"};
    c.statistics = {"half-sq-norm", "x0"};
    std::string a = strip_timestamp(run_experiment(c).to_csv());
    std::string b = strip_timestamp(run_experiment(c).to_csv());
    std::string p = strip_timestamp(run_experiment(c, RunOptions{3}).to_csv());
    r.verdict("rerun_byte_identical", a == b, 1, a == b, "two runs of the same config");
    r.verdict("parallel_matches_serial", a == p, 1, a == p, "1 vs 3 worker threads");
}

ValidationReport criterion9(const ValidationOptions& opt) {
    Rows r{"9"};
    gradient_checks(r, opt.seed);
    closed_form_identity(r, opt.seed + 1);
    psd_checks(r, opt.seed + 2);
    seg_rho0_identity(r, opt.seed + 3);
    determinism(r, opt.seed + 4);
    return r.rep;
}

void append(ValidationReport& into, const ValidationReport& from) {
    into.rows.insert(into.rows.end(), from.rows.begin(), from.rows.end());
}

}  // namespace

ValidationReport run_criterion(int n, const ValidationOptions& opt) {
    switch (n) {
        case 1: return criterion1(opt);
        case 2: return criterion2(opt);
        case 3: return criterion3(opt);
        case 4: return criterion4(opt);
        case 5: return criterion5(opt);
        case 6: return criterion6(opt);
        case 7: return criterion7(opt);
        case 8: return criterion8(opt);
        case 9: return criterion9(opt);
    }
    throw Error(ErrorKind::InvalidInput, "criteria are numbered 1..9");
}

ValidationReport validate(Suite suite, const ValidationOptions& opt) {
    ValidationReport rep;
    switch (suite) {
        case Suite::Gradients: {
            Rows r{"gradients"};
            gradient_checks(r, opt.seed);
            psd_checks(r, opt.seed + 2);
            return r.rep;
        }
        case Suite::ClosedForms: {
            Rows r{"closed_forms"};
            closed_form_identity(r, opt.seed + 1);
            seg_rho0_identity(r, opt.seed + 3);
            return r.rep;
        }
        case Suite::WeakOrder:
            append(rep, criterion7(opt));
            append(rep, criterion6(opt));
            return rep;
        case Suite::Schedulers:
            append(rep, criterion1(opt));
            append(rep, criterion2(opt));
            return rep;
        case Suite::Figures:
            for (int n = 1; n <= 8; ++n) append(rep, run_criterion(n, opt));
            return rep;
    }
    return rep;
}

}  // namespace saddlelab::harness
