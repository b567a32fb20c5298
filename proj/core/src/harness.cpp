#include "saddlelab/harness.hpp"

#include "saddlelab/analytic.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace saddlelab::harness {

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
    throw Error(ErrorKind::ConfigError, field + ": " + what);
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Plain decimals plus simple fractions such as -1/6.
double parse_number(const std::string& field, const std::string& s) {
    auto one = [&](const std::string& t) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            config_error(field, "not a number: '" + s + "'");
        }
        if (used != t.size()) config_error(field, "not a number: '" + s + "'");
        return v;
    };
    auto slash = s.find('/');
    if (slash == std::string::npos) return one(trim(s));
    double den = one(trim(s.substr(slash + 1)));
    if (den == 0) config_error(field, "zero denominator");
    return one(trim(s.substr(0, slash))) / den;
}

long parse_integer(const std::string& field, const std::string& s) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        config_error(field, "not an integer: '" + s + "'");
    }
    if (used != s.size()) config_error(field, "not an integer: '" + s + "'");
    return static_cast<long>(v);
}

std::vector<double> parse_numbers(const std::string& field, const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(parse_number(field, item));
    return out;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
}

const char* kind_name(LandscapeKind k, bool bilinear) {
    switch (k) {
        case LandscapeKind::Quadratic: return bilinear ? "bilinear" : "quadratic";
        case LandscapeKind::NonBilinear1: return "nonbilinear1";
        case LandscapeKind::NonBilinear2: return "nonbilinear2";
        case LandscapeKind::NonBilinear3: return "nonbilinear3";
    }
    return "?";
}

const char* noise_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::None: return "none";
        case NoiseKind::AdditiveGradient: return "additive";
        case NoiseKind::MatrixEntry: return "matrix_entry";
    }
    return "?";
}

core::DiagMatrix diag(const std::vector<double>& v, int d) {
    if (v.empty()) return core::DiagMatrix::constant(d, 0.0);
    return core::DiagMatrix(Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size())));
}

bool near_integer(double x) { return std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, std::abs(x)); }

}  // namespace

const char* to_string(MethodName m) {
    switch (m) {
        case MethodName::SGDA: return "SGDA";
        case MethodName::SEG: return "SEG";
        case MethodName::SHGD: return "SHGD";
        case MethodName::SgdaSde: return "SgdaSde";
        case MethodName::SegSde: return "SegSde";
        case MethodName::SegSmallRhoSde: return "SegSmallRhoSde";
        case MethodName::ShgdSde: return "ShgdSde";
    }
    return "?";
}

MethodName method_from_string(const std::string& s) {
    for (auto m : {MethodName::SGDA, MethodName::SEG, MethodName::SHGD, MethodName::SgdaSde, MethodName::SegSde,
                   MethodName::SegSmallRhoSde, MethodName::ShgdSde})
        if (s == to_string(m)) return m;
    config_error("method.name", "unknown method '" + s + "'");
}

bool is_sde(MethodName m) {
    return m == MethodName::SgdaSde || m == MethodName::SegSde || m == MethodName::SegSmallRhoSde ||
           m == MethodName::ShgdSde;
}

// ---------------------------------------------------------------------------
// ExperimentConfig

int ExperimentConfig::dim() const {
    if (landscape != LandscapeKind::Quadratic) return 1;
    return static_cast<int>(lam.size());
}

double ExperimentConfig::step_size() const {
    if (!is_sde(method)) return eta;
    return dt ? *dt : eta / 10.0;
}

long ExperimentConfig::total_steps() const {
    if (steps) return *steps;
    double h = step_size();
    double n = *horizon / h;
    if (!is_sde(method)) return static_cast<long>(std::floor(n + 1e-9));
    return static_cast<long>(std::ceil(n - 1e-9));
}

long ExperimentConfig::stride() const {
    if (record_every > 0) return record_every;
    if (!is_sde(method)) return 1;
    double r = eta / step_size();
    return near_integer(r) && r >= 1 ? static_cast<long>(std::llround(r)) : 1;
}

long ExperimentConfig::effective_runs() const {
    return std::max(1L, static_cast<long>(std::llround(static_cast<double>(n_runs) * runs_scale)));
}

void ExperimentConfig::validate() const {
    bool quad = landscape == LandscapeKind::Quadratic;
    if (quad) {
        if (lam.empty()) config_error("landscape.lambda", "required for quadratic and bilinear games");
        for (double v : lam)
            if (!std::isfinite(v) || v < 0) config_error("landscape.lambda", "entries must be finite and >= 0");
        if (!a.empty() && a.size() != lam.size()) config_error("landscape.a", "length must match landscape.lambda");
        for (double v : a)
            if (!std::isfinite(v)) config_error("landscape.a", "entries must be finite");
    } else {
        if (!lam.empty()) config_error("landscape.lambda", "not used by nonbilinear games");
        if (!a.empty()) config_error("landscape.a", "not used by nonbilinear games");
    }
    if (landscape == LandscapeKind::NonBilinear2 && !(std::isfinite(eps) && eps >= 0))
        config_error("landscape.eps", "must be finite and >= 0");
    int d = dim();
    if (noise == NoiseKind::None) {
        if (!sigma.empty()) config_error("landscape.sigma", "given without noise");
    } else {
        if (static_cast<int>(sigma.size()) != d) config_error("landscape.sigma", "need one entry per dimension");
        for (double v : sigma)
            if (!std::isfinite(v) || v < 0) config_error("landscape.sigma", "entries must be finite and >= 0");
        if (noise == NoiseKind::MatrixEntry) {
            bool bil = quad && std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; });
            if (!bil) config_error("landscape.noise", "matrix_entry noise needs a bilinear game");
        }
    }
    if (!(std::isfinite(eta) && eta > 0)) config_error("eta", "must be positive");
    if (!std::isfinite(rho)) config_error("method.rho", "must be finite");
    if (!(eta_gamma >= 0) || !std::isfinite(eta_gamma)) config_error("method.eta_gamma", "must be >= 0");
    if (!(rho_gamma >= 0) || !std::isfinite(rho_gamma)) config_error("method.rho_gamma", "must be >= 0");
    if (static_cast<int>(z0.size()) != 2 * d) config_error("run.z0", "need 2d entries");
    for (double v : z0)
        if (!std::isfinite(v)) config_error("run.z0", "entries must be finite");
    if (steps.has_value() == horizon.has_value()) config_error("run.steps", "give exactly one of run.steps and run.horizon");
    if (steps && *steps < 1) config_error("run.steps", "must be >= 1");
    if (horizon && !(std::isfinite(*horizon) && *horizon > 0)) config_error("run.horizon", "must be positive");
    if (dt) {
        if (!is_sde(method)) config_error("run.dt", "only SDE methods take a discretization step");
        if (!(std::isfinite(*dt) && *dt > 0)) config_error("run.dt", "must be positive");
    }
    if (n_runs < 1) config_error("run.n_runs", "must be >= 1");
    if (!(runs_scale > 0 && runs_scale <= 1)) config_error("run.runs_scale", "must be in (0, 1]");
    if (record_every < 0) config_error("run.record_every", "must be >= 0");
    for (const auto& m : compare) method_from_string(m);
    bool seg = method == MethodName::SEG || method == MethodName::SegSde;
    if (!sweep_rho.empty() && !seg) config_error("run.sweep_rho", "needs an SEG method");
    for (double r : sweep_rho)
        if (!std::isfinite(r)) config_error("run.sweep_rho", "entries must be finite");
    for (double g : sweep_gamma)
        if (!(g >= 0) || !std::isfinite(g)) config_error("run.sweep_gamma", "entries must be >= 0");
    if (statistics.empty()) config_error("output.statistics", "need at least one statistic");
    Landscape l = build_landscape();
    std::set<std::string> seen;
    for (const auto& s : statistics) {
        try {
            stats::statistic_by_name(s, l);
        } catch (const Error&) {
            config_error("output.statistics", "unknown statistic '" + s + "'");
        }
        if (!seen.insert(s).second) config_error("output.statistics", "duplicate statistic '" + s + "'");
    }
}

Landscape ExperimentConfig::build_landscape() const {
    int d = dim();
    landscapes::NoiseSpec n;
    if (noise == NoiseKind::AdditiveGradient) n = landscapes::NoiseSpec::additive(diag(sigma, d));
    if (noise == NoiseKind::MatrixEntry) n = landscapes::NoiseSpec::matrix_entry(diag(sigma, d));
    switch (landscape) {
        case LandscapeKind::Quadratic: return Landscape::quadratic(diag(a, d), diag(lam, d), n);
        case LandscapeKind::NonBilinear1: return Landscape::nonbilinear1(n);
        case LandscapeKind::NonBilinear2: return Landscape::nonbilinear2(eps, n);
        case LandscapeKind::NonBilinear3: return Landscape::nonbilinear3(n);
    }
    throw Error(ErrorKind::ConfigError, "landscape.kind: unknown");
}

optimizers::OptimizerConfig ExperimentConfig::optimizer_config() const {
    optimizers::OptimizerConfig c;
    switch (method) {
        case MethodName::SGDA: c.method = optimizers::Method::SGDA; break;
        case MethodName::SEG: c.method = optimizers::Method::SEG; break;
        case MethodName::SHGD: c.method = optimizers::Method::SHGD; break;
        default: throw Error(ErrorKind::ConfigError, "method.name: not a discrete algorithm");
    }
    c.eta = eta;
    c.rho = rho;
    c.sampling = sampling;
    c.eta_sched = eta_gamma > 0 ? Scheduler::power_law(eta_gamma) : Scheduler::constant();
    c.rho_sched = rho_gamma > 0 ? Scheduler::power_law(rho_gamma) : Scheduler::constant();
    return c;
}

sde::SdeModel ExperimentConfig::sde_model(const Landscape& l) const {
    auto build = [&]() {
        switch (method) {
            case MethodName::SgdaSde: return sde::build_sgda_sde(l, eta);
            case MethodName::SegSde: return sde::build_seg_sde(l, eta, rho, sampling);
            case MethodName::SegSmallRhoSde: return sde::build_seg_small_rho_sde(l, eta);
            case MethodName::ShgdSde: return sde::build_shgd_sde(l, eta, sampling);
            default: throw Error(ErrorKind::ConfigError, "method.name: not an SDE");
        }
    };
    sde::SdeModel m = build();
    if (eta_gamma > 0 || rho_gamma > 0)
        m = sde::scheduled_sde(m, eta_gamma > 0 ? Scheduler::power_law(eta_gamma) : Scheduler::constant(),
                               rho_gamma > 0 ? Scheduler::power_law(rho_gamma) : Scheduler::constant());
    return m;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    c.statistics.clear();
    bool stats_given = false;
    bool bilinear = false;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) config_error("line " + std::to_string(lineno), "expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string v = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) config_error(key, "given twice");
        if (key == "landscape.kind") {
            if (v == "bilinear") {
                c.landscape = LandscapeKind::Quadratic;
                bilinear = true;
            } else if (v == "quadratic") c.landscape = LandscapeKind::Quadratic;
            else if (v == "nonbilinear1") c.landscape = LandscapeKind::NonBilinear1;
            else if (v == "nonbilinear2") c.landscape = LandscapeKind::NonBilinear2;
            else if (v == "nonbilinear3") c.landscape = LandscapeKind::NonBilinear3;
            else config_error(key, "unknown landscape '" + v + "'");
        } else if (key == "landscape.a") c.a = parse_numbers(key, v);
        else if (key == "landscape.lambda") c.lam = parse_numbers(key, v);
        else if (key == "landscape.eps") c.eps = parse_number(key, v);
        else if (key == "landscape.noise") {
            if (v == "none") c.noise = NoiseKind::None;
            else if (v == "additive") c.noise = NoiseKind::AdditiveGradient;
            else if (v == "matrix_entry") c.noise = NoiseKind::MatrixEntry;
            else config_error(key, "unknown noise '" + v + "'");
        } else if (key == "landscape.sigma") c.sigma = parse_numbers(key, v);
        else if (key == "method.name") c.method = method_from_string(v);
        else if (key == "method.eta") c.eta = parse_number("eta", v);
        else if (key == "method.rho") c.rho = parse_number(key, v);
        else if (key == "method.sampling") {
            if (v == "same") c.sampling = Sampling::SameSample;
            else if (v == "independent") c.sampling = Sampling::IndependentSample;
            else config_error(key, "expected 'same' or 'independent'");
        } else if (key == "method.eta_gamma") c.eta_gamma = parse_number(key, v);
        else if (key == "method.rho_gamma") c.rho_gamma = parse_number(key, v);
        else if (key == "run.z0") c.z0 = parse_numbers(key, v);
        else if (key == "run.steps") c.steps = parse_integer(key, v);
        else if (key == "run.horizon") c.horizon = parse_number(key, v);
        else if (key == "run.dt") c.dt = parse_number(key, v);
        else if (key == "run.n_runs") c.n_runs = parse_integer(key, v);
        else if (key == "run.base_seed") {
            long s = parse_integer(key, v);
            if (s < 0) config_error(key, "must be >= 0");
            c.base_seed = static_cast<std::uint64_t>(s);
        } else if (key == "run.record_every") c.record_every = parse_integer(key, v);
        else if (key == "run.runs_scale") c.runs_scale = parse_number(key, v);
        else if (key == "run.compare") c.compare = split_list(v);
        else if (key == "run.sweep_rho") c.sweep_rho = parse_numbers(key, v);
        else if (key == "run.sweep_gamma") c.sweep_gamma = parse_numbers(key, v);
        else if (key == "output.statistics") {
            c.statistics = split_list(v);
            stats_given = true;
        } else if (key == "output.path") c.path = v;
        else config_error(key, "unknown key");
    }
    if (!stats_given) c.statistics = {"half-sq-norm"};
    if (bilinear && !c.a.empty()) config_error("landscape.a", "bilinear games take no a");
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "landscape.kind = " << kind_name(c.landscape, c.a.empty()) << "\n";
    if (!c.a.empty()) o << "landscape.a = " << fmt_list(c.a) << "\n";
    if (!c.lam.empty()) o << "landscape.lambda = " << fmt_list(c.lam) << "\n";
    if (c.landscape == LandscapeKind::NonBilinear2) o << "landscape.eps = " << fmt(c.eps) << "\n";
    o << "landscape.noise = " << noise_name(c.noise) << "\n";
    if (!c.sigma.empty()) o << "landscape.sigma = " << fmt_list(c.sigma) << "\n";
    o << "method.name = " << to_string(c.method) << "\n";
    o << "method.eta = " << fmt(c.eta) << "\n";
    o << "method.rho = " << fmt(c.rho) << "\n";
    o << "method.sampling = " << (c.sampling == Sampling::SameSample ? "same" : "independent") << "\n";
    o << "method.eta_gamma = " << fmt(c.eta_gamma) << "\n";
    o << "method.rho_gamma = " << fmt(c.rho_gamma) << "\n";
    o << "run.z0 = " << fmt_list(c.z0) << "\n";
    if (c.steps) o << "run.steps = " << *c.steps << "\n";
    if (c.horizon) o << "run.horizon = " << fmt(*c.horizon) << "\n";
    if (c.dt) o << "run.dt = " << fmt(*c.dt) << "\n";
    o << "run.n_runs = " << c.n_runs << "\n";
    o << "run.base_seed = " << c.base_seed << "\n";
    o << "run.record_every = " << c.record_every << "\n";
    o << "run.runs_scale = " << fmt(c.runs_scale) << "\n";
    if (!c.compare.empty()) o << "run.compare = " << join(c.compare) << "\n";
    if (!c.sweep_rho.empty()) o << "run.sweep_rho = " << fmt_list(c.sweep_rho) << "\n";
    if (!c.sweep_gamma.empty()) o << "run.sweep_gamma = " << fmt_list(c.sweep_gamma) << "\n";
    o << "output.statistics = " << join(c.statistics) << "\n";
    if (!c.path.empty()) o << "output.path = " << c.path << "\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Presets

namespace {

const std::map<std::string, std::string>& presets() {
    static const std::map<std::string, std::string> p = {
        {"figure1_tl", R"(# SGDA and its SDE on nonbilinear game #1, started outside the limit cycle
landscape.kind = nonbilinear1
landscape.noise = additive
landscape.sigma = 1
method.name = SGDA
method.eta = 0.01
run.z0 = 2, 2
run.steps = 10000
run.compare = SgdaSde
output.statistics = x0, y0, half-sq-norm
)"},
        {"figure1_bl", R"(# SHGD and its SDE on nonbilinear game #3
landscape.kind = nonbilinear3
landscape.noise = additive
landscape.sigma = 1
method.name = SHGD
method.eta = 0.0001
run.z0 = 0.7, 0.7
run.steps = 100000
run.record_every = 10
run.compare = ShgdSde
output.statistics = x0, y0, half-sq-norm
)"},
        {"figure1_tr", R"(# SEG vs its SDE and the SGDA SDE on nonbilinear game #2: mean path
landscape.kind = nonbilinear2
landscape.eps = 0.01
landscape.noise = additive
landscape.sigma = 1
method.name = SEG
method.eta = 0.01
method.rho = 1
run.z0 = 1, 1
run.steps = 10000
run.compare = SegSde, SgdaSde
run.sweep_rho = 0.1, 1
output.statistics = x0, y0
)"},
        {"figure1_br", R"(# SEG vs its SDE on nonbilinear game #2: norm of the iterates
landscape.kind = nonbilinear2
landscape.eps = 0.01
landscape.noise = additive
landscape.sigma = 1
method.name = SEG
method.eta = 0.01
method.rho = 1
run.z0 = 1, 1
run.steps = 10000
run.compare = SegSde
run.sweep_rho = 0.1, 1
output.statistics = half-sq-norm, norm
)"},
        {"figure3_left", R"(# SHGD with stepsize schedulers on f = 2xy
landscape.kind = bilinear
landscape.lambda = 2
landscape.noise = additive
landscape.sigma = 0.001
method.name = SHGD
method.eta = 0.01
run.z0 = 0.1, 0.1
run.steps = 2000
run.n_runs = 5
run.sweep_gamma = 0, 0.5, 1
output.statistics = half-sq-norm
)"},
        {"figure3_right", R"(# SEG with stepsize schedulers on f = 2xy
landscape.kind = bilinear
landscape.lambda = 2
landscape.noise = additive
landscape.sigma = 0.001
method.name = SEG
method.eta = 0.01
method.rho = 1
run.z0 = 0.1, 0.1
run.steps = 2000
run.n_runs = 5
run.sweep_gamma = 0, 0.5, 1
output.statistics = half-sq-norm
)"},
        {"figure4_left", R"(# Role of rho on f = 3x^2/2 + xy - 3y^2/2
landscape.kind = quadratic
landscape.a = 3
landscape.lambda = 1
landscape.noise = additive
landscape.sigma = 0.1
method.name = SEG
method.eta = 0.01
run.z0 = 1, 1
run.steps = 1000
run.compare = SHGD
run.sweep_rho = -5, -0.875, 0.25, 0
output.statistics = norm, half-sq-norm
)"},
        {"figure4_right", R"(# Escaping the bad saddle of f = -x^2/2 + 2xy + y^2/2
landscape.kind = quadratic
landscape.a = -1
landscape.lambda = 2
landscape.noise = additive
landscape.sigma = 0.1
method.name = SEG
method.eta = 0.001
run.z0 = 1, 1
run.steps = 2000
run.compare = SHGD
run.sweep_rho = -1, 2, 1, 0
output.statistics = norm, half-sq-norm
)"},
        {"figure5", R"(# Asymptotic variance of SEG against rho on f = x^2 + xy - y^2
landscape.kind = quadratic
landscape.a = 2
landscape.lambda = 1
landscape.noise = additive
landscape.sigma = 1
method.name = SEG
method.eta = 0.01
run.z0 = 0.01, 0.01
run.steps = 200000
run.record_every = 100
run.sweep_rho = -1/6, 0, 1/6, 1/3, 2/5, 1/2
output.statistics = x0, y0
)"},
        {"figure6", R"(# SHGD and SEG with noisy coupling matrix, Lambda = 2 I_2
landscape.kind = bilinear
landscape.lambda = 2, 2
landscape.noise = matrix_entry
landscape.sigma = 1, 1
method.name = SEG
method.eta = 0.01
method.sampling = independent
run.z0 = 0.1, 0.1, 0.1, 0.1
run.steps = 200
run.compare = SHGD
run.sweep_rho = 0.5, 1, 2
output.statistics = half-sq-norm
)"},
        {"figure8_1", R"(# SEG against both SDEs as rho grows, nonbilinear game #1
landscape.kind = nonbilinear1
landscape.noise = additive
landscape.sigma = 1
method.name = SEG
method.eta = 0.001
run.z0 = 2, 2
run.horizon = 10
run.compare = SegSde, SgdaSde
run.sweep_rho = 0.0001, 0.001, 0.0316, 0.1
output.statistics = half-sq-norm
)"},
        {"figure8_2", R"(# SEG against both SDEs as rho grows, nonbilinear game #2
landscape.kind = nonbilinear2
landscape.eps = 0.01
landscape.noise = additive
landscape.sigma = 1
method.name = SEG
method.eta = 0.01
run.z0 = 1, 1
run.horizon = 100
run.compare = SegSde, SgdaSde
run.sweep_rho = 0.001, 0.01, 0.3
output.statistics = half-sq-norm
)"},
        {"figure8_3", R"(# SEG against both SDEs as rho grows, nonbilinear game #3
landscape.kind = nonbilinear3
landscape.noise = additive
landscape.sigma = 1
method.name = SEG
method.eta = 0.0001
run.z0 = 0.7, 0.7
run.horizon = 10
run.record_every = 10
run.compare = SegSde, SgdaSde
run.sweep_rho = 0.00001, 0.0001, 0.01, 0.1
output.statistics = half-sq-norm
)"},
        {"figure8_4", R"(# SEG against both SDEs as rho grows, f = x^2 + 2xy - y^2
landscape.kind = quadratic
landscape.a = 2
landscape.lambda = 2
landscape.noise = additive
landscape.sigma = 1
method.name = SEG
method.eta = 0.01
run.z0 = 1, 1
run.horizon = 10
run.compare = SegSde, SgdaSde
run.sweep_rho = 0.001, 0.01, 0.1, 0.5
output.statistics = half-sq-norm
)"},
    };
    return p;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : presets()) out.push_back(k);
    return out;
}

std::string preset_text(const std::string& name) {
    auto it = presets().find(name);
    if (it == presets().end()) throw Error(ErrorKind::ConfigError, "preset: unknown preset '" + name + "'");
    return it->second;
}

ExperimentConfig preset(const std::string& name) { return parse_config(preset_text(name)); }

ExperimentConfig resolve_config(const std::string& name_or_path) {
    if (presets().count(name_or_path)) return preset(name_or_path);
    return load_config(name_or_path);
}

// ---------------------------------------------------------------------------
// Running

namespace {

StateVector initial_state(const ExperimentConfig& c) {
    return StateVector(Eigen::Map<const Vec>(c.z0.data(), static_cast<long>(c.z0.size())));
}

struct RunValues {
    std::vector<double> times;
    std::vector<std::vector<double>> values;  // per statistic
    std::size_t valid = 0;
};

RunValues run_one(const ExperimentConfig& c, const Landscape& l, const std::vector<stats::Statistic>& g,
                  const sde::SdeModel* model, long run_index) {
    core::RngStream rng(c.base_seed, static_cast<std::uint64_t>(run_index));
    StateVector z0 = initial_state(c);
    optimizers::Trajectory tr =
        model ? sde::euler_maruyama(*model, z0, c.step_size(), c.total_steps(), rng, c.stride())
              : optimizers::run_optimizer(l, c.optimizer_config(), z0, c.total_steps(), rng, c.stride());
    RunValues r;
    r.times = tr.step_times;
    r.values.assign(g.size(), std::vector<double>(tr.states.size(), 0.0));
    r.valid = tr.states.size();
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        if (!tr.states[k].finite() || optimizers::diverged(tr.states[k].z())) {
            r.valid = k;
            break;
        }
        for (std::size_t s = 0; s < g.size(); ++s) r.values[s][k] = g[s](tr.states[k]);
    }
    return r;
}

}  // namespace

std::vector<stats::MomentSeries> simulate_arm(const ExperimentConfig& c, const RunOptions& opt) {
    c.validate();
    Landscape l = c.build_landscape();
    std::vector<stats::Statistic> g;
    for (const auto& s : c.statistics) g.push_back(stats::statistic_by_name(s, l));
    std::optional<sde::SdeModel> model;
    if (is_sde(c.method)) model.emplace(c.sde_model(l));

    std::vector<stats::MomentAccumulator> acc;
    for (const auto& s : g) acc.emplace_back(s);

    const long runs = c.effective_runs();
    const int threads = std::max(1, opt.threads);
    // Runs are computed in blocks and reduced strictly in run_index order.
    const long block = std::max<long>(64, 4L * threads);
    std::vector<RunValues> slot;
    for (long start = 0; start < runs; start += block) {
        long end = std::min(runs, start + block);
        slot.assign(static_cast<std::size_t>(end - start), RunValues{});
        std::atomic<long> next{start};
        std::mutex err_mu;
        long err_run = -1;
        std::exception_ptr err;
        auto worker = [&]() {
            for (long r = next++; r < end; r = next++) {
                try {
                    slot[static_cast<std::size_t>(r - start)] = run_one(c, l, g, model ? &*model : nullptr, r);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (err_run < 0 || r < err_run) {
                        err_run = r;
                        err = std::current_exception();
                    }
                }
            }
        };
        if (threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        if (err) {
            try {
                std::rethrow_exception(err);
            } catch (const Error& e) {
                throw Error(e.kind(), std::string(to_string(c.method)) + " run " + std::to_string(err_run) + ": " +
                                          e.what());
            }
        }
        for (auto& r : slot)
            for (std::size_t s = 0; s < g.size(); ++s) acc[s].add_values(r.times, r.values[s], r.valid);
    }
    std::vector<stats::MomentSeries> out;
    for (const auto& a : acc) out.push_back(a.finish());
    return out;
}

// ---------------------------------------------------------------------------
// Result tables

const stats::MomentSeries& ResultTable::series(const std::string& arm, const std::string& statistic) const {
    for (const auto& a : arms)
        if (a.arm == arm && a.series.statistic == statistic) return a.series;
    throw Error(ErrorKind::InvalidInput, "no series for arm '" + arm + "' and statistic '" + statistic + "'");
}

void ResultTable::write(std::ostream& os) const {
    os << "# saddlelab " << version << "\n";
    os << "# timestamp: " << timestamp << "\n";
    os << "# seed: " << config.base_seed << "\n";
    std::istringstream cfg(serialize(config));
    std::string line;
    while (std::getline(cfg, line)) os << "# config: " << line << "\n";
    os << "arm,time,statistic,mean,stderr,n_effective\n";
    for (const auto& a : arms) {
        const auto& s = a.series;
        for (std::size_t k = 0; k < s.size(); ++k)
            os << a.arm << "," << fmt(s.times[k]) << "," << s.statistic << "," << fmt(s.mean[k]) << ","
               << fmt(s.stderr_[k]) << "," << s.n_effective[k] << "\n";
    }
    if (!summary.empty()) {
        os << "# summary\n";
        os << "kind,arm,reference,value,stderr,expected,flag\n";
        for (const auto& r : summary)
            os << r.kind << "," << r.arm << "," << r.reference << "," << fmt(r.value) << "," << fmt(r.stderr_) << ","
               << fmt(r.expected) << "," << r.flag << "\n";
    }
}

std::string ResultTable::to_csv() const {
    std::ostringstream o;
    write(o);
    return o.str();
}

ExperimentConfig parse_header(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, text;
    const std::string tag = "# config: ";
    while (std::getline(in, line))
        if (line.rfind(tag, 0) == 0) text += line.substr(tag.size()) + "\n";
    return parse_config(text);
}

namespace {

std::string now_utc() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ResultTable new_table(const ExperimentConfig& c) {
    ResultTable t;
    t.config = c;
    t.version = SADDLELAB_VERSION;
    t.timestamp = now_utc();
    return t;
}

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string arm_label(const ExperimentConfig& c, bool with_rho, bool with_gamma) {
    auto fmt = short_num;
    std::string s = to_string(c.method);
    std::vector<std::string> tags;
    if (with_rho) tags.push_back("rho=" + fmt(c.rho));
    if (with_gamma) tags.push_back("gamma=" + fmt(c.eta_gamma));
    if (!tags.empty()) {
        s += "[";
        for (std::size_t i = 0; i < tags.size(); ++i) s += (i ? ";" : "") + tags[i];
        s += "]";
    }
    return s;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Closed-form E|Z_t|^2/2 for the SDE of the configured method, when one exists.
std::optional<double> closed_form_half_sq_norm(const ExperimentConfig& c, double t) {
    if (c.landscape != LandscapeKind::Quadratic) return std::nullopt;
    int d = c.dim();
    core::DiagMatrix lam = diag(c.lam, d), sig = diag(c.sigma, d), a = diag(c.a, d);
    StateVector z0 = initial_state(c);
    bool bil = a.is_zero();
    bool shgd = c.method == MethodName::SHGD || c.method == MethodName::ShgdSde;
    bool seg = c.method == MethodName::SEG || c.method == MethodName::SegSde;
    bool sgda = c.method == MethodName::SGDA || c.method == MethodName::SgdaSde ||
                c.method == MethodName::SegSmallRhoSde;
    bool scheduled = c.eta_gamma > 0 || c.rho_gamma > 0;
    try {
        if (c.noise == NoiseKind::MatrixEntry) {
            if (scheduled || c.sampling != Sampling::IndependentSample) return std::nullopt;
            if (shgd) return analytic::shgd_norm_stochastic_bilinear(lam, sig, c.eta, z0, t);
            if (seg) return analytic::seg_norm_stochastic_bilinear(lam, sig, c.eta, c.rho, z0, t);
            return std::nullopt;
        }
        if (bil && (shgd || (seg && c.rho > 0))) {
            auto m = shgd ? analytic::AnalyticMethod::SHGD : analytic::AnalyticMethod::SEG;
            if (scheduled) {
                auto es = c.eta_gamma > 0 ? Scheduler::power_law(c.eta_gamma) : Scheduler::constant();
                auto rs = c.rho_gamma > 0 ? Scheduler::power_law(c.rho_gamma) : Scheduler::constant();
                return analytic::scheduled_norm(m, lam, sig, c.eta, c.rho, es, rs, z0, t);
            }
            return shgd ? analytic::shgd_norm_fixed_bilinear(lam, sig, c.eta, z0, t)
                        : analytic::seg_norm_fixed_bilinear(lam, sig, c.eta, c.rho, z0, t);
        }
        if (scheduled || c.noise != NoiseKind::AdditiveGradient) return std::nullopt;
        analytic::QuadraticGameParams p{a, lam, sig, c.eta, sgda ? 0.0 : c.rho};
        if (shgd)
            return analytic::expected_half_sq_norm(analytic::shgd_quadratic_mean(p, z0, t),
                                                   analytic::shgd_quadratic_cov(p, t));
        if (c.method == MethodName::SegSmallRhoSde) return std::nullopt;
        return analytic::expected_half_sq_norm(analytic::seg_quadratic_mean(p, z0, t),
                                               analytic::seg_quadratic_cov(p, t, true));
    } catch (const Error&) {
        return std::nullopt;
    }
}

void add_closed_form_rows(ResultTable& t, const ExperimentConfig& c, const ArmSeries& a) {
    if (a.series.statistic != "half-sq-norm") return;
    double worst = -1, worst_t = 0, worst_expected = kNaN, worst_se = kNaN;
    for (std::size_t k = 0; k < a.series.size(); ++k) {
        auto v = closed_form_half_sq_norm(c, a.series.times[k]);
        if (!v) return;
        double se = a.series.stderr_[k];
        double z = se > 0 ? std::abs(a.series.mean[k] - *v) / se : (a.series.mean[k] == *v ? 0.0 : kNaN);
        if (std::isnan(z)) continue;
        if (z > worst) {
            worst = z;
            worst_t = a.series.times[k];
            worst_expected = *v;
            worst_se = se;
        }
    }
    if (worst < 0) return;
    t.summary.push_back({"closed_form_max_z", a.arm, "t=" + fmt(worst_t), worst, worst_se, worst_expected,
                         worst <= 3 ? "ok" : "exceeds-3se"});
}

stats::MomentSeries prefix(const stats::MomentSeries& s, double tmax) {
    stats::MomentSeries out = s;
    std::size_t n = 0;
    while (n < s.size() && s.times[n] <= tmax * (1 + 1e-12)) ++n;
    out.times.resize(n);
    out.mean.resize(n);
    out.stderr_.resize(n);
    out.n_effective.resize(n);
    return out;
}

// A diverged arm is compared over the time range both arms reached.
std::optional<SummaryRow> weak_error_row(const ArmSeries& x, const ArmSeries& y) {
    const auto& a = x.series;
    const auto& b = y.series;
    if (a.size() == 0 || b.size() == 0) return std::nullopt;
    const bool cut = a.truncated || b.truncated;
    const double tmax = std::min(a.times.back(), b.times.back());
    auto w = cut ? stats::weak_error(prefix(a, tmax), prefix(b, tmax)) : stats::weak_error(a, b);
    std::string flag = cut ? "truncated;" : "";
    if (w.interpolated) flag += "interpolated;";
    return SummaryRow{"weak_error", x.arm, y.arm, w.value, w.combined_stderr, kNaN, flag + "t=" + fmt(w.at_time)};
}

void add_weak_error_rows(ResultTable& t, const std::vector<ArmSeries>& arms, std::size_t ref_count) {
    for (std::size_t i = 0; i < arms.size(); ++i) {
        for (std::size_t j = i + 1; j < arms.size(); ++j) {
            if (arms[i].series.statistic != arms[j].series.statistic) continue;
            if (i >= ref_count && j >= ref_count) continue;
            if (auto r = weak_error_row(arms[i], arms[j])) t.summary.push_back(*r);
        }
    }
}

void append_arm(std::vector<ArmSeries>& out, const std::string& label, std::vector<stats::MomentSeries> s) {
    for (auto& m : s) out.push_back({label, std::move(m)});
}

}  // namespace

ResultTable compare(const std::vector<ExperimentConfig>& cfgs, const std::string& statistic, const RunOptions& opt) {
    if (cfgs.empty()) throw Error(ErrorKind::InvalidInput, "compare needs at least one config");
    const auto& base = cfgs.front();
    auto horizon = [](const ExperimentConfig& c) {
        return static_cast<double>(c.total_steps()) * c.step_size();
    };
    for (const auto& c : cfgs) {
        c.validate();
        if (c.landscape != base.landscape || c.a != base.a || c.lam != base.lam || c.noise != base.noise ||
            c.sigma != base.sigma || c.eps != base.eps)
            throw Error(ErrorKind::ConfigError, "landscape: compared configs must share the landscape");
        double h0 = horizon(base), h = horizon(c);
        if (std::abs(h - h0) > 1e-9 * std::max(1.0, h0))
            throw Error(ErrorKind::GridMismatch, "compared configs have different horizons");
    }
    ResultTable t = new_table(base);
    std::map<std::string, int> used;
    std::vector<ArmSeries> arms;
    for (const auto& c0 : cfgs) {
        ExperimentConfig c = c0;
        c.statistics = {statistic};
        std::string label = arm_label(c, c.method == MethodName::SEG || c.method == MethodName::SegSde, false);
        if (used[label]++) label += "#" + std::to_string(used[label] - 1);
        append_arm(arms, label, simulate_arm(c, opt));
    }
    add_weak_error_rows(t, arms, arms.size());
    t.arms = std::move(arms);
    return t;
}

ResultTable sweep_rho(const ExperimentConfig& base, const std::vector<double>& rhos, const RunOptions& opt) {
    if (rhos.empty()) throw Error(ErrorKind::InvalidInput, "sweep_rho needs at least one rho");
    base.validate();
    ResultTable t = new_table(base);
    const int d = base.dim();
    Landscape l = base.build_landscape();
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        ExperimentConfig c = base;
        c.sweep_rho.clear();
        c.compare.clear();
        c.rho = rhos[i];
        c.base_seed = base.base_seed + i;
        // Per-coordinate statistics feed the variance estimate; requested statistics are kept too.
        std::vector<std::string> names = c.statistics;
        for (int k = 0; k < 2 * d; ++k) {
            std::string n = "coordinate-" + std::to_string(k);
            if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
        }
        if (std::find(names.begin(), names.end(), "half-sq-norm") == names.end()) names.push_back("half-sq-norm");
        c.statistics = names;
        std::string label = arm_label(c, true, false);
        auto series = simulate_arm(c, opt);

        bool blowup = series.front().truncated;
        bool predicate_diverges = false;
        double slowest = std::numeric_limits<double>::infinity();
        if (base.landscape == LandscapeKind::Quadratic) {
            analytic::QuadraticGameParams p{diag(base.a, d), diag(base.lam, d), diag(base.sigma, d), base.eta, c.rho};
            for (int k = 0; k < d; ++k) {
                double e = analytic::seg_quadratic_exponent(p, k);
                if (e >= 0) predicate_diverges = true;
                slowest = std::min(slowest, std::abs(e));
            }
        }
        for (int k = 0; k < 2 * d; ++k) {
            const auto& s = series[static_cast<std::size_t>(std::find(c.statistics.begin(), c.statistics.end(),
                                                                      "coordinate-" + std::to_string(k)) -
                                                            c.statistics.begin())];
            std::size_t n = s.size();
            std::size_t start = static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(n)));
            double var = kNaN;
            double spread = kNaN;
            if (n > 0 && start < n) {
                double sum = 0, sum2 = 0;
                for (std::size_t j = start; j < n; ++j) {
                    double v = s.variance(j);
                    sum += v;
                    sum2 += v * v;
                }
                double m = static_cast<double>(n - start);
                var = sum / m;
                spread = m > 1 ? std::sqrt(std::max(0.0, sum2 / m - var * var) / m) : kNaN;
            }
            double expected = kNaN;
            if (base.landscape == LandscapeKind::Quadratic && base.noise == NoiseKind::AdditiveGradient &&
                !predicate_diverges) {
                try {
                    analytic::QuadraticGameParams p{diag(base.a, d), diag(base.lam, d), diag(base.sigma, d),
                                                    base.eta, c.rho};
                    expected = base.eta * base.sigma[static_cast<std::size_t>(k % d)] *
                               base.sigma[static_cast<std::size_t>(k % d)] * analytic::seg_quadratic_B(p, k % d);
                } catch (const Error&) {
                }
            }
            std::string flag = "ok";
            if (predicate_diverges || blowup) {
                flag = blowup ? "diverged" : "diverges";
            } else if (n >= 2) {
                double span = s.times[n - 1] - s.times[start];
                double mixing = slowest > 0 ? 1.0 / (2.0 * slowest) : std::numeric_limits<double>::infinity();
                if (span < 5.0 * mixing) flag = "not-converged";
            }
            t.summary.push_back({"tail_variance", label, "coordinate-" + std::to_string(k), var, spread, expected, flag});
        }
        if (predicate_diverges || blowup) {
            const auto& h = series[static_cast<std::size_t>(
                std::find(c.statistics.begin(), c.statistics.end(), "half-sq-norm") - c.statistics.begin())];
            try {
                auto [slope, icpt] = stats::linear_variance_fit(h, 0.1);
                double expected = kNaN;
                if (base.landscape == LandscapeKind::Quadratic && base.noise == NoiseKind::AdditiveGradient &&
                    std::all_of(base.a.begin(), base.a.end(), [](double v) { return v == 0.0; }) && c.rho == 0.0) {
                    expected = 0.0;
                    for (double sg : base.sigma) expected += base.eta * sg * sg;
                }
                (void)icpt;
                t.summary.push_back({"variance_slope", label, "half-sq-norm", slope, kNaN, expected,
                                     blowup ? "diverged" : "diverges"});
            } catch (const Error&) {
            }
        }
        for (std::size_t k = 0; k < series.size(); ++k)
            if (std::find(base.statistics.begin(), base.statistics.end(), series[k].statistic) !=
                base.statistics.end())
                t.arms.push_back({label, std::move(series[k])});
    }
    return t;
}

ResultTable run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    cfg.validate();
    if (!cfg.sweep_rho.empty() && cfg.compare.empty() && cfg.sweep_gamma.empty())
        return sweep_rho(cfg, cfg.sweep_rho, opt);
    ResultTable t = new_table(cfg);
    // Arms: the base method over its rho/gamma sweeps, then each comparison method.
    std::vector<double> rhos = cfg.sweep_rho.empty() ? std::vector<double>{cfg.rho} : cfg.sweep_rho;
    std::vector<double> gammas = cfg.sweep_gamma.empty() ? std::vector<double>{cfg.eta_gamma} : cfg.sweep_gamma;
    std::vector<ExperimentConfig> arms;
    for (double r : rhos) {
        for (double g : gammas) {
            ExperimentConfig c = cfg;
            c.sweep_rho.clear();
            c.sweep_gamma.clear();
            c.compare.clear();
            c.rho = r;
            c.eta_gamma = g;
            arms.push_back(c);
        }
    }
    for (const auto& m : cfg.compare) {
        MethodName mm = method_from_string(m);
        bool rho_dependent = mm == MethodName::SEG || mm == MethodName::SegSde;
        std::vector<double> rs = rho_dependent ? rhos : std::vector<double>{cfg.rho};
        for (double r : rs) {
            for (double g : gammas) {
                ExperimentConfig c = cfg;
                c.sweep_rho.clear();
                c.sweep_gamma.clear();
                c.compare.clear();
                c.method = mm;
                c.rho = r;
                c.eta_gamma = g;
                if (!is_sde(mm)) c.dt.reset();
                if (c.steps && is_sde(mm) != is_sde(cfg.method)) {
                    // Keep the horizon: steps count the base method's steps.
                    double h = static_cast<double>(*cfg.steps) * cfg.step_size();
                    c.steps.reset();
                    c.horizon = h;
                }
                arms.push_back(c);
            }
        }
    }
    bool label_rho = rhos.size() > 1;
    bool label_gamma = gammas.size() > 1;
    std::vector<ArmSeries> out;
    std::vector<ExperimentConfig> arm_cfg;
    for (std::size_t i = 0; i < arms.size(); ++i) {
        ExperimentConfig& c = arms[i];
        c.base_seed = cfg.base_seed + i;
        bool rho_dep = c.method == MethodName::SEG || c.method == MethodName::SegSde;
        std::string label = arm_label(c, label_rho && rho_dep, label_gamma);
        auto series = simulate_arm(c, opt);
        for (auto& s : series) {
            out.push_back({label, std::move(s)});
            arm_cfg.push_back(c);
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) add_closed_form_rows(t, arm_cfg[i], out[i]);
    if (!cfg.compare.empty()) {
        // Each base arm against the comparison arms that share its rho and gamma.
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (is_sde(arm_cfg[i].method) != is_sde(cfg.method) || arm_cfg[i].method != cfg.method) continue;
            for (std::size_t j = 0; j < out.size(); ++j) {
                if (arm_cfg[j].method == cfg.method) continue;
                if (out[i].series.statistic != out[j].series.statistic) continue;
                bool rho_dep = arm_cfg[j].method == MethodName::SEG || arm_cfg[j].method == MethodName::SegSde;
                if (rho_dep && arm_cfg[j].rho != arm_cfg[i].rho) continue;
                if (arm_cfg[j].eta_gamma != arm_cfg[i].eta_gamma) continue;
                if (auto r = weak_error_row(out[i], out[j])) t.summary.push_back(*r);
            }
        }
    }
    t.arms = std::move(out);
    return t;
}

}  // namespace saddlelab::harness
