#include "analytic_cmd.hpp"

#include "saddlelab/analytic.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

using namespace saddlelab;
using analytic::AnalyticMethod;
using core::DiagMatrix;
using core::StateVector;
using optimizers::Scheduler;

namespace {

class Params {
public:
    explicit Params(const std::vector<std::string>& kv) {
        for (const auto& s : kv) {
            auto eq = s.find('=');
            if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, s + ": expected key=value");
            values_[s.substr(0, eq)] = s.substr(eq + 1);
        }
    }

    std::vector<double> list(const std::string& k) const {
        used_.insert(k);
        auto it = values_.find(k);
        if (it == values_.end()) throw Error(ErrorKind::ConfigError, k + ": missing parameter");
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse(k, item));
        if (out.empty()) throw Error(ErrorKind::ConfigError, k + ": empty");
        return out;
    }
    double num(const std::string& k) const {
        auto v = list(k);
        if (v.size() != 1) throw Error(ErrorKind::ConfigError, k + ": expected one number");
        return v[0];
    }
    double num(const std::string& k, double def) const { return has(k) ? num(k) : def; }
    std::string str(const std::string& k, const std::string& def) const {
        used_.insert(k);
        auto it = values_.find(k);
        return it == values_.end() ? def : it->second;
    }
    bool has(const std::string& k) const { return values_.count(k) > 0; }
    DiagMatrix diag(const std::string& k, int d = 0) const {
        auto v = list(k);
        if (d > 0 && v.size() == 1 && d > 1) v.assign(static_cast<std::size_t>(d), v[0]);
        return DiagMatrix(Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size())));
    }
    void check_unused() const {
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) throw Error(ErrorKind::ConfigError, k + ": unknown parameter for this formula");
    }

private:
    // A decimal or a simple fraction such as -1/6.
    static double parse(const std::string& k, const std::string& item) {
        auto one = [&](const std::string& t) {
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(t, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != t.size()) throw Error(ErrorKind::ConfigError, k + ": not a number list");
            return v;
        };
        auto slash = item.find('/');
        if (slash == std::string::npos) return one(item);
        return one(item.substr(0, slash)) / one(item.substr(slash + 1));
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const Vec& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

std::string fmt(const Mat& m) {
    std::string s;
    for (Eigen::Index i = 0; i < m.rows(); ++i) s += fmt(Vec(m.row(i).transpose())) + "\n";
    return s;
}

analytic::QuadraticGameParams quad(const Params& p) {
    DiagMatrix lam = p.diag("lam");
    int d = lam.dim();
    DiagMatrix a = p.has("a") ? p.diag("a", d) : DiagMatrix::constant(d, 0.0);
    DiagMatrix sigma = p.has("sigma") ? p.diag("sigma", d) : DiagMatrix::constant(d, 0.0);
    return {a, lam, sigma, p.num("eta", 0.01), p.num("rho", 0.0)};
}

StateVector z0(const Params& p) {
    auto v = p.list("z0");
    return StateVector(Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size())));
}

Scheduler sched(const Params& p, const std::string& k) {
    double g = p.num(k, 0.0);
    return g > 0 ? Scheduler::power_law(g) : Scheduler::constant();
}

AnalyticMethod method(const Params& p) {
    std::string m = p.str("method", "SHGD");
    if (m == "SHGD") return AnalyticMethod::SHGD;
    if (m == "SEG") return AnalyticMethod::SEG;
    throw Error(ErrorKind::ConfigError, "method: expected SHGD or SEG");
}

std::string yes(bool b) { return b ? "true" : "false"; }

std::string bools(const std::vector<bool>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + yes(v[i]);
    return s;
}

using Fn = std::function<std::string(const Params&)>;

const std::map<std::string, std::pair<std::string, Fn>>& table() {
    static const std::map<std::string, std::pair<std::string, Fn>> t = {
        {"seg_quadratic_exponent", {"a lam rho [i]", [](const Params& p) {
             return fmt(analytic::seg_quadratic_exponent(quad(p), static_cast<int>(p.num("i", 0))));
         }}},
        {"seg_quadratic_B", {"a lam rho [i]", [](const Params& p) {
             return fmt(analytic::seg_quadratic_B(quad(p), static_cast<int>(p.num("i", 0))));
         }}},
        {"seg_quadratic_mean", {"a lam rho z0 t", [](const Params& p) {
             return fmt(analytic::seg_quadratic_mean(quad(p), z0(p), p.num("t")).z());
         }}},
        {"seg_quadratic_cov", {"a lam sigma eta rho t", [](const Params& p) {
             return fmt(analytic::seg_quadratic_cov(quad(p), p.num("t")));
         }}},
        {"shgd_quadratic_mean", {"a lam z0 t", [](const Params& p) {
             return fmt(analytic::shgd_quadratic_mean(quad(p), z0(p), p.num("t")).z());
         }}},
        {"shgd_quadratic_cov", {"a lam sigma eta t", [](const Params& p) {
             return fmt(analytic::shgd_quadratic_cov(quad(p), p.num("t")));
         }}},
        {"seg_convergence_predicate", {"a lam rho", [](const Params& p) {
             auto r = analytic::seg_convergence_predicate_quadratic(quad(p));
             return "converges: " + bools(r.converges) + "\nfaster_than_sgda: " + bools(r.faster_than_sgda);
         }}},
        {"optimal_rho", {"a lam objective=per_coordinate|trace|match_shgd", [](const Params& p) {
             std::string o = p.str("objective", "per_coordinate");
             analytic::RhoObjective obj = o == "trace"        ? analytic::RhoObjective::TraceVariance
                                          : o == "match_shgd" ? analytic::RhoObjective::MatchShgdDecay
                                          : o == "per_coordinate"
                                              ? analytic::RhoObjective::PerCoordinateVariance
                                              : throw Error(ErrorKind::ConfigError, "objective: unknown objective");
             return fmt(analytic::optimal_rho(quad(p), obj));
         }}},
        {"shgd_stochastic_exponent", {"lam sigma eta", [](const Params& p) {
             return fmt(analytic::shgd_stochastic_exponent(p.num("lam"), p.num("sigma"), p.num("eta")));
         }}},
        {"seg_stochastic_exponent", {"lam sigma eta rho", [](const Params& p) {
             return fmt(analytic::seg_stochastic_exponent(p.num("lam"), p.num("sigma"), p.num("eta"), p.num("rho")));
         }}},
        {"shgd_norm_stochastic_bilinear", {"lam sigma eta z0 t", [](const Params& p) {
             DiagMatrix l = p.diag("lam");
             return fmt(analytic::shgd_norm_stochastic_bilinear(l, p.diag("sigma", l.dim()), p.num("eta"), z0(p),
                                                                p.num("t")));
         }}},
        {"seg_norm_stochastic_bilinear", {"lam sigma eta rho z0 t", [](const Params& p) {
             DiagMatrix l = p.diag("lam");
             return fmt(analytic::seg_norm_stochastic_bilinear(l, p.diag("sigma", l.dim()), p.num("eta"),
                                                               p.num("rho"), z0(p), p.num("t")));
         }}},
        {"shgd_stochastic_converges", {"lam sigma eta", [](const Params& p) {
             DiagMatrix l = p.diag("lam");
             return yes(analytic::shgd_stochastic_converges(l, p.diag("sigma", l.dim()), p.num("eta")));
         }}},
        {"seg_stochastic_converges", {"lam sigma eta rho", [](const Params& p) {
             DiagMatrix l = p.diag("lam");
             return yes(analytic::seg_stochastic_converges(l, p.diag("sigma", l.dim()), p.num("eta"), p.num("rho")));
         }}},
        {"shgd_norm_fixed_bilinear", {"lam sigma eta z0 t (t may be inf)", [](const Params& p) {
             DiagMatrix l = p.diag("lam");
             return fmt(analytic::shgd_norm_fixed_bilinear(l, p.diag("sigma", l.dim()), p.num("eta"), z0(p),
                                                           p.num("t")));
         }}},
        {"seg_norm_fixed_bilinear", {"lam sigma eta rho z0 t (t may be inf)", [](const Params& p) {
             DiagMatrix l = p.diag("lam");
             return fmt(analytic::seg_norm_fixed_bilinear(l, p.diag("sigma", l.dim()), p.num("eta"), p.num("rho"),
                                                          z0(p), p.num("t")));
         }}},
        {"scheduled_norm", {"method=SHGD|SEG lam sigma eta rho gamma gamma_rho z0 t", [](const Params& p) {
             DiagMatrix l = p.diag("lam");
             return fmt(analytic::scheduled_norm(method(p), l, p.diag("sigma", l.dim()), p.num("eta"),
                                                 p.num("rho", 0.0), sched(p, "gamma"), sched(p, "gamma_rho"), z0(p),
                                                 p.num("t")));
         }}},
        {"shgd_scheduled_inverse_time", {"lam sigma eta z0 t", [](const Params& p) {
             DiagMatrix l = p.diag("lam");
             return fmt(analytic::shgd_scheduled_inverse_time(l, p.diag("sigma", l.dim()), p.num("eta"), z0(p),
                                                              p.num("t")));
         }}},
        {"scheduler_converges", {"method=SHGD|SEG gamma gamma_rho", [](const Params& p) {
             return yes(analytic::scheduler_converges(method(p), sched(p, "gamma"), sched(p, "gamma_rho")));
         }}},
        {"hamiltonian_bound", {"mu L_T L_V H0 alpha regime=scaling|bounded|general eta t", [](const Params& p) {
             analytic::BoundParams b{p.num("mu", 1.0), p.num("L_T", 1.0), p.num("L_V", 0.0), p.num("H0", 0.0),
                                     p.num("alpha", 1.0)};
             std::string r = p.str("regime", "scaling");
             analytic::BoundRegime reg = r == "bounded"   ? analytic::BoundRegime::Bounded
                                         : r == "general" ? analytic::BoundRegime::GeneralAlpha
                                         : r == "scaling" ? analytic::BoundRegime::Scaling
                                                          : throw Error(ErrorKind::ConfigError, "regime: unknown");
             return fmt(analytic::hamiltonian_bound(b, reg, p.num("eta"), p.num("t")));
         }}},
    };
    return t;
}

}  // namespace

std::vector<std::string> analytic_formulas() {
    std::vector<std::string> out;
    for (const auto& [k, v] : table()) out.push_back(k + "  (" + v.first + ")");
    return out;
}

std::string run_analytic(const std::string& formula, const std::vector<std::string>& params) {
    auto it = table().find(formula);
    if (it == table().end()) throw Error(ErrorKind::ConfigError, "formula: unknown formula '" + formula + "'");
    Params p(params);
    std::string out = it->second.second(p);
    p.check_unused();
    return out;
}
