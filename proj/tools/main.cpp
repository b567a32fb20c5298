#include "analytic_cmd.hpp"

#include "saddlelab/harness.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>

using namespace saddlelab;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kValidation = 3 };

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<long> runs;
    std::string out;
    int threads = 1;
};

harness::ExperimentConfig load(const std::string& src, const Globals& g) {
    auto c = harness::resolve_config(src);
    if (g.seed) c.base_seed = *g.seed;
    if (g.runs) c.n_runs = *g.runs;
    c.validate();
    return c;
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream o(path);
    if (!o) throw Error(ErrorKind::ConfigError, "output.path: cannot write '" + path + "'");
    o << text;
}

std::string out_path(const Globals& g, const harness::ExperimentConfig& c) { return g.out.empty() ? c.path : g.out; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"saddlelab: SGDA, SEG and SHGD against their SDEs and closed forms"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "base seed (overrides the config)");
    app.add_option("--runs", g.runs, "Monte Carlo runs (overrides the config)")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "output file (default: config output.path, else stdout)");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

    std::string cfg_path;
    auto* sim = app.add_subcommand("simulate", "run one config or preset and write its result table");
    sim->add_option("config", cfg_path, "config file or preset name")->required();

    std::vector<std::string> cmp_paths;
    std::string stat = "half-sq-norm";
    auto* cmp = app.add_subcommand("compare", "run several configs on one landscape and report weak errors");
    cmp->add_option("configs", cmp_paths, "config files or preset names")->required();
    cmp->add_option("--stat", stat, "statistic (half-sq-norm, norm, hamiltonian, x<i>, y<i>)");

    std::string sweep_path;
    std::vector<double> rhos;
    auto* sweep = app.add_subcommand("sweep-rho", "asymptotic variance of SEG over extrapolation steps");
    sweep->add_option("config", sweep_path, "config file or preset name")->required();
    sweep->add_option("--rhos", rhos, "comma-separated rho values")->delimiter(',')->required();

    std::string formula;
    std::vector<std::string> params;
    auto* an = app.add_subcommand("analytic", "evaluate a closed-form expression");
    an->add_option("formula", formula, "formula name (use 'list' to see all)")->required();
    an->add_option("params", params, "key=value parameters; vectors as comma lists");

    std::string suite;
    auto* val = app.add_subcommand("validate", "run a validation suite");
    val->add_option("suite", suite, "gradients | closed_forms | weak_order | schedulers | figures")->required();

    std::string preset_name;
    auto* pre = app.add_subcommand("presets", "list presets, or print one");
    pre->add_option("name", preset_name, "preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    harness::RunOptions ro{g.threads};
    try {
        if (*sim) {
            auto c = load(cfg_path, g);
            emit(harness::run_experiment(c, ro).to_csv(), out_path(g, c));
        } else if (*cmp) {
            std::vector<harness::ExperimentConfig> cfgs;
            for (const auto& p : cmp_paths) cfgs.push_back(load(p, g));
            emit(harness::compare(cfgs, stat, ro).to_csv(), out_path(g, cfgs.front()));
        } else if (*sweep) {
            auto c = load(sweep_path, g);
            emit(harness::sweep_rho(c, rhos, ro).to_csv(), out_path(g, c));
        } else if (*an) {
            if (formula == "list") {
                for (const auto& f : analytic_formulas()) std::cout << f << "\n";
            } else {
                std::string r = run_analytic(formula, params);
                emit(r.empty() || r.back() == '\n' ? r : r + "\n", g.out);
            }
        } else if (*val) {
            harness::ValidationOptions vo;
            vo.threads = g.threads;
            if (g.seed) vo.seed = *g.seed;
            auto rep = harness::validate(harness::suite_from_string(suite), vo);
            emit(rep.to_csv(), g.out);
            return rep.passed() ? kOk : kValidation;
        } else if (*pre) {
            if (preset_name.empty()) {
                for (const auto& n : harness::preset_names()) std::cout << n << "\n";
            } else {
                emit(harness::preset_text(preset_name), g.out);
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::ConfigError ? kConfig : kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kOk;
}
