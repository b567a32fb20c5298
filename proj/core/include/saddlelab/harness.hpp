#pragma once

#include "saddlelab/landscapes.hpp"
#include "saddlelab/optimizers.hpp"
#include "saddlelab/sde.hpp"
#include "saddlelab/stats.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace saddlelab::harness {

using core::StateVector;
using landscapes::Landscape;
using landscapes::LandscapeKind;
using landscapes::NoiseKind;
using optimizers::Sampling;
using optimizers::Scheduler;

enum class MethodName { SGDA, SEG, SHGD, SgdaSde, SegSde, SegSmallRhoSde, ShgdSde };
const char* to_string(MethodName m);
MethodName method_from_string(const std::string& s);
bool is_sde(MethodName m);

struct ExperimentConfig {
    // landscape.*
    LandscapeKind landscape = LandscapeKind::Quadratic;
    std::vector<double> a;    // empty means zeros (bilinear)
    std::vector<double> lam;  // one entry per dimension
    double eps = 0.01;
    NoiseKind noise = NoiseKind::None;
    std::vector<double> sigma;

    // method.*
    MethodName method = MethodName::SGDA;
    double eta = 0.01;
    double rho = 0.0;
    Sampling sampling = Sampling::SameSample;
    double eta_gamma = 0.0;  // eta_t = (t+1)^-gamma; 0 means constant
    double rho_gamma = 0.0;

    // run.*
    std::vector<double> z0;
    std::optional<long> steps;
    std::optional<double> horizon;
    std::optional<double> dt;  // SDE only; default eta/10
    long n_runs = 5;
    std::uint64_t base_seed = 0;
    long record_every = 0;     // 0: every algorithm step (aligned with eta-multiples for SDEs)
    double runs_scale = 1.0;   // explicit runtime reduction applied to n_runs
    std::vector<std::string> compare;  // additional arms (method names) on the same landscape
    std::vector<double> sweep_rho;
    std::vector<double> sweep_gamma;  // eta scheduler exponents

    // output.*
    std::vector<std::string> statistics{"half-sq-norm"};
    std::string path;

    int dim() const;
    // Steps, effective dt, and checkpoint stride after applying defaults.
    long total_steps() const;
    double step_size() const;
    long stride() const;
    long effective_runs() const;

    void validate() const;
    Landscape build_landscape() const;
    optimizers::OptimizerConfig optimizer_config() const;
    sde::SdeModel sde_model(const Landscape& l) const;

    bool operator==(const ExperimentConfig& o) const = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize(const ExperimentConfig& cfg);

// Shipped presets mirroring the published experiment settings.
std::vector<std::string> preset_names();
std::string preset_text(const std::string& name);
ExperimentConfig preset(const std::string& name);
// Accepts a preset name or a path to a config file.
ExperimentConfig resolve_config(const std::string& name_or_path);

struct ArmSeries {
    std::string arm;
    stats::MomentSeries series;
};

struct SummaryRow {
    std::string kind;  // weak_error, tail_variance, variance_slope, ...
    std::string arm;
    std::string reference;
    double value = 0.0;
    double stderr_ = 0.0;
    double expected = 0.0;  // NaN when there is no closed form
    std::string flag;
};

struct ResultTable {
    ExperimentConfig config;
    std::string version;
    std::string timestamp;
    std::vector<ArmSeries> arms;
    std::vector<SummaryRow> summary;

    const stats::MomentSeries& series(const std::string& arm, const std::string& statistic) const;
    void write(std::ostream& os) const;
    std::string to_csv() const;
};

// Rebuilds the config echoed in a persisted table header.
ExperimentConfig parse_header(const std::string& csv);

struct RunOptions {
    int threads = 1;
};

// Statistics of every run of one arm, reduced in run_index order.
std::vector<stats::MomentSeries> simulate_arm(const ExperimentConfig& cfg, const RunOptions& opt = {});

ResultTable run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});
ResultTable compare(const std::vector<ExperimentConfig>& cfgs, const std::string& statistic,
                    const RunOptions& opt = {});
ResultTable sweep_rho(const ExperimentConfig& base, const std::vector<double>& rhos, const RunOptions& opt = {});

// Validation suites: one row per check with the measured value, tolerance and verdict.
enum class Suite { Gradients, ClosedForms, WeakOrder, Schedulers, Figures };
Suite suite_from_string(const std::string& s);
const char* to_string(Suite s);

struct ReportRow {
    std::string criterion;
    std::string check;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
    bool informational = false;  // reported but not part of the verdict
};

struct ValidationReport {
    std::vector<ReportRow> rows;
    bool passed() const;
    std::string to_csv() const;
};

struct ValidationOptions {
    int threads = 1;
    std::uint64_t seed = 20240101;
};

// Acceptance criteria 1..9 individually.
ValidationReport run_criterion(int n, const ValidationOptions& opt = {});
ValidationReport validate(Suite suite, const ValidationOptions& opt = {});

}  // namespace saddlelab::harness
