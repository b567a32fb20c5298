#include "helpers.hpp"

#include "saddlelab/analytic.hpp"
#include "saddlelab/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace saddlelab;
using namespace saddlelab::harness;
using testing::error_kind;

namespace {

const char* kMinimal = R"(# SGDA on the unit bilinear game
landscape.kind = bilinear
landscape.lambda = 1
method.name = SGDA
method.eta = 0.01
run.z0 = 1, 1
run.steps = 100
)";

std::string strip_timestamp(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line))
        if (line.rfind("# timestamp:", 0) != 0) out += line + "\n";
    return out;
}

const SummaryRow* find_row(const ResultTable& t, const std::string& kind, const std::string& arm,
                           const std::string& ref) {
    for (const auto& r : t.summary)
        if (r.kind == kind && r.arm == arm && r.reference == ref) return &r;
    return nullptr;
}

// Random valid configs for the round-trip property.
ExperimentConfig random_config(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::uniform_int_distribution<int> pick(0, 6);
    ExperimentConfig c;
    int kind = pick(gen) % 3;
    int d = 1 + pick(gen) % 3;
    if (kind == 2) {
        c.landscape = LandscapeKind::NonBilinear2;
        c.eps = u(gen) / 10;
        d = 1;
    } else {
        c.landscape = LandscapeKind::Quadratic;
        for (int i = 0; i < d; ++i) c.lam.push_back(u(gen));
        if (kind == 1)
            for (int i = 0; i < d; ++i) c.a.push_back(u(gen) - 1.0);
    }
    if (pick(gen) % 2) {
        c.noise = NoiseKind::AdditiveGradient;
        for (int i = 0; i < d; ++i) c.sigma.push_back(u(gen) / 3);
    }
    c.method = static_cast<MethodName>(pick(gen));
    c.eta = 0.001 + u(gen) / 50;
    c.rho = u(gen) - 0.5;
    c.sampling = pick(gen) % 2 ? Sampling::SameSample : Sampling::IndependentSample;
    c.eta_gamma = pick(gen) % 2 ? 0.0 : u(gen);
    for (int i = 0; i < 2 * d; ++i) c.z0.push_back(u(gen) - 1.0 / 3.0);
    if (pick(gen) % 2)
        c.steps = 1 + pick(gen) * 37;
    else
        c.horizon = u(gen) + 0.1;
    if (is_sde(c.method) && pick(gen) % 2) c.dt = c.eta / 7.0;
    c.n_runs = 1 + pick(gen);
    c.base_seed = gen() >> 20;
    c.record_every = pick(gen);
    c.runs_scale = pick(gen) % 2 ? 1.0 : 0.25;
    c.statistics = pick(gen) % 2 ? std::vector<std::string>{"half-sq-norm", "x0"}
                                 : std::vector<std::string>{"norm"};
    if (c.method == MethodName::SEG && pick(gen) % 2) c.sweep_rho = {0.1, 1.0 / 3.0};
    if (pick(gen) % 3 == 0) c.path = "out/result.csv";
    return c;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("minimal config gets defaults and validates") {
    auto c = parse_config(kMinimal);
    CHECK(c.n_runs == 5);
    CHECK(c.landscape == LandscapeKind::Quadratic);
    CHECK(c.a.empty());
    CHECK(c.noise == NoiseKind::None);
    CHECK(c.statistics == std::vector<std::string>{"half-sq-norm"});
    CHECK(c.total_steps() == 100);
    CHECK(c.step_size() == 0.01);
    CHECK_NOTHROW(c.validate());
    CHECK(c.build_landscape().is_bilinear());
}

TEST_CASE("SDE step defaults to eta / 10") {
    auto text = std::string(kMinimal);
    text.replace(text.find("SGDA\n"), 5, "SgdaSde\n");
    // run.steps counts integrator steps for SDE methods; run.horizon fixes the time span
    auto c = parse_config(text);
    CHECK(c.step_size() == doctest::Approx(0.001));
    CHECK(c.total_steps() == 100);
    CHECK(c.stride() == 10);
    text.replace(text.find("run.steps = 100"), 15, "run.horizon = 1");
    CHECK(parse_config(text).total_steps() == 1000);
}

TEST_CASE("config errors name the offending field") {
    auto bad = std::string(kMinimal);
    bad.replace(bad.find("0.01"), 4, "-0.5");
    try {
        parse_config(bad);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ConfigError);
        CHECK(std::string(e.what()).find("ConfigError: eta") == 0);
    }
    CHECK(error_kind([] { parse_config(std::string(kMinimal) + "method.eta = 0.1\n"); }) == ErrorKind::ConfigError);
    CHECK(error_kind([] { parse_config(std::string(kMinimal) + "method.etaa = 0.1\n"); }) == ErrorKind::ConfigError);
    CHECK(error_kind([] { parse_config(std::string(kMinimal) + "run.dt = 0.001\n"); }) == ErrorKind::ConfigError);
    CHECK(error_kind([] { parse_config(std::string(kMinimal) + "run.horizon = 1\n"); }) == ErrorKind::ConfigError);
    CHECK(error_kind([] { load_config("/nonexistent/config.cfg"); }) == ErrorKind::ConfigError);
}

TEST_CASE("fractions are accepted") {
    auto c = parse_config(std::string(kMinimal) + "method.rho = -1/6\n");
    CHECK(c.rho == -1.0 / 6.0);
}

TEST_CASE("figure3_left preset") {
    auto c = preset("figure3_left");
    CHECK(c.method == MethodName::SHGD);
    CHECK(c.lam == std::vector<double>{2.0});
    CHECK(c.sigma == std::vector<double>{0.001});
    CHECK(c.eta == 0.01);
    CHECK(c.z0 == std::vector<double>{0.1, 0.1});
    CHECK(c.sweep_gamma == std::vector<double>{0, 0.5, 1});
    CHECK(c.n_runs == 5);
}

TEST_CASE("every built-in preset validates and matches its shipped file") {
    namespace fs = std::filesystem;
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        CHECK_NOTHROW(preset(name).validate());
        fs::path file = fs::path(SADDLELAB_PRESET_DIR) / (name + ".cfg");
        REQUIRE(fs::exists(file));
        std::ifstream in(file);
        std::stringstream ss;
        ss << in.rdbuf();
        CHECK(ss.str() == preset_text(name));
        CHECK(load_config(file.string()) == preset(name));
    }
}

TEST_CASE("config round-trip: parse(serialize(c)) == c and serialize is a fixed point") {
    std::mt19937_64 gen(20240101);
    int checked = 0;
    for (int k = 0; k < 500; ++k) {
        auto c = random_config(gen);
        try {
            c.validate();
        } catch (const Error&) {
            continue;
        }
        auto text = serialize(c);
        auto back = parse_config(text);
        CAPTURE(text);
        CHECK(back == c);
        CHECK(serialize(back) == text);
        ++checked;
    }
    CHECK(checked > 200);
}

TEST_CASE("deterministic geometric decay: n_runs = 1, noiseless SHGD on Quadratic(2, 1)") {
    auto c = parse_config(R"(
landscape.kind = quadratic
landscape.a = 2
landscape.lambda = 1
method.name = SHGD
method.eta = 0.01
run.z0 = 1, 0.5
run.steps = 200
run.n_runs = 1
)");
    auto t = run_experiment(c);
    const auto& s = t.series("SHGD", "half-sq-norm");
    REQUIRE(s.size() == 201);
    for (std::size_t k = 0; k < s.size(); ++k)
        CHECK(s.mean[k] == doctest::Approx(0.625 * std::pow(0.95, 2.0 * double(k))).epsilon(1e-12));
}

TEST_CASE("run_experiment is deterministic across reruns and thread counts") {
    auto c = parse_config(R"(
landscape.kind = nonbilinear2
landscape.eps = 0.01
landscape.noise = additive
landscape.sigma = 0.1
method.name = SEG
method.eta = 0.01
method.rho = 0.1
run.z0 = 0.5, 0.5
run.steps = 300
run.n_runs = 37
run.base_seed = 9
run.compare = SegSde, SgdaSde
output.statistics = half-sq-norm, x0
)");
    auto a = run_experiment(c).to_csv();
    auto b = run_experiment(c).to_csv();
    auto m = run_experiment(c, RunOptions{3}).to_csv();
    CHECK(strip_timestamp(a) == strip_timestamp(b));
    CHECK(strip_timestamp(a) == strip_timestamp(m));
    // exactly one isolated timestamp line
    std::size_t n = 0, pos = 0;
    while ((pos = a.find("# timestamp:", pos)) != std::string::npos) ++n, ++pos;
    CHECK(n == 1);
    auto c2 = c;
    c2.base_seed = 10;
    CHECK(strip_timestamp(run_experiment(c2).to_csv()) != strip_timestamp(a));
}

TEST_CASE("result header round-trips the config") {
    auto c = preset("figure1_tr");
    c.n_runs = 2;
    c.runs_scale = 1.0;
    auto t = run_experiment(c);
    CHECK(parse_header(t.to_csv()) == c);
}

TEST_CASE("compare: a config against itself has zero weak error") {
    auto c = parse_config(std::string(kMinimal) +
                          "landscape.noise = additive\nlandscape.sigma = 0.5\nrun.n_runs = 20\n");
    auto t = compare({c, c}, "half-sq-norm");
    REQUIRE(t.arms.size() == 2);
    const SummaryRow* r = find_row(t, "weak_error", t.arms[0].arm, t.arms[1].arm);
    REQUIRE(r != nullptr);
    CHECK(r->value == 0.0);
}

TEST_CASE("compare rejects different landscapes and horizons") {
    auto c = parse_config(kMinimal);
    auto d = c;
    d.lam = {2.0};
    CHECK(error_kind([&] { compare({c, d}, "half-sq-norm"); }) == ErrorKind::ConfigError);
    auto e = c;
    e.steps = 50;
    CHECK(error_kind([&] { compare({c, e}, "half-sq-norm"); }) == ErrorKind::GridMismatch);
}

TEST_CASE("sweep_rho on the pure bilinear game flags rho = 0 as divergent") {
    auto c = parse_config(R"(
landscape.kind = bilinear
landscape.lambda = 1
landscape.noise = additive
landscape.sigma = 0.1
method.name = SEG
method.eta = 0.05
run.z0 = 0, 0
run.steps = 400
run.n_runs = 50
)");
    auto t = sweep_rho(c, {0.0, 1.0});
    const SummaryRow* div = find_row(t, "tail_variance", "SEG[rho=0]", "coordinate-0");
    REQUIRE(div != nullptr);
    CHECK(div->flag.find("diverge") != std::string::npos);
    const SummaryRow* slope = find_row(t, "variance_slope", "SEG[rho=0]", "half-sq-norm");
    REQUIRE(slope != nullptr);
    // eta sigma^2 d: E|z|^2/2 of the SGDA SDE grows at this rate
    CHECK(slope->expected == doctest::Approx(0.05 * 0.01));
    CHECK(slope->value == doctest::Approx(slope->expected).epsilon(0.3));
    const SummaryRow* ok = find_row(t, "tail_variance", "SEG[rho=1]", "coordinate-0");
    REQUIRE(ok != nullptr);
    CHECK(ok->flag.find("diverge") == std::string::npos);
    CHECK(find_row(t, "variance_slope", "SEG[rho=1]", "half-sq-norm") == nullptr);
}

TEST_CASE("sweep_rho expected variance blows up towards the divergent boundary") {
    auto c = parse_config(R"(
landscape.kind = quadratic
landscape.a = 2
landscape.lambda = 1
landscape.noise = additive
landscape.sigma = 0.1
method.name = SEG
method.eta = 0.01
run.z0 = 0, 0
run.steps = 50
run.n_runs = 4
)");
    std::vector<double> rhos{1.0 / 3.0, 0.5, 0.6, 0.65, 0.66};
    auto t = sweep_rho(c, rhos);
    double prev = 0.0;
    for (double r : rhos) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "SEG[rho=%.10g]", r);
        const SummaryRow* row = find_row(t, "tail_variance", buf, "coordinate-0");
        REQUIRE(row != nullptr);
        CHECK(std::isfinite(row->expected));
        CHECK(row->expected > prev);
        prev = row->expected;
    }
    const SummaryRow* first = find_row(t, "tail_variance", "SEG[rho=0.3333333333]", "coordinate-0");
    CHECK(first->expected == doctest::Approx(0.01 * 0.01 / 9).epsilon(1e-12));
}

TEST_CASE("sweep_gamma arms carry the scheduler") {
    auto c = preset("figure3_left");
    c.steps = 100;
    c.n_runs = 2;
    auto t = run_experiment(c);
    CHECK(t.arms.size() == 3);
}

TEST_CASE("gradients and closed_forms suites pass") {
    CHECK(validate(Suite::Gradients).passed());
    CHECK(validate(Suite::ClosedForms).passed());
}

}  // TEST_SUITE
