// Command-line front end: spectrum simulation, closed-form analytics,
// density-ratio evaluation, eigenvalue-based inference, experiment campaigns
// from JSON configs, and the built-in verification suites.
//
// Spectrum files are versioned JSON ({schema_version, dims, setting, spikes,
// seed, replication, values}); row data goes to CSV with RFC-4180 quoting.

#include <fratio/analytics.hpp>
#include <fratio/density.hpp>
#include <fratio/errors.hpp>
#include <fratio/harness.hpp>
#include <fratio/lan.hpp>
#include <fratio/sampling.hpp>
#include <fratio/verify.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

constexpr int spectrum_schema_version = 1;

json spectrum_to_json(const fratio::EigenSample& s) {
    json j;
    j["schema_version"] = spectrum_schema_version;
    j["dims"] = {{"p", s.dims.p}, {"n1", s.dims.n1}, {"n2", s.dims.n2}, {"k", s.dims.k}};
    j["setting"] = fratio::setting_to_int(s.spikes.setting);
    j["spikes"] = s.spikes.h;
    j["seed"] = s.seed;
    j["replication"] = s.replication_index;
    j["values"] = s.values;
    return j;
}

fratio::EigenSample spectrum_from_json(const json& j) {
    try {
        if (!j.contains("schema_version") ||
            j.at("schema_version").get<int>() != spectrum_schema_version)
            throw fratio::config_error("spectrum: missing or unsupported schema_version");
        fratio::EigenSample s;
        const auto& d = j.at("dims");
        s.dims = fratio::ModelDims{d.at("p").get<int>(), d.at("n1").get<int>(),
                                   d.at("n2").get<int>(), d.at("k").get<int>()};
        s.dims.validate();
        s.spikes.setting = fratio::setting_from_int(j.at("setting").get<int>());
        s.spikes.h = j.at("spikes").get<std::vector<double>>();
        s.spikes.validate();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.replication_index = j.at("replication").get<int>();
        s.values = j.at("values").get<std::vector<double>>();
        if (s.values.empty()) throw fratio::config_error("spectrum: empty values");
        return s;
    } catch (const json::exception& e) {
        throw fratio::config_error(std::string("spectrum: malformed JSON: ") + e.what());
    }
}

fratio::EigenSample load_spectrum(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw fratio::argument_error("cannot open spectrum file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw fratio::config_error(std::string("spectrum: parse failure: ") + e.what());
    }
    return spectrum_from_json(j);
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream os(out_path);
    if (!os) throw fratio::argument_error("cannot open output file " + out_path);
    os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    int p = 0, n1 = 0, n2 = 0;
    int setting = 1;
    std::vector<double> spikes;
    std::uint64_t seed = 0;
    int rep = 0;
    std::string route = "direct";
    std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
    const fratio::ModelDims dims{a.p, a.n1, a.n2, static_cast<int>(a.spikes.size())};
    const fratio::SpikeSpec spikes{fratio::setting_from_int(a.setting), a.spikes};
    const fratio::SampleRoute route = a.route == "canonical" ? fratio::SampleRoute::Canonical
                                                             : fratio::SampleRoute::Direct;
    const fratio::EigenSample s = fratio::sample_spiked_f(dims, spikes, a.seed, a.rep, route);
    emit(spectrum_to_json(s), a.out);
    return 0;
}

struct AnalyticsArgs {
    double h = 5.0, c1 = 0.5, c2 = 0.5;
    std::string out;
};

int cmd_analytics(const AnalyticsArgs& a) {
    const fratio::SupportEdges e = fratio::support_edges(a.c1, a.c2);
    const double hbar = fratio::phase_threshold(a.c1, a.c2);
    json j;
    j["c1"] = a.c1;
    j["c2"] = a.c2;
    j["h"] = a.h;
    j["support"] = {{"b_minus", e.b_minus}, {"b_plus", e.b_plus}, {"r", e.r}};
    j["phase_threshold"] = hbar;
    j["super_critical"] = a.h > hbar;
    if (a.h > hbar) {
        const double x = fratio::spike_limit(a.h, a.c1, a.c2);
        j["spike_limit"] = x;
        j["variance"] = {
            {"setting1",
             fratio::asymptotic_variance(a.h, a.c1, a.c2, fratio::Setting::CovarianceSpike)},
            {"setting2",
             fratio::asymptotic_variance(a.h, a.c1, a.c2, fratio::Setting::NoncentralitySpike)}};
        j["local_scaling"] = {
            {"setting1", fratio::local_scaling(a.h, a.c1, a.c2, fratio::Setting::CovarianceSpike)},
            {"setting2",
             fratio::local_scaling(a.h, a.c1, a.c2, fratio::Setting::NoncentralitySpike)}};
        const fratio::StieltjesPoint sp = fratio::stieltjes_mx0(x, a.c1, a.c2);
        j["stieltjes_at_limit"] = {{"m0", sp.m0}, {"mprime0", sp.mprime0}, {"dm0_dx", sp.dm0_dx}};
    }
    emit(j, a.out);
    return 0;
}

struct DensityArgs {
    std::string in;
    double h1 = 0.0, h0 = 0.0;
    std::string method = "both";
    std::string floor = "edge";  // quadrature contour floor: edge | bulk
    int setting = 0;             // 0: use the spectrum file's setting
    std::string out;
};

int cmd_density(const DensityArgs& a) {
    const fratio::EigenSample s = load_spectrum(a.in);
    const fratio::Setting setting =
        a.setting == 0 ? s.spikes.setting : fratio::setting_from_int(a.setting);
    json j;
    j["h1"] = a.h1;
    j["h0"] = a.h0;
    j["setting"] = fratio::setting_to_int(setting);
    json lr;
    if (a.method == "quadrature" || a.method == "both") {
        const fratio::DensityInput inp = fratio::density_input_from(s);
        const fratio::ContourKind kind = setting == fratio::Setting::CovarianceSpike
                                             ? fratio::ContourKind::SettingOneK
                                             : fratio::ContourKind::SettingTwoC;
        const fratio::ContourSpec spec = a.floor == "bulk"
                                             ? fratio::make_separating_spec(inp, kind)
                                             : fratio::make_contour_spec(inp, kind);
        lr["quadrature"] = fratio::joint_log_density_ratio(s, a.h1, a.h0, setting, spec);
    }
    if (a.method == "laplace" || a.method == "both")
        lr["laplace"] = fratio::joint_log_density_ratio(s, a.h1, a.h0, setting,
                                                        fratio::DensityMethod::Laplace);
    j["log_lr"] = std::move(lr);
    emit(j, a.out);
    return 0;
}

struct LanArgs {
    std::string in;
    double h0 = 0.0;
    std::optional<double> gamma;
    double alpha = 0.05;
    double level = 0.95;
    std::string method = "closed";
    int setting = 0;
    std::string out;
};

int cmd_lan(const LanArgs& a) {
    const fratio::EigenSample s = load_spectrum(a.in);
    const fratio::Setting setting =
        a.setting == 0 ? s.spikes.setting : fratio::setting_from_int(a.setting);
    json j;
    j["h0"] = a.h0;
    j["setting"] = fratio::setting_to_int(setting);

    const fratio::LanStatistic st =
        fratio::lan_statistic(s.values[0], a.h0, s.dims, setting, 0.0);
    j["statistic"] = {{"lambda1", s.values[0]}, {"delta", st.delta}, {"tau_sq", st.tau_sq}};

    const fratio::TestResult tr = fratio::efficient_test(s, a.h0, setting, a.alpha);
    j["test"] = {{"z", tr.z},
                 {"p_one_sided", tr.p_one_sided},
                 {"p_two_sided", tr.p_two_sided},
                 {"reject_one_sided", tr.reject_one_sided},
                 {"reject_two_sided", tr.reject_two_sided},
                 {"alpha", tr.alpha}};

    try {
        const fratio::SpikeInterval ci = fratio::spike_confidence_interval(s, setting, a.level);
        j["interval"] = {{"h_hat", ci.h_hat},
                         {"h_low", ci.h_low},
                         {"h_high", ci.h_high},
                         {"level", ci.level}};
    } catch (const fratio::domain_error& e) {
        j["interval"] = {{"error", e.what()}};
    }

    if (a.gamma) {
        const fratio::LocalParam lp = fratio::make_local_param(
            a.h0, *a.gamma, s.dims.c1p(), s.dims.c2p(), setting);
        const fratio::LanStatistic stg = fratio::lan_statistic(s.values[0], lp, s.dims);
        json local;
        local["gamma"] = lp.gamma;
        local["omega"] = lp.omega;
        local["theta"] = lp.theta;
        local["log_lr_lan"] = stg.log_lr_lan;
        local["log_lr_closed"] = setting == fratio::Setting::CovarianceSpike
                                     ? fratio::loglr_closed_s1(*a.gamma, s.values[0], a.h0, s.dims)
                                     : fratio::loglr_closed_s2(*a.gamma, s.values[0], a.h0, s.dims);
        if (a.method == "quadrature")
            local["log_lr_quadrature"] =
                fratio::local_log_lr_exact(s, lp, fratio::DensityMethod::Quadrature);
        j["local"] = std::move(local);
    }
    emit(j, a.out);
    return 0;
}

struct RunArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::optional<std::string> out;
};

int cmd_run(const RunArgs& a) {
    fratio::ExperimentConfig cfg = fratio::load_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    if (a.reps) cfg.replications = *a.reps;
    if (a.out) cfg.outputs = *a.out;
    cfg.validate();
    const fratio::ResultTable table = fratio::run_experiment(cfg);
    std::cout << fratio::summary_to_json(table).dump(2) << '\n';
    if (!table.refusals.empty())
        std::cerr << "note: " << table.refusals.size()
                  << " replication(s) refused a precondition and were excluded\n";
    if (table.failure_rate() > 0.001) {
        std::cerr << "warning: replication failure rate "
                  << table.failure_rate() << " exceeds 0.1%\n";
        return 1;
    }
    return 0;
}

int cmd_verify(const std::string& suite) {
    std::vector<std::string> names;
    if (suite == "all")
        names = fratio::registered_suites();
    else
        names.push_back(suite);
    bool ok = true;
    for (const std::string& name : names) {
        const fratio::SuiteReport rep = fratio::verify_suite(name);
        std::cout << fratio::render_report(rep);
        ok = ok && rep.passed();
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiked F-ratio spectra: simulation, asymptotics, and inference"};
    app.set_version_flag("--version", std::string(fratio::library_version));
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* c_sim = app.add_subcommand("simulate", "Sample one spiked F-ratio spectrum");
    c_sim->set_help_flag("--help", "Print help");
    c_sim->add_option("--p", sim.p, "Dimension")->required();
    c_sim->add_option("--n1", sim.n1, "Numerator degrees of freedom")->required();
    c_sim->add_option("--n2", sim.n2, "Denominator degrees of freedom")->required();
    c_sim->add_option("--setting", sim.setting, "Spiked model: 1 covariance, 2 noncentrality")
        ->check(CLI::IsMember({1, 2}));
    c_sim->add_option("--h", sim.spikes, "Spike strengths, strictly descending")->required();
    c_sim->add_option("--seed", sim.seed, "RNG seed");
    c_sim->add_option("--rep", sim.rep, "Replication index within the seed stream");
    c_sim->add_option("--route", sim.route, "Sampling route")
        ->check(CLI::IsMember({"direct", "canonical"}));
    c_sim->add_option("--out", sim.out, "Output file (default stdout)");

    AnalyticsArgs an;
    CLI::App* c_an = app.add_subcommand("analytics", "Print edges, threshold, limits, variances");
    c_an->set_help_flag("--help", "Print help");
    c_an->add_option("--h", an.h, "Spike strength")->required();
    c_an->add_option("--c1", an.c1, "p/n1")->required();
    c_an->add_option("--c2", an.c2, "p/n2")->required();
    c_an->add_option("--out", an.out, "Output file (default stdout)");

    DensityArgs de;
    CLI::App* c_de = app.add_subcommand("density", "Log likelihood ratio for a spectrum file");
    c_de->add_option("--in", de.in, "Spectrum JSON file")->required();
    c_de->add_option("--h1", de.h1, "Alternative spike")->required();
    c_de->add_option("--h0", de.h0, "Null spike")->required();
    c_de->add_option("--method", de.method, "Evaluation route")
        ->check(CLI::IsMember({"quadrature", "laplace", "both"}));
    c_de->add_option("--floor", de.floor,
                     "Quadrature contour floor: theoretical bulk edge, or the "
                     "observed second eigenvalue (evaluates near-critical draws)")
        ->check(CLI::IsMember({"edge", "bulk"}));
    c_de->add_option("--setting", de.setting, "Override the file's model setting")
        ->check(CLI::IsMember({1, 2}));
    c_de->add_option("--out", de.out, "Output file (default stdout)");

    LanArgs la;
    CLI::App* c_la = app.add_subcommand("lan", "Statistic, test, and CI for a spectrum file");
    c_la->add_option("--in", la.in, "Spectrum JSON file")->required();
    c_la->add_option("--h0", la.h0, "Null spike")->required();
    double gamma_val = 0.0;
    CLI::Option* gopt = c_la->add_option("--gamma", gamma_val, "Local alternative sqrt(p)-offset");
    c_la->add_option("--alpha", la.alpha, "Test level");
    c_la->add_option("--level", la.level, "Confidence level");
    c_la->add_option("--method", la.method, "Add quadrature-exact log-LR with 'quadrature'")
        ->check(CLI::IsMember({"closed", "quadrature"}));
    c_la->add_option("--setting", la.setting, "Override the file's model setting")
        ->check(CLI::IsMember({1, 2}));
    c_la->add_option("--out", la.out, "Output file (default stdout)");

    RunArgs ru;
    CLI::App* c_ru = app.add_subcommand("run", "Run an experiment from a JSON config");
    c_ru->add_option("--config", ru.config, "Experiment config JSON")->required();
    std::uint64_t seed_val = 0;
    int reps_val = 0;
    std::string out_val;
    CLI::Option* sopt = c_ru->add_option("--seed", seed_val, "Override the config seed");
    CLI::Option* ropt = c_ru->add_option("--reps", reps_val, "Override the replication count");
    CLI::Option* oopt = c_ru->add_option("--out", out_val, "Override the output directory");

    std::string suite;
    CLI::App* c_ve = app.add_subcommand("verify", "Run a named verification suite");
    c_ve->add_option("suite", suite, "Suite name ('formulas', 'laplace', 'lan', or 'all')")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_sim->parsed()) return cmd_simulate(sim);
        if (c_an->parsed()) return cmd_analytics(an);
        if (c_de->parsed()) return cmd_density(de);
        if (c_la->parsed()) {
            if (gopt->count() > 0) la.gamma = gamma_val;
            return cmd_lan(la);
        }
        if (c_ru->parsed()) {
            if (sopt->count() > 0) ru.seed = seed_val;
            if (ropt->count() > 0) ru.reps = reps_val;
            if (oopt->count() > 0) ru.out = out_val;
            return cmd_run(ru);
        }
        if (c_ve->parsed()) return cmd_verify(suite);
    } catch (const fratio::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
