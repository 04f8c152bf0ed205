#pragma once
// Reproducible experiment runner: configuration ingestion (versioned JSON),
// seeded Monte Carlo campaigns fanned out over replications with a
// deterministic reduction order, streaming summaries, and persistence of
// rows (CSV) plus manifests/summaries (JSON).
//
// Reproducibility contract: (config, seed) determines every emitted number
// bit-identically on a given build, independent of the worker count. Workers
// claim whole replications; results are reduced in replication order.

#include <fratio/analytics.hpp>
#include <fratio/density.hpp>
#include <fratio/errors.hpp>
#include <fratio/lan.hpp>
#include <fratio/sampling.hpp>
#include <fratio/stats.hpp>
#include <fratio/types.hpp>

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fratio {

inline constexpr const char* library_version = "0.1.0";
inline constexpr int config_schema_version = 1;

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class ExperimentKind {
    PhaseSweep,            // mean largest eigenvalue across a spike grid
    FluctuationNormality,  // sqrt(p)-centered fluctuations vs the Gaussian limit
    LanConsistency,        // closed-form log-LR vs the local quadratic
    DensityCrossCheck,     // contour quadrature vs endpoint expansion
    FormulaAudit,          // deterministic closed-form cross-checks
};

inline std::string to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::PhaseSweep: return "phase_sweep";
    case ExperimentKind::FluctuationNormality: return "fluctuation_normality";
    case ExperimentKind::LanConsistency: return "lan_consistency";
    case ExperimentKind::DensityCrossCheck: return "density_cross_check";
    case ExperimentKind::FormulaAudit: return "formula_audit";
    }
    throw argument_error("to_string: unknown experiment kind");
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "phase_sweep") return ExperimentKind::PhaseSweep;
    if (s == "fluctuation_normality") return ExperimentKind::FluctuationNormality;
    if (s == "lan_consistency") return ExperimentKind::LanConsistency;
    if (s == "density_cross_check") return ExperimentKind::DensityCrossCheck;
    if (s == "formula_audit") return ExperimentKind::FormulaAudit;
    throw argument_error("experiment kind not registered: " + s);
}

struct ExperimentConfig {
    std::string name;
    ModelDims dims;
    SpikeSpec spikes;
    std::optional<double> h0;    // null spike for LAN / density experiments
    std::vector<double> gamma_grid;
    int replications = 1;
    std::uint64_t seed = 0;
    std::string outputs;         // directory; empty disables persistence
    ExperimentKind kind = ExperimentKind::PhaseSweep;

    void validate() const {
        if (name.empty()) throw config_error("ExperimentConfig: name must be non-empty");
        dims.validate();
        spikes.validate();
        if (replications < 1)
            throw config_error("ExperimentConfig: replications must be >= 1");
        for (double g : gamma_grid)
            if (!std::isfinite(g))
                throw config_error("ExperimentConfig: gamma_grid must be finite");
        if (kind == ExperimentKind::LanConsistency && !h0)
            throw config_error("ExperimentConfig: lan_consistency requires h0");
        if (kind == ExperimentKind::LanConsistency && gamma_grid.empty())
            throw config_error("ExperimentConfig: lan_consistency requires a gamma grid");
    }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["schema_version"] = config_schema_version;
    j["name"] = c.name;
    j["dims"] = {{"p", c.dims.p}, {"n1", c.dims.n1}, {"n2", c.dims.n2}, {"k", c.dims.k}};
    j["setting"] = setting_to_int(c.spikes.setting);
    j["spikes"] = c.spikes.h;
    if (c.h0) j["h0"] = *c.h0;
    j["gamma_grid"] = c.gamma_grid;
    j["replications"] = c.replications;
    j["seed"] = c.seed;
    j["outputs"] = c.outputs;
    j["experiment_kind"] = to_string(c.kind);
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    try {
        if (!j.contains("schema_version") || j.at("schema_version").get<int>() != config_schema_version)
            throw config_error("config: missing or unsupported schema_version");
        ExperimentConfig c;
        c.name = j.at("name").get<std::string>();
        const auto& d = j.at("dims");
        c.dims = ModelDims{d.at("p").get<int>(), d.at("n1").get<int>(), d.at("n2").get<int>(),
                           d.at("k").get<int>()};
        c.spikes.setting = setting_from_int(j.at("setting").get<int>());
        c.spikes.h = j.at("spikes").get<std::vector<double>>();
        if (j.contains("h0")) c.h0 = j.at("h0").get<double>();
        if (j.contains("gamma_grid")) c.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
        c.replications = j.at("replications").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("outputs")) c.outputs = j.at("outputs").get<std::string>();
        c.kind = experiment_kind_from_string(j.at("experiment_kind").get<std::string>());
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config: malformed JSON: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw argument_error("load_config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("load_config: parse failure: ") + e.what());
    }
    return config_from_json(j);
}

// FNV-1a over the canonical serialization (nlohmann dumps object keys in
// sorted order, so the hash is representation-independent).
inline std::uint64_t config_hash(const ExperimentConfig& c) {
    const std::string s = to_json(c).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Result tables
// ---------------------------------------------------------------------------

struct ResultRow {
    int replication;
    std::string statistic;
    double value;
};

struct SummaryBlock {
    std::string statistic;
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;               // unbiased; NaN when count < 2
    double ci_low = 0.0, ci_high = 0.0;  // 95% normal CI for the mean
    std::optional<double> ks_std_normal; // only for standardized statistics
};

struct ReplicationFailure {
    int replication;
    std::string stage;
    std::string what;
};

// Carries the full config so a table can be regenerated from its manifest
// alone; the hash doubles as a compact campaign identifier.
struct Manifest {
    ExperimentConfig config;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string code_version;
    double wall_time_seconds = 0.0;
    int replications_requested = 0;
    int replications_failed = 0;
    int threads = 1;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<SummaryBlock> summary;
    std::vector<ReplicationFailure> failures;  // solver breakdowns; gated at 0.1%
    std::vector<ReplicationFailure> refusals;  // precondition refusals; reported only
    Manifest manifest;

    double failure_rate() const {
        if (manifest.replications_requested == 0) return 0.0;
        return static_cast<double>(manifest.replications_failed) /
               static_cast<double>(manifest.replications_requested);
    }
    double refusal_rate() const {
        if (manifest.replications_requested == 0) return 0.0;
        return static_cast<double>(refusals.size()) /
               static_cast<double>(manifest.replications_requested);
    }
};

// Batch-mode summarization of a row span; the runner feeds the same rows
// through RunningMoments streams, and the two must agree to 1e-12.
inline std::vector<SummaryBlock> summarize_rows(const std::vector<ResultRow>& rows,
                                                bool ks_for_standardized) {
    // Preserve first-appearance order of statistic names for readability.
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> by_name;
    for (const ResultRow& r : rows) {
        auto it = by_name.find(r.statistic);
        if (it == by_name.end()) {
            order.push_back(r.statistic);
            by_name.emplace(r.statistic, std::vector<double>{r.value});
        } else {
            it->second.push_back(r.value);
        }
    }
    std::vector<SummaryBlock> out;
    out.reserve(order.size());
    for (const std::string& name : order) {
        const std::vector<double>& v = by_name[name];
        SummaryBlock b;
        b.statistic = name;
        b.count = v.size();
        RunningMoments m;
        for (double x : v) m.add(x);
        b.mean = m.mean();
        b.variance = v.size() >= 2 ? m.variance() : std::numeric_limits<double>::quiet_NaN();
        if (v.size() >= 2) {
            const double half = 1.959963984540054 * std::sqrt(b.variance / static_cast<double>(v.size()));
            b.ci_low = b.mean - half;
            b.ci_high = b.mean + half;
        } else {
            b.ci_low = b.ci_high = b.mean;
        }
        if (ks_for_standardized && v.size() >= 2 && name.rfind("standardized", 0) == 0)
            b.ks_std_normal = ks_distance(v, ReferenceDistribution::StdNormal);
        out.push_back(std::move(b));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-replication work
// ---------------------------------------------------------------------------

namespace detail {

inline std::string grid_label(const char* base, double g) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s[%g]", base, g);
    return buf;
}

// All statistics contributed by one replication, in emission order.
inline std::vector<ResultRow> replication_rows(const ExperimentConfig& cfg, int rep,
                                               std::string& stage) {
    std::vector<ResultRow> rows;
    const ModelDims& dims = cfg.dims;
    const Setting setting = cfg.spikes.setting;

    switch (cfg.kind) {
    case ExperimentKind::PhaseSweep: {
        // Common random numbers across the grid: each h reuses the (seed, rep)
        // stream, so grid curves differ only through the spike.
        for (double h : cfg.spikes.h) {
            stage = "sampling";
            ModelDims d1 = dims;
            d1.k = 1;
            const SpikeSpec sp{setting, {h}};
            const EigenSample s = sample_spiked_f(d1, sp, cfg.seed, rep);
            rows.push_back({rep, grid_label("lambda1", h), s.values[0]});
        }
        break;
    }
    case ExperimentKind::FluctuationNormality: {
        stage = "sampling";
        const EigenSample s = sample_spiked_f(dims, cfg.spikes, cfg.seed, rep);
        const double h = cfg.spikes.h.at(0);
        stage = "centering";
        const double delta = std::sqrt(static_cast<double>(dims.p)) *
                             (s.values[0] - spike_centering(h, dims));
        const double tau2 = asymptotic_variance(h, dims.c1p(), dims.c2p(), setting);
        rows.push_back({rep, "delta", delta});
        rows.push_back({rep, "standardized", delta / std::sqrt(tau2)});
        break;
    }
    case ExperimentKind::LanConsistency: {
        stage = "sampling";
        ModelDims d1 = dims;
        d1.k = 1;
        const SpikeSpec null_spike{setting, {*cfg.h0}};
        const EigenSample s = sample_spiked_f(d1, null_spike, cfg.seed, rep);
        const double lambda1 = s.values[0];
        for (double gamma : cfg.gamma_grid) {
            stage = "lan";
            const LocalParam lp = make_local_param(*cfg.h0, gamma, d1.c1p(), d1.c2p(), setting);
            const LanStatistic st = lan_statistic(lambda1, lp, d1);
            stage = "closed_form";
            const double closed = setting == Setting::CovarianceSpike
                                      ? loglr_closed_s1(gamma, lambda1, *cfg.h0, d1)
                                      : loglr_closed_s2(gamma, lambda1, *cfg.h0, d1);
            rows.push_back({rep, grid_label("gap", gamma), std::abs(closed - st.log_lr_lan)});
        }
        break;
    }
    case ExperimentKind::DensityCrossCheck: {
        stage = "sampling";
        const EigenSample s = sample_spiked_f(dims, cfg.spikes, cfg.seed, rep);
        const DensityInput inp = density_input_from(s);
        const double h = cfg.spikes.h.at(0);
        const ContourKind ck = setting == Setting::CovarianceSpike ? ContourKind::SettingOneK
                                                                   : ContourKind::SettingTwoC;
        stage = "quadrature";
        const ContourSpec spec = make_contour_spec(inp, ck);
        const ContourResult q = setting == Setting::CovarianceSpike
                                    ? contour_integral_s1(inp, h, spec)
                                    : contour_integral_s2(inp, h, spec);
        stage = "laplace";
        const LaplaceResult l = setting == Setting::CovarianceSpike ? laplace_s1(inp, h)
                                                                    : laplace_s2(inp, h);
        rows.push_back({rep, "laplace_log_error", std::abs(q.value.log_mag - l.log_value.log_mag)});
        rows.push_back({rep, "escape_tail_fraction", std::exp(q.k34_log_mag - q.k2_log_mag)});
        break;
    }
    case ExperimentKind::FormulaAudit: {
        if (rep != 0) break;  // deterministic checks; one replication carries them
        stage = "formulas";
        const double c1 = dims.c1p(), c2 = dims.c2p();
        for (double h : cfg.spikes.h) {
            const double t1 = asymptotic_variance(h, c1, c2, Setting::CovarianceSpike);
            const double t2 = asymptotic_variance(h, c1, c2, Setting::NoncentralitySpike);
            rows.push_back({rep, grid_label("variance_ordering_margin", h), t1 - t2});
            const StieltjesPoint mp = stieltjes_mx0(spike_limit(h, c1, c2), c1, c2);
            rows.push_back({rep, grid_label("stieltjes_m0_identity", h),
                            std::abs(mp.m0 + 1.0 / (h + c1))});
        }
        break;
    }
    }
    return rows;
}

inline int worker_count() {
    if (const char* env = std::getenv("SPIKED_FRATIO_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (...) {
        }
        throw config_error("SPIKED_FRATIO_THREADS must be a positive integer");
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        out += ch;
        if (ch == '"') out += '"';
    }
    out += '"';
    return out;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

inline nlohmann::json manifest_to_json(const Manifest& m) {
    return nlohmann::json{{"config", to_json(m.config)},
                          {"config_hash", m.config_hash},
                          {"seed", m.seed},
                          {"code_version", m.code_version},
                          {"wall_time_seconds", m.wall_time_seconds},
                          {"replications_requested", m.replications_requested},
                          {"replications_failed", m.replications_failed},
                          {"threads", m.threads}};
}

inline nlohmann::json summary_to_json(const ResultTable& t) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const SummaryBlock& b : t.summary) {
        nlohmann::json jb{{"statistic", b.statistic}, {"count", b.count},
                          {"mean", b.mean},           {"variance", b.variance},
                          {"ci_low", b.ci_low},       {"ci_high", b.ci_high}};
        if (b.ks_std_normal) jb["ks_std_normal"] = *b.ks_std_normal;
        blocks.push_back(std::move(jb));
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const ReplicationFailure& f : t.failures)
        failures.push_back({{"replication", f.replication}, {"stage", f.stage}, {"what", f.what}});
    nlohmann::json refusals = nlohmann::json::array();
    for (const ReplicationFailure& f : t.refusals)
        refusals.push_back({{"replication", f.replication}, {"stage", f.stage}, {"what", f.what}});
    return nlohmann::json{{"summary", std::move(blocks)},
                          {"failure_rate", t.failure_rate()},
                          {"failures", std::move(failures)},
                          {"refusal_rate", t.refusal_rate()},
                          {"refusals", std::move(refusals)},
                          {"manifest", manifest_to_json(t.manifest)}};
}

// Rows are streamed to <outputs>/<name>_rows.csv in replication order; the
// CSV is flushed before any abort so partial campaigns stay inspectable.
inline void write_rows_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
    os << "replication,statistic,value\n";
    for (const ResultRow& r : rows)
        os << r.replication << ',' << detail::csv_quote(r.statistic) << ','
           << detail::format_double(r.value) << '\n';
}

inline ResultTable run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const int reps = cfg.replications;
    const int threads = std::min(detail::worker_count(), reps);

    struct Slot {
        std::vector<ResultRow> rows;
        std::optional<ReplicationFailure> failure;
        std::optional<ReplicationFailure> refusal;
        bool done = false;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(reps));
    std::atomic<int> next{0};
    std::mutex abort_mutex;
    std::exception_ptr hard_error;

    auto work = [&]() {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= reps) return;
            {
                std::scoped_lock lk(abort_mutex);
                if (hard_error) return;
            }
            Slot& slot = slots[static_cast<std::size_t>(rep)];
            std::string stage = "setup";
            try {
                slot.rows = detail::replication_rows(cfg, rep, stage);
            } catch (const numerical_error& e) {
                slot.failure = ReplicationFailure{rep, stage, e.what()};
            } catch (const branch_error& e) {
                slot.failure = ReplicationFailure{rep, stage, e.what()};
            } catch (const geometry_error& e) {
                // The draw violates a documented precondition (top eigenvalue
                // not separated); this is a refusal, not a solver breakdown,
                // so it bypasses the failure-rate gate.
                slot.refusal = ReplicationFailure{rep, stage, e.what()};
            } catch (const error& e) {
                // Configuration-level defect: abort the campaign with context.
                std::scoped_lock lk(abort_mutex);
                if (!hard_error)
                    hard_error = std::make_exception_ptr(config_error(
                        "replication " + std::to_string(rep) + ", stage " + stage + ": " + e.what()));
                return;
            }
            slot.done = true;
        }
    };

    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }

    // Deterministic reduction: concatenate per-replication rows in index order.
    ResultTable table;
    for (int rep = 0; rep < reps; ++rep) {
        Slot& slot = slots[static_cast<std::size_t>(rep)];
        if (slot.failure) {
            table.failures.push_back(*slot.failure);
            continue;
        }
        if (slot.refusal) {
            table.refusals.push_back(*slot.refusal);
            continue;
        }
        if (!slot.done) continue;  // unclaimed after an abort
        for (ResultRow& r : slot.rows) table.rows.push_back(std::move(r));
    }

    table.manifest.config = cfg;
    table.manifest.config_hash = config_hash(cfg);
    table.manifest.seed = cfg.seed;
    table.manifest.code_version = library_version;
    table.manifest.replications_requested = reps;
    table.manifest.replications_failed = static_cast<int>(table.failures.size());
    table.manifest.threads = threads;
    table.summary = summarize_rows(table.rows, cfg.kind == ExperimentKind::FluctuationNormality);
    table.manifest.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!cfg.outputs.empty()) {
        namespace fs = std::filesystem;
        const fs::path dir(cfg.outputs);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw argument_error("run_experiment: cannot create output directory " + cfg.outputs);
        std::ofstream csv(dir / (cfg.name + "_rows.csv"));
        if (!csv) throw argument_error("run_experiment: output directory not writable");
        write_rows_csv(table.rows, csv);
        csv.flush();
        std::ofstream js(dir / (cfg.name + "_summary.json"));
        js << summary_to_json(table).dump(2) << '\n';
        std::ofstream mf(dir / (cfg.name + "_manifest.json"));
        mf << manifest_to_json(table.manifest).dump(2) << '\n';
    }

    if (hard_error) std::rethrow_exception(hard_error);
    return table;
}

}  // namespace fratio
