#ifndef ALOHADYN_EXPERIMENT_HPP
#define ALOHADYN_EXPERIMENT_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alohadyn/analytics.hpp"
#include "alohadyn/config.hpp"
#include "alohadyn/parallel.hpp"
#include "alohadyn/percolation.hpp"
#include "alohadyn/point_process.hpp"
#include "alohadyn/propagation.hpp"
#include "alohadyn/protocol.hpp"
#include "alohadyn/records.hpp"
#include "alohadyn/rng.hpp"
#include "alohadyn/version.hpp"

namespace alohadyn {

enum class ExperimentKind {
    degrees,
    nn_time,
    opportunistic_time,
    delay_vs_distance,
    time_constant_vs_p,
    hops_vs_distance,
    percolation_scan,
    formulas
};

inline const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::degrees: return "degrees";
        case ExperimentKind::nn_time: return "nn_time";
        case ExperimentKind::opportunistic_time: return "opportunistic_time";
        case ExperimentKind::delay_vs_distance: return "delay_vs_distance";
        case ExperimentKind::time_constant_vs_p: return "time_constant_vs_p";
        case ExperimentKind::hops_vs_distance: return "hops_vs_distance";
        case ExperimentKind::percolation_scan: return "percolation_scan";
        case ExperimentKind::formulas: return "formulas";
    }
    return "?";
}

inline std::optional<ExperimentKind> kind_from_string(std::string_view s) {
    for (ExperimentKind k :
         {ExperimentKind::degrees, ExperimentKind::nn_time, ExperimentKind::opportunistic_time,
          ExperimentKind::delay_vs_distance, ExperimentKind::time_constant_vs_p,
          ExperimentKind::hops_vs_distance, ExperimentKind::percolation_scan,
          ExperimentKind::formulas})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

struct SweepAxis {
    std::string param;
    std::vector<double> values;
};

/// Parsed and validated description of one experiment run.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::degrees;
    NetworkConfig base;
    std::vector<SweepAxis> sweep;   ///< at most one axis
    std::vector<double> distances;  ///< x grid for the delay-type kinds
    std::vector<double> eta_values; ///< radii for percolation_scan
    double min_distance = -1.0;     ///< fit cutoff; < 0 means 5*eta
    bool restrict_giant = true;     ///< delay kinds run on the giant component
    std::uint32_t replications = 200;
    std::string output_prefix;      ///< defaults to the kind name

    double fit_min_distance() const {
        return min_distance >= 0.0 ? min_distance : 5.0 * base.eta;
    }

    /// The one sweep axis every run is normalized to (a single point when
    /// nothing is swept).
    SweepAxis effective_sweep() const {
        if (!sweep.empty()) return sweep.front();
        if (kind == ExperimentKind::time_constant_vs_p) {
            SweepAxis axis{"p", {}};
            for (int i = 1; i <= 10; ++i) axis.values.push_back(static_cast<double>(i) / 20.0);
            return axis;
        }
        if (kind == ExperimentKind::percolation_scan) return {"eta", eta_values};
        return {"p", {base.p}};
    }

    std::uint64_t planned_runs() const {
        if (kind == ExperimentKind::formulas) return 1;
        return static_cast<std::uint64_t>(effective_sweep().values.size()) * replications;
    }
};

/// Config-file error with the offending line (0 = file level).
struct ConfigError : std::runtime_error {
    int line;
    ConfigError(int line_no, const std::string& message)
        : std::runtime_error("config line " + std::to_string(line_no) + ": " + message),
          line(line_no) {}
    explicit ConfigError(const std::string& message)
        : std::runtime_error("config: " + message), line(0) {}
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

inline double parse_number(const std::string& text, int line, const std::string& key) {
    if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(line, key + ": expected a number, got '" + text + "'");
    }
}

inline std::vector<double> parse_list(const std::string& text, int line, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(line, key + ": empty list element");
        out.push_back(parse_number(item, line, key));
    }
    if (out.empty()) throw ConfigError(line, key + ": expected a non-empty list");
    return out;
}

inline bool parse_bool(const std::string& text, int line, const std::string& key) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError(line, key + ": expected true or false, got '" + text + "'");
}

inline void set_config_field(NetworkConfig& cfg, const std::string& name, double value,
                             int line) {
    auto positive = [&](double v) {
        if (!(v > 0.0) || std::isnan(v))
            throw ConfigError(line, name + ": must be > 0, got " + std::to_string(value));
        return v;
    };
    if (name == "lambda") {
        if (!std::isfinite(value)) throw ConfigError(line, "lambda: must be finite");
        cfg.lambda = positive(value);
    } else if (name == "p") {
        if (!(value > 0.0 && value < 1.0))
            throw ConfigError(line, "p: must lie strictly in (0,1), got " + std::to_string(value));
        cfg.p = value;
    } else if (name == "beta") {
        if (!std::isfinite(value)) throw ConfigError(line, "beta: must be finite");
        cfg.beta = positive(value);
    } else if (name == "eta") {
        cfg.eta = positive(value);
    } else if (name == "window_half") {
        if (!std::isfinite(value)) throw ConfigError(line, "window_half: must be finite");
        cfg.window_half = positive(value);
    } else if (name == "max_slots") {
        if (!std::isfinite(value) || !(value >= 1.0) || value != std::floor(value))
            throw ConfigError(line, "max_slots: must be a positive integer");
        cfg.max_slots = static_cast<std::int64_t>(value);
    } else {
        throw ConfigError(line, "'" + name + "' is not a sweepable parameter");
    }
}

} // namespace detail

/**
 * Parses the flat `key = value` experiment schema.
 *
 * Lines are `key = value`, `sweep <param> = v1, v2, ...`, blank, or `#`
 * comments. Unknown keys, duplicate keys, type mismatches, and out-of-range
 * values raise ConfigError with the line number. Defaults: window_half 50,
 * replications 200, seed 0; boundary, eta and max_slots default per kind
 * (see `alohadyn run --help`).
 */
inline ExperimentSpec parse_config(const std::string& text) {
    ExperimentSpec spec;
    bool have_kind = false;
    bool have_boundary = false, have_eta = false, have_max_slots = false;
    bool have_restrict = false;
    std::vector<std::string> seen;
    struct Pending {
        std::string key, value;
        int line;
    };
    std::vector<Pending> scalars;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line_no, "expected 'key = value', got '" + line + "'");
        std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "missing key before '='");
        if (value.empty()) throw ConfigError(line_no, key + ": missing value");

        if (key.rfind("sweep", 0) == 0 && key.size() > 5 &&
            (key[5] == ' ' || key[5] == '\t')) {
            const std::string param = detail::trim(key.substr(5));
            if (!spec.sweep.empty())
                throw ConfigError(line_no, "at most one sweep axis is supported");
            SweepAxis axis{param, detail::parse_list(value, line_no, "sweep " + param)};
            NetworkConfig probe = spec.base;
            for (double v : axis.values) detail::set_config_field(probe, param, v, line_no);
            spec.sweep.push_back(std::move(axis));
            continue;
        }

        for (const std::string& s : seen)
            if (s == key) throw ConfigError(line_no, "duplicate key '" + key + "'");
        seen.push_back(key);

        if (key == "kind") {
            const auto kind = kind_from_string(value);
            if (!kind) throw ConfigError(line_no, "unknown kind '" + value + "'");
            spec.kind = *kind;
            have_kind = true;
        } else if (key == "boundary") {
            if (value == "window") spec.base.boundary = Boundary::window;
            else if (value == "torus") spec.base.boundary = Boundary::torus;
            else throw ConfigError(line_no, "boundary: expected window or torus");
            have_boundary = true;
        } else if (key == "seed") {
            try {
                std::size_t used = 0;
                if (value.front() == '-') throw std::invalid_argument("negative");
                spec.base.seed = std::stoull(value, &used);
                if (used != value.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw ConfigError(line_no, "seed: expected a non-negative integer, got '" +
                                               value + "'");
            }
        } else if (key == "replications") {
            const double v = detail::parse_number(value, line_no, key);
            if (!std::isfinite(v) || !(v >= 1.0) || v != std::floor(v) || v > 1e9)
                throw ConfigError(line_no, "replications: must be a positive integer");
            spec.replications = static_cast<std::uint32_t>(v);
        } else if (key == "distances") {
            spec.distances = detail::parse_list(value, line_no, key);
        } else if (key == "eta_values") {
            spec.eta_values = detail::parse_list(value, line_no, key);
        } else if (key == "min_distance") {
            spec.min_distance = detail::parse_number(value, line_no, key);
        } else if (key == "restrict_giant") {
            spec.restrict_giant = detail::parse_bool(value, line_no, key);
            have_restrict = true;
        } else if (key == "output") {
            spec.output_prefix = value;
        } else if (key == "lambda" || key == "p" || key == "beta" || key == "eta" ||
                   key == "window_half" || key == "max_slots") {
            if (key == "eta") have_eta = true;
            if (key == "max_slots") have_max_slots = true;
            scalars.push_back({key, value, line_no});
        } else {
            throw ConfigError(line_no, "unknown key '" + key + "'");
        }
    }
    if (!have_kind) throw ConfigError("missing required key 'kind'");

    // kind-dependent defaults, applied before the explicit scalar values
    const bool interference_kind =
        spec.kind == ExperimentKind::nn_time || spec.kind == ExperimentKind::opportunistic_time;
    const bool delay_kind = spec.kind == ExperimentKind::delay_vs_distance ||
                            spec.kind == ExperimentKind::time_constant_vs_p ||
                            spec.kind == ExperimentKind::hops_vs_distance;
    if (!have_boundary)
        spec.base.boundary = delay_kind || spec.kind == ExperimentKind::percolation_scan
                                 ? Boundary::window
                                 : Boundary::torus;
    if (!have_eta && interference_kind)
        spec.base.eta = std::numeric_limits<double>::infinity();
    if (!have_max_slots) spec.base.max_slots = interference_kind ? 20000 : delay_kind ? 3000 : 1000;
    if (spec.distances.empty())
        for (double x = 5.0; x <= 45.0; x += 5.0) spec.distances.push_back(x);
    if (spec.eta_values.empty()) spec.eta_values = {0.8, 1.0, 1.2, 1.4, 1.6};
    if (spec.output_prefix.empty()) spec.output_prefix = to_string(spec.kind);
    if (!have_restrict) spec.restrict_giant = delay_kind;

    for (const auto& [key, value, line] : scalars)
        detail::set_config_field(spec.base, key, detail::parse_number(value, line, key), line);

    if (!spec.sweep.empty()) {
        const std::string& param = spec.sweep.front().param;
        if (spec.kind == ExperimentKind::time_constant_vs_p && param != "p")
            throw ConfigError("time_constant_vs_p sweeps p only");
        if (spec.kind == ExperimentKind::percolation_scan && param != "eta")
            throw ConfigError("percolation_scan sweeps eta only (or use eta_values)");
    }
    if (spec.kind == ExperimentKind::percolation_scan && !spec.sweep.empty())
        spec.eta_values = spec.sweep.front().values;

    try {
        NetworkConfig probe = spec.base;
        const SweepAxis axis = spec.effective_sweep();
        for (double v : axis.values) {
            probe = spec.base;
            if (!axis.param.empty()) detail::set_config_field(probe, axis.param, v, 0);
            probe.validate();
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

/// Per-(sweep value, distance) delay summary row.
struct DelaySummaryRow {
    double sweep_value = 0.0;
    double distance = 0.0;
    double mean_delay = 0.0;
    double se_delay = 0.0;
    double mean_hops = 0.0;
    double se_hops = 0.0;
    double mean_hop_length = 0.0; ///< fastest-path length / hops, uncensored records
    double se_hop_length = 0.0;
    std::uint32_t n = 0;
    double censored_fraction = 0.0;
};

struct PercolationRow {
    double eta = 0.0;
    double mean_fraction = 0.0;
    double se_fraction = 0.0;
    double mean_components = 0.0;
    bool threshold_ok = false;
    std::uint32_t n = 0;
};

/// Everything one run produced: artifact paths plus in-memory summaries.
struct ExperimentResult {
    std::string raw_csv;
    std::string summary_csv;
    std::string manifest;
    std::vector<std::string> extra_artifacts;

    std::vector<double> sweep_values;
    std::vector<DegreeStats> degree_results;
    std::vector<ConnectTimeEstimate> connect_results;
    std::vector<DelaySummaryRow> delay_summary;
    std::vector<std::vector<DelayRecord>> delay_records; ///< per sweep value
    std::vector<TimeConstantFit> fits;
    std::vector<PercolationRow> percolation_rows;

    bool verify_ok = true;
    std::vector<std::string> verify_messages;
};

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    std::uint32_t jobs = 1;
    std::string out_dir = ".";
    bool verify = false;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline NetworkConfig config_at(const ExperimentSpec& spec, const SweepAxis& axis,
                               std::size_t index, std::uint64_t master_seed) {
    NetworkConfig cfg = spec.base;
    if (!axis.param.empty())
        set_config_field(cfg, axis.param, axis.values[index], 0);
    cfg.seed = derive_seed(master_seed, stream_tag::sweep, index);
    return cfg;
}

/// One delay-type replication: sample, (optionally) restrict to the giant
/// component, then run a single wavefront past every destination.
inline std::vector<DelayRecord> run_delay_replication(const NetworkConfig& cfg,
                                                      const std::vector<double>& distances,
                                                      bool restrict_giant, std::uint32_t rep) {
    RandomStream stream = derive_stream(cfg.seed, stream_tag::propagation, rep);
    const PointSet ps = sample_ppp(cfg, stream);
    if (ps.size() == 0) throw std::runtime_error("empty point process");

    GiantComponent giant;
    auto member = [&](std::uint32_t i) { return !restrict_giant || giant.member[i] != 0; };
    if (restrict_giant) giant = giant_component(ps, cfg.eta, cfg.lambda);

    const std::uint32_t src = ps.nearest_where(Vec2{0.0, 0.0}, member);
    if (src == std::numeric_limits<std::uint32_t>::max())
        throw std::runtime_error("no eligible source node");
    std::vector<std::uint32_t> targets;
    targets.reserve(distances.size());
    for (double x : distances) {
        const std::uint32_t t = ps.nearest_where(Vec2{x, 0.0}, member);
        if (t == std::numeric_limits<std::uint32_t>::max())
            throw std::runtime_error("no eligible destination node");
        targets.push_back(t);
    }

    PropagationOptions opts;
    opts.stop_targets = &targets;
    opts.record_paths = true;
    if (restrict_giant) opts.members = &giant.member;
    const PropagationFront front = propagate(ps, src, cfg, stream, opts);

    std::vector<DelayRecord> records(distances.size());
    for (std::size_t i = 0; i < distances.size(); ++i) {
        DelayRecord& rec = records[i];
        rec.replication = rep;
        rec.distance = ps.distance(src, targets[i]);
        if (front.reached(targets[i])) {
            rec.delay = front.delay(targets[i]);
            rec.hops = front.fastest_hops[targets[i]];
            rec.path_length = path_length(ps, reconstruct_fastest_path(front, targets[i]));
        } else {
            rec.delay = cfg.max_slots;
            rec.censored = true;
        }
    }
    return records;
}

template <typename Body>
void for_each_replication(const ExperimentSpec& spec, const NetworkConfig& cfg, double value,
                          std::uint32_t jobs, Body&& body) {
    parallel_for(spec.replications, jobs, [&](std::uint32_t rep) {
        try {
            body(rep);
        } catch (const std::exception& e) {
            throw std::runtime_error("sweep value " + fmt(value) + ", replication " +
                                     std::to_string(rep) + ", seed " + std::to_string(cfg.seed) +
                                     ": " + e.what());
        }
    });
}

inline nlohmann::json formulas_json(const NetworkConfig& cfg) {
    nlohmann::json j;
    j["lambda"] = cfg.lambda;
    j["p"] = cfg.p;
    j["beta"] = cfg.beta;
    j["eta"] = std::isfinite(cfg.eta) ? nlohmann::json(cfg.eta) : nlohmann::json("inf");
    j["expected_out_degree"] = expected_out_degree(cfg.lambda, cfg.p, cfg.beta, cfg.eta);
    j["expected_in_degree"] = expected_in_degree(cfg.lambda, cfg.p, cfg.beta, cfg.eta);
    j["isolation_probability_lb"] = isolation_probability_lb(cfg.lambda, cfg.p, cfg.beta, cfg.eta);
    j["nu"] = nu(cfg.beta);
    j["nn_time_cutoff_p"] = nn_time_cutoff(cfg.beta);
    const auto nn = expected_nn_time(cfg.p, cfg.beta);
    j["expected_nn_time"] = {{"value", nn ? nlohmann::json(*nn) : nlohmann::json()},
                             {"divergent", !nn.has_value()}};
    if (cfg.beta > 1.0) {
        const auto lb = opportunistic_time_lb(cfg.p, cfg.beta);
        j["opportunistic_time_lb"] = {{"value", lb ? nlohmann::json(*lb) : nlohmann::json()},
                                      {"divergent", !lb.has_value()}};
    }
    return j;
}

} // namespace detail

/**
 * Runs one experiment end to end and writes its artifacts:
 * `<prefix>_raw.csv` (byte-identical across re-runs of the same spec and
 * seed), `<prefix>_summary.csv`, `<prefix>_manifest.json`, and per-kind
 * extras. Replications fan out over `options.jobs` workers into
 * per-replication slots; summaries reduce in index order, so parallel and
 * serial runs produce identical files. A failed replication aborts the whole
 * run with a diagnostic naming the sweep value, replication, and seed.
 */
inline ExperimentResult run_experiment(const ExperimentSpec& spec,
                                       const RunOptions& options = {}) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::uint64_t master_seed = options.seed_override.value_or(spec.base.seed);
    const SweepAxis axis = spec.effective_sweep();
    if (axis.values.empty()) throw std::invalid_argument("run_experiment: empty sweep axis");
    const std::uint32_t jobs = std::max(1u, options.jobs);

    std::filesystem::create_directories(options.out_dir);
    const std::string base_path =
        (std::filesystem::path(options.out_dir) / spec.output_prefix).string();

    ExperimentResult result;
    result.sweep_values = axis.values;

    std::string raw;
    std::string summary;
    nlohmann::json manifest;

    switch (spec.kind) {
        case ExperimentKind::degrees: {
            raw = "sweep_value,replication,mean_out,mean_in,isolated_fraction,n_tx,n_rx\n";
            summary =
                "sweep_value,mean_out,se_out,mean_in,se_in,isolated_fraction,se_isolated,"
                "flow_gap,se_flow_gap,n_tx,n_rx,replications\n";
            for (std::size_t s = 0; s < axis.values.size(); ++s) {
                const NetworkConfig cfg = detail::config_at(spec, axis, s, master_seed);
                DegreeStats stats;
                try {
                    stats = estimate_degrees(cfg, spec.replications, jobs);
                } catch (const std::exception& e) {
                    throw std::runtime_error("sweep value " + detail::fmt(axis.values[s]) +
                                             ", seed " + std::to_string(cfg.seed) + ": " +
                                             e.what());
                }
                for (std::uint32_t r = 0; r < stats.per_replication.size(); ++r) {
                    const auto& rep = stats.per_replication[r];
                    raw += detail::fmt(axis.values[s]) + "," + std::to_string(r) + "," +
                           detail::fmt(rep.mean_out) + "," + detail::fmt(rep.mean_in) + "," +
                           detail::fmt(rep.isolated_fraction) + "," +
                           std::to_string(rep.n_tx) + "," + std::to_string(rep.n_rx) + "\n";
                }
                summary += detail::fmt(axis.values[s]) + "," + detail::fmt(stats.mean_out) +
                           "," + detail::fmt(stats.se_out) + "," + detail::fmt(stats.mean_in) +
                           "," + detail::fmt(stats.se_in) + "," +
                           detail::fmt(stats.isolated_fraction) + "," +
                           detail::fmt(stats.se_isolated) + "," + detail::fmt(stats.flow_gap) +
                           "," + detail::fmt(stats.se_flow_gap) + "," +
                           std::to_string(stats.n_transmitters) + "," +
                           std::to_string(stats.n_receivers) + "," +
                           std::to_string(stats.replications) + "\n";
                for (const char* role : {"out", "in"}) {
                    const auto& hist =
                        role[0] == 'o' ? stats.out_histogram : stats.in_histogram;
                    const std::uint64_t total =
                        role[0] == 'o' ? stats.n_transmitters : stats.n_receivers;
                    std::string csv = "degree,count,fraction\n";
                    for (std::size_t d = 0; d < hist.size(); ++d)
                        csv += std::to_string(d) + "," + std::to_string(hist[d]) + "," +
                               detail::fmt(total ? static_cast<double>(hist[d]) /
                                                       static_cast<double>(total)
                                                 : 0.0) +
                               "\n";
                    const std::string path = base_path + "_" + role + "_hist_" +
                                             std::to_string(s) + ".csv";
                    detail::write_file(path, csv);
                    result.extra_artifacts.push_back(path);
                }
                if (options.verify) {
                    const double cf_out =
                        expected_out_degree(cfg.lambda, cfg.p, cfg.beta, cfg.eta);
                    const double cf_in =
                        expected_in_degree(cfg.lambda, cfg.p, cfg.beta, cfg.eta);
                    const double iso_lb =
                        isolation_probability_lb(cfg.lambda, cfg.p, cfg.beta, cfg.eta);
                    auto check = [&](bool ok, const std::string& msg) {
                        if (!ok) {
                            result.verify_ok = false;
                            result.verify_messages.push_back(
                                "sweep value " + detail::fmt(axis.values[s]) + ": " + msg);
                        }
                    };
                    check(std::fabs(stats.mean_out - cf_out) <= 3.0 * stats.se_out,
                          "mean out-degree " + detail::fmt(stats.mean_out) +
                              " vs closed form " + detail::fmt(cf_out));
                    check(std::fabs(stats.mean_in - cf_in) <= 3.0 * stats.se_in,
                          "mean in-degree " + detail::fmt(stats.mean_in) + " vs closed form " +
                              detail::fmt(cf_in));
                    check(stats.isolated_fraction >= iso_lb - 3.0 * stats.se_isolated,
                          "isolated fraction " + detail::fmt(stats.isolated_fraction) +
                              " below bound " + detail::fmt(iso_lb));
                    check(std::fabs(stats.flow_gap) <= 3.0 * stats.se_flow_gap,
                          "flow identity gap " + detail::fmt(stats.flow_gap));
                }
                result.degree_results.push_back(std::move(stats));
            }
            break;
        }

        case ExperimentKind::nn_time:
        case ExperimentKind::opportunistic_time: {
            const bool nn = spec.kind == ExperimentKind::nn_time;
            raw = "sweep_value,replication,slots,censored\n";
            summary = "sweep_value,estimate,std_error,n,censored_fraction,diverges\n";
            nlohmann::json records = nlohmann::json::array();
            for (std::size_t s = 0; s < axis.values.size(); ++s) {
                const NetworkConfig cfg = detail::config_at(spec, axis, s, master_seed);
                ConnectTimeEstimate est;
                try {
                    est = nn ? estimate_nn_connect_time(cfg, spec.replications, jobs)
                             : estimate_opportunistic_time(cfg, spec.replications, jobs);
                } catch (const std::exception& e) {
                    throw std::runtime_error("sweep value " + detail::fmt(axis.values[s]) +
                                             ", seed " + std::to_string(cfg.seed) + ": " +
                                             e.what());
                }
                for (std::uint32_t r = 0; r < est.per_replication.size(); ++r)
                    raw += detail::fmt(axis.values[s]) + "," + std::to_string(r) + "," +
                           std::to_string(est.per_replication[r].slots) + "," +
                           (est.per_replication[r].censored ? "1" : "0") + "\n";
                summary += detail::fmt(axis.values[s]) + "," + detail::fmt(est.estimate) + "," +
                           detail::fmt(est.std_error) + "," + std::to_string(est.n) + "," +
                           detail::fmt(est.censored_fraction) + "," +
                           (est.diverges ? "1" : "0") + "\n";
                records.push_back({{"sweep_value", axis.values[s]},
                                   {"estimate", est.estimate},
                                   {"std_error", est.std_error},
                                   {"n", est.n},
                                   {"censored_fraction", est.censored_fraction},
                                   {"diverges", est.diverges}});
                if (options.verify) {
                    auto fail = [&](const std::string& msg) {
                        result.verify_ok = false;
                        result.verify_messages.push_back(
                            "sweep value " + detail::fmt(axis.values[s]) + ": " + msg);
                    };
                    if (nn) {
                        const auto cf = expected_nn_time(cfg.p, cfg.beta);
                        if (cf && std::fabs(est.estimate - *cf) > 3.0 * est.std_error)
                            fail("estimate " + detail::fmt(est.estimate) + " vs closed form " +
                                 detail::fmt(*cf));
                        if (!cf && !est.diverges) fail("divergence flag missing");
                    } else if (cfg.beta > 1.0) {
                        const auto lb = opportunistic_time_lb(cfg.p, cfg.beta);
                        if (lb && est.estimate < *lb - 3.0 * est.std_error)
                            fail("estimate " + detail::fmt(est.estimate) + " below bound " +
                                 detail::fmt(*lb));
                    }
                }
                result.connect_results.push_back(std::move(est));
            }
            const std::string path = base_path + "_estimates.json";
            detail::write_file(path, records.dump(2) + "\n");
            result.extra_artifacts.push_back(path);
            break;
        }

        case ExperimentKind::delay_vs_distance:
        case ExperimentKind::hops_vs_distance:
        case ExperimentKind::time_constant_vs_p: {
            const bool hops_kind = spec.kind == ExperimentKind::hops_vs_distance;
            raw = "sweep_value,replication,distance,delay,hops,censored\n";
            summary = hops_kind
                          ? "sweep_value,distance,mean_delay,se_delay,mean_hops,se_hops,"
                            "mean_hop_length,se_hop_length,n,censored_fraction\n"
                          : "sweep_value,distance,mean_delay,se_delay,mean_hops,se_hops,n,"
                            "censored_fraction\n";
            std::string fit_csv = "sweep_value,mu_hat,mu_se,c_hat,c_se,r_squared,n_distances\n";
            for (std::size_t s = 0; s < axis.values.size(); ++s) {
                const NetworkConfig cfg = detail::config_at(spec, axis, s, master_seed);
                std::vector<std::vector<DelayRecord>> reps(spec.replications);
                detail::for_each_replication(spec, cfg, axis.values[s], jobs,
                                             [&](std::uint32_t rep) {
                                                 reps[rep] = detail::run_delay_replication(
                                                     cfg, spec.distances, spec.restrict_giant,
                                                     rep);
                                             });

                std::vector<DelayRecord> flat;
                flat.reserve(spec.replications * spec.distances.size());
                for (std::uint32_t r = 0; r < spec.replications; ++r) {
                    for (std::size_t i = 0; i < spec.distances.size(); ++i) {
                        const DelayRecord& rec = reps[r][i];
                        raw += detail::fmt(axis.values[s]) + "," + std::to_string(r) + "," +
                               detail::fmt(spec.distances[i]) + "," +
                               std::to_string(rec.delay) + "," + std::to_string(rec.hops) +
                               "," + (rec.censored ? "1" : "0") + "\n";
                        flat.push_back(rec);
                    }
                }

                for (std::size_t i = 0; i < spec.distances.size(); ++i) {
                    DelaySummaryRow row;
                    row.sweep_value = axis.values[s];
                    row.distance = spec.distances[i];
                    RunningStat delay_stat, hop_stat, len_stat;
                    std::uint32_t censored = 0;
                    for (std::uint32_t r = 0; r < spec.replications; ++r) {
                        const DelayRecord& rec = reps[r][i];
                        if (rec.censored) {
                            ++censored;
                            continue;
                        }
                        delay_stat.add(static_cast<double>(rec.delay));
                        hop_stat.add(static_cast<double>(rec.hops));
                        if (rec.hops > 0) len_stat.add(rec.path_length / rec.hops);
                    }
                    row.mean_delay = delay_stat.mean();
                    row.se_delay = delay_stat.std_error();
                    row.mean_hops = hop_stat.mean();
                    row.se_hops = hop_stat.std_error();
                    row.mean_hop_length = len_stat.mean();
                    row.se_hop_length = len_stat.std_error();
                    row.n = spec.replications;
                    row.censored_fraction =
                        static_cast<double>(censored) / static_cast<double>(spec.replications);
                    summary += detail::fmt(row.sweep_value) + "," + detail::fmt(row.distance) +
                               "," + detail::fmt(row.mean_delay) + "," +
                               detail::fmt(row.se_delay) + "," + detail::fmt(row.mean_hops) +
                               "," + detail::fmt(row.se_hops) + ",";
                    if (hops_kind)
                        summary += detail::fmt(row.mean_hop_length) + "," +
                                   detail::fmt(row.se_hop_length) + ",";
                    summary += std::to_string(row.n) + "," +
                               detail::fmt(row.censored_fraction) + "\n";
                    result.delay_summary.push_back(row);
                }

                if (spec.kind == ExperimentKind::time_constant_vs_p) {
                    // the fit regresses on the nominal grid distances
                    std::vector<DelayRecord> fit_records = flat;
                    for (std::uint32_t r = 0; r < spec.replications; ++r)
                        for (std::size_t i = 0; i < spec.distances.size(); ++i)
                            fit_records[r * spec.distances.size() + i].distance =
                                spec.distances[i];
                    TimeConstantFit fit;
                    try {
                        fit = fit_time_constant(fit_records, spec.fit_min_distance());
                    } catch (const std::exception& e) {
                        throw std::runtime_error("sweep value " + detail::fmt(axis.values[s]) +
                                                 ": " + e.what());
                    }
                    fit_csv += detail::fmt(axis.values[s]) + "," + detail::fmt(fit.mu_hat) +
                               "," + detail::fmt(fit.mu_se) + "," + detail::fmt(fit.c_hat) +
                               "," + detail::fmt(fit.c_se) + "," + detail::fmt(fit.r_squared) +
                               "," + std::to_string(fit.points.size()) + "\n";
                    result.fits.push_back(std::move(fit));
                }
                result.delay_records.push_back(std::move(flat));
            }
            if (spec.kind == ExperimentKind::time_constant_vs_p) {
                const std::string path = base_path + "_fit.csv";
                detail::write_file(path, fit_csv);
                result.extra_artifacts.push_back(path);
            }
            break;
        }

        case ExperimentKind::percolation_scan: {
            raw = "sweep_value,replication,nodes,giant_size,giant_fraction,n_components\n";
            summary = "sweep_value,mean_fraction,se_fraction,mean_components,threshold_ok,n\n";
            nlohmann::json comp_json = nlohmann::json::array();
            for (std::size_t s = 0; s < axis.values.size(); ++s) {
                NetworkConfig cfg = detail::config_at(spec, axis, s, master_seed);
                const double eta_v = axis.values[s];
                struct Rep {
                    std::uint32_t nodes = 0, giant = 0, comps = 0;
                    double fraction = 0.0;
                };
                std::vector<Rep> reps(spec.replications);
                detail::for_each_replication(
                    spec, cfg, eta_v, jobs, [&](std::uint32_t rep) {
                        RandomStream stream =
                            derive_stream(cfg.seed, stream_tag::percolation, rep);
                        const PointSet ps = sample_ppp(cfg, stream);
                        const ComponentLabeling comps = disc_components(ps, eta_v);
                        const GiantComponent giant = giant_component(ps, eta_v, cfg.lambda);
                        reps[rep] = {static_cast<std::uint32_t>(ps.size()), giant.size,
                                     comps.n_components, giant.fraction};
                    });
                RunningStat frac_stat, comp_stat;
                for (std::uint32_t r = 0; r < spec.replications; ++r) {
                    raw += detail::fmt(eta_v) + "," + std::to_string(r) + "," +
                           std::to_string(reps[r].nodes) + "," + std::to_string(reps[r].giant) +
                           "," + detail::fmt(reps[r].fraction) + "," +
                           std::to_string(reps[r].comps) + "\n";
                    frac_stat.add(reps[r].fraction);
                    comp_stat.add(static_cast<double>(reps[r].comps));
                }
                PercolationRow row{eta_v,
                                   frac_stat.mean(),
                                   frac_stat.std_error(),
                                   comp_stat.mean(),
                                   eta_v > std::sqrt(1.435 / cfg.lambda),
                                   spec.replications};
                summary += detail::fmt(row.eta) + "," + detail::fmt(row.mean_fraction) + "," +
                           detail::fmt(row.se_fraction) + "," +
                           detail::fmt(row.mean_components) + "," +
                           (row.threshold_ok ? "1" : "0") + "," + std::to_string(row.n) + "\n";
                comp_json.push_back({{"eta", row.eta},
                                     {"lambda", cfg.lambda},
                                     {"threshold_ok", row.threshold_ok},
                                     {"giant_fraction", row.mean_fraction},
                                     {"n_components", row.mean_components}});
                result.percolation_rows.push_back(row);
            }
            const std::string path = base_path + "_components.json";
            detail::write_file(path, comp_json.dump(2) + "\n");
            result.extra_artifacts.push_back(path);
            break;
        }

        case ExperimentKind::formulas: {
            NetworkConfig cfg = spec.base;
            cfg.seed = master_seed;
            raw = "key,value\n";
            const nlohmann::json j = detail::formulas_json(cfg);
            const std::string path = base_path + "_formulas.json";
            detail::write_file(path, j.dump(2) + "\n");
            result.extra_artifacts.push_back(path);
            summary = raw;
            break;
        }
    }

    result.raw_csv = base_path + "_raw.csv";
    result.summary_csv = base_path + "_summary.csv";
    result.manifest = base_path + "_manifest.json";
    detail::write_file(result.raw_csv, raw);
    detail::write_file(result.summary_csv, summary);

    manifest["tool"] = "alohadyn";
    manifest["version"] = ALOHADYN_VERSION;
    manifest["kind"] = to_string(spec.kind);
    manifest["master_seed"] = master_seed;
    manifest["jobs"] = jobs;
    manifest["replications"] = spec.replications;
    manifest["planned_runs"] = spec.planned_runs();
    manifest["config"] = {
        {"lambda", spec.base.lambda},
        {"p", spec.base.p},
        {"beta", spec.base.beta},
        {"eta", std::isfinite(spec.base.eta) ? nlohmann::json(spec.base.eta)
                                             : nlohmann::json("inf")},
        {"window_half", spec.base.window_half},
        {"boundary", spec.base.boundary == Boundary::torus ? "torus" : "window"},
        {"max_slots", spec.base.max_slots},
    };
    manifest["sweep"] = {{"param", axis.param}, {"values", axis.values}};
    if (spec.kind == ExperimentKind::delay_vs_distance ||
        spec.kind == ExperimentKind::hops_vs_distance ||
        spec.kind == ExperimentKind::time_constant_vs_p) {
        manifest["distances"] = spec.distances;
        manifest["restrict_giant"] = spec.restrict_giant;
        manifest["min_distance"] = spec.fit_min_distance();
    }
    std::vector<std::string> artifacts = {result.raw_csv, result.summary_csv};
    artifacts.insert(artifacts.end(), result.extra_artifacts.begin(),
                     result.extra_artifacts.end());
    manifest["artifacts"] = artifacts;
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    detail::write_file(result.manifest, manifest.dump(2) + "\n");
    return result;
}

} // namespace alohadyn

#endif
