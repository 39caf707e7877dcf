#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionwalk/step_laws.hpp"
#include "motionwalk/verify.hpp"
#include "motionwalk/walk.hpp"

namespace motionwalk {

inline constexpr const char* kArtifactVersion = "motionwalk 0.1.0";

/// Configuration problems: reported with the JSON path of the offending
/// field and mapped to exit code 1 by the CLI. Raised before any compute
/// or file output happens.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class VerdictFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

using json = nlohmann::ordered_json;

inline void reject_unknown_keys(const json& obj, const std::string& path,
                                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key '" + path + "." + item.key() + "'");
    }
}

inline const json& require_field(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing required field '" + path + "." + key + "'");
    return *it;
}

inline double require_number(const json& obj, const std::string& path, const char* key) {
    const json& v = require_field(obj, path, key);
    if (!v.is_number()) throw ConfigError("field '" + path + "." + key + "' must be a number");
    return v.get<double>();
}

inline std::uint64_t require_uint(const json& obj, const std::string& path, const char* key) {
    const json& v = require_field(obj, path, key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw ConfigError("field '" + path + "." + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::string require_string(const json& obj, const std::string& path, const char* key) {
    const json& v = require_field(obj, path, key);
    if (!v.is_string()) throw ConfigError("field '" + path + "." + key + "' must be a string");
    return v.get<std::string>();
}

/// Deterministic decimal rendering used for every CSV cell.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string fmt(std::uint64_t x) { return std::to_string(x); }

}  // namespace detail

struct ExperimentOverrides {
    std::optional<std::string> experiment;  // from the CLI subcommand
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> walkers;
    std::optional<std::uint64_t> steps;
    std::optional<std::string> output_dir;
};

/// A parsed, validated, fully resolved experiment: ready to run, and able
/// to echo itself back out as a config that reproduces the run.
struct ExperimentConfig {
    std::string experiment;
    std::size_t d;
    std::uint64_t seed;
    std::uint64_t walkers;
    std::uint64_t steps;
    std::vector<std::uint64_t> checkpoints;
    TranslationLaw translation;
    RotationLaw rotation;
    std::vector<Character> characters;
    double alpha;
    std::filesystem::path output_dir;
    std::string format;  // "csv" or "json"
    detail::json echo;   // resolved config, round-trippable
};

namespace detail {

inline Profile parse_profile(const json& obj, const std::string& path, double range_bound) {
    if (!obj.is_object()) throw ConfigError("'" + path + "' must be an object");
    const std::string kind = require_string(obj, path, "kind");
    try {
        if (kind == "constant") {
            reject_unknown_keys(obj, path, {"kind", "value"});
            return Profile::constant(require_number(obj, path, "value"), range_bound);
        }
        if (kind == "affine_cosine") {
            reject_unknown_keys(obj, path, {"kind", "mean", "amplitude"});
            return Profile::affine_cosine(require_number(obj, path, "mean"),
                                          require_number(obj, path, "amplitude"), range_bound);
        }
        if (kind == "indicator") {
            reject_unknown_keys(obj, path, {"kind", "threshold"});
            return Profile::indicator(require_number(obj, path, "threshold"), range_bound);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    throw ConfigError("'" + path + ".kind' must be constant, affine_cosine or indicator");
}

inline DynamicalSystem parse_dynamics(const json& obj, const std::string& path) {
    if (!obj.is_object()) throw ConfigError("'" + path + "' must be an object");
    const std::string kind = require_string(obj, path, "kind");
    try {
        if (kind == "rotation") {
            reject_unknown_keys(obj, path, {"kind", "gamma", "x0"});
            return DynamicalSystem::rotation(require_number(obj, path, "gamma"),
                                             require_number(obj, path, "x0"));
        }
        if (kind == "doubling") {
            reject_unknown_keys(obj, path, {"kind", "x0"});
            return DynamicalSystem::doubling(require_number(obj, path, "x0"));
        }
        if (kind == "identity") {
            reject_unknown_keys(obj, path, {"kind", "x0"});
            return DynamicalSystem::identity(require_number(obj, path, "x0"));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    throw ConfigError("'" + path + ".kind' must be rotation, doubling or identity");
}

inline RotationLaw parse_rotation(const json& obj, const std::string& path, std::size_t d,
                                  const DynamicalSystem& clock) {
    if (!obj.is_object()) throw ConfigError("'" + path + "' must be an object");
    const std::string variant = require_string(obj, path, "variant");
    try {
        if (variant == "identity") {
            reject_unknown_keys(obj, path, {"variant"});
            return RotationLaw::identity(d);
        }
        if (variant == "so2") {
            reject_unknown_keys(obj, path, {"variant", "theta", "f"});
            So2Law law{Angle(require_number(obj, path, "theta")),
                       parse_profile(require_field(obj, path, "f"), path + ".f", 1.0)};
            return RotationLaw(d, law, clock);
        }
        if (variant == "monothetic") {
            reject_unknown_keys(obj, path, {"variant", "angles", "f"});
            const json& angles = require_field(obj, path, "angles");
            if (!angles.is_array()) throw ConfigError("'" + path + ".angles' must be an array");
            std::vector<Angle> a;
            for (const json& v : angles) a.emplace_back(v.get<double>());
            MonotheticLaw law{TorusRotation(d, std::move(a)),
                              parse_profile(require_field(obj, path, "f"), path + ".f", 1.0)};
            return RotationLaw(d, law, clock);
        }
        if (variant == "torus_basis") {
            reject_unknown_keys(obj, path, {"variant", "angles", "profiles"});
            const json& angles = require_field(obj, path, "angles");
            const json& profiles = require_field(obj, path, "profiles");
            if (!angles.is_array() || !profiles.is_array())
                throw ConfigError("'" + path + "': angles and profiles must be arrays");
            TorusBasisLaw law;
            for (const json& v : angles) law.angles.emplace_back(v.get<double>());
            const double bound = law.angles.empty() ? 1.0 : 1.0 / static_cast<double>(law.angles.size());
            std::size_t k = 0;
            for (const json& p : profiles)
                law.profiles.push_back(
                    parse_profile(p, path + ".profiles[" + std::to_string(k++) + "]", bound));
            return RotationLaw(d, law, clock);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    throw ConfigError("'" + path + ".variant' must be identity, so2, monothetic or torus_basis");
}

}  // namespace detail

/// Parse and validate a config document against the schema; unknown keys are
/// rejected. Throws ConfigError before any compute or output on any problem.
inline ExperimentConfig load_experiment_config(const detail::json& root,
                                               const ExperimentOverrides& overrides = {}) {
    using detail::json;
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    detail::reject_unknown_keys(root, "$",
                                {"experiment", "seed", "walkers", "steps", "checkpoints", "d",
                                 "dynamics", "rotation_dynamics", "translation", "rotation",
                                 "characters", "alpha", "output"});

    std::string experiment;
    if (root.contains("experiment")) experiment = detail::require_string(root, "$", "experiment");
    if (overrides.experiment) {
        if (!experiment.empty() && experiment != *overrides.experiment)
            throw ConfigError("config experiment '" + experiment + "' does not match subcommand '" +
                              *overrides.experiment + "'");
        experiment = *overrides.experiment;
    }
    static const std::set<std::string> known = {"simulate", "haar", "clt", "llt", "slln", "diagnose"};
    if (known.find(experiment) == known.end())
        throw ConfigError("'$.experiment' must be one of simulate, haar, clt, llt, slln, diagnose");

    const std::size_t d = static_cast<std::size_t>(detail::require_uint(root, "$", "d"));
    if (d < 1) throw ConfigError("'$.d' must be >= 1");
    const std::uint64_t seed = overrides.seed ? *overrides.seed : detail::require_uint(root, "$", "seed");
    const std::uint64_t walkers =
        overrides.walkers ? *overrides.walkers : detail::require_uint(root, "$", "walkers");
    const std::uint64_t steps = overrides.steps ? *overrides.steps : detail::require_uint(root, "$", "steps");
    if (walkers < 1) throw ConfigError("'$.walkers' must be >= 1");
    if (steps < 1) throw ConfigError("'$.steps' must be >= 1");

    std::vector<std::uint64_t> checkpoints;
    bool geometric = true;
    if (root.contains("checkpoints") && !root["checkpoints"].is_string()) {
        const json& cps = root["checkpoints"];
        if (!cps.is_array()) throw ConfigError("'$.checkpoints' must be an array or \"geometric\"");
        geometric = false;
        for (const json& v : cps) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
                throw ConfigError("'$.checkpoints' entries must be positive integers");
            checkpoints.push_back(v.get<std::uint64_t>());
        }
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            if (checkpoints[c] > steps)
                throw ConfigError("'$.checkpoints[" + std::to_string(c) + "]' exceeds steps");
            if (c > 0 && checkpoints[c] <= checkpoints[c - 1])
                throw ConfigError("'$.checkpoints' must be strictly increasing");
        }
        if (checkpoints.empty()) throw ConfigError("'$.checkpoints' must not be empty");
    } else {
        if (root.contains("checkpoints") && root["checkpoints"].get<std::string>() != "geometric")
            throw ConfigError("'$.checkpoints' string form must be \"geometric\"");
        checkpoints = geometric_checkpoints(steps);
    }

    const DynamicalSystem clock = detail::parse_dynamics(
        detail::require_field(root, "$", "dynamics"), "$.dynamics");
    const DynamicalSystem rotation_clock =
        root.contains("rotation_dynamics")
            ? detail::parse_dynamics(root["rotation_dynamics"], "$.rotation_dynamics")
            : clock;

    const detail::json& tr = detail::require_field(root, "$", "translation");
    detail::reject_unknown_keys(tr, "$.translation", {"profiles"});
    const detail::json& prof = detail::require_field(tr, "$.translation", "profiles");
    if (!prof.is_array() || prof.size() != d)
        throw ConfigError("'$.translation.profiles' must list exactly d profiles");
    std::vector<Profile> profiles;
    for (std::size_t j = 0; j < d; ++j)
        profiles.push_back(detail::parse_profile(
            prof[j], "$.translation.profiles[" + std::to_string(j) + "]", 1.0 / static_cast<double>(d)));
    TranslationLaw translation(d, std::move(profiles), clock);

    RotationLaw rotation = root.contains("rotation")
                               ? detail::parse_rotation(root["rotation"], "$.rotation", d, rotation_clock)
                               : RotationLaw::identity(d);

    std::vector<Character> characters;
    if (root.contains("characters")) {
        const json& chars = root["characters"];
        if (!chars.is_array()) throw ConfigError("'$.characters' must be an array of index vectors");
        for (const json& cv : chars) {
            if (!cv.is_array()) throw ConfigError("'$.characters' entries must be arrays of integers");
            Character chi;
            for (const json& v : cv) chi.indices.push_back(v.get<int>());
            if (chi.indices.size() != d / 2)
                throw ConfigError("'$.characters' entries must have floor(d/2) indices");
            characters.push_back(std::move(chi));
        }
    }

    double alpha = 0.75;
    if (root.contains("alpha")) {
        if (!root["alpha"].is_number()) throw ConfigError("'$.alpha' must be a number");
        alpha = root["alpha"].get<double>();
        if (!(alpha > 0.0)) throw ConfigError("'$.alpha' must be positive");
    }

    std::string out_dir;
    std::string format = "csv";
    if (root.contains("output")) {
        const json& out = root["output"];
        detail::reject_unknown_keys(out, "$.output", {"dir", "format"});
        if (out.contains("dir")) out_dir = detail::require_string(out, "$.output", "dir");
        if (out.contains("format")) {
            format = detail::require_string(out, "$.output", "format");
            if (format != "csv" && format != "json")
                throw ConfigError("'$.output.format' must be csv or json");
        }
    }
    if (overrides.output_dir) out_dir = *overrides.output_dir;
    if (out_dir.empty()) {
        const char* env = std::getenv("MOTIONWALK_OUT");
        out_dir = env != nullptr ? env : "out";
    }

    // Experiment-specific requirements, still before any compute.
    if (experiment == "haar" && characters.empty())
        throw ConfigError("'$.characters' is required for the haar experiment");
    if (experiment == "llt") {
        if (!rotation.is_identity_law())
            throw ConfigError("llt needs a lattice-valued walk: '$.rotation.variant' must be identity");
        for (std::uint64_t cp : checkpoints)
            if (cp % 2 != 0 && cp != checkpoints.front())
                throw ConfigError("llt checkpoints beyond the first must be even (returns need parity)");
    }

    // Resolved round-trippable echo.
    detail::json echo;
    echo["experiment"] = experiment;
    echo["seed"] = seed;
    echo["walkers"] = walkers;
    echo["steps"] = steps;
    if (geometric)
        echo["checkpoints"] = "geometric";
    else
        echo["checkpoints"] = checkpoints;
    echo["d"] = d;
    echo["dynamics"] = root["dynamics"];
    if (root.contains("rotation_dynamics")) echo["rotation_dynamics"] = root["rotation_dynamics"];
    echo["translation"] = root["translation"];
    if (root.contains("rotation")) echo["rotation"] = root["rotation"];
    if (root.contains("characters")) echo["characters"] = root["characters"];
    echo["alpha"] = alpha;
    echo["output"] = {{"dir", out_dir}, {"format", format}};

    ExperimentConfig cfg{experiment,
                         d,
                         seed,
                         walkers,
                         steps,
                         std::move(checkpoints),
                         std::move(translation),
                         std::move(rotation),
                         std::move(characters),
                         alpha,
                         std::filesystem::path(out_dir),
                         format,
                         std::move(echo)};
    return cfg;
}

inline ExperimentConfig load_experiment_config_file(const std::filesystem::path& file,
                                                    const ExperimentOverrides& overrides = {}) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file '" + file.string() + "'");
    detail::json root;
    try {
        root = detail::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in '" + file.string() + "': " + e.what());
    }
    return load_experiment_config(root, overrides);
}

/// One metric table: fixed column order, pre-rendered cells.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct Verdict {
    std::string name;
    bool pass = false;
    double threshold = 0.0;
    double observed = 0.0;
};

struct ReportEnvelope {
    detail::json summary;
    std::vector<Table> tables;
    std::vector<Verdict> verdicts;
    bool all_pass = true;
    std::string failed_verdict;
};

namespace detail {

inline void add_verdict(ReportEnvelope& env, const std::string& name, bool pass, double threshold,
                        double observed) {
    env.verdicts.push_back({name, pass, threshold, observed});
    if (!pass && env.all_pass) {
        env.all_pass = false;
        env.failed_verdict = name;
    }
}

inline std::string character_label(const Character& chi) {
    std::string s;
    for (std::size_t i = 0; i < chi.indices.size(); ++i) {
        if (i > 0) s += ':';
        s += std::to_string(chi.indices[i]);
    }
    return s;
}

/// Exact |mu_1 * ... * mu_n|^(chi) at every checkpoint, one running product
/// per character.
inline std::vector<std::vector<double>> exact_prefix_moduli(const RotationLaw& law,
                                                            const std::vector<std::uint64_t>& cps,
                                                            const std::vector<Character>& chars) {
    std::vector<std::vector<double>> out(cps.size(), std::vector<double>(chars.size(), 1.0));
    std::vector<std::complex<double>> running(chars.size(), 1.0);
    std::size_t cp = 0;
    for (std::uint64_t j = 1; cp < cps.size(); ++j) {
        for (std::size_t q = 0; q < chars.size(); ++q) running[q] *= step_fourier(law, j, chars[q]);
        if (j == cps[cp]) {
            for (std::size_t q = 0; q < chars.size(); ++q) out[cp][q] = std::abs(running[q]);
            ++cp;
        }
    }
    return out;
}

/// CLT reference covariance for constant-profile lattice walks: per-step
/// cov has diagonal 1/d - m_j^2 and off-diagonal -m_a m_b, with m = v0.
inline SquareMatrix constant_profile_reference(const TranslationLaw& law) {
    const std::size_t d = law.dim();
    SquareMatrix a(d);
    const std::vector<double> m = law.expected_step(1);  // constant in i
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            a(i, j) = (i == j ? 1.0 / static_cast<double>(d) : 0.0) - m[i] * m[j];
    return a;
}

inline bool all_profiles_constant(const TranslationLaw& law) {
    for (const Profile& p : law.profiles())
        if (p.kind() != Profile::Kind::Constant) return false;
    return true;
}

}  // namespace detail

/// Execute the configured experiment and assemble the report without
/// touching the filesystem; run_experiment adds the file output.
inline ReportEnvelope run_experiment_in_memory(const ExperimentConfig& cfg, unsigned threads = 0) {
    ReportEnvelope env;
    env.summary["artifact"] = kArtifactVersion;
    env.summary["config"] = cfg.echo;

    std::vector<std::string> lints = cfg.rotation.lint();
    if (!cfg.translation.dynamics().likely_ergodic() &&
        cfg.translation.dynamics().kind() != DynamicalSystem::Kind::Identity)
        lints.push_back("translation clock flagged non-ergodic (near-rational rotation angle)");
    if ((cfg.experiment == "slln" || cfg.experiment == "diagnose") && cfg.alpha <= 0.5)
        lints.push_back("alpha <= 1/2 is below the strong-law normalization range; run is exploratory");

    WalkConfig wcfg{cfg.d,           cfg.translation, cfg.rotation, cfg.steps,
                    cfg.checkpoints, cfg.walkers,     cfg.seed,     cfg.characters,
                    cfg.experiment == "slln"};

    const bool lattice = cfg.rotation.is_identity_law();
    const bool constant_profiles = detail::all_profiles_constant(cfg.translation);

    if (cfg.experiment == "diagnose") {
        const std::vector<double> var_series =
            exact_x_variance_series(cfg.translation, cfg.rotation, cfg.steps);
        const SummabilityReport at_alpha = summability_diagnostic(var_series, cfg.alpha);
        const SummabilityReport at_half = summability_diagnostic(var_series, 0.5);

        Table sum_table{"summability", {"n", "partial_sum_alpha", "partial_sum_half"}, {}};
        for (std::uint64_t cp : cfg.checkpoints)
            sum_table.rows.push_back({detail::fmt(cp), detail::fmt(at_alpha.partial_sums[cp - 1]),
                                      detail::fmt(at_half.partial_sums[cp - 1])});
        env.tables.push_back(std::move(sum_table));

        Table birkhoff_table{
            "birkhoff", {"profile", "m", "deviation", "dev_per_sqrt", "dev_log_per_sqrt"}, {}};
        for (std::size_t j = 0; j < cfg.translation.profiles().size(); ++j) {
            const std::vector<double> dev = birkhoff_deviation(cfg.translation.profiles()[j],
                                                               cfg.translation.dynamics(), cfg.steps);
            for (std::uint64_t cp : cfg.checkpoints) {
                const double m = static_cast<double>(cp);
                birkhoff_table.rows.push_back(
                    {"h" + std::to_string(j + 1), detail::fmt(cp), detail::fmt(dev[cp - 1]),
                     detail::fmt(dev[cp - 1] / std::sqrt(m)),
                     detail::fmt(cp > 1 ? dev[cp - 1] * std::log(m) / std::sqrt(m) : 0.0)});
            }
        }
        env.tables.push_back(std::move(birkhoff_table));

        env.summary["metrics"]["summability_total_alpha"] = at_alpha.total;
        env.summary["metrics"]["summability_tail_fraction_alpha"] = at_alpha.tail_fraction;
        env.summary["metrics"]["summability_total_half"] = at_half.total;
        env.summary["metrics"]["summability_tail_fraction_half"] = at_half.tail_fraction;
        env.summary["metrics"]["mixing_average"] = mixing_average(cfg.rotation, cfg.steps);

        // Documented regimes only: alpha >= 0.75 must flatten, alpha <= 0.5
        // must not; the window in between is reported without a verdict.
        if (cfg.alpha >= 0.75)
            detail::add_verdict(env, "summability_flattening", at_alpha.flattening, 0.01,
                                at_alpha.tail_fraction);
        else if (cfg.alpha <= 0.5)
            detail::add_verdict(env, "summability_divergence_detected", !at_alpha.flattening, 0.01,
                                at_alpha.tail_fraction);
    } else {
        const EnsembleSummary summary = run_ensemble(wcfg, threads);
        const CheckpointSummary& last = summary.checkpoints.back();

        Table mean_table{"mean", {"n"}, {}};
        for (std::size_t k = 0; k < cfg.d; ++k)
            mean_table.columns.push_back("mean_" + std::to_string(k + 1));
        for (const CheckpointSummary& cs : summary.checkpoints) {
            std::vector<std::string> row{detail::fmt(cs.step)};
            for (double v : cs.mean) row.push_back(detail::fmt(v));
            mean_table.rows.push_back(std::move(row));
        }
        env.tables.push_back(std::move(mean_table));

        if (cfg.experiment == "simulate" || cfg.experiment == "clt") {
            Table cov{"clt", {"n"}, {}};
            for (std::size_t i = 0; i < cfg.d; ++i)
                for (std::size_t j = i; j < cfg.d; ++j)
                    cov.columns.push_back("cov_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
            cov.columns.push_back("isotropy_score");
            for (const CheckpointSummary& cs : summary.checkpoints) {
                std::vector<std::string> row{detail::fmt(cs.step)};
                for (std::size_t i = 0; i < cfg.d; ++i)
                    for (std::size_t j = i; j < cfg.d; ++j) row.push_back(detail::fmt(cs.covariance(i, j)));
                row.push_back(detail::fmt(isotropy_score(cs.covariance)));
                cov.rows.push_back(std::move(row));
            }
            env.tables.push_back(std::move(cov));
        }

        if (cfg.experiment == "clt") {
            const double score = isotropy_score(last.covariance);
            env.summary["metrics"]["isotropy_score"] = score;
            if (lattice && constant_profiles) {
                const SquareMatrix ref = detail::constant_profile_reference(cfg.translation);
                double dev = 0.0;
                for (std::size_t i = 0; i < cfg.d; ++i)
                    for (std::size_t j = 0; j < cfg.d; ++j)
                        dev = std::max(dev, std::fabs(last.covariance(i, j) - ref(i, j)));
                env.summary["metrics"]["covariance_max_deviation"] = dev;
                detail::add_verdict(env, "clt_covariance_matches_reference", dev <= 0.03, 0.03, dev);
            } else if (!lattice) {
                // Rotated walks: the limit is rotation invariant.
                detail::add_verdict(env, "clt_isotropy", score < 0.05, 0.05, score);
            } else {
                // Dynamic lattice walks have no closed-form A and no isotropy
                // guarantee; check that the estimate has stabilized in n.
                double dev = 0.0;
                if (summary.checkpoints.size() >= 2) {
                    const SquareMatrix& prev =
                        summary.checkpoints[summary.checkpoints.size() - 2].covariance;
                    for (std::size_t i = 0; i < cfg.d; ++i)
                        for (std::size_t j = 0; j < cfg.d; ++j)
                            dev = std::max(dev, std::fabs(last.covariance(i, j) - prev(i, j)));
                }
                env.summary["metrics"]["covariance_stability"] = dev;
                detail::add_verdict(env, "clt_covariance_stable", dev <= 0.05, 0.05, dev);
            }
        }

        if (cfg.experiment == "haar" || (!cfg.characters.empty() && cfg.experiment == "simulate")) {
            const std::vector<std::vector<double>> exact =
                detail::exact_prefix_moduli(cfg.rotation, cfg.checkpoints, cfg.characters);
            Table haar{"haar", {"n", "character_index", "empirical_modulus", "exact_modulus"}, {}};
            double worst_gap = 0.0;
            for (std::size_t c = 0; c < summary.checkpoints.size(); ++c)
                for (std::size_t q = 0; q < cfg.characters.size(); ++q) {
                    const double emp = std::abs(summary.checkpoints[c].character_moments[q]);
                    haar.rows.push_back({detail::fmt(summary.checkpoints[c].step),
                                         detail::character_label(cfg.characters[q]), detail::fmt(emp),
                                         detail::fmt(exact[c][q])});
                    worst_gap = std::max(worst_gap, emp - exact[c][q] > 0 ? emp - exact[c][q]
                                                                          : exact[c][q] - emp);
                }
            env.tables.push_back(std::move(haar));
            if (cfg.experiment == "haar") {
                const double tol = character_moment_tolerance(cfg.walkers);
                double worst_final = 0.0;
                for (std::size_t q = 0; q < cfg.characters.size(); ++q)
                    if (!cfg.characters[q].is_trivial())
                        worst_final = std::max(worst_final, std::abs(last.character_moments[q]));
                env.summary["metrics"]["max_final_character_modulus"] = worst_final;
                env.summary["metrics"]["max_oracle_gap"] = worst_gap;
                detail::add_verdict(env, "haar_converged", worst_final <= tol, tol, worst_final);
                detail::add_verdict(env, "haar_matches_oracle", worst_gap <= tol, tol, worst_gap);
            }
        }

        if (cfg.experiment == "llt") {
            SquareMatrix a_ref = constant_profiles ? detail::constant_profile_reference(cfg.translation)
                                                   : last.covariance;
            Table llt{"llt", {"n", "empirical_return", "reference", "ratio"}, {}};
            std::vector<double> log_n, log_p;
            for (const CheckpointSummary& cs : summary.checkpoints) {
                if (cs.step % 2 != 0) continue;
                const double ref = llt_reference(cfg.d, a_ref, cs.step / 2);
                const double ratio = cs.return_frequency / ref;
                llt.rows.push_back({detail::fmt(cs.step), detail::fmt(cs.return_frequency),
                                    detail::fmt(ref), detail::fmt(ratio)});
                if (cs.return_frequency > 0.0) {
                    log_n.push_back(std::log(static_cast<double>(cs.step / 2)));
                    log_p.push_back(std::log(cs.return_frequency));
                }
            }
            env.tables.push_back(std::move(llt));
            const double final_ratio =
                last.step % 2 == 0 ? return_frequency(summary, last.step) /
                                         llt_reference(cfg.d, a_ref, last.step / 2)
                                   : 0.0;
            env.summary["metrics"]["final_return_ratio"] = final_ratio;
            detail::add_verdict(env, "llt_ratio_in_band",
                                final_ratio >= 0.9 && final_ratio <= 1.1, 0.1,
                                std::fabs(final_ratio - 1.0));
            if (log_n.size() >= 2) {
                const std::size_t take = std::min<std::size_t>(4, log_n.size());
                std::vector<double> xs(log_n.end() - take, log_n.end());
                std::vector<double> ys(log_p.end() - take, log_p.end());
                const double slope = least_squares_slope(xs, ys);
                const double want = -static_cast<double>(cfg.d) / 2.0;
                env.summary["metrics"]["return_rate_slope"] = slope;
                detail::add_verdict(env, "llt_slope", std::fabs(slope - want) <= 0.1, 0.1,
                                    std::fabs(slope - want));
            } else {
                detail::add_verdict(env, "llt_slope", false, 0.1, 1.0);
            }
        }

        if (cfg.experiment == "slln") {
            const std::vector<double> v0 = compute_v0(cfg.translation, 100000);
            const std::vector<double> target = cfg.rotation.invariant_projection().apply(v0);
            const SllnReport report = slln_scaled(summary, cfg.alpha, target);
            Table slln{"slln", {"n", "median_scaled_norm", "q90_scaled_norm"}, {}};
            for (const ScaledNormQuantiles& qn : report.per_checkpoint)
                slln.rows.push_back(
                    {detail::fmt(qn.step), detail::fmt(qn.median), detail::fmt(qn.q90)});
            env.tables.push_back(std::move(slln));
            env.summary["metrics"]["v0"] = v0;
            env.summary["metrics"]["target"] = target;
            env.summary["metrics"]["final_median_scaled_norm"] = report.per_checkpoint.back().median;
            env.summary["metrics"]["final_component_medians"] = scaled_component_medians(
                summary, summary.checkpoints.size() - 1, cfg.alpha, cfg.d);
            detail::add_verdict(env, "slln_median_decreasing", report.median_decreasing, 0.0,
                                report.median_decreasing ? 0.0 : 1.0);
            detail::add_verdict(env, "slln_final_median_small",
                                report.per_checkpoint.back().median < 0.1, 0.1,
                                report.per_checkpoint.back().median);
        }

        env.summary["metrics"]["walkers"] = summary.walkers;
        if (lattice) {
            detail::json returns = detail::json::array();
            for (const CheckpointSummary& cs : summary.checkpoints)
                returns.push_back({{"n", cs.step}, {"frequency", cs.return_frequency}});
            env.summary["metrics"]["returns"] = returns;
        }
    }

    env.summary["lints"] = lints;
    detail::json verdicts;
    for (const Verdict& v : env.verdicts)
        verdicts[v.name] = {{"pass", v.pass}, {"threshold", v.threshold}, {"observed", v.observed}};
    env.summary["verdicts"] = verdicts;
    env.summary["all_pass"] = env.all_pass;
    return env;
}

/// Render a table as RFC-4180-style CSV: header row, '.' decimal separator.
inline std::string render_csv(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c > 0) out += ',';
        out += table.columns[c];
    }
    out += "\r\n";
    for (const std::vector<std::string>& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out += ',';
            out += row[c];
        }
        out += "\r\n";
    }
    return out;
}

/// Write the metric tables (CSV or JSON per config) into the output dir.
inline void emit_plot_data(const ReportEnvelope& env, const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.output_dir);
    for (const Table& table : env.tables) {
        if (cfg.format == "csv") {
            std::ofstream out(cfg.output_dir / (table.name + ".csv"), std::ios::binary);
            out << render_csv(table);
        } else {
            detail::json jt;
            jt["columns"] = table.columns;
            jt["rows"] = table.rows;
            std::ofstream out(cfg.output_dir / (table.name + ".json"), std::ios::binary);
            out << jt.dump(2) << "\n";
        }
    }
}

/// Full pipeline: run, then write summary.json and one file per table.
inline ReportEnvelope run_experiment(const ExperimentConfig& cfg, unsigned threads = 0) {
    ReportEnvelope env = run_experiment_in_memory(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    {
        std::ofstream out(cfg.output_dir / "summary.json", std::ios::binary);
        out << env.summary.dump(2) << "\n";
    }
    emit_plot_data(env, cfg);
    return env;
}

}  // namespace motionwalk
