#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msar/asymptotics.hpp"
#include "msar/estimate.hpp"
#include "msar/filter.hpp"
#include "msar/model.hpp"
#include "msar/simulate.hpp"
#include "msar/stability.hpp"

namespace msar {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Model <-> JSON. Schema (field names fixed):
//   {"m": 2, "transition": [[...],[...]], "regimes": [{"b":..,"rho":..},...],
//    "sigma": number | [numbers], "initial": [...]?}
// ---------------------------------------------------------------------------

inline json model_to_json(const ModelSpec& spec) {
    if (!spec.family.linear())
        throw ArgumentError("model_to_json: custom families are runtime-only");
    const int m = spec.regime_count();
    json j;
    j["m"] = m;
    json rows = json::array();
    for (int i = 0; i < m; ++i) {
        json row = json::array();
        for (int k = 0; k < m; ++k) row.push_back(spec.transition(i, k));
        rows.push_back(row);
    }
    j["transition"] = rows;
    json regimes = json::array();
    for (int i = 0; i < m; ++i)
        regimes.push_back({{"b", spec.regimes.intercept(i)}, {"rho", spec.regimes.slope(i)}});
    j["regimes"] = regimes;
    if (spec.noise.shared_sigma()) {
        j["sigma"] = spec.noise.sigma[0];
    } else {
        json s = json::array();
        for (int i = 0; i < m; ++i) s.push_back(spec.noise.sigma[i]);
        j["sigma"] = s;
    }
    if (spec.initial) {
        json init = json::array();
        for (int i = 0; i < m; ++i) init.push_back((*spec.initial)[i]);
        j["initial"] = init;
    }
    return j;
}

inline ModelSpec model_from_json(const json& j) {
    if (!j.contains("m") || !j.contains("transition") || !j.contains("regimes") ||
        !j.contains("sigma"))
        throw ArgumentError("model JSON: required fields are m, transition, regimes, sigma");
    const int m = j.at("m").get<int>();
    if (m < 1) throw ArgumentError("model JSON: m must be >= 1");
    const auto& rows = j.at("transition");
    if (static_cast<int>(rows.size()) != m)
        throw ArgumentError("model JSON: transition must have m rows");
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(rows[i].size()) != m)
            throw ArgumentError("model JSON: transition row " + std::to_string(i + 1) +
                                " must have m entries");
        for (int k = 0; k < m; ++k) a(i, k) = rows[i][k].get<double>();
    }
    const auto& regimes = j.at("regimes");
    if (static_cast<int>(regimes.size()) != m)
        throw ArgumentError("model JSON: regimes must have m entries");
    Eigen::VectorXd b(m), rho(m);
    for (int i = 0; i < m; ++i) {
        b[i] = regimes[i].at("b").get<double>();
        rho[i] = regimes[i].at("rho").get<double>();
    }
    NoiseSpec noise;
    if (j.at("sigma").is_array()) {
        const auto& s = j.at("sigma");
        Eigen::VectorXd sv(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) sv[i] = s[i].get<double>();
        noise = NoiseSpec::gaussian_per_regime(sv);
    } else {
        noise = NoiseSpec::gaussian_shared(j.at("sigma").get<double>());
    }
    std::optional<Eigen::VectorXd> initial;
    if (j.contains("initial")) {
        const auto& init = j.at("initial");
        Eigen::VectorXd v(init.size());
        for (std::size_t i = 0; i < init.size(); ++i) v[i] = init[i].get<double>();
        initial = v;
    }
    return ModelSpec{TransitionMatrix(std::move(a)), RegimeParams::linear(b, rho), noise,
                     initial, MeanFamily{}};
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path);
    json j;
    in >> j;
    return j;
}

inline void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

inline ModelSpec load_model(const std::string& path) { return model_from_json(load_json_file(path)); }

// ---------------------------------------------------------------------------
// Path CSV: header "index,y,x", index 0..n, y with 17 significant digits,
// x as 1-based regime labels (empty for index 0 and when withheld).
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_path_csv(const Path& path, std::ostream& out, bool with_regimes = true) {
    out << "index,y,x\n";
    for (std::size_t k = 0; k < path.y.size(); ++k) {
        out << k << "," << format_double(path.y[k]) << ",";
        if (with_regimes && k >= 1 && k - 1 < path.x.size()) out << path.x[k - 1] + 1;
        out << "\n";
    }
}

inline void save_path_csv(const Path& path, const std::string& file, bool with_regimes = true) {
    std::ofstream out(file);
    if (!out) throw ArgumentError("cannot open " + file + " for writing");
    write_path_csv(path, out, with_regimes);
}

inline Path read_path_csv(std::istream& in) {
    Path path;
    std::string line;
    if (!std::getline(in, line)) throw ArgumentError("path CSV: empty input");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string idx, ys, xs;
        std::getline(ss, idx, ',');
        std::getline(ss, ys, ',');
        std::getline(ss, xs, ',');
        path.y.push_back(std::stod(ys));
        if (!xs.empty() && path.y.size() > 1) path.x.push_back(std::stoi(xs) - 1);
    }
    if (!path.x.empty() && path.x.size() != path.y.size() - 1)
        throw ArgumentError("path CSV: regime column length mismatch");
    return path;
}

inline Path load_path_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ArgumentError("cannot open " + file);
    return read_path_csv(in);
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

inline json stability_report_to_json(const StabilityReport& rep) {
    json j;
    json mu = json::array();
    for (Eigen::Index i = 0; i < rep.mu.size(); ++i) mu.push_back(rep.mu[i]);
    j["mu"] = mu;
    if (std::isfinite(rep.gamma)) j["gamma"] = rep.gamma;
    if (std::isfinite(rep.spectral_radius)) j["spectral_radius"] = rep.spectral_radius;
    j["moment_order"] = rep.moment_order;
    json conditions;
    for (const auto& [name, verdict] : rep.conditions) conditions[name] = to_string(verdict);
    j["conditions"] = conditions;
    j["stable"] = rep.stable;
    j["notes"] = rep.notes;
    return j;
}

inline json forgetting_record_to_json(const ForgettingRecord& rec) {
    return json{{"k", rec.k},       {"l", rec.l},
                {"d_k0", rec.d_k0}, {"d_kl", rec.d_kl},
                {"gap", rec.gap},   {"bound", rec.bound}};
}

inline json fit_result_to_json(const FitResult& fit) {
    json j;
    j["model"] = model_to_json(fit.psi_hat);
    j["loglik"] = fit.loglik_at_max;
    j["coordinates"] = fit.layout.names();
    j["slope_mode"] = to_string(fit.layout.slope_mode);
    j["sigma_mode"] = to_string(fit.layout.sigma_mode);
    auto matrix_to_json = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
            rows.push_back(row);
        }
        return rows;
    };
    if (fit.information.size() > 0) {
        j["information"] = matrix_to_json(fit.information);
        j["information_opg"] = matrix_to_json(fit.information_opg);
        json eig = json::array();
        for (Eigen::Index i = 0; i < fit.information_eigenvalues.size(); ++i)
            eig.push_back(fit.information_eigenvalues[i]);
        j["information_eigenvalues"] = eig;
        j["information_flagged"] = fit.information_flagged;
        json se = json::array();
        for (Eigen::Index i = 0; i < fit.standard_errors.size(); ++i)
            se.push_back(fit.standard_errors[i]);
        j["standard_errors"] = se;
    }
    j["permutation"] = fit.label_permutation;
    j["trace"] = {{"method", fit.trace.method},
                  {"iterations", fit.trace.iterations},
                  {"evaluations", fit.trace.evaluations},
                  {"converged", fit.trace.converged},
                  {"clip_active", fit.trace.clip_active},
                  {"warnings", fit.trace.warnings}};
    return j;
}

// ---------------------------------------------------------------------------
// Experiment config <-> JSON. Mirrors ExperimentConfig; enums as strings.
// ---------------------------------------------------------------------------

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "consistency") return ExperimentKind::Consistency;
    if (s == "normality") return ExperimentKind::Normality;
    if (s == "lrt-calibration") return ExperimentKind::LrtCalibration;
    if (s == "loglik-convergence") return ExperimentKind::LoglikConvergence;
    if (s == "mixing-probe") return ExperimentKind::MixingProbe;
    throw ArgumentError("unknown experiment kind: " + s);
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig c;
    c.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("model")) c.model = model_from_json(j.at("model"));
    else if (!(c.kind == ExperimentKind::MixingProbe && j.value("andrews", false)))
        throw ArgumentError("experiment JSON: model required");
    if (j.contains("sample_sizes"))
        c.sample_sizes = j.at("sample_sizes").get<std::vector<int>>();
    c.replicates = j.value("replicates", 2);
    c.seed = j.value("seed", 1ULL);
    c.threads = j.value("threads", 1);
    c.burn_in = j.value("burn_in", 500);
    c.method = j.value("method", "em");
    c.init = j.value("init", "truth");
    c.starts = j.value("starts", 10);
    if (j.value("sigma_mode", "shared") == "per-regime") c.sigma_mode = SigmaMode::PerRegime;
    if (j.contains("extra_eval_models"))
        for (const auto& mj : j.at("extra_eval_models"))
            c.extra_eval_models.push_back(model_from_json(mj));
    c.lag = j.value("lag", 10);
    if (j.contains("thresholds")) c.thresholds = j.at("thresholds").get<std::vector<double>>();
    c.andrews = j.value("andrews", false);
    c.andrews_rho = j.value("andrews_rho", 0.5);
    c.andrews_q = j.value("andrews_q", 0.5);
    if (c.andrews && !j.contains("model")) {
        // Placeholder generator model; unused for Andrews paths.
        c.model = make_linear_model(Eigen::MatrixXd::Constant(1, 1, 1.0),
                                    Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 1.0);
    }
    return c;
}

inline json experiment_config_to_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = to_string(c.kind);
    j["model"] = model_to_json(c.model);
    j["sample_sizes"] = c.sample_sizes;
    j["replicates"] = c.replicates;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["burn_in"] = c.burn_in;
    j["method"] = c.method;
    j["init"] = c.init;
    j["starts"] = c.starts;
    j["sigma_mode"] = to_string(c.sigma_mode);
    if (!c.extra_eval_models.empty()) {
        json models = json::array();
        for (const auto& m : c.extra_eval_models) models.push_back(model_to_json(m));
        j["extra_eval_models"] = models;
    }
    if (c.kind == ExperimentKind::MixingProbe) {
        j["lag"] = c.lag;
        if (!c.thresholds.empty()) j["thresholds"] = c.thresholds;
        j["andrews"] = c.andrews;
        j["andrews_rho"] = c.andrews_rho;
        j["andrews_q"] = c.andrews_q;
    }
    return j;
}

inline json experiment_report_to_json(const ExperimentReport& rep) {
    json j;
    j["kind"] = to_string(rep.kind);
    j["seed"] = rep.seed;
    j["version"] = rep.version;
    j["wall_seconds"] = rep.wall_seconds;
    j["included"] = rep.included;
    j["excluded"] = rep.excluded_count;
    j["failed"] = rep.failed;
    j["failed_fraction"] = rep.failed_fraction;
    j["ok"] = rep.ok;
    if (!rep.coord_names.empty()) j["coordinates"] = rep.coord_names;

    switch (rep.kind) {
        case ExperimentKind::Consistency: {
            j["sample_sizes"] = rep.ns;
            json med = json::array();
            for (Eigen::Index g = 0; g < rep.median_abs_error.rows(); ++g) {
                json row = json::array();
                for (Eigen::Index c = 0; c < rep.median_abs_error.cols(); ++c)
                    row.push_back(rep.median_abs_error(g, c));
                med.push_back(row);
            }
            j["median_abs_error"] = med;
            json ratios = json::array();
            for (Eigen::Index c = 0; c < rep.error_ratio_last.size(); ++c)
                ratios.push_back(rep.error_ratio_last[c]);
            j["error_ratio_last"] = ratios;
            j["errors_decreasing"] = rep.errors_decreasing;
            break;
        }
        case ExperimentKind::Normality: {
            j["n"] = rep.ns.front();
            auto vec = [](const Eigen::VectorXd& v) {
                json a = json::array();
                for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
                return a;
            };
            j["ks_distance"] = vec(rep.ks_distance);
            j["skewness"] = vec(rep.skewness);
            j["kurtosis"] = vec(rep.kurtosis);
            j["z_coordinates"] = rep.uncoord_names;
            break;
        }
        case ExperimentKind::LrtCalibration: {
            j["n"] = rep.ns.front();
            j["rate_at_2.706"] = rep.rate90;
            j["rate_at_3.841"] = rep.rate95;
            j["rate_at_6.635"] = rep.rate99;
            j["qq_probs"] = rep.qq_probs;
            j["qq_empirical"] = rep.qq_empirical;
            j["qq_theoretical"] = rep.qq_theoretical;
            break;
        }
        case ExperimentKind::LoglikConvergence: {
            j["grid"] = rep.ns;
            json vals = json::array();
            for (const auto& rec : rep.records)
                vals.push_back({{"n", rec.n}, {"model", rec.replicate}, {"avg_loglik", rec.value}});
            j["values"] = vals;
            j["tail_oscillation"] = rep.tail_oscillation;
            j["tail_value"] = rep.tail_value;
            break;
        }
        case ExperimentKind::MixingProbe: {
            j["n"] = rep.ns.front();
            j["probe"] = rep.probe;
            break;
        }
    }
    return j;
}

/// Long-format records: one row per (n, replicate, coordinate).
inline void write_records_csv(const ExperimentReport& rep, std::ostream& out) {
    out << "n,replicate,coordinate,value\n";
    for (const auto& rec : rep.records) {
        if (!rec.ok) {
            out << rec.n << "," << rec.replicate << ",failed,\n";
            continue;
        }
        switch (rep.kind) {
            case ExperimentKind::Consistency:
                for (Eigen::Index c = 0; c < rec.abs_error.size(); ++c)
                    out << rec.n << "," << rec.replicate << ",err:" << rep.coord_names[c] << ","
                        << format_double(rec.abs_error[c]) << "\n";
                break;
            case ExperimentKind::Normality:
                if (rec.excluded) {
                    out << rec.n << "," << rec.replicate << ",excluded,\n";
                    break;
                }
                for (Eigen::Index c = 0; c < rec.z.size(); ++c)
                    out << rec.n << "," << rec.replicate << ",z:" << rep.uncoord_names[c] << ","
                        << format_double(rec.z[c]) << "\n";
                break;
            case ExperimentKind::LrtCalibration:
                out << rec.n << "," << rec.replicate << ",lrt,"
                    << format_double(rec.statistic) << "\n";
                break;
            default:
                out << rec.n << "," << rec.replicate << ",value,"
                    << format_double(rec.value) << "\n";
        }
    }
}

}  // namespace msar
