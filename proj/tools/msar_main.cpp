// msar: simulate, diagnose, and fit Markov-switching autoregressions.
//
// Exit codes: 0 success, 1 domain/validation/optimization errors, 2 usage.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "msar/asymptotics.hpp"
#include "msar/estimate.hpp"
#include "msar/filter.hpp"
#include "msar/io.hpp"
#include "msar/simulate.hpp"
#include "msar/stability.hpp"

namespace {

void emit(const msar::json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        msar::save_json_file(out_path, j);
    }
}

msar::ModelSpec load_validated_model(const std::string& path) {
    const msar::ModelSpec spec = msar::load_model(path);
    const auto report = msar::validate_model(spec);
    if (!report.clean()) throw msar::ArgumentError("invalid model: " + report.joined());
    return spec;
}

msar::SlopeMode parse_slope_mode(const std::string& s) {
    if (s == "free") return msar::SlopeMode::Free;
    if (s == "tied") return msar::SlopeMode::Tied;
    if (s == "zero") return msar::SlopeMode::Zero;
    throw msar::ArgumentError("unknown slope mode: " + s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markov-switching autoregression toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("msar ") +
#ifdef MSAR_VERSION
                                          MSAR_VERSION
#else
                                          "dev"
#endif
    );

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "Simulate a path from a model spec");
    std::string sim_model, sim_out, sim_y0 = "stationary";
    int sim_n = 0, sim_burn = 500;
    std::uint64_t sim_seed = 0;
    bool sim_no_regimes = false;
    sim->add_option("--model", sim_model, "model spec JSON")->required();
    sim->add_option("--n", sim_n, "number of steps")->required();
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("--burn-in", sim_burn, "burn-in steps for stationary start");
    sim->add_option("--y0", sim_y0, "initial y value or 'stationary'");
    sim->add_option("--out", sim_out, "output CSV")->required();
    sim->add_flag("--no-regimes", sim_no_regimes, "withhold the regime column");

    // ---- check-stability ----
    auto* stab = app.add_subcommand("check-stability", "Run the stability checklist");
    std::string stab_model, stab_out;
    double stab_s = 1.0;
    stab->add_option("--model", stab_model, "model spec JSON")->required();
    stab->add_option("--moment", stab_s, "moment order s");
    stab->add_option("--out", stab_out, "output JSON (default stdout)");

    // ---- loglik ----
    auto* ll = app.add_subcommand("loglik", "Exact log-likelihood of a series");
    std::string ll_model, ll_data, ll_out;
    ll->add_option("--model", ll_model, "model spec JSON")->required();
    ll->add_option("--data", ll_data, "path CSV")->required();
    ll->add_option("--out", ll_out, "output JSON (default stdout)");

    // ---- forgetting ----
    auto* forg = app.add_subcommand("forgetting", "Windowed per-step terms and the bound");
    std::string forg_model, forg_data, forg_out;
    int forg_k = 0;
    int forg_l = -1;
    forg->add_option("--model", forg_model, "model spec JSON")->required();
    forg->add_option("--data", forg_data, "path CSV")->required();
    forg->add_option("--k", forg_k, "step index k")->required();
    forg->add_option("--l", forg_l, "window start l (omit to sweep l = 0..k-2)");
    forg->add_option("--out", forg_out, "output JSON lines (default stdout)");

    // ---- fit ----
    auto* fit = app.add_subcommand("fit", "Maximum-likelihood fit");
    std::string fit_data, fit_out, fit_method = "simplex", fit_init, fit_slope = "free",
                fit_sigma = "shared";
    int fit_m = 0, fit_starts = 10;
    std::uint64_t fit_seed = 0;
    fit->add_option("--data", fit_data, "path CSV")->required();
    fit->add_option("--m", fit_m, "number of regimes")->required();
    fit->add_option("--method", fit_method, "simplex | em");
    fit->add_option("--starts", fit_starts, "multistart count");
    fit->add_option("--seed", fit_seed, "multistart seed");
    fit->add_option("--init", fit_init, "initial model spec JSON (otherwise multistart)");
    fit->add_option("--slope", fit_slope, "free | tied | zero");
    fit->add_option("--sigma", fit_sigma, "shared | per-regime");
    fit->add_option("--out", fit_out, "output JSON")->required();

    // ---- lrt ----
    auto* lrt = app.add_subcommand("lrt", "Likelihood-ratio test of zero slope");
    std::string lrt_data, lrt_out;
    int lrt_m = 0, lrt_starts = 10;
    std::uint64_t lrt_seed = 0;
    lrt->add_option("--data", lrt_data, "path CSV")->required();
    lrt->add_option("--m", lrt_m, "number of regimes")->required();
    lrt->add_option("--starts", lrt_starts, "multistart count");
    lrt->add_option("--seed", lrt_seed, "multistart seed");
    lrt->add_option("--out", lrt_out, "output JSON")->required();

    // ---- montecarlo ----
    auto* mc = app.add_subcommand("montecarlo", "Run a Monte Carlo experiment");
    std::string mc_config, mc_out, mc_csv;
    int mc_threads = 0;
    mc->add_option("--config", mc_config, "experiment config JSON")->required();
    mc->add_option("--out", mc_out, "report JSON")->required();
    mc->add_option("--csv", mc_csv, "long-format records CSV");
    mc->add_option("--threads", mc_threads, "worker threads (overrides config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForVersion") {
            return app.exit(e);
        }
        app.exit(e);
        return 2;
    }

    try {
        if (*sim) {
            const msar::ModelSpec spec = load_validated_model(sim_model);
            msar::Path path;
            if (sim_y0 == "stationary") {
                path = msar::simulate_path_stationary(spec, sim_n, sim_seed, sim_burn);
            } else {
                path = msar::simulate_path(spec, sim_n, std::stod(sim_y0), sim_seed);
            }
            msar::save_path_csv(path, sim_out, !sim_no_regimes);
        } else if (*stab) {
            const msar::ModelSpec spec = load_validated_model(stab_model);
            emit(msar::stability_report_to_json(msar::check_stability(spec, stab_s)), stab_out);
        } else if (*ll) {
            const msar::ModelSpec spec = load_validated_model(ll_model);
            const msar::Path path = msar::load_path_csv(ll_data);
            const double value = msar::log_likelihood(spec, path.y);
            const int n = static_cast<int>(path.y.size()) - 1;
            emit(msar::json{{"n", n}, {"loglik", value}, {"avg_loglik", value / n}}, ll_out);
        } else if (*forg) {
            const msar::ModelSpec spec = load_validated_model(forg_model);
            const msar::Path path = msar::load_path_csv(forg_data);
            std::ostringstream lines;
            if (forg_l >= 0) {
                lines << msar::forgetting_record_to_json(
                             msar::windowed_step_terms(spec, path.y, forg_k, forg_l))
                             .dump()
                      << "\n";
            } else {
                for (int l = 0; l <= forg_k - 2; ++l)
                    lines << msar::forgetting_record_to_json(
                                 msar::windowed_step_terms(spec, path.y, forg_k, l))
                                 .dump()
                          << "\n";
            }
            if (forg_out.empty()) {
                std::cout << lines.str();
            } else {
                std::ofstream out(forg_out);
                if (!out) throw msar::ArgumentError("cannot open " + forg_out);
                out << lines.str();
            }
        } else if (*fit) {
            const msar::Path path = msar::load_path_csv(fit_data);
            msar::FitResult result;
            const msar::SlopeMode slope_mode = parse_slope_mode(fit_slope);
            const msar::SigmaMode sigma_mode =
                fit_sigma == "per-regime" ? msar::SigmaMode::PerRegime : msar::SigmaMode::Shared;
            if (fit_method == "em") {
                msar::ExperimentConfig cfg;
                cfg.model = fit_init.empty()
                                ? msar::make_linear_model(
                                      Eigen::MatrixXd::Constant(fit_m, fit_m, 1.0 / fit_m),
                                      Eigen::VectorXd::Zero(fit_m), Eigen::VectorXd::Zero(fit_m),
                                      1.0)
                                : load_validated_model(fit_init);
                cfg.method = "em";
                cfg.init = fit_init.empty() ? "multistart" : "truth";
                cfg.starts = fit_starts;
                cfg.seed = fit_seed;
                cfg.sigma_mode = sigma_mode;
                result = msar::fit_series(path.y, cfg, slope_mode, true);
            } else if (fit_method == "simplex") {
                msar::FitOptions opt;
                opt.slope_mode = slope_mode;
                opt.sigma_mode = sigma_mode;
                opt.starts = fit_starts;
                opt.seed = fit_seed;
                if (!fit_init.empty()) opt.init = load_validated_model(fit_init);
                result = msar::fit_mle(path.y, fit_m, opt);
            } else {
                throw msar::ArgumentError("unknown fit method: " + fit_method);
            }
            msar::save_json_file(fit_out, msar::fit_result_to_json(result));
        } else if (*lrt) {
            const msar::Path path = msar::load_path_csv(lrt_data);
            msar::ExperimentConfig cfg;
            cfg.model = msar::make_linear_model(
                Eigen::MatrixXd::Constant(lrt_m, lrt_m, 1.0 / lrt_m),
                Eigen::VectorXd::Zero(lrt_m), Eigen::VectorXd::Zero(lrt_m), 1.0);
            cfg.method = "em";
            cfg.init = "multistart";
            cfg.starts = lrt_starts;
            cfg.seed = lrt_seed;
            const msar::FitResult null_fit =
                msar::fit_series(path.y, cfg, msar::SlopeMode::Zero, false);
            const msar::FitResult full_fit =
                msar::fit_series(path.y, cfg, msar::SlopeMode::Tied, false);
            std::string warning;
            const double stat = msar::lrt_statistic(path.y, full_fit, null_fit, &warning);
            msar::json j;
            j["statistic"] = stat;
            j["df"] = 1;
            j["p_value"] = msar::chi2_1_sf(stat);
            j["cutoffs"] = {{"0.90", 2.706}, {"0.95", 3.841}, {"0.99", 6.635}};
            j["reject_at_0.95"] = stat > 3.841;
            j["loglik_full"] = full_fit.loglik_at_max;
            j["loglik_null"] = null_fit.loglik_at_max;
            j["fit_full"] = msar::fit_result_to_json(full_fit);
            j["fit_null"] = msar::fit_result_to_json(null_fit);
            if (!warning.empty()) j["warning"] = warning;
            msar::save_json_file(lrt_out, j);
        } else if (*mc) {
            msar::ExperimentConfig cfg =
                msar::experiment_config_from_json(msar::load_json_file(mc_config));
            if (mc_threads > 0) cfg.threads = mc_threads;
            const msar::ExperimentReport report = msar::run_experiment(cfg);
            msar::save_json_file(mc_out, msar::experiment_report_to_json(report));
            if (!mc_csv.empty()) {
                std::ofstream out(mc_csv);
                if (!out) throw msar::ArgumentError("cannot open " + mc_csv);
                msar::write_records_csv(report, out);
            }
            if (!report.ok) {
                std::cerr << "warning: " << report.failed << " of " << report.records.size()
                          << " replicates failed\n";
            }
        }
    } catch (const msar::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
