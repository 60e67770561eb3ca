// Command-line front end for the state-dependent Hawkes toolkit. Structured
// results go to stdout as JSON, logs to stderr, series to user-specified CSV
// paths. Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
// failure.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdhawkes/sdhawkes.hpp"

namespace {

using nlohmann::json;
using namespace sdhawkes;

// "HH:MM", "HH:MM:SS" or plain seconds since midnight.
double parse_clock(const std::string& text) {
    int h = 0, m = 0, s = 0;
    if (std::sscanf(text.c_str(), "%d:%d:%d", &h, &m, &s) >= 2)
        return 3600.0 * h + 60.0 * m + s;
    try {
        return std::stod(text);
    } catch (const std::exception&) {
        throw DataError("cannot parse time '" + text + "'");
    }
}

std::size_t resolve_state(const std::string& text, const Dimensions& dims) {
    for (std::size_t x = 0; x < dims.n_states; ++x)
        if (dims.state_labels[x] == text) return x;
    try {
        const std::size_t x = std::stoul(text);
        if (x < dims.n_states) return x;
    } catch (const std::exception&) {
    }
    throw DataError("unknown state '" + text + "'");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << content;
}

// Applies a {"flag": value} JSON config as defaults: entries are injected as
// --flag=value arguments ahead of the user's own, which win via take_last.
std::vector<std::string> apply_config_file(const std::vector<std::string>& args) {
    std::string config_path;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (config_path.empty()) return rest;

    std::ifstream in(config_path);
    if (!in) throw DataError("cannot open config file " + config_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("bad JSON in " + config_path + ": " + e.what());
    }

    std::vector<std::string> merged;
    if (!rest.empty()) merged.push_back(rest.front());  // subcommand name first
    for (const auto& [key, value] : j.items()) {
        std::string text = value.is_string() ? value.get<std::string>() : value.dump();
        merged.push_back("--" + key + "=" + text);
    }
    merged.insert(merged.end(), rest.begin() + (rest.empty() ? 0 : 1), rest.end());
    return merged;
}

int run(std::vector<std::string> args) {
    CLI::App app{"State-dependent Hawkes processes: simulation, estimation and diagnostics"};
    app.require_subcommand(1);
    app.option_defaults()->take_last();

    unsigned jobs = 0;
    std::string config_path_doc;
    app.add_option("--config", config_path_doc,
                   "JSON config file whose entries mirror flags (applied as defaults)");

    // --- simulate ---------------------------------------------------------
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a path by thinning");
    std::string sim_model, sim_out, sim_initial_state = "0";
    double sim_horizon = 0.0, sim_t0 = 0.0;
    std::uint64_t sim_seed = 0, sim_events = 0, sim_max_events = 10'000'000;
    simulate_cmd->add_option("--model", sim_model, "Model JSON")->required();
    simulate_cmd->add_option("--out", sim_out, "Output sequence CSV (sidecar JSON alongside)")->required();
    simulate_cmd->add_option("--horizon", sim_horizon, "End time T");
    simulate_cmd->add_option("--t0", sim_t0, "Start time (default 0)");
    simulate_cmd->add_option("--events", sim_events, "Stop after this many events instead of at T");
    simulate_cmd->add_option("--initial-state", sim_initial_state, "Initial state label or index");
    simulate_cmd->add_option("--seed", sim_seed, "Random seed");
    simulate_cmd->add_option("--max-events", sim_max_events, "Explosion guard");
    simulate_cmd->add_option("--jobs", jobs, "Worker cap (unused here)");

    // --- loglik -----------------------------------------------------------
    auto* loglik_cmd = app.add_subcommand("loglik", "Log-likelihood breakdown of a sequence");
    std::string ll_model, ll_events;
    std::optional<double> ll_from, ll_to;
    loglik_cmd->add_option("--model", ll_model, "Model JSON (plain or estimate result)")->required();
    loglik_cmd->add_option("--events", ll_events, "Sequence CSV")->required();
    loglik_cmd->add_option("--from", ll_from, "Override window start");
    loglik_cmd->add_option("--to", ll_to, "Override window end");

    // --- estimate ---------------------------------------------------------
    auto* estimate_cmd = app.add_subcommand("estimate", "Maximum likelihood fit");
    std::string est_events, est_model_out;
    int est_starts = 3, est_max_iter = 500;
    double est_tol = 1e-7;
    std::uint64_t est_seed = 0;
    bool est_ordinary = false;
    std::optional<double> est_from, est_to;
    estimate_cmd->add_option("--events", est_events, "Sequence CSV")->required();
    estimate_cmd->add_option("--model-out", est_model_out, "Output estimate JSON")->required();
    estimate_cmd->add_option("--starts", est_starts, "Random starts (default 3)");
    estimate_cmd->add_option("--seed", est_seed, "Random seed");
    estimate_cmd->add_option("--max-iterations", est_max_iter, "Iteration cap per start");
    estimate_cmd->add_option("--tolerance", est_tol, "Gradient tolerance");
    estimate_cmd->add_option("--from", est_from, "Override window start");
    estimate_cmd->add_option("--to", est_to, "Override window end");
    estimate_cmd->add_flag("--ordinary", est_ordinary, "Collapse states: ordinary Hawkes fit");
    bool est_warm_ordinary = false;
    estimate_cmd->add_flag("--warm-ordinary", est_warm_ordinary,
                           "Fit an ordinary Hawkes model first and use it as a warm start");
    std::string est_warm_model;
    estimate_cmd->add_option("--warm-model", est_warm_model,
                             "Model JSON used as an extra warm start (e.g. a previous day)");
    estimate_cmd->add_option("--jobs", jobs, "Parallel workers (0 = cores)");

    // --- residuals --------------------------------------------------------
    auto* residuals_cmd = app.add_subcommand("residuals", "Time-change residual diagnostics");
    std::string res_model, res_events, res_out_dir;
    std::size_t res_max_lag = 20;
    std::optional<double> res_from, res_to;
    residuals_cmd->add_option("--model", res_model, "Model JSON")->required();
    residuals_cmd->add_option("--events", res_events, "Sequence CSV")->required();
    residuals_cmd->add_option("--out-dir", res_out_dir, "Directory for per-stream CSVs")->required();
    residuals_cmd->add_option("--max-lag", res_max_lag, "Correlogram depth");
    residuals_cmd->add_option("--from", res_from, "Override window start (out-of-sample runs)");
    residuals_cmd->add_option("--to", res_to, "Override window end");

    // --- analyze ----------------------------------------------------------
    auto* analyze_cmd = app.add_subcommand("analyze", "Kernel norms and spectral radii");
    std::string an_model, an_curves_out;
    analyze_cmd->add_option("--model", an_model, "Model JSON")->required();
    analyze_cmd->add_option("--curves-out", an_curves_out, "Truncated-norm curves CSV");

    // --- ingest -----------------------------------------------------------
    auto* ingest_cmd = app.add_subcommand("ingest", "Build a sequence from LOBSTER files");
    std::string ing_messages, ing_book, ing_state = "spread", ing_from = "12:00", ing_to = "14:30",
                ing_out;
    double ing_tick = 0.01;
    bool ing_keep_history = false;
    ingest_cmd->add_option("--messages", ing_messages, "Message CSV")->required();
    ingest_cmd->add_option("--book", ing_book, "Aligned level-I book CSV")->required();
    ingest_cmd->add_option("--state", ing_state, "State variable: spread | qi");
    ingest_cmd->add_option("--from", ing_from, "Window start (HH:MM or seconds)");
    ingest_cmd->add_option("--to", ing_to, "Window end");
    ingest_cmd->add_option("--tick", ing_tick, "Tick size in currency (default 0.01)");
    ingest_cmd->add_option("--out", ing_out, "Output sequence CSV")->required();
    ingest_cmd->add_flag("--keep-history", ing_keep_history, "Keep pre-window events as prefix");

    // --- mc ----------------------------------------------------------------
    auto* mc_cmd = app.add_subcommand("mc", "Finite-sample consistency experiment");
    std::string mc_model, mc_out;
    std::vector<std::size_t> mc_sizes{5000, 40000};
    int mc_reps = 20;
    std::uint64_t mc_seed = 0;
    mc_cmd->add_option("--model", mc_model, "True model JSON")->required();
    mc_cmd->add_option("--out", mc_out, "Long-format CSV output")->required();
    mc_cmd->add_option("--sizes", mc_sizes, "Sample sizes")->delimiter(',');
    mc_cmd->add_option("--reps", mc_reps, "Replications per size");
    mc_cmd->add_option("--seed", mc_seed, "Random seed");
    mc_cmd->add_option("--jobs", jobs, "Parallel workers (0 = cores)");

    // --- bootstrap ----------------------------------------------------------
    auto* boot_cmd = app.add_subcommand("bootstrap", "Parametric bootstrap bands");
    std::string boot_model, boot_out, boot_curves_out;
    double boot_horizon = 0.0;
    int boot_reps = 100, boot_starts = 3;
    std::uint64_t boot_seed = 0;
    boot_cmd->add_option("--model", boot_model, "Fitted model JSON")->required();
    boot_cmd->add_option("--out", boot_out, "Long-format CSV of re-fitted parameters")->required();
    boot_cmd->add_option("--curves-out", boot_curves_out, "Truncated-norm band CSV");
    boot_cmd->add_option("--horizon", boot_horizon, "Simulation horizon")->required();
    boot_cmd->add_option("--replications", boot_reps, "Bootstrap paths (default 100)");
    boot_cmd->add_option("--starts", boot_starts, "Random starts per re-fit");
    boot_cmd->add_option("--seed", boot_seed, "Random seed");
    boot_cmd->add_option("--jobs", jobs, "Parallel workers (0 = cores)");

    try {
        // CLI11 consumes this vector back to front.
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (simulate_cmd->parsed()) {
        const SdHawkesModel model = load_model(sim_model);
        SimulationConfig config;
        config.initial_state = resolve_state(sim_initial_state, model.dims);
        config.start_time = sim_t0;
        config.horizon = sim_horizon;
        config.seed = sim_seed;
        config.max_events = sim_max_events;
        config.target_events = sim_events;
        const MarkedSequence path = simulate(model, config);
        save_sequence(path, model.dims, sim_out);
        json summary{{"events", path.size()},
                     {"t0", path.window_start},
                     {"T", path.window_end},
                     {"seed", sim_seed},
                     {"out", sim_out}};
        std::cout << summary.dump(2) << "\n";
        return 0;
    }

    if (loglik_cmd->parsed()) {
        const SdHawkesModel model = load_model(ll_model);
        auto [seq, dims] = load_sequence(ll_events);
        if (dims.n_event_types != model.dims.n_event_types ||
            dims.n_states != model.dims.n_states)
            throw DataError("sequence dimensions do not match the model");
        if (ll_from || ll_to)
            seq = rewindow(seq, ll_from.value_or(seq.window_start), ll_to.value_or(seq.window_end));
        const LikelihoodBreakdown breakdown = log_likelihood(model, seq);
        std::cout << breakdown_to_json(breakdown).dump(2) << "\n";
        return 0;
    }

    if (estimate_cmd->parsed()) {
        auto [seq, dims] = load_sequence(est_events);
        if (est_from || est_to)
            seq = rewindow(seq, est_from.value_or(seq.window_start), est_to.value_or(seq.window_end));
        FitConfig config;
        config.n_random_starts = est_starts;
        config.seed = est_seed;
        config.max_iterations = est_max_iter;
        config.gradient_tolerance = est_tol;
        config.jobs = resolve_jobs(jobs);
        if (!est_warm_model.empty()) {
            const SdHawkesModel warm = load_model(est_warm_model);
            if (warm.dims.n_event_types != dims.n_event_types ||
                warm.dims.n_states != dims.n_states)
                throw DataError("--warm-model dimensions do not match the sequence");
            config.warm_starts.push_back(warm.kernel);
        }
        if (est_warm_ordinary && !est_ordinary) {
            FitConfig flat_config = config;
            flat_config.warm_starts.clear();
            const EstimateResult flat = fit_ordinary(seq, dims, flat_config);
            config.warm_starts.push_back(broadcast_states(flat.model.kernel, dims.n_states));
        }
        const EstimateResult result =
            est_ordinary ? fit_ordinary(seq, dims, config) : fit(seq, dims, config);
        const json doc = estimate_result_to_json(result);
        write_file(est_model_out, doc.dump(2) + "\n");
        json summary{{"log_likelihood", result.likelihood.total},
                     {"events", seq.n_in_window()},
                     {"chosen_start", result.chosen_start},
                     {"out", est_model_out}};
        std::cout << summary.dump(2) << "\n";
        return 0;
    }

    if (residuals_cmd->parsed()) {
        const SdHawkesModel model = load_model(res_model);
        auto [seq, dims] = load_sequence(res_events);
        if (dims.n_event_types != model.dims.n_event_types ||
            dims.n_states != model.dims.n_states)
            throw DataError("sequence dimensions do not match the model");
        if (res_from || res_to)
            seq = rewindow(seq, res_from.value_or(seq.window_start),
                           res_to.value_or(seq.window_end));
        const ResidualSet set = residuals(model, seq);

        json summary = json::array();
        const auto emit = [&](const std::string& stream, const std::vector<double>& values) {
            std::string csv = "residual\n";
            for (double r : values) csv += format_double(r) + "\n";
            write_file(res_out_dir + "/" + stream + ".csv", csv);
            if (!values.empty()) {
                std::string qq = "theoretical,empirical\n";
                for (const auto& [x, y] : qq_points(values))
                    qq += format_double(x) + "," + format_double(y) + "\n";
                write_file(res_out_dir + "/qq_" + stream + ".csv", qq);
            }
            json entry{{"stream", stream}, {"n", values.size()}};
            if (values.size() >= 2) {
                const KsResult ks = ks_exp1(values);
                entry["ks"] = ks.statistic;
                entry["p"] = ks.p_value;
                const Correlogram acf = correlogram(values, res_max_lag);
                entry["acf"] = acf.zero_variance ? json() : json(acf.acf);
            } else {
                entry["ks"] = json();
                entry["p"] = json();
                entry["acf"] = json();
            }
            summary.push_back(std::move(entry));
        };

        for (std::size_t e = 0; e < model.dims.n_event_types; ++e)
            emit("event_" + model.dims.event_labels[e], set.event_residuals[e]);
        for (std::size_t e = 0; e < model.dims.n_event_types; ++e)
            for (std::size_t x = 0; x < model.dims.n_states; ++x)
                emit("total_" + model.dims.event_labels[e] + "_" + model.dims.state_labels[x],
                     set.total_residuals[e * model.dims.n_states + x]);
        std::cout << summary.dump(2) << "\n";
        return 0;
    }

    if (analyze_cmd->parsed()) {
        const SdHawkesModel model = load_model(an_model);
        const std::size_t d_e = model.dims.n_event_types;
        json states = json::array();
        for (std::size_t x = 0; x < model.dims.n_states; ++x) {
            const auto m = kernel_norm_matrix(model, x);
            json matrix = json::array();
            for (std::size_t i = 0; i < d_e; ++i) {
                json row = json::array();
                for (std::size_t j = 0; j < d_e; ++j) row.push_back(m[i * d_e + j]);
                matrix.push_back(std::move(row));
            }
            states.push_back(json{{"x", model.dims.state_labels[x]},
                                  {"norm_matrix", std::move(matrix)},
                                  {"rho", spectral_radius(model, x)}});
        }
        if (!an_curves_out.empty()) {
            std::string csv = "source,state,target,t,norm\n";
            const auto grid = default_norm_time_grid();
            for (std::size_t ep = 0; ep < d_e; ++ep)
                for (std::size_t xp = 0; xp < model.dims.n_states; ++xp)
                    for (std::size_t e = 0; e < d_e; ++e)
                        for (double t : grid) {
                            csv += model.dims.event_labels[ep] + "," + model.dims.state_labels[xp] +
                                   "," + model.dims.event_labels[e] + "," + format_double(t) + "," +
                                   format_double(truncated_kernel_norm(model.kernel.a(ep, xp, e),
                                                                       model.kernel.b(ep, xp, e), t)) +
                                   "\n";
                        }
            write_file(an_curves_out, csv);
        }
        std::cout << json{{"states", std::move(states)}}.dump(2) << "\n";
        return 0;
    }

    if (ingest_cmd->parsed()) {
        StateVariableSpec spec =
            ing_state == "qi" ? StateVariableSpec::queue_imbalance_states()
                              : StateVariableSpec::spread_states(
                                    static_cast<std::int64_t>(std::llround(ing_tick * 1e4)));
        if (ing_state != "qi" && ing_state != "spread")
            throw DataError("unknown state variable '" + ing_state + "'");
        const IngestResult result =
            ingest_lob_files(ing_messages, ing_book, spec, parse_clock(ing_from),
                             parse_clock(ing_to), ing_keep_history);
        save_sequence(result.sequence, result.dims, ing_out);
        json summary{{"events", result.sequence.size()},
                     {"kept", result.stats.classification.kept},
                     {"dropped_deeper", result.stats.classification.dropped_deeper},
                     {"dropped_hidden", result.stats.classification.dropped_hidden},
                     {"dropped_unclassifiable", result.stats.classification.dropped_unclassifiable},
                     {"skipped_undefined_state", result.stats.skipped_undefined_state},
                     {"residual_ties", result.stats.residual_ties},
                     {"history_events", result.stats.history_events},
                     {"out", ing_out}};
        std::cout << summary.dump(2) << "\n";
        return 0;
    }

    if (mc_cmd->parsed()) {
        const SdHawkesModel truth = load_model(mc_model);
        MonteCarloConfig config;
        config.sample_sizes = mc_sizes;
        config.replications = mc_reps;
        config.seed = mc_seed;
        config.jobs = jobs;
        const auto records = monte_carlo_consistency(truth, config);

        std::string csv = "sample_size,replication,group,value\n";
        for (const auto& r : records) {
            if (!r.fit_ok) continue;
            const auto row = [&](const char* group, double value) {
                csv += std::to_string(r.sample_size) + "," + std::to_string(r.replication) + "," +
                       group + "," + format_double(value) + "\n";
            };
            row("phi", r.phi_error);
            row("nu", r.nu_error);
            row("alpha", r.alpha_error);
            row("beta", r.beta_error);
        }
        write_file(mc_out, csv);

        json medians = json::array();
        for (std::size_t s = 0; s < mc_sizes.size(); ++s) {
            const auto median_of = [&](auto&& pick) {
                std::vector<double> values;
                for (const auto& r : records)
                    if (r.fit_ok && r.sample_size == mc_sizes[s]) values.push_back(std::abs(pick(r)));
                if (values.empty()) return json();
                std::sort(values.begin(), values.end());
                return json(values[values.size() / 2]);
            };
            medians.push_back(
                json{{"sample_size", mc_sizes[s]},
                     {"phi", median_of([](const MonteCarloRecord& r) { return r.phi_error; })},
                     {"nu", median_of([](const MonteCarloRecord& r) { return r.nu_error; })},
                     {"alpha", median_of([](const MonteCarloRecord& r) { return r.alpha_error; })},
                     {"beta", median_of([](const MonteCarloRecord& r) { return r.beta_error; })}});
        }
        std::size_t failures = 0;
        for (const auto& r : records) failures += r.fit_ok ? 0 : 1;
        std::cout << json{{"median_abs_worst_error", std::move(medians)},
                          {"failures", failures},
                          {"out", mc_out}}
                         .dump(2)
                  << "\n";
        return 0;
    }

    if (boot_cmd->parsed()) {
        const SdHawkesModel fitted = load_model(boot_model);
        BootstrapConfig config;
        config.horizon = boot_horizon;
        config.replications = boot_reps;
        config.seed = boot_seed;
        config.jobs = jobs;
        config.fit.n_random_starts = boot_starts;

        // Long-format per-replication parameter records are rebuilt from the
        // same derived seeds the band computation uses.
        const BootstrapSummary summary = parametric_bootstrap(fitted, config);

        const auto& d = fitted.dims;
        std::string csv = "replication,parameter,value\n";
        for (std::size_t r = 0; r < summary.replicates.size(); ++r) {
            const auto& rep = summary.replicates[r];
            if (!rep.ok) continue;
            const auto rows = [&](const std::string& name, const std::vector<double>& values) {
                for (std::size_t j = 0; j < values.size(); ++j)
                    csv += std::to_string(r) + "," + name + "[" + std::to_string(j) + "]," +
                           format_double(values[j]) + "\n";
            };
            rows("nu", rep.nu);
            rows("alpha", rep.alpha);
            rows("beta", rep.beta);
            rows("phi", rep.phi);
        }
        write_file(boot_out, csv);

        const auto band_json = [](const QuantileBand& band) {
            return json{{"lower", band.lower}, {"upper", band.upper}};
        };

        if (!boot_curves_out.empty()) {
            std::string curves = "source,state,target,t,lower,upper\n";
            for (std::size_t ep = 0; ep < d.n_event_types; ++ep)
                for (std::size_t xp = 0; xp < d.n_states; ++xp)
                    for (std::size_t e = 0; e < d.n_event_types; ++e) {
                        const auto& band =
                            summary.norm_curves[fitted.kernel.index(ep, xp, e)];
                        for (std::size_t g = 0; g < summary.time_grid.size(); ++g)
                            curves += d.event_labels[ep] + "," + d.state_labels[xp] + "," +
                                      d.event_labels[e] + "," + format_double(summary.time_grid[g]) +
                                      "," + format_double(band.lower[g]) + "," +
                                      format_double(band.upper[g]) + "\n";
                    }
            write_file(boot_curves_out, curves);
        }
        std::cout << json{{"successes", summary.n_success},
                          {"failures", summary.n_failure},
                          {"bands", json{{"nu", band_json(summary.nu)},
                                         {"alpha", band_json(summary.alpha)},
                                         {"beta", band_json(summary.beta)},
                                         {"phi", band_json(summary.phi)}}},
                          {"out", boot_out}}
                         .dump(2)
                  << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run(apply_config_file(args));
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
