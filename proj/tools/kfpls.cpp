// kfpls: run case studies, optimise kernels on CSV data, predict, sweep and
// map the loss surface.
//
// Errors end the process with one line on stderr, "<category>: <message>",
// and a nonzero status (2 for usage and config errors, 1 otherwise).

#include "kfpls/kfpls.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace kfpls;

namespace {

// Options shared by every subcommand. They may also come from the --config
// file; values given on the command line win.
struct RunOptions {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string csv;
    std::vector<std::string> response;
    std::string task = "regression";
    std::string kernel = "gaussian";
    double sigma = 1.0;
    double delta = 1.0;
    Index n_lv = 0;
    Index lv_min = 1;
    Index lv_max = 20;
    Index iterations = 500;
    std::string update_rule = "polyak";
    double learning_rate = 0.1;
    double momentum = 0.5;
    double nesterov_gamma = 0.1;
    Index subsamples = 20;
    double batch_fraction = 0.5;
    double sub_fraction = 0.5;
    Index flow_n_lv = 0;
    Index smoothing_window = 20;
    double tolerance = 1e-5;
    Index patience = 50;
    double max_step = 0.2;
    bool lr_decay = false;
    bool stratified = false;
    bool optimize = true;
    bool baselines = true;
    bool quiet = false;

    std::map<std::string, CLI::Option*> opts;

    [[nodiscard]] bool given(const std::string& name) const {
        const auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }
};

void add_run_options(CLI::App& app, RunOptions& o) {
    auto add = [&](const std::string& name, auto& var, const std::string& help) {
        o.opts[name] = app.add_option("--" + name, var, help)->capture_default_str();
    };
    auto flag = [&](const std::string& name, bool& var, const std::string& help) {
        o.opts[name] = app.add_flag("--" + name + ",!--no-" + name, var, help + (var ? " (default on)" : " (default off)"));
    };
    add("seed", o.seed, "root seed for data splits and every random stream");
    add("out-dir", o.out_dir, "directory for output files");
    add("csv", o.csv, "input CSV (header row, numeric cells)");
    o.opts["response"] = app.add_option("--response", o.response, "response column names or indices")
                             ->delimiter(',');
    add("task", o.task, "regression or classification");
    add("kernel", o.kernel, "kernel families, comma-separated (gaussian, matern12, matern32, matern52, cauchy)");
    add("sigma", o.sigma, "initial length-scale");
    add("delta", o.delta, "initial ridge");
    add("n-lv", o.n_lv, "latent variables of the final model; 0 searches [lv-min, lv-max]");
    add("lv-min", o.lv_min, "smallest n_lv tried by the line search");
    add("lv-max", o.lv_max, "largest n_lv tried by the line search");
    add("iterations", o.iterations, "Kernel Flows iterations");
    add("update-rule", o.update_rule, "vanilla, polyak or nesterov");
    add("learning-rate", o.learning_rate, "gradient step size");
    add("momentum", o.momentum, "momentum coefficient");
    add("nesterov-gamma", o.nesterov_gamma, "Nesterov gradient step size");
    add("subsamples", o.subsamples, "sub-batches per iteration");
    add("batch-fraction", o.batch_fraction, "minibatch fraction of the calibration rows");
    add("sub-fraction", o.sub_fraction, "sub-batch fraction of the minibatch");
    add("flow-n-lv", o.flow_n_lv, "latent variables used inside the loss; 0 picks min(20, sub-batch size - 1)");
    add("smoothing-window", o.smoothing_window, "window of the smoothed loss");
    add("tolerance", o.tolerance, "smallest smoothed-loss improvement that resets patience");
    add("patience", o.patience, "iterations without improvement before stopping; 0 never stops early");
    add("max-step", o.max_step, "largest change of one log-parameter per iteration; 0 disables");
    flag("lr-decay", o.lr_decay, "scale step sizes by 1/sqrt(iteration + 1)");
    flag("stratified", o.stratified, "class-stratified minibatches");
    flag("optimize", o.optimize, "run Kernel Flows before fitting");
    flag("baselines", o.baselines, "also evaluate linear PLS and the initial kernel");
    flag("quiet", o.quiet, "no summary on stdout");
}

// Starts from the preset when there is one and applies explicit options on top.
PipelineConfig resolve_config(const RunOptions& o, const CasePreset* preset) {
    PipelineConfig c;
    if (preset) {
        c = preset->config;
    } else {
        c.init = KernelSpec::make({KernelFamily::gaussian}, 1.0, 1.0);
        c.flow.update_rule = parse_update_rule(o.update_rule);
    }
    auto pick = [&](const std::string& name, auto& field, const auto& value) {
        if (!preset || o.given(name)) field = value;
    };
    if (!preset || o.given("kernel") || o.given("sigma") || o.given("delta")) {
        const auto fams = o.given("kernel") || !preset ? parse_families(o.kernel) : c.init.families;
        const double s = o.given("sigma") || !preset ? o.sigma : c.init.sigma(0);
        const double d = o.given("delta") || !preset ? o.delta : c.init.delta();
        c.init = KernelSpec::make(fams, s, d);
    }
    pick("n-lv", c.n_lv, o.n_lv);
    pick("lv-min", c.lv_min, o.lv_min);
    pick("lv-max", c.lv_max, o.lv_max);
    pick("iterations", c.flow.n_iter, o.iterations);
    if (o.given("update-rule")) c.flow.update_rule = parse_update_rule(o.update_rule);
    pick("learning-rate", c.flow.learning_rate, o.learning_rate);
    pick("momentum", c.flow.momentum, o.momentum);
    pick("nesterov-gamma", c.flow.nesterov_gamma, o.nesterov_gamma);
    pick("subsamples", c.flow.n_subsamples, o.subsamples);
    pick("batch-fraction", c.flow.batch_fraction, o.batch_fraction);
    pick("sub-fraction", c.flow.sub_fraction, o.sub_fraction);
    pick("flow-n-lv", c.flow.n_lv, o.flow_n_lv);
    pick("smoothing-window", c.flow.smoothing_window, o.smoothing_window);
    pick("tolerance", c.flow.tolerance, o.tolerance);
    pick("patience", c.flow.patience, o.patience);
    pick("max-step", c.flow.max_step, o.max_step);
    pick("lr-decay", c.flow.lr_decay, o.lr_decay);
    pick("stratified", c.flow.stratified, o.stratified);
    c.optimize = o.optimize;
    c.baselines = o.baselines;
    c.seed = o.seed;

    detail::require(c.n_lv >= 0, ErrorCategory::config, "n-lv must be >= 0");
    detail::require(c.lv_min >= 1 && c.lv_max >= c.lv_min, ErrorCategory::config, "need 1 <= lv-min <= lv-max");
    return c;
}

Dataset load_data(const RunOptions& o, const CasePreset* preset, Task task) {
    if (preset && !preset->needs_csv) {
        detail::require(o.csv.empty(), ErrorCategory::config,
                        "case " + std::to_string(preset->id) + " generates its data; drop --csv");
        return case_dataset(*preset, o.seed);
    }
    detail::require(!o.csv.empty(), ErrorCategory::config,
                    preset ? "case " + std::to_string(preset->id) + " needs --csv with the public dataset"
                           : std::string("--csv is required"));
    detail::require(!o.response.empty(), ErrorCategory::config, "--response is required with --csv");
    return load_csv(o.csv, o.response, task, o.seed);
}

Task resolve_task(const RunOptions& o, const CasePreset* preset) {
    if (preset && !o.given("task")) return preset->task;
    return parse_task(o.task);
}

fs::path output_path(const RunOptions& o, const std::string& file) {
    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    detail::require(!ec, ErrorCategory::io, "cannot create output directory '" + o.out_dir + "': " + ec.message());
    return fs::path(o.out_dir) / file;
}

void write_file(const fs::path& path, const std::string& text) { write_text(path.string(), text); }

std::vector<std::string> response_names(const Dataset& d) {
    auto names = d.task == Task::classification ? d.class_names : d.y_scaler.names;
    for (Index j = static_cast<Index>(names.size()); j < d.y_cal.cols(); ++j) names.push_back("y" + std::to_string(j));
    return names;
}

std::string test_predictions_csv(const Dataset& d, const ModelEvaluation& e) {
    const auto names = response_names(d);
    const Matrix y_test = d.y_scaler.invert(d.y_test);
    std::vector<std::string> cols = {"row"};
    for (const auto& n : names) cols.insert(cols.end(), {n + "_observed", n + "_predicted"});
    if (d.y_true_test) {
        for (const auto& n : names) cols.push_back(n + "_noiseless");
    }
    if (d.task == Task::classification) cols.insert(cols.end(), {"label_observed", "label_predicted"});
    std::ostringstream out;
    CsvWriter w(out);
    w.header(cols);
    const Matrix y_true = d.y_true_test ? d.y_scaler.invert(*d.y_true_test) : Matrix();
    const auto truth = d.test_labels();
    const auto pred = argmax_rows(e.y_pred);
    for (Index i = 0; i < y_test.rows(); ++i) {
        std::vector<double> row = {static_cast<double>(d.test_index[static_cast<std::size_t>(i)])};
        for (Index j = 0; j < y_test.cols(); ++j) row.insert(row.end(), {y_test(i, j), e.y_pred(i, j)});
        if (d.y_true_test) {
            for (Index j = 0; j < y_true.cols(); ++j) row.push_back(y_true(i, j));
        }
        if (d.task == Task::classification) {
            row.insert(row.end(), {static_cast<double>(truth[static_cast<std::size_t>(i)]),
                                   static_cast<double>(pred[static_cast<std::size_t>(i)])});
        }
        w.row(row);
    }
    return out.str();
}

Json config_json(const std::string& command, const RunOptions& o, const PipelineConfig& c, const CasePreset* preset) {
    Json j = flow_config_json(c.flow);
    j["command"] = command;
    j["case"] = preset ? Json(preset->id) : Json(nullptr);
    j["csv"] = o.csv;
    j["response"] = o.response;
    j["kernel_init"] = kernel_to_json(c.init);
    j["n_lv"] = c.n_lv;
    j["lv_min"] = c.lv_min;
    j["lv_max"] = c.lv_max;
    j["optimize"] = c.optimize;
    j["baselines"] = c.baselines;
    return j;
}

Json evaluation_json(const ModelEvaluation& e) {
    Json j = {{"name", e.name}, {"n_lv", e.n_lv}, {"test", report_to_json(e.report)}};
    if (e.report_true) j["test_noiseless"] = report_to_json(*e.report_true);
    return j;
}

void print_evaluation(const ModelEvaluation& e) {
    std::printf("  %-13s n_lv %3ld  Q2 %.4f  RMSE %.4g  NRMSE %.3f%%", e.name.c_str(), static_cast<long>(e.n_lv),
                e.report.q2, e.report.rmse, e.report.nrmse_percent);
    if (e.report.accuracy) std::printf("  accuracy %.4f", *e.report.accuracy);
    if (e.report_true) {
        std::printf("  | noiseless Q2 %.4f NRMSE %.3f%%", e.report_true->q2, e.report_true->nrmse_percent);
    }
    std::printf("\n");
}

// Full pipeline with every artefact written to the output directory.
int run_and_report(const std::string& command, const RunOptions& o, const CasePreset* preset) {
    const Task task = resolve_task(o, preset);
    const PipelineConfig cfg = resolve_config(o, preset);
    const Dataset d = load_data(o, preset, task);
    const auto r = run_pipeline(d, cfg);

    Json report = {{"version", std::string(kVersion)},
                   {"command", command},
                   {"seed", o.seed},
                   {"config", config_json(command, o, cfg, preset)},
                   {"dataset",
                    {{"task", std::string(to_string(d.task))},
                     {"source", preset && !preset->needs_csv ? preset->name : o.csv},
                     {"n_cal", d.x_cal.rows()},
                     {"n_test", d.x_test.rows()},
                     {"n_features", d.x_cal.cols()},
                     {"predictors", d.x_scaler.names},
                     {"responses", response_names(d)}}},
                   {"kernel", kernel_to_json(r.model.spec)}};
    if (r.flow) report["flow"] = trace_summary_json(r.flow->trace);
    if (r.search) report["lv_search"] = {{"n_lv", r.search->n_lv}, {"score", r.search->score}, {"best", r.search->best}};
    Json models = Json::array({evaluation_json(r.optimized)});
    for (const auto& b : r.baselines) models.push_back(evaluation_json(b));
    report["models"] = models;
    report["timing"] = {{"flow_seconds", r.flow_seconds}, {"total_seconds", r.total_seconds}};

    write_file(output_path(o, "report.json"), report.dump(2) + "\n");
    save_model(make_bundle(r.model, d), output_path(o, "model.json").string());
    write_file(output_path(o, "predictions.csv"), test_predictions_csv(d, r.optimized));
    if (r.flow) {
        std::ostringstream trace;
        write_trace_csv(r.flow->trace, trace);
        write_file(output_path(o, "trace.csv"), trace.str());
    }

    if (!o.quiet) {
        std::printf("%s: %s, %ld calibration / %ld test rows\n", command.c_str(),
                    preset ? preset->name.c_str() : o.csv.c_str(), static_cast<long>(d.x_cal.rows()),
                    static_cast<long>(d.x_test.rows()));
        if (r.flow) {
            const auto& t = r.flow->trace;
            std::printf("  kernel flows: %ld iterations%s, best smoothed loss %.4f, %.2f s\n",
                        static_cast<long>(t.iterations_run), t.converged ? " (converged)" : "",
                        t.best_smoothed_loss, r.flow_seconds);
        }
        const auto names = r.model.spec.parameter_names();
        const Vector nat = r.model.spec.natural();
        std::printf("  kernel %s:", join_families(r.model.spec.families).c_str());
        for (std::size_t i = 0; i < names.size(); ++i) std::printf(" %s=%.5g", names[i].c_str(), nat(static_cast<Index>(i)));
        std::printf("\n");
        print_evaluation(r.optimized);
        for (const auto& b : r.baselines) print_evaluation(b);
        std::printf("  outputs in %s\n", o.out_dir.c_str());
    }
    return 0;
}

int run_predict(const RunOptions& o, const std::string& model_path, const std::string& input, std::string output) {
    const auto b = load_model(model_path);
    const auto t = read_csv(input);
    detail::require(!b.x_scaler.names.empty(), ErrorCategory::parse, "model file has no predictor names");
    const auto cols = resolve_columns(t.header, b.x_scaler.names);
    const Matrix x = t.data(Eigen::all, cols);
    const Matrix y = predict_raw(b, x);

    auto names = b.task == Task::classification ? b.class_names : b.y_scaler.names;
    for (Index j = static_cast<Index>(names.size()); j < y.cols(); ++j) names.push_back("y" + std::to_string(j));
    std::vector<std::string> header = {"row"};
    for (const auto& n : names) header.push_back(n + "_predicted");
    if (b.task == Task::classification) header.emplace_back("label_predicted");
    std::ostringstream out;
    CsvWriter w(out);
    w.header(header);
    const auto labels = argmax_rows(y);
    for (Index i = 0; i < y.rows(); ++i) {
        std::vector<double> row = {static_cast<double>(i)};
        for (Index j = 0; j < y.cols(); ++j) row.push_back(y(i, j));
        if (b.task == Task::classification) row.push_back(labels[static_cast<std::size_t>(i)]);
        w.row(row);
    }
    if (output.empty()) output = output_path(o, "predictions.csv").string();
    write_text(output, out.str());
    if (!o.quiet) std::printf("predict: %ld rows written to %s\n", static_cast<long>(y.rows()), output.c_str());
    return 0;
}

std::vector<double> parse_grid(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        cell = detail::trim(cell);
        if (cell.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        detail::require(used == cell.size() && std::isfinite(v), ErrorCategory::parse,
                        what + ": '" + cell + "' is not a number");
        out.push_back(v);
    }
    detail::require(!out.empty(), ErrorCategory::invalid_argument, what + " is empty");
    return out;
}

int run_sweep_cmd(const RunOptions& o, int case_id, const std::string& axis_name, const std::string& grid_text) {
    const SweepAxis axis = parse_sweep_axis(axis_name);
    const auto grid = parse_grid(grid_text, "--grid");
    std::optional<CasePreset> preset;
    if (case_id > 0) preset = case_preset(case_id);
    const CasePreset* p = preset ? &*preset : nullptr;
    const Task task = resolve_task(o, p);
    SweepInput in;
    in.config = resolve_config(o, p);
    in.data = load_data(o, p, task);
    in.preset = p;
    in.data_seed = o.seed;
    const auto table = run_sweep(axis, grid, in, o.seed);
    std::ostringstream out;
    table.write_csv(out);
    const auto path = output_path(o, "sweep_" + axis_name + ".csv");
    write_file(path, out.str());
    if (!o.quiet) std::printf("sweep: %zu rows written to %s\n", table.rows.size(), path.string().c_str());
    return 0;
}

int run_surface_cmd(const RunOptions& o, int case_id, const std::string& sigmas, const std::string& deltas,
                    Index repeats) {
    std::optional<CasePreset> preset;
    if (case_id > 0) preset = case_preset(case_id);
    const CasePreset* p = preset ? &*preset : nullptr;
    const auto cfg = resolve_config(o, p);
    const Dataset d = load_data(o, p, resolve_task(o, p));
    FlowConfig fc = cfg.flow;
    fc.seed = derive_seed(o.seed, 5);
    const auto table = loss_surface_table(d.x_cal, d.y_cal, parse_grid(sigmas, "--sigma-grid"),
                                          parse_grid(deltas, "--delta-grid"), fc, cfg.init, repeats);
    std::ostringstream out;
    table.write_csv(out);
    const auto path = output_path(o, "loss_surface.csv");
    write_file(path, out.str());
    if (!o.quiet) std::printf("loss-surface: %zu points written to %s\n", table.rows.size(), path.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel PLS with kernel hyperparameters learned by Kernel Flows"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "", "flat key=value file with the shared options (keys are option names)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.fallthrough();

    RunOptions o;
    add_run_options(app, o);

    int case_id = 0;
    auto* case_cmd = app.add_subcommand("case", "run a built-in case study (1 peaks, 2 circles, 3 concrete, 4 soil)");
    case_cmd->add_option("id", case_id, "case number")->required()->check(CLI::Range(1, 4));

    auto* opt_cmd = app.add_subcommand("optimize", "optimise the kernel on --csv and write model, trace and report");

    std::string model_path, input, output;
    auto* pred_cmd = app.add_subcommand("predict", "apply a saved model to a CSV");
    pred_cmd->add_option("--model", model_path, "model file")->required();
    pred_cmd->add_option("--input", input, "CSV holding the model's predictor columns")->required();
    pred_cmd->add_option("--output", output, "predictions file (default <out-dir>/predictions.csv)");

    int sweep_case = 0;
    std::string axis, grid;
    auto* sweep_cmd = app.add_subcommand("sweep", "one pipeline run per grid value of one setting");
    sweep_cmd->add_option("--axis", axis, "n_lv, noise, learning_rate, n_subsamples or init_theta")->required();
    sweep_cmd->add_option("--grid", grid, "comma-separated values")->required();
    sweep_cmd->add_option("--case", sweep_case, "built-in case to sweep instead of --csv")->check(CLI::Range(1, 4));

    int surface_case = 0;
    std::string sigma_grid, delta_grid;
    Index repeats = 5;
    auto* surf_cmd = app.add_subcommand("loss-surface", "Kernel Flows loss over a (sigma, delta) grid");
    surf_cmd->add_option("--sigma-grid", sigma_grid, "comma-separated length-scales")->required();
    surf_cmd->add_option("--delta-grid", delta_grid, "comma-separated ridge values")->required();
    surf_cmd->add_option("--repeats", repeats, "random batches per grid point")->capture_default_str()->check(
        CLI::PositiveNumber);
    surf_cmd->add_option("--case", surface_case, "built-in case instead of --csv")->check(CLI::Range(1, 4));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ConfigError& e) {
        std::cerr << "config: " << e.what() << "\n";
        return 2;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*case_cmd) {
            const auto preset = case_preset(case_id);
            return run_and_report("case", o, &preset);
        }
        if (*opt_cmd) return run_and_report("optimize", o, nullptr);
        if (*pred_cmd) return run_predict(o, model_path, input, output);
        if (*sweep_cmd) return run_sweep_cmd(o, sweep_case, axis, grid);
        if (*surf_cmd) return run_surface_cmd(o, surface_case, sigma_grid, delta_grid, repeats);
    } catch (const Error& e) {
        std::cerr << to_string(e.category()) << ": " << e.what() << "\n";
        return e.category() == ErrorCategory::config ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
