#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gpufaas/engine.hpp"

namespace {

using namespace gpufaas;

struct CliOptions {
    SimConfig cfg;
    std::string scheduler = "lalbo3";
    std::string out_path;
    std::string format = "json";
    std::string event_log_path;
    bool log_caches = false;
    bool force_synthetic = false;
};

void add_common_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--scheduler", opt.scheduler, "Scheduling policy")
        ->check(CLI::IsMember({"lb", "lalb", "lalbo3"}))
        ->capture_default_str();
    cmd->add_option("--o3-limit", opt.cfg.scheduler.o3_limit,
                    "Max times a request may be bypassed (lalbo3 only)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--working-set", opt.cfg.workload.working_set_size,
                    "Number of top trace functions to keep")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--gpus", opt.cfg.gpu_count, "Number of GPUs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--mem-mb", opt.cfg.capacity_mb, "Per-GPU memory in MB")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--rpm", opt.cfg.workload.per_minute_total,
                    "Requests per simulated minute")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--minutes", opt.cfg.workload.duration_minutes, "Simulated minutes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--seed", opt.cfg.workload.seed, "Arrival-offset seed")
        ->capture_default_str();
    cmd->add_option("--trace", opt.cfg.trace_path,
                    "Trace CSV (function_id,m1,...); omit to synthesize one");
    cmd->add_flag("--synthetic-trace", opt.force_synthetic,
                  "Use the built-in synthetic trace even if --trace is set");
    cmd->add_option("--catalog", opt.cfg.catalog_path, "Model catalog CSV")
        ->capture_default_str();
    cmd->add_option("--trace-seed", opt.cfg.synthetic.seed, "Synthetic trace seed")
        ->capture_default_str();
    cmd->add_option("--synthetic-functions", opt.cfg.synthetic.function_count,
                    "Synthetic trace function count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--synthetic-draws", opt.cfg.synthetic.draws_per_minute,
                    "Synthetic trace invocations per minute")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--synthetic-zipf", opt.cfg.synthetic.zipf_exponent,
                    "Synthetic trace popularity skew exponent")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_flag("--debug-checks", opt.cfg.debug_checks,
                  "Re-validate every internal structure after each event");
}

void add_output_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--out", opt.out_path, "Write the result here instead of stdout");
    cmd->add_option("--format", opt.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
}

SimConfig finalize_config(CliOptions& opt) {
    opt.cfg.scheduler.policy = policy_from_string(opt.scheduler);
    opt.cfg.use_synthetic_trace = opt.force_synthetic || opt.cfg.trace_path.empty();
    opt.cfg.synthetic.minutes =
        std::max(opt.cfg.synthetic.minutes, opt.cfg.workload.duration_minutes);
    return opt.cfg;
}

// Write via a temp file + rename so a crash never leaves a half-written file.
void write_file_atomically(const std::string& path, const std::string& content) {
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.good()) throw std::runtime_error("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
}

void emit(const CliOptions& opt, const std::string& content) {
    if (opt.out_path.empty())
        std::cout << content;
    else
        write_file_atomically(opt.out_path, content);
}

std::string render_single_run(const CliOptions& opt, const SimConfig& cfg,
                              const SimReport& report) {
    if (opt.format == "csv")
        return runs_to_csv({SweepRun{"", "", cfg, report}});
    nlohmann::json j{{"config", config_to_json(cfg)}, {"metrics", report_to_json(report)}};
    return j.dump(2) + "\n";
}

int cmd_run(CliOptions& opt) {
    SimConfig cfg = finalize_config(opt);
    Catalog catalog = load_catalog(cfg.catalog_path);
    TraceMatrix trace = load_or_make_trace(cfg);

    SimReport report;
    if (opt.event_log_path.empty()) {
        report = run(cfg, catalog, trace);
    } else {
        std::ostringstream log;
        EventLogger logger(log, opt.log_caches);
        report = run(cfg, catalog, trace, &logger);
        write_file_atomically(opt.event_log_path, log.str());
    }
    emit(opt, render_single_run(opt, cfg, report));
    return 0;
}

int cmd_compare(CliOptions& opt) {
    SimConfig cfg = finalize_config(opt);
    std::vector<SweepRun> runs =
        run_sweep(cfg, "scheduler", {"lb", "lalb", "lalbo3"}, 1);

    if (!opt.out_path.empty() || opt.format == "csv") {
        emit(opt, opt.format == "csv" ? runs_to_csv(runs) : runs_to_json(runs).dump(2) + "\n");
        return 0;
    }

    auto metric = [](const std::optional<double>& v) { return v ? *v : 0.0; };
    std::printf("%-8s %14s %16s %16s %12s %12s\n", "policy", "avg_latency_s",
                "cache_miss_ratio", "false_miss_ratio", "duplicates", "util_busy");
    for (const SweepRun& r : runs) {
        std::printf("%-8s %14.4f %16.4f %16.4f %12.4f %12.4f\n",
                    policy_to_string(r.config.scheduler.policy).c_str(),
                    metric(r.report.avg_latency_s), metric(r.report.cache_miss_ratio),
                    metric(r.report.false_miss_ratio),
                    metric(r.report.avg_top_model_duplicates),
                    metric(r.report.utilization_busy));
    }
    const SimReport& lb = runs[0].report;
    auto reduction = [&](const std::optional<double>& base, const std::optional<double>& v) {
        if (!base || !v || *base == 0.0) return std::string("n/a");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f%%", (*base - *v) / *base * 100.0);
        return std::string(buf);
    };
    for (std::size_t i = 1; i < runs.size(); ++i) {
        const SimReport& r = runs[i].report;
        std::printf("%s vs lb: avg latency -%s, misses -%s, false misses -%s\n",
                    policy_to_string(runs[i].config.scheduler.policy).c_str(),
                    reduction(lb.avg_latency_s, r.avg_latency_s).c_str(),
                    reduction(lb.cache_miss_ratio, r.cache_miss_ratio).c_str(),
                    reduction(lb.false_miss_ratio, r.false_miss_ratio).c_str());
    }
    return 0;
}

int cmd_sweep(CliOptions& opt, const std::string& axis, std::vector<std::string>& values,
              int jobs) {
    SimConfig cfg = finalize_config(opt);
    std::vector<SweepRun> runs = run_sweep(cfg, axis, values, jobs);
    emit(opt, opt.format == "csv" ? runs_to_csv(runs) : runs_to_json(runs).dump(2) + "\n");
    return 0;
}

int cmd_validate(CliOptions& opt) {
    SimConfig cfg = finalize_config(opt);
    Catalog catalog = load_catalog(cfg.catalog_path);
    std::printf("catalog: %zu models from %s\n", catalog.size(), cfg.catalog_path.c_str());

    TraceMatrix trace = load_or_make_trace(cfg);
    std::printf("trace: %zu functions x %d minutes, %lld invocations (%s)\n",
                trace.functions.size(), trace.minutes,
                static_cast<long long>(trace.grand_total()), trace_label(cfg).c_str());

    int ws = cfg.workload.working_set_size;
    std::printf("working set: top %d functions carry %.2f%% of invocations\n", ws,
                100.0 * top_share(trace, ws));
    std::printf("top-15 share: %.2f%% (expect a majority on skewed traces)\n",
                100.0 * top_share(trace, std::min(15, static_cast<int>(trace.functions.size()))));

    std::vector<Request> requests = synthesize_workload(trace, cfg.workload, catalog);
    std::printf("workload: %zu requests over %d minutes (%d per minute)\n", requests.size(),
                cfg.workload.duration_minutes, cfg.workload.per_minute_total);

    double max_occupation = 0.0;
    for (const Request& r : requests)
        max_occupation = std::max(max_occupation, catalog.lookup(r.model_id).occupation_mb);
    std::printf("memory: largest referenced model %.0f MB vs %.0f MB per gpu\n", max_occupation,
                cfg.capacity_mb);
    if (max_occupation > cfg.capacity_mb)
        throw std::runtime_error("largest referenced model does not fit in gpu memory");
    std::printf("ok\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace-driven simulator of a GPU-backed FaaS inference cluster"};
    app.require_subcommand(1);
    app.fallthrough();  // lets `run --config ...` reach the app-level option
    app.set_config("--config", "",
                   "Read options from an INI/TOML file; subcommand options live in a "
                   "section named for the subcommand, e.g. [run]");
    app.allow_config_extras(CLI::config_extras_mode::error);  // typos should not pass silently

    CliOptions opt;
    opt.cfg.catalog_path = "data/models.csv";

    CLI::App* c_run = app.add_subcommand("run", "Run one simulation and report metrics");
    add_common_options(c_run, opt);
    add_output_options(c_run, opt);
    c_run->add_option("--event-log", opt.event_log_path,
                      "Write a JSON-lines event trace to this file");
    c_run->add_flag("--log-caches", opt.log_caches,
                    "Include per-GPU cache contents in the event log");

    CLI::App* c_compare =
        app.add_subcommand("compare", "Run lb, lalb and lalbo3 on the same workload");
    add_common_options(c_compare, opt);
    add_output_options(c_compare, opt);

    std::string axis = "o3_limit";
    std::vector<std::string> values;
    int jobs = 1;
    CLI::App* c_sweep = app.add_subcommand("sweep", "Vary one parameter across runs");
    add_common_options(c_sweep, opt);
    add_output_options(c_sweep, opt);
    c_sweep->add_option("--axis", axis,
                        "Swept parameter: scheduler, o3_limit, working_set, gpus, mem_mb, "
                        "rpm, minutes or seed")
        ->capture_default_str();
    c_sweep->add_option("--values", values, "Values for the swept parameter")
        ->required()
        ->delimiter(',');
    c_sweep->add_option("--jobs", jobs, "Max simulations to run concurrently")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    CLI::App* c_validate =
        app.add_subcommand("validate", "Check catalog, trace and workload without simulating");
    add_common_options(c_validate, opt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_run->parsed()) return cmd_run(opt);
        if (c_compare->parsed()) return cmd_compare(opt);
        if (c_sweep->parsed()) return cmd_sweep(opt, axis, values, jobs);
        if (c_validate->parsed()) return cmd_validate(opt);
    } catch (const std::logic_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
