#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpufaas/catalog.hpp"
#include "gpufaas/cluster.hpp"
#include "gpufaas/metrics.hpp"
#include "gpufaas/sched.hpp"
#include "gpufaas/sim_time.hpp"
#include "gpufaas/trace.hpp"
#include "gpufaas/workload.hpp"

namespace gpufaas {

struct SimConfig {
    int gpu_count = 12;
    double capacity_mb = 8192.0;
    SchedulerConfig scheduler;
    WorkloadSpec workload;

    std::string catalog_path;
    std::string trace_path;          // ignored when use_synthetic_trace
    bool use_synthetic_trace = true;
    SyntheticTraceParams synthetic;

    bool debug_checks = false;  // full structural validation after every event
};

nlohmann::json config_to_json(const SimConfig& cfg);
std::string trace_label(const SimConfig& cfg);  // path or "synthetic"

// JSON-lines sink for the simulation event stream. Lines carry only integers,
// strings and booleans, so identical runs serialize to identical bytes.
class EventLogger {
public:
    explicit EventLogger(std::ostream& out, bool dump_caches = false);

    void arrival(SimTime t, const Request& r);
    void decision(SimTime t, const Decision& d, const ClusterState& cluster);
    void completion(SimTime t, int gpu_id, int request_id, const ClusterState& cluster);

private:
    void emit(nlohmann::json line, const ClusterState* cluster);
    std::ostream& out_;
    bool dump_caches_;
};

struct SimResult {
    SimReport report;
    std::vector<Request> requests;    // with dispatch/completion times filled
    std::vector<Decision> decisions;  // full decision stream in order
};

// Core loop over an explicit request stream (must be arrival-sorted with ids
// 0..n-1). `policy` overrides the scheduler built from cfg when non-null.
SimResult run_stream(const SimConfig& cfg, const Catalog& catalog,
                     std::vector<Request> requests, EventLogger* logger = nullptr,
                     SchedulerPolicyBase* policy = nullptr);

SimReport run(const SimConfig& cfg, const Catalog& catalog, const TraceMatrix& trace,
              EventLogger* logger = nullptr);
SimReport run(const SimConfig& cfg);  // loads catalog and trace per cfg

TraceMatrix load_or_make_trace(const SimConfig& cfg);

// Parameter sweeps. Axis names: scheduler, o3_limit, working_set, gpus,
// mem_mb, rpm, minutes, seed. Values are parsed per axis; anything else is an
// error. Runs may execute in parallel (jobs > 1); results keep values order.
SimConfig apply_axis(SimConfig base, const std::string& axis, const std::string& value);

struct SweepRun {
    std::string axis;
    std::string value;
    SimConfig config;
    SimReport report;
};

std::vector<SweepRun> run_sweep(const SimConfig& base, const std::string& axis,
                                const std::vector<std::string>& values, int jobs = 1);

// Table with one row per run: config echo columns followed by the metric
// columns from report_csv_fields().
std::string runs_to_csv(const std::vector<SweepRun>& runs);
nlohmann::json runs_to_json(const std::vector<SweepRun>& runs);

}  // namespace gpufaas
