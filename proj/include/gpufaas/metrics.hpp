#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpufaas/sched.hpp"
#include "gpufaas/sim_time.hpp"
#include "gpufaas/workload.hpp"

namespace gpufaas {

struct ModelTally {
    std::int64_t dispatches = 0;
    std::int64_t hits = 0;
    std::int64_t misses = 0;

    bool operator==(const ModelTally&) const = default;
};

struct SimReport {
    std::int64_t request_count = 0;
    double total_sim_time_s = 0.0;

    // Empty when the run had no requests (or no dispatches).
    std::optional<double> avg_latency_s;
    std::optional<double> latency_variance_s2;  // population variance
    std::optional<double> cache_miss_ratio;     // misses / dispatches
    std::optional<double> false_miss_ratio;     // false misses / dispatches
    std::optional<double> avg_top_model_duplicates;  // time-weighted copy count
    std::optional<double> utilization_busy;          // load + infer time share
    std::optional<double> utilization_infer_only;    // infer time share only

    std::int64_t hits = 0;
    std::int64_t misses = 0;
    std::int64_t false_misses = 0;
    std::int64_t local_enqueues = 0;
    std::int64_t evictions = 0;
    int max_skip_count = 0;
    std::string top_model;  // most requested model (ties: lexicographically first)

    std::map<std::string, ModelTally> per_model;
};

// Collects per-decision counters during a run; latency statistics are
// computed at the end straight from the request records so the accumulation
// order is fixed regardless of completion interleaving.
class MetricsAccumulator {
public:
    MetricsAccumulator(std::string top_model_id, int gpu_count);

    void record_decision(const Decision& d, const std::string& model_id);
    // Advance the duplicates integral to `now` with the copy count that held
    // since the previous call.
    void record_top_model_copies(SimTime now, int copies);

    SimReport finalize(SimTime end_us, const std::vector<Request>& requests);

private:
    std::string top_model_;
    int gpu_count_;
    std::int64_t hits_ = 0;
    std::int64_t misses_ = 0;
    std::int64_t false_misses_ = 0;
    std::int64_t local_enqueues_ = 0;
    std::int64_t evictions_ = 0;
    int max_skip_ = 0;
    SimTime busy_us_ = 0;
    SimTime infer_us_ = 0;
    std::map<std::string, ModelTally> per_model_;

    // running integral of top-model copies over time
    double copy_area_ = 0.0;
    SimTime copies_since_ = 0;
    int current_copies_ = 0;
};

nlohmann::json report_to_json(const SimReport& report);

// Flat metric columns for tabular output; values align with the names and
// use empty strings for absent metrics.
std::vector<std::string> report_csv_fields();
std::vector<std::string> report_csv_values(const SimReport& report);

}  // namespace gpufaas
