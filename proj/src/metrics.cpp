#include "gpufaas/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace gpufaas {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

MetricsAccumulator::MetricsAccumulator(std::string top_model_id, int gpu_count)
    : top_model_(std::move(top_model_id)), gpu_count_(gpu_count) {
    if (gpu_count_ <= 0) throw std::runtime_error("metrics: gpu_count must be positive");
}

void MetricsAccumulator::record_decision(const Decision& d, const std::string& model_id) {
    max_skip_ = std::max(max_skip_, d.skip_count);
    switch (d.kind) {
        case DecisionKind::DispatchHitIdle:
        case DecisionKind::DispatchMissIdle: {
            ModelTally& tally = per_model_[model_id];
            tally.dispatches += 1;
            if (d.kind == DecisionKind::DispatchHitIdle) {
                hits_ += 1;
                tally.hits += 1;
            } else {
                misses_ += 1;
                tally.misses += 1;
                if (d.false_miss) false_misses_ += 1;
            }
            evictions_ += static_cast<std::int64_t>(d.evicted.size());
            busy_us_ += d.load_us + d.infer_us;
            infer_us_ += d.infer_us;
            break;
        }
        case DecisionKind::EnqueueLocalBusy:
            local_enqueues_ += 1;
            break;
        case DecisionKind::NoAction:
            throw std::logic_error("metrics: NoAction must not be recorded");
    }
}

void MetricsAccumulator::record_top_model_copies(SimTime now, int copies) {
    if (now < copies_since_) throw std::logic_error("metrics: time went backwards");
    copy_area_ += static_cast<double>(now - copies_since_) * current_copies_;
    copies_since_ = now;
    current_copies_ = copies;
}

SimReport MetricsAccumulator::finalize(SimTime end_us, const std::vector<Request>& requests) {
    SimReport r;
    r.request_count = static_cast<std::int64_t>(requests.size());
    r.total_sim_time_s = us_to_seconds(end_us);
    r.hits = hits_;
    r.misses = misses_;
    r.false_misses = false_misses_;
    r.local_enqueues = local_enqueues_;
    r.evictions = evictions_;
    r.max_skip_count = max_skip_;
    r.top_model = top_model_;
    r.per_model = per_model_;

    std::int64_t dispatches = hits_ + misses_;
    if (dispatches != r.request_count)
        throw std::logic_error("metrics: dispatched " + std::to_string(dispatches) +
                               " of " + std::to_string(r.request_count) + " requests");
    if (dispatches > 0) {
        r.cache_miss_ratio = static_cast<double>(misses_) / static_cast<double>(dispatches);
        r.false_miss_ratio =
            static_cast<double>(false_misses_) / static_cast<double>(dispatches);
    }

    if (!requests.empty()) {
        double sum = 0.0;
        for (const Request& req : requests) {
            if (req.completed_at_us < req.arrival_us)
                throw std::logic_error("metrics: request " + std::to_string(req.request_id) +
                                       " never completed");
            sum += us_to_seconds(req.completed_at_us - req.arrival_us);
        }
        double mean = sum / static_cast<double>(requests.size());
        double var = 0.0;
        for (const Request& req : requests) {
            double d = us_to_seconds(req.completed_at_us - req.arrival_us) - mean;
            var += d * d;
        }
        r.avg_latency_s = mean;
        r.latency_variance_s2 = var / static_cast<double>(requests.size());
    }

    if (end_us > 0) {
        record_top_model_copies(end_us, current_copies_);  // close the integral
        r.avg_top_model_duplicates = copy_area_ / static_cast<double>(end_us);
        double cluster_time = static_cast<double>(end_us) * gpu_count_;
        r.utilization_busy = static_cast<double>(busy_us_) / cluster_time;
        r.utilization_infer_only = static_cast<double>(infer_us_) / cluster_time;
    }
    return r;
}

nlohmann::json report_to_json(const SimReport& r) {
    nlohmann::json j;
    j["request_count"] = r.request_count;
    j["total_sim_time_s"] = r.total_sim_time_s;
    auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v)
            j[key] = *v;
        else
            j[key] = nullptr;
    };
    put("avg_latency_s", r.avg_latency_s);
    put("latency_variance_s2", r.latency_variance_s2);
    put("cache_miss_ratio", r.cache_miss_ratio);
    put("false_miss_ratio", r.false_miss_ratio);
    put("avg_top_model_duplicates", r.avg_top_model_duplicates);
    put("utilization_busy", r.utilization_busy);
    put("utilization_infer_only", r.utilization_infer_only);
    j["hits"] = r.hits;
    j["misses"] = r.misses;
    j["false_misses"] = r.false_misses;
    j["local_enqueues"] = r.local_enqueues;
    j["evictions"] = r.evictions;
    j["max_skip_count"] = r.max_skip_count;
    j["top_model"] = r.top_model;
    nlohmann::json models = nlohmann::json::object();
    for (const auto& [model, tally] : r.per_model) {
        models[model] = {{"dispatches", tally.dispatches},
                         {"hits", tally.hits},
                         {"misses", tally.misses}};
    }
    j["per_model"] = models;
    return j;
}

std::vector<std::string> report_csv_fields() {
    return {"request_count",     "total_sim_time_s",  "avg_latency_s",
            "latency_variance_s2", "cache_miss_ratio", "false_miss_ratio",
            "avg_top_model_duplicates", "utilization_busy", "utilization_infer_only",
            "hits",              "misses",            "false_misses",
            "local_enqueues",    "evictions",         "max_skip_count",
            "top_model"};
}

std::vector<std::string> report_csv_values(const SimReport& r) {
    auto opt = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    return {std::to_string(r.request_count),
            format_double(r.total_sim_time_s),
            opt(r.avg_latency_s),
            opt(r.latency_variance_s2),
            opt(r.cache_miss_ratio),
            opt(r.false_miss_ratio),
            opt(r.avg_top_model_duplicates),
            opt(r.utilization_busy),
            opt(r.utilization_infer_only),
            std::to_string(r.hits),
            std::to_string(r.misses),
            std::to_string(r.false_misses),
            std::to_string(r.local_enqueues),
            std::to_string(r.evictions),
            std::to_string(r.max_skip_count),
            r.top_model};
}

}  // namespace gpufaas
