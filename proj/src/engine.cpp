#include "gpufaas/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace gpufaas {

namespace {

struct SimEvent {
    SimTime t = 0;
    int kind = 0;  // 0 = completion, 1 = arrival; completions first on ties
    std::uint64_t seq = 0;
    int payload = 0;  // gpu_id for completions, request_id for arrivals

    bool operator>(const SimEvent& other) const {
        if (t != other.t) return t > other.t;
        if (kind != other.kind) return kind > other.kind;
        return seq > other.seq;
    }
};

void validate_stream(const std::vector<Request>& requests, const SimConfig& cfg,
                     const Catalog& catalog) {
    SimTime prev = 0;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const Request& r = requests[i];
        if (r.request_id != static_cast<int>(i))
            throw std::runtime_error("request stream: ids must be 0..n-1 in order");
        if (r.arrival_us < prev)
            throw std::runtime_error("request stream: arrivals must be sorted");
        prev = r.arrival_us;
        const ModelProfile& p = catalog.lookup(r.model_id);  // throws when unknown
        if (p.occupation_mb > cfg.capacity_mb)
            throw std::runtime_error("model '" + p.model_id + "' (" +
                                     std::to_string(p.occupation_mb) +
                                     " MB) cannot fit in gpu memory of " +
                                     std::to_string(cfg.capacity_mb) + " MB");
    }
}

std::string most_requested_model(const std::vector<Request>& requests) {
    std::map<std::string, std::int64_t> counts;
    for (const Request& r : requests) counts[r.model_id] += 1;
    std::string best;
    std::int64_t best_count = -1;
    for (const auto& [model, n] : counts) {  // ascending keys: ties keep first
        if (n > best_count) {
            best = model;
            best_count = n;
        }
    }
    return best;
}

}  // namespace

EventLogger::EventLogger(std::ostream& out, bool dump_caches)
    : out_(out), dump_caches_(dump_caches) {}

void EventLogger::emit(nlohmann::json line, const ClusterState* cluster) {
    if (dump_caches_ && cluster) {
        nlohmann::json caches = nlohmann::json::array();
        for (int g = 0; g < cluster->gpu_count(); ++g)
            caches.push_back(cluster->gpu(g).cached_model_ids());
        line["caches"] = std::move(caches);
    }
    out_ << line.dump() << "\n";
}

void EventLogger::arrival(SimTime t, const Request& r) {
    emit({{"t_us", t}, {"event", "arrival"}, {"request_id", r.request_id}}, nullptr);
}

void EventLogger::decision(SimTime t, const Decision& d, const ClusterState& cluster) {
    nlohmann::json line{{"t_us", t},
                        {"event", "decision"},
                        {"decision", decision_kind_to_string(d.kind)},
                        {"request_id", d.request_id},
                        {"gpu_id", d.gpu_id},
                        {"skip_count", d.skip_count}};
    if (d.kind != DecisionKind::EnqueueLocalBusy) {
        line["hit"] = d.kind == DecisionKind::DispatchHitIdle;
        line["false_miss"] = d.false_miss;
    }
    emit(std::move(line), &cluster);
}

void EventLogger::completion(SimTime t, int gpu_id, int request_id,
                             const ClusterState& cluster) {
    emit({{"t_us", t}, {"event", "completion"}, {"gpu_id", gpu_id}, {"request_id", request_id}},
         &cluster);
}

SimResult run_stream(const SimConfig& cfg, const Catalog& catalog,
                     std::vector<Request> requests, EventLogger* logger,
                     SchedulerPolicyBase* policy) {
    validate_stream(requests, cfg, catalog);

    Scheduler default_policy(cfg.scheduler);
    SchedulerPolicyBase& sched = policy ? *policy : default_policy;

    ClusterState cluster(cfg.gpu_count, cfg.capacity_mb);
    GlobalQueue queue;
    std::string top_model = most_requested_model(requests);
    MetricsAccumulator metrics(top_model, cfg.gpu_count);

    std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<SimEvent>> events;
    std::uint64_t seq = 0;
    for (const Request& r : requests)
        events.push(SimEvent{r.arrival_us, 1, seq++, r.request_id});

    SimResult result;
    SimTime now = 0;
    while (!events.empty()) {
        SimEvent ev = events.top();
        events.pop();
        if (ev.t < now) throw std::logic_error("engine: event time went backwards");
        now = ev.t;

        if (ev.kind == 0) {
            int request_id = cluster.complete(ev.payload, now);
            requests[static_cast<std::size_t>(request_id)].completed_at_us = now;
            if (logger) logger->completion(now, ev.payload, request_id, cluster);
        } else {
            const Request& r = requests[static_cast<std::size_t>(ev.payload)];
            queue.enqueue(r.request_id, r.model_id);
            if (logger) logger->arrival(now, r);
        }

        SchedulerContext ctx{queue, cluster, requests, catalog, now};
        for (Decision& d : sched.on_scheduling_point(ctx)) {
            if (d.kind == DecisionKind::DispatchHitIdle ||
                d.kind == DecisionKind::DispatchMissIdle)
                events.push(SimEvent{d.completion_us, 0, seq++, d.gpu_id});
            metrics.record_decision(
                d, requests[static_cast<std::size_t>(d.request_id)].model_id);
            if (logger) logger->decision(now, d, cluster);
            result.decisions.push_back(std::move(d));
        }
        metrics.record_top_model_copies(now, cluster.location_count(top_model));

        if (cfg.debug_checks) {
            cluster.check_consistency();
            queue.check_consistency();
        }
    }

    if (!queue.empty())
        throw std::logic_error("engine: " + std::to_string(queue.size()) +
                               " requests still queued after the last event");
    if (!cluster.fully_drained())
        throw std::logic_error("engine: cluster still has running or locally queued work");
    for (const Request& r : requests)
        if (r.completed_at_us < 0)
            throw std::logic_error("engine: request " + std::to_string(r.request_id) +
                                   " never completed");
    int limit = cfg.scheduler.effective_o3_limit();
    for (const Request& r : requests)
        if (policy == nullptr && r.skip_count > limit)
            throw std::logic_error("engine: request " + std::to_string(r.request_id) +
                                   " bypassed " + std::to_string(r.skip_count) +
                                   " times (limit " + std::to_string(limit) + ")");

    result.report = metrics.finalize(now, requests);
    result.requests = std::move(requests);
    return result;
}

SimReport run(const SimConfig& cfg, const Catalog& catalog, const TraceMatrix& trace,
              EventLogger* logger) {
    std::vector<Request> requests = synthesize_workload(trace, cfg.workload, catalog);
    return run_stream(cfg, catalog, std::move(requests), logger).report;
}

TraceMatrix load_or_make_trace(const SimConfig& cfg) {
    if (cfg.use_synthetic_trace) return make_synthetic_trace(cfg.synthetic);
    if (cfg.trace_path.empty())
        throw std::runtime_error("no trace file given and synthetic trace disabled");
    return load_trace(cfg.trace_path);
}

SimReport run(const SimConfig& cfg) {
    if (cfg.catalog_path.empty()) throw std::runtime_error("no catalog file given");
    Catalog catalog = load_catalog(cfg.catalog_path);
    TraceMatrix trace = load_or_make_trace(cfg);
    return run(cfg, catalog, trace);
}

std::string trace_label(const SimConfig& cfg) {
    return cfg.use_synthetic_trace ? "synthetic" : cfg.trace_path;
}

nlohmann::json config_to_json(const SimConfig& cfg) {
    nlohmann::json j;
    j["scheduler"] = policy_to_string(cfg.scheduler.policy);
    j["o3_limit"] = cfg.scheduler.o3_limit;
    j["effective_o3_limit"] = cfg.scheduler.effective_o3_limit();
    j["gpu_count"] = cfg.gpu_count;
    j["capacity_mb"] = cfg.capacity_mb;
    j["working_set_size"] = cfg.workload.working_set_size;
    j["per_minute_total"] = cfg.workload.per_minute_total;
    j["duration_minutes"] = cfg.workload.duration_minutes;
    j["workload_seed"] = cfg.workload.seed;
    j["trace"] = trace_label(cfg);
    if (cfg.use_synthetic_trace) {
        j["synthetic"] = {{"function_count", cfg.synthetic.function_count},
                          {"minutes", cfg.synthetic.minutes},
                          {"draws_per_minute", cfg.synthetic.draws_per_minute},
                          {"zipf_exponent", cfg.synthetic.zipf_exponent},
                          {"seed", cfg.synthetic.seed}};
    }
    return j;
}

SimConfig apply_axis(SimConfig base, const std::string& axis, const std::string& value) {
    auto as_int = [&](std::int64_t lo, std::int64_t hi) {
        std::size_t pos = 0;
        std::int64_t v = 0;
        try {
            v = std::stoll(value, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != value.size())
            throw std::runtime_error("sweep: bad integer '" + value + "' for axis " + axis);
        if (v < lo || v > hi)
            throw std::runtime_error("sweep: value " + value + " out of range for axis " + axis);
        return v;
    };
    if (axis == "scheduler")
        base.scheduler.policy = policy_from_string(value);
    else if (axis == "o3_limit")
        base.scheduler.o3_limit = static_cast<int>(as_int(0, 1'000'000));
    else if (axis == "working_set")
        base.workload.working_set_size = static_cast<int>(as_int(1, 1'000'000));
    else if (axis == "gpus")
        base.gpu_count = static_cast<int>(as_int(1, 100'000));
    else if (axis == "mem_mb")
        base.capacity_mb = static_cast<double>(as_int(1, 100'000'000));
    else if (axis == "rpm")
        base.workload.per_minute_total = static_cast<int>(as_int(1, 100'000'000));
    else if (axis == "minutes")
        base.workload.duration_minutes = static_cast<int>(as_int(1, 1'000'000));
    else if (axis == "seed")
        base.workload.seed = static_cast<std::uint64_t>(as_int(0, std::numeric_limits<std::int64_t>::max()));
    else
        throw std::runtime_error(
            "sweep: unknown axis '" + axis +
            "' (expected scheduler, o3_limit, working_set, gpus, mem_mb, rpm, minutes or seed)");
    return base;
}

std::vector<SweepRun> run_sweep(const SimConfig& base, const std::string& axis,
                                const std::vector<std::string>& values, int jobs) {
    if (values.empty()) throw std::runtime_error("sweep: no values given");
    if (jobs < 1) throw std::runtime_error("sweep: jobs must be >= 1");

    std::vector<SweepRun> runs;
    runs.reserve(values.size());
    for (const std::string& v : values)
        runs.push_back(SweepRun{axis, v, apply_axis(base, axis, v), SimReport{}});

    // Inputs are deterministic per run, so parallel waves keep results
    // identical to a sequential sweep.
    for (std::size_t begin = 0; begin < runs.size(); begin += static_cast<std::size_t>(jobs)) {
        std::size_t end = std::min(runs.size(), begin + static_cast<std::size_t>(jobs));
        std::vector<std::future<SimReport>> wave;
        for (std::size_t i = begin; i < end; ++i) {
            const SimConfig& cfg = runs[i].config;
            wave.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async,
                                      [&cfg] { return run(cfg); }));
        }
        for (std::size_t i = begin; i < end; ++i) runs[i].report = wave[i - begin].get();
    }
    return runs;
}

std::string runs_to_csv(const std::vector<SweepRun>& runs) {
    std::string out =
        "scheduler,o3_limit,working_set,gpus,mem_mb,rpm,minutes,seed,trace";
    for (const std::string& f : report_csv_fields()) out += "," + f;
    out += "\n";
    for (const SweepRun& run : runs) {
        const SimConfig& c = run.config;
        out += policy_to_string(c.scheduler.policy);
        out += "," + std::to_string(c.scheduler.o3_limit);
        out += "," + std::to_string(c.workload.working_set_size);
        out += "," + std::to_string(c.gpu_count);
        char mb[32];
        std::snprintf(mb, sizeof mb, "%.12g", c.capacity_mb);
        out += std::string(",") + mb;
        out += "," + std::to_string(c.workload.per_minute_total);
        out += "," + std::to_string(c.workload.duration_minutes);
        out += "," + std::to_string(c.workload.seed);
        out += "," + trace_label(c);
        for (const std::string& v : report_csv_values(run.report)) out += "," + v;
        out += "\n";
    }
    return out;
}

nlohmann::json runs_to_json(const std::vector<SweepRun>& runs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SweepRun& run : runs) {
        arr.push_back({{"axis", run.axis},
                       {"value", run.value},
                       {"config", config_to_json(run.config)},
                       {"metrics", report_to_json(run.report)}});
    }
    return arr;
}

}  // namespace gpufaas
