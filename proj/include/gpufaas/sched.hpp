#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "gpufaas/catalog.hpp"
#include "gpufaas/cluster.hpp"
#include "gpufaas/sim_time.hpp"
#include "gpufaas/workload.hpp"

namespace gpufaas {

enum class Policy { LB, LALB, LALBO3 };

std::string policy_to_string(Policy p);
Policy policy_from_string(const std::string& s);

struct SchedulerConfig {
    Policy policy = Policy::LALBO3;
    int o3_limit = 25;  // max times one request may be bypassed

    // Out-of-order dispatch only exists in LALBO3; other policies behave as
    // a limit of zero regardless of the configured value.
    int effective_o3_limit() const { return policy == Policy::LALBO3 ? o3_limit : 0; }
};

enum class DecisionKind {
    DispatchHitIdle,    // started on an idle GPU, model resident
    DispatchMissIdle,   // started on an idle GPU, model loaded first
    EnqueueLocalBusy,   // parked in a busy GPU's local queue
    NoAction,           // nothing dispatchable (never materialized as a record)
};

std::string decision_kind_to_string(DecisionKind k);

struct Decision {
    DecisionKind kind = DecisionKind::NoAction;
    int request_id = -1;
    int gpu_id = -1;
    bool from_local_queue = false;  // dispatched by draining the local queue
    bool false_miss = false;        // missed here while resident elsewhere
    int skip_count = 0;             // request's bypass count at decision time
    SimTime completion_us = -1;     // dispatch kinds only
    SimTime load_us = 0;            // time spent loading (0 on hits)
    SimTime infer_us = 0;
    std::vector<std::string> evicted;

    bool operator==(const Decision&) const = default;
};

// Arrival-ordered queue of waiting request ids with a per-model view.
class GlobalQueue {
public:
    void enqueue(int request_id, const std::string& model_id);
    void remove(int request_id);  // throws logic_error if absent
    bool contains(int request_id) const { return entries_.count(request_id) != 0; }
    bool empty() const { return order_.empty(); }
    std::size_t size() const { return order_.size(); }

    // Arrival order (front = oldest).
    const std::list<int>& order() const { return order_; }
    // Queued ids carrying `model_id`, arrival order; empty list if none.
    const std::list<int>& queued_for(const std::string& model_id) const;

    void check_consistency() const;  // throws logic_error

private:
    struct Entry {
        std::list<int>::iterator order_it;
        std::list<int>::iterator model_it;
        std::string model_id;
    };
    std::list<int> order_;
    std::map<std::string, std::list<int>> by_model_;
    std::unordered_map<int, Entry> entries_;
};

struct SchedulerContext {
    GlobalQueue& queue;
    ClusterState& cluster;
    std::vector<Request>& requests;  // indexed by request_id
    const Catalog& catalog;
    SimTime now;
};

class SchedulerPolicyBase {
public:
    virtual ~SchedulerPolicyBase() = default;
    // Runs after every arrival/completion event; returns the effectful
    // decisions in the order they were made.
    virtual std::vector<Decision> on_scheduling_point(const SchedulerContext& ctx) = 0;
};

class Scheduler : public SchedulerPolicyBase {
public:
    explicit Scheduler(SchedulerConfig cfg);

    const SchedulerConfig& config() const { return cfg_; }
    std::vector<Decision> on_scheduling_point(const SchedulerContext& ctx) override;

    // Idle GPUs in service order: hottest cache first, ties by ascending id.
    // Snapshot taken at the top of each scheduling point.
    static std::vector<int> idle_gpus_in_service_order(const ClusterState& cluster);

private:
    void schedule_idle_gpu(const SchedulerContext& ctx, int gpu_id, std::vector<Decision>& out);
    // Places one queued request per the locality rules; returns true when it
    // started on gpu_id itself (which then stops being idle).
    bool locality_load_balance(const SchedulerContext& ctx, int gpu_id, int request_id,
                               std::vector<Decision>& out);
    Decision dispatch(const SchedulerContext& ctx, int gpu_id, int request_id,
                      bool from_local_queue);

    SchedulerConfig cfg_;
};

}  // namespace gpufaas
