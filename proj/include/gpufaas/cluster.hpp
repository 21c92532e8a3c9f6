#pragma once

#include <cstdint>
#include <deque>
#include <list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "gpufaas/catalog.hpp"
#include "gpufaas/sim_time.hpp"
#include "gpufaas/workload.hpp"

namespace gpufaas {

struct CachedModel {
    std::string model_id;
    double occupation_mb = 0.0;
    std::uint64_t last_use_tick = 0;  // global counter, higher = more recent
    std::int64_t uses = 0;            // accesses while resident (insert counts)
};

struct LocalEntry {
    int request_id = -1;
    std::string model_id;
    SimTime infer_time_us = 0;
};

struct RunningTask {
    int request_id = -1;
    std::string model_id;
};

// What begin_execution did: when the task will finish, whether the model was
// already resident, and which models were evicted to make room.
struct ExecutionStart {
    SimTime completion_us = 0;
    bool cache_hit = false;
    std::vector<std::string> evicted;
};

class ClusterState;

class GpuState {
public:
    int gpu_id() const { return gpu_id_; }
    double capacity_mb() const { return capacity_mb_; }
    double cached_mb() const { return cached_mb_; }
    double free_mb() const { return capacity_mb_ - cached_mb_; }

    bool is_busy() const { return running_.has_value(); }
    SimTime busy_until_us() const;  // throws logic_error when idle
    const std::optional<RunningTask>& running() const { return running_; }

    // Cache contents, most recently used first.
    const std::list<CachedModel>& cache() const { return cached_; }
    std::vector<std::string> cached_model_ids() const;
    bool is_cached(const std::string& model_id) const;
    const CachedModel* cached_entry(const std::string& model_id) const;

    // Sum of `uses` over resident models; the idle-GPU scheduling order keys
    // on this cache "hotness".
    std::int64_t hotness() const { return hotness_; }

    const std::deque<LocalEntry>& local_queue() const { return local_queue_; }
    SimTime local_queue_infer_us() const { return local_queue_infer_us_; }
    int pin_count(const std::string& model_id) const;

private:
    friend class ClusterState;

    int gpu_id_ = -1;
    double capacity_mb_ = 0.0;
    double cached_mb_ = 0.0;
    std::int64_t hotness_ = 0;
    std::list<CachedModel> cached_;  // front = MRU, back = LRU
    std::unordered_map<std::string, std::list<CachedModel>::iterator> cache_index_;
    std::deque<LocalEntry> local_queue_;
    SimTime local_queue_infer_us_ = 0;
    std::optional<RunningTask> running_;
    SimTime busy_until_us_ = 0;
    std::unordered_map<std::string, int> pins_;  // running + local-queue references
};

class ClusterState {
public:
    ClusterState(int gpu_count, double capacity_mb);

    int gpu_count() const { return static_cast<int>(gpus_.size()); }
    const GpuState& gpu(int gpu_id) const;

    bool is_cached(int gpu_id, const std::string& model_id) const;
    // GPUs holding the model, ascending id (empty set if nowhere).
    const std::set<int>& locations(const std::string& model_id) const;
    int location_count(const std::string& model_id) const;
    bool cached_anywhere_except(const std::string& model_id, int gpu_id) const;

    // Queue wait estimate: remaining time of the running task plus the summed
    // inference times of the local queue.
    SimTime estimate_finish_time(int gpu_id, SimTime now) const;

    // Victims (LRU-first) that would be evicted to fit `needed_mb`, skipping
    // pinned models. Throws when even evicting every unpinned model is not
    // enough. Pure query; begin_execution applies it.
    std::vector<std::string> select_victims(int gpu_id, double needed_mb) const;

    // Start `request` on an idle GPU: evict-if-needed + load on a miss, touch
    // on a hit, then run inference. Marks the GPU busy until the returned
    // completion time and pins the model for the duration.
    ExecutionStart begin_execution(int gpu_id, const Request& request, SimTime now,
                                   const Catalog& catalog);

    // Finish the running task (caller passes the completion event time).
    // Returns the finished request_id.
    int complete(int gpu_id, SimTime now);

    void push_local(int gpu_id, const Request& request, const Catalog& catalog);
    LocalEntry pop_local(int gpu_id);

    bool fully_drained() const;  // no running tasks, no queued local work

    // Cross-checks every redundant structure (cache index, byte counters,
    // hotness, pins, model locations). Throws logic_error on any mismatch.
    void check_consistency() const;

private:
    GpuState& gpu_mut(int gpu_id);
    void touch(GpuState& g, const std::string& model_id);
    void evict_one(GpuState& g, const std::string& model_id);
    void insert_model(GpuState& g, const ModelProfile& profile);
    void pin(GpuState& g, const std::string& model_id);
    void unpin(GpuState& g, const std::string& model_id);

    std::vector<GpuState> gpus_;
    std::map<std::string, std::set<int>> locations_;
    std::uint64_t use_ticks_ = 0;
};

}  // namespace gpufaas
