#include "gpufaas/cluster.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gpufaas {

namespace {

const std::set<int> kNoLocations;

std::logic_error cluster_bug(const std::string& what) {
    return std::logic_error("cluster invariant violated: " + what);
}

}  // namespace

SimTime GpuState::busy_until_us() const {
    if (!running_) throw cluster_bug("busy_until_us queried on idle gpu");
    return busy_until_us_;
}

std::vector<std::string> GpuState::cached_model_ids() const {
    std::vector<std::string> ids;
    ids.reserve(cached_.size());
    for (const CachedModel& m : cached_) ids.push_back(m.model_id);
    return ids;
}

bool GpuState::is_cached(const std::string& model_id) const {
    return cache_index_.count(model_id) != 0;
}

const CachedModel* GpuState::cached_entry(const std::string& model_id) const {
    auto it = cache_index_.find(model_id);
    return it == cache_index_.end() ? nullptr : &*it->second;
}

int GpuState::pin_count(const std::string& model_id) const {
    auto it = pins_.find(model_id);
    return it == pins_.end() ? 0 : it->second;
}

ClusterState::ClusterState(int gpu_count, double capacity_mb) {
    if (gpu_count <= 0) throw std::runtime_error("cluster: gpu_count must be positive");
    if (capacity_mb <= 0) throw std::runtime_error("cluster: capacity_mb must be positive");
    gpus_.resize(static_cast<std::size_t>(gpu_count));
    for (int i = 0; i < gpu_count; ++i) {
        gpus_[static_cast<std::size_t>(i)].gpu_id_ = i;
        gpus_[static_cast<std::size_t>(i)].capacity_mb_ = capacity_mb;
    }
}

const GpuState& ClusterState::gpu(int gpu_id) const {
    if (gpu_id < 0 || gpu_id >= gpu_count()) throw cluster_bug("gpu id out of range");
    return gpus_[static_cast<std::size_t>(gpu_id)];
}

GpuState& ClusterState::gpu_mut(int gpu_id) {
    if (gpu_id < 0 || gpu_id >= gpu_count()) throw cluster_bug("gpu id out of range");
    return gpus_[static_cast<std::size_t>(gpu_id)];
}

bool ClusterState::is_cached(int gpu_id, const std::string& model_id) const {
    return gpu(gpu_id).is_cached(model_id);
}

const std::set<int>& ClusterState::locations(const std::string& model_id) const {
    auto it = locations_.find(model_id);
    return it == locations_.end() ? kNoLocations : it->second;
}

int ClusterState::location_count(const std::string& model_id) const {
    return static_cast<int>(locations(model_id).size());
}

bool ClusterState::cached_anywhere_except(const std::string& model_id, int gpu_id) const {
    const std::set<int>& locs = locations(model_id);
    for (int g : locs)
        if (g != gpu_id) return true;
    return false;
}

SimTime ClusterState::estimate_finish_time(int gpu_id, SimTime now) const {
    const GpuState& g = gpu(gpu_id);
    SimTime remaining = 0;
    if (g.running_) {
        remaining = g.busy_until_us_ - now;
        if (remaining < 0) throw cluster_bug("running task finished in the past");
    }
    return remaining + g.local_queue_infer_us_;
}

void ClusterState::touch(GpuState& g, const std::string& model_id) {
    auto it = g.cache_index_.find(model_id);
    if (it == g.cache_index_.end()) throw cluster_bug("touch of non-resident model " + model_id);
    it->second->uses += 1;
    it->second->last_use_tick = ++use_ticks_;
    g.hotness_ += 1;
    g.cached_.splice(g.cached_.begin(), g.cached_, it->second);
}

void ClusterState::insert_model(GpuState& g, const ModelProfile& profile) {
    if (g.cache_index_.count(profile.model_id))
        throw cluster_bug("insert of already-resident model " + profile.model_id);
    if (g.cached_mb_ + profile.occupation_mb > g.capacity_mb_)
        throw cluster_bug("insert would exceed capacity on gpu " + std::to_string(g.gpu_id_));
    g.cached_.push_front(
        CachedModel{profile.model_id, profile.occupation_mb, ++use_ticks_, 1});
    g.cache_index_[profile.model_id] = g.cached_.begin();
    g.cached_mb_ += profile.occupation_mb;
    g.hotness_ += 1;
    locations_[profile.model_id].insert(g.gpu_id_);
}

void ClusterState::evict_one(GpuState& g, const std::string& model_id) {
    auto it = g.cache_index_.find(model_id);
    if (it == g.cache_index_.end()) throw cluster_bug("evict of non-resident model " + model_id);
    if (g.pin_count(model_id) > 0) throw cluster_bug("evict of pinned model " + model_id);
    g.cached_mb_ -= it->second->occupation_mb;
    g.hotness_ -= it->second->uses;
    g.cached_.erase(it->second);
    g.cache_index_.erase(it);
    auto loc = locations_.find(model_id);
    if (loc == locations_.end() || loc->second.erase(g.gpu_id_) == 0)
        throw cluster_bug("locations out of sync for " + model_id);
    if (loc->second.empty()) locations_.erase(loc);
}

std::vector<std::string> ClusterState::select_victims(int gpu_id, double needed_mb) const {
    const GpuState& g = gpu(gpu_id);
    if (needed_mb > g.capacity_mb_)
        throw std::runtime_error("model of " + std::to_string(needed_mb) +
                                 " MB cannot fit on a " + std::to_string(g.capacity_mb_) +
                                 " MB gpu");
    std::vector<std::string> victims;
    double free = g.free_mb();
    for (auto it = g.cached_.rbegin(); it != g.cached_.rend() && free < needed_mb; ++it) {
        if (g.pin_count(it->model_id) > 0) continue;  // running or locally queued
        victims.push_back(it->model_id);
        free += it->occupation_mb;
    }
    if (free < needed_mb)
        throw std::runtime_error("gpu " + std::to_string(gpu_id) +
                                 " cannot free enough memory: pinned models occupy the cache");
    return victims;
}

ExecutionStart ClusterState::begin_execution(int gpu_id, const Request& request, SimTime now,
                                             const Catalog& catalog) {
    GpuState& g = gpu_mut(gpu_id);
    if (g.running_)
        throw cluster_bug("begin_execution on busy gpu " + std::to_string(gpu_id));
    const ModelProfile& profile = catalog.lookup(request.model_id);

    ExecutionStart start;
    start.cache_hit = g.is_cached(request.model_id);
    if (start.cache_hit) {
        touch(g, request.model_id);
        start.completion_us = now + profile.infer_time_us;
    } else {
        start.evicted = select_victims(gpu_id, profile.occupation_mb);
        for (const std::string& victim : start.evicted) evict_one(g, victim);
        insert_model(g, profile);
        // Eviction itself is free; the miss pays the host-to-device load.
        start.completion_us = now + profile.load_time_us + profile.infer_time_us;
    }

    g.running_ = RunningTask{request.request_id, request.model_id};
    g.busy_until_us_ = start.completion_us;
    pin(g, request.model_id);
    return start;
}

int ClusterState::complete(int gpu_id, SimTime now) {
    GpuState& g = gpu_mut(gpu_id);
    if (!g.running_) throw cluster_bug("complete on idle gpu " + std::to_string(gpu_id));
    if (g.busy_until_us_ != now)
        throw cluster_bug("completion at t=" + std::to_string(now) + " but task ends at t=" +
                          std::to_string(g.busy_until_us_));
    int request_id = g.running_->request_id;
    unpin(g, g.running_->model_id);
    g.running_.reset();
    g.busy_until_us_ = 0;
    return request_id;
}

void ClusterState::push_local(int gpu_id, const Request& request, const Catalog& catalog) {
    GpuState& g = gpu_mut(gpu_id);
    if (!g.is_cached(request.model_id))
        throw cluster_bug("local enqueue for non-resident model " + request.model_id);
    const ModelProfile& profile = catalog.lookup(request.model_id);
    g.local_queue_.push_back(LocalEntry{request.request_id, request.model_id,
                                        profile.infer_time_us});
    g.local_queue_infer_us_ += profile.infer_time_us;
    pin(g, request.model_id);
}

LocalEntry ClusterState::pop_local(int gpu_id) {
    GpuState& g = gpu_mut(gpu_id);
    if (g.local_queue_.empty()) throw cluster_bug("pop from empty local queue");
    LocalEntry entry = g.local_queue_.front();
    g.local_queue_.pop_front();
    g.local_queue_infer_us_ -= entry.infer_time_us;
    unpin(g, entry.model_id);
    return entry;
}

void ClusterState::pin(GpuState& g, const std::string& model_id) {
    g.pins_[model_id] += 1;
}

void ClusterState::unpin(GpuState& g, const std::string& model_id) {
    auto it = g.pins_.find(model_id);
    if (it == g.pins_.end() || it->second <= 0) throw cluster_bug("unpin underflow " + model_id);
    if (--it->second == 0) g.pins_.erase(it);
}

bool ClusterState::fully_drained() const {
    for (const GpuState& g : gpus_)
        if (g.running_ || !g.local_queue_.empty()) return false;
    return true;
}

void ClusterState::check_consistency() const {
    std::map<std::string, std::set<int>> rebuilt;
    for (const GpuState& g : gpus_) {
        double mb = 0.0;
        std::int64_t hot = 0;
        std::size_t indexed = 0;
        for (auto it = g.cached_.begin(); it != g.cached_.end(); ++it) {
            mb += it->occupation_mb;
            hot += it->uses;
            auto idx = g.cache_index_.find(it->model_id);
            if (idx == g.cache_index_.end() || idx->second != it)
                throw cluster_bug("cache index mismatch on gpu " + std::to_string(g.gpu_id_));
            ++indexed;
            rebuilt[it->model_id].insert(g.gpu_id_);
        }
        if (indexed != g.cache_index_.size())
            throw cluster_bug("cache index size mismatch on gpu " + std::to_string(g.gpu_id_));
        if (std::abs(mb - g.cached_mb_) > 1e-6)
            throw cluster_bug("cached_mb drift on gpu " + std::to_string(g.gpu_id_));
        if (g.cached_mb_ > g.capacity_mb_ + 1e-6)
            throw cluster_bug("over-capacity cache on gpu " + std::to_string(g.gpu_id_));
        if (hot != g.hotness_)
            throw cluster_bug("hotness drift on gpu " + std::to_string(g.gpu_id_));

        SimTime queued = 0;
        std::unordered_map<std::string, int> expected_pins;
        for (const LocalEntry& e : g.local_queue_) {
            queued += e.infer_time_us;
            expected_pins[e.model_id] += 1;
            if (!g.is_cached(e.model_id))
                throw cluster_bug("locally queued model not resident: " + e.model_id);
        }
        if (queued != g.local_queue_infer_us_)
            throw cluster_bug("local queue time drift on gpu " + std::to_string(g.gpu_id_));
        if (g.running_) expected_pins[g.running_->model_id] += 1;
        if (expected_pins.size() != g.pins_.size())
            throw cluster_bug("pin table size mismatch on gpu " + std::to_string(g.gpu_id_));
        for (const auto& [model, n] : expected_pins) {
            if (g.pin_count(model) != n)
                throw cluster_bug("pin count mismatch for " + model + " on gpu " +
                                  std::to_string(g.gpu_id_));
        }
        if (g.running_ && !g.is_cached(g.running_->model_id))
            throw cluster_bug("running model not resident on gpu " + std::to_string(g.gpu_id_));
    }
    if (rebuilt != locations_) throw cluster_bug("model location map out of sync");
}

}  // namespace gpufaas
