#include "gpufaas/sched.hpp"

#include <algorithm>
#include <stdexcept>

namespace gpufaas {

namespace {

const std::list<int> kNoQueued;

std::logic_error queue_bug(const std::string& what) {
    return std::logic_error("queue invariant violated: " + what);
}

}  // namespace

std::string policy_to_string(Policy p) {
    switch (p) {
        case Policy::LB: return "lb";
        case Policy::LALB: return "lalb";
        case Policy::LALBO3: return "lalbo3";
    }
    throw std::logic_error("unknown policy value");
}

Policy policy_from_string(const std::string& s) {
    if (s == "lb") return Policy::LB;
    if (s == "lalb") return Policy::LALB;
    if (s == "lalbo3") return Policy::LALBO3;
    throw std::runtime_error("unknown scheduler '" + s + "' (expected lb, lalb or lalbo3)");
}

std::string decision_kind_to_string(DecisionKind k) {
    switch (k) {
        case DecisionKind::DispatchHitIdle: return "hit_idle";
        case DecisionKind::DispatchMissIdle: return "miss_idle";
        case DecisionKind::EnqueueLocalBusy: return "enqueue_local";
        case DecisionKind::NoAction: return "no_action";
    }
    throw std::logic_error("unknown decision kind");
}

void GlobalQueue::enqueue(int request_id, const std::string& model_id) {
    if (entries_.count(request_id))
        throw queue_bug("request " + std::to_string(request_id) + " enqueued twice");
    order_.push_back(request_id);
    auto& model_list = by_model_[model_id];
    model_list.push_back(request_id);
    entries_[request_id] = Entry{std::prev(order_.end()), std::prev(model_list.end()), model_id};
}

void GlobalQueue::remove(int request_id) {
    auto it = entries_.find(request_id);
    if (it == entries_.end())
        throw queue_bug("request " + std::to_string(request_id) + " not queued");
    order_.erase(it->second.order_it);
    auto by_model = by_model_.find(it->second.model_id);
    by_model->second.erase(it->second.model_it);
    if (by_model->second.empty()) by_model_.erase(by_model);
    entries_.erase(it);
}

const std::list<int>& GlobalQueue::queued_for(const std::string& model_id) const {
    auto it = by_model_.find(model_id);
    return it == by_model_.end() ? kNoQueued : it->second;
}

void GlobalQueue::check_consistency() const {
    if (order_.size() != entries_.size()) throw queue_bug("order/entry size mismatch");
    std::size_t by_model_total = 0;
    for (const auto& [model, ids] : by_model_) {
        if (ids.empty()) throw queue_bug("empty per-model list for " + model);
        by_model_total += ids.size();
        for (int id : ids) {
            auto it = entries_.find(id);
            if (it == entries_.end() || it->second.model_id != model)
                throw queue_bug("per-model list out of sync for " + model);
        }
    }
    if (by_model_total != entries_.size()) throw queue_bug("per-model total mismatch");
    for (int id : order_) {
        auto it = entries_.find(id);
        if (it == entries_.end() || *it->second.order_it != id)
            throw queue_bug("entry iterator out of sync for " + std::to_string(id));
    }
}

Scheduler::Scheduler(SchedulerConfig cfg) : cfg_(cfg) {
    if (cfg_.o3_limit < 0) throw std::runtime_error("scheduler: o3_limit must be >= 0");
}

std::vector<int> Scheduler::idle_gpus_in_service_order(const ClusterState& cluster) {
    std::vector<int> idle;
    for (int g = 0; g < cluster.gpu_count(); ++g)
        if (!cluster.gpu(g).is_busy()) idle.push_back(g);
    std::stable_sort(idle.begin(), idle.end(), [&](int a, int b) {
        return cluster.gpu(a).hotness() > cluster.gpu(b).hotness();
    });
    return idle;
}

std::vector<Decision> Scheduler::on_scheduling_point(const SchedulerContext& ctx) {
    std::vector<Decision> out;
    for (int g : idle_gpus_in_service_order(ctx.cluster)) {
        // A locality placement for an earlier GPU may have occupied this one.
        if (ctx.cluster.gpu(g).is_busy()) continue;
        schedule_idle_gpu(ctx, g, out);
    }
    return out;
}

Decision Scheduler::dispatch(const SchedulerContext& ctx, int gpu_id, int request_id,
                             bool from_local_queue) {
    Request& r = ctx.requests.at(static_cast<std::size_t>(request_id));
    if (!from_local_queue) ctx.queue.remove(request_id);
    bool resident_elsewhere = ctx.cluster.cached_anywhere_except(r.model_id, gpu_id);
    ExecutionStart start = ctx.cluster.begin_execution(gpu_id, r, ctx.now, ctx.catalog);
    r.dispatched_at_us = ctx.now;

    const ModelProfile& profile = ctx.catalog.lookup(r.model_id);
    Decision d;
    d.kind = start.cache_hit ? DecisionKind::DispatchHitIdle : DecisionKind::DispatchMissIdle;
    d.request_id = request_id;
    d.gpu_id = gpu_id;
    d.from_local_queue = from_local_queue;
    d.false_miss = !start.cache_hit && resident_elsewhere;
    d.skip_count = r.skip_count;
    d.completion_us = start.completion_us;
    d.load_us = start.cache_hit ? 0 : profile.load_time_us;
    d.infer_us = profile.infer_time_us;
    d.evicted = std::move(start.evicted);
    return d;
}

void Scheduler::schedule_idle_gpu(const SchedulerContext& ctx, int gpu_id,
                                  std::vector<Decision>& out) {
    // Drain own local queue first: those requests already wait on this GPU
    // precisely because their model is resident here.
    if (!ctx.cluster.gpu(gpu_id).local_queue().empty()) {
        LocalEntry entry = ctx.cluster.pop_local(gpu_id);
        out.push_back(dispatch(ctx, gpu_id, entry.request_id, /*from_local_queue=*/true));
        if (out.back().kind != DecisionKind::DispatchHitIdle)
            throw std::logic_error("locally queued request missed its pinned model");
        return;
    }
    if (ctx.queue.empty()) return;

    if (cfg_.policy == Policy::LB) {
        // Baseline: strict arrival order, no locality awareness.
        out.push_back(dispatch(ctx, gpu_id, ctx.queue.order().front(), false));
        return;
    }

    const int limit = cfg_.effective_o3_limit();

    // Pass 1: look for a request whose model is already resident here,
    // dispatching it ahead of older requests. Every sub-limit request we step
    // over is charged one skip; a request at the limit must be placed (via
    // the locality rules) before anything may pass it again.
    std::vector<int> scan(ctx.queue.order().begin(), ctx.queue.order().end());
    std::vector<int> bypassed;
    for (int rid : scan) {
        if (!ctx.queue.contains(rid)) continue;  // placed earlier in this pass
        Request& r = ctx.requests.at(static_cast<std::size_t>(rid));
        if (ctx.cluster.is_cached(gpu_id, r.model_id)) {
            for (int b : bypassed) ctx.requests.at(static_cast<std::size_t>(b)).skip_count += 1;
            out.push_back(dispatch(ctx, gpu_id, rid, false));
            return;
        }
        if (r.skip_count >= limit) {
            if (locality_load_balance(ctx, gpu_id, rid, out)) return;
            continue;  // placed on another GPU; not a bypass
        }
        bypassed.push_back(rid);
    }

    // Pass 2: nothing resident here; place remaining requests by locality
    // until one lands on this GPU or the queue empties.
    std::vector<int> rest(ctx.queue.order().begin(), ctx.queue.order().end());
    for (int rid : rest) {
        if (!ctx.queue.contains(rid)) continue;
        if (locality_load_balance(ctx, gpu_id, rid, out)) return;
    }
}

bool Scheduler::locality_load_balance(const SchedulerContext& ctx, int gpu_id, int request_id,
                                      std::vector<Decision>& out) {
    Request& r = ctx.requests.at(static_cast<std::size_t>(request_id));
    const ModelProfile& profile = ctx.catalog.lookup(r.model_id);
    const std::set<int>& locs = ctx.cluster.locations(r.model_id);

    // Nowhere resident: load it here and now.
    if (locs.empty()) {
        out.push_back(dispatch(ctx, gpu_id, request_id, false));
        return true;
    }

    // Resident on an idle GPU: run it there as a hit. Prefer the most
    // recently used copy; unique use ticks make ties impossible.
    int best_idle = -1;
    std::uint64_t best_tick = 0;
    for (int g : locs) {
        if (ctx.cluster.gpu(g).is_busy()) continue;
        std::uint64_t tick = ctx.cluster.gpu(g).cached_entry(r.model_id)->last_use_tick;
        if (best_idle == -1 || tick > best_tick) {
            best_idle = g;
            best_tick = tick;
        }
    }
    if (best_idle != -1) {
        out.push_back(dispatch(ctx, best_idle, request_id, false));
        return best_idle == gpu_id;
    }

    // Every copy is on a busy GPU: wait in the shortest local queue if the
    // expected wait beats reloading the model, else reload here (false miss).
    int best_busy = -1;
    SimTime best_estimate = 0;
    for (int g : locs) {
        SimTime estimate = ctx.cluster.estimate_finish_time(g, ctx.now);
        if (best_busy == -1 || estimate < best_estimate) {
            best_busy = g;
            best_estimate = estimate;
        }
    }
    if (best_estimate < profile.load_time_us) {
        ctx.queue.remove(request_id);
        ctx.cluster.push_local(best_busy, r, ctx.catalog);
        Decision d;
        d.kind = DecisionKind::EnqueueLocalBusy;
        d.request_id = request_id;
        d.gpu_id = best_busy;
        d.skip_count = r.skip_count;
        d.infer_us = 0;
        out.push_back(d);
        return false;
    }
    out.push_back(dispatch(ctx, gpu_id, request_id, false));
    return true;
}

}  // namespace gpufaas
