#include "gpufaas/workload.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "gpufaas/rng.hpp"

namespace gpufaas {

std::vector<std::int64_t> largest_remainder_allocate(const std::vector<std::int64_t>& counts,
                                                     std::int64_t total) {
    if (total < 0) throw std::runtime_error("largest_remainder_allocate: negative total");
    std::int64_t base = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    for (std::int64_t c : counts)
        if (c < 0) throw std::runtime_error("largest_remainder_allocate: negative count");
    if (base == 0) {
        if (total == 0) return std::vector<std::int64_t>(counts.size(), 0);
        throw std::runtime_error("largest_remainder_allocate: all counts are zero");
    }

    // Exact shares are counts[i]*total/base; floor and remainder stay in
    // int64 (counts and total are small enough that the product fits).
    std::vector<std::int64_t> alloc(counts.size());
    std::vector<std::int64_t> rem(counts.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        std::int64_t num = counts[i] * total;
        alloc[i] = num / base;
        rem[i] = num % base;
        assigned += alloc[i];
    }
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t j = 0; assigned < total; ++j) {
        alloc[order[j % order.size()]] += 1;
        ++assigned;
    }
    return alloc;
}

std::vector<std::string> interleave_catalog_by_size(const Catalog& catalog) {
    std::vector<const ModelProfile*> sorted;
    sorted.reserve(catalog.size());
    for (const ModelProfile& p : catalog.profiles()) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [](const ModelProfile* a, const ModelProfile* b) {
        if (a->occupation_mb != b->occupation_mb) return a->occupation_mb < b->occupation_mb;
        return a->model_id < b->model_id;
    });
    // small, large, next-small, next-large, ... keeps adjacent popularity
    // ranks from landing on similarly sized models.
    std::vector<std::string> out;
    out.reserve(sorted.size());
    std::size_t lo = 0, hi = sorted.size();
    while (lo < hi) {
        out.push_back(sorted[lo++]->model_id);
        if (lo < hi) out.push_back(sorted[--hi]->model_id);
    }
    return out;
}

std::map<std::string, std::string> build_model_mapping(
    const std::vector<std::string>& working_set_functions, const Catalog& catalog) {
    if (catalog.size() == 0) throw std::runtime_error("model mapping: empty catalog");
    if (working_set_functions.size() > 2 * catalog.size())
        throw std::runtime_error("model mapping: working set of " +
                                 std::to_string(working_set_functions.size()) +
                                 " needs more than two passes over a catalog of " +
                                 std::to_string(catalog.size()) + " models");
    std::vector<std::string> interleaved = interleave_catalog_by_size(catalog);
    std::map<std::string, std::string> mapping;
    for (std::size_t r = 0; r < working_set_functions.size(); ++r)
        mapping[working_set_functions[r]] = interleaved[r % interleaved.size()];
    return mapping;
}

std::vector<std::string> working_set_functions(const TraceMatrix& trace, int working_set_size) {
    std::vector<std::string> fns;
    for (std::size_t row : top_function_rows(trace, working_set_size))
        fns.push_back(trace.functions[row]);
    return fns;
}

std::vector<Request> synthesize_workload(const TraceMatrix& trace, const WorkloadSpec& spec,
                                         const Catalog& catalog) {
    if (spec.working_set_size <= 0)
        throw std::runtime_error("workload: working_set_size must be positive");
    if (spec.per_minute_total <= 0)
        throw std::runtime_error("workload: per_minute_total must be positive");
    if (spec.duration_minutes <= 0)
        throw std::runtime_error("workload: duration_minutes must be positive");
    if (spec.duration_minutes > trace.minutes)
        throw std::runtime_error("workload: duration of " + std::to_string(spec.duration_minutes) +
                                 " minutes exceeds trace length of " +
                                 std::to_string(trace.minutes));

    std::vector<std::size_t> rows = top_function_rows(trace, spec.working_set_size);
    std::vector<std::string> fns;
    for (std::size_t row : rows) fns.push_back(trace.functions[row]);

    std::map<std::string, std::string> mapping =
        spec.model_mapping.empty() ? build_model_mapping(fns, catalog) : spec.model_mapping;
    for (const std::string& fn : fns) {
        auto it = mapping.find(fn);
        if (it == mapping.end())
            throw std::runtime_error("workload: no model mapped for function '" + fn + "'");
        if (!catalog.contains(it->second))
            throw std::runtime_error("workload: mapped model '" + it->second +
                                     "' for function '" + fn + "' is not in the catalog");
    }

    struct Draw {
        SimTime arrival_us;
        std::uint64_t seq;  // draw order breaks same-microsecond ties
        const std::string* model;
    };
    std::vector<Draw> draws;
    draws.reserve(static_cast<std::size_t>(spec.per_minute_total) *
                  static_cast<std::size_t>(spec.duration_minutes));

    Rng rng(spec.seed);
    std::uint64_t seq = 0;
    for (int m = 0; m < spec.duration_minutes; ++m) {
        std::vector<std::int64_t> minute_counts;
        minute_counts.reserve(rows.size());
        for (std::size_t row : rows)
            minute_counts.push_back(trace.counts[row][static_cast<std::size_t>(m)]);
        if (std::accumulate(minute_counts.begin(), minute_counts.end(), std::int64_t{0}) == 0)
            throw std::runtime_error("workload: working set has no invocations in minute " +
                                     std::to_string(m + 1));
        std::vector<std::int64_t> alloc =
            largest_remainder_allocate(minute_counts, spec.per_minute_total);
        SimTime minute_start = static_cast<SimTime>(m) * kMicrosPerMinute;
        for (std::size_t r = 0; r < fns.size(); ++r) {
            const std::string* model = &mapping.at(fns[r]);
            for (std::int64_t i = 0; i < alloc[r]; ++i) {
                draws.push_back(
                    {minute_start + rng.uniform_below(kMicrosPerMinute), seq++, model});
            }
        }
    }

    std::sort(draws.begin(), draws.end(), [](const Draw& a, const Draw& b) {
        if (a.arrival_us != b.arrival_us) return a.arrival_us < b.arrival_us;
        return a.seq < b.seq;
    });

    std::vector<Request> requests(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        requests[i].request_id = static_cast<int>(i);
        requests[i].model_id = *draws[i].model;
        requests[i].arrival_us = draws[i].arrival_us;
    }
    return requests;
}

}  // namespace gpufaas
