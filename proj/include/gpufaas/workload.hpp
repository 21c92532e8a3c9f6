#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gpufaas/catalog.hpp"
#include "gpufaas/sim_time.hpp"
#include "gpufaas/trace.hpp"

namespace gpufaas {

struct Request {
    int request_id = -1;          // 0-based arrival order
    std::string model_id;
    SimTime arrival_us = 0;
    int skip_count = 0;           // times bypassed by out-of-order dispatch
    SimTime dispatched_at_us = -1;
    SimTime completed_at_us = -1;
};

struct WorkloadSpec {
    int working_set_size = 15;
    int per_minute_total = 325;   // requests per simulated minute, exact
    int duration_minutes = 6;
    std::uint64_t seed = 1;       // arrival-offset stream only
    // Optional explicit function->model assignment; when empty the
    // size-interleaved default mapping is built from the catalog.
    std::map<std::string, std::string> model_mapping;
};

// Proportional integer apportionment (largest remainder): result sums to
// `total` exactly and preserves each count's exact share to within one unit.
// Ties on remainders go to the earlier index. All arithmetic is integral.
std::vector<std::int64_t> largest_remainder_allocate(const std::vector<std::int64_t>& counts,
                                                     std::int64_t total);

// Default assignment of catalog models to working-set functions: sort models
// by (occupation_mb, model_id) ascending, interleave small/large from the two
// ends, then map popularity rank r to interleaved[r mod catalog_size]. A rank
// may wrap around the catalog once; asking for more than twice the catalog is
// an error.
std::vector<std::string> interleave_catalog_by_size(const Catalog& catalog);
std::map<std::string, std::string> build_model_mapping(
    const std::vector<std::string>& working_set_functions, const Catalog& catalog);

// Trace -> request stream. Picks the top working_set_size functions, rescales
// each minute to exactly per_minute_total requests, draws uniform arrival
// offsets inside the minute, and tags each request with its mapped model.
std::vector<Request> synthesize_workload(const TraceMatrix& trace, const WorkloadSpec& spec,
                                         const Catalog& catalog);

// The working-set function ids in descending popularity order (what
// synthesize_workload uses internally; exposed for inspection and tests).
std::vector<std::string> working_set_functions(const TraceMatrix& trace, int working_set_size);

}  // namespace gpufaas
