#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gpufaas {

// Per-function, per-minute invocation counts in the style of the Azure
// functions trace: one row per function, one column per minute.
struct TraceMatrix {
    std::vector<std::string> functions;                // row order as ingested
    std::vector<std::vector<std::int64_t>> counts;     // counts[row][minute]
    int minutes = 0;

    std::int64_t function_total(std::size_t row) const;
    std::int64_t minute_total(int minute) const;
    std::int64_t grand_total() const;
};

// CSV with header: function_id,m1,m2,...,mN
TraceMatrix parse_trace_csv(std::istream& in, const std::string& origin);
TraceMatrix load_trace(const std::string& path);
std::string trace_to_csv(const TraceMatrix& trace);
void save_trace(const TraceMatrix& trace, const std::string& path);

// Top-k functions by total invocations, ties broken by function_id ascending.
// Returned in descending popularity order. Throws if k exceeds the row count.
std::vector<std::size_t> top_function_rows(const TraceMatrix& trace, int k);

// Fraction of all invocations contributed by the top-k functions.
double top_share(const TraceMatrix& trace, int k);

// Synthetic Zipf-like trace: `draws_per_minute` invocations per minute are
// assigned to `function_count` functions with P(rank r) proportional to
// (r+1)^-zipf_exponent. Defaults put roughly 56% of the mass on the top 15.
struct SyntheticTraceParams {
    int function_count = 60;
    int minutes = 6;
    int draws_per_minute = 3000;
    double zipf_exponent = 0.7063;
    std::uint64_t seed = 91;
};

TraceMatrix make_synthetic_trace(const SyntheticTraceParams& params);

}  // namespace gpufaas
