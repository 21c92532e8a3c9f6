#include "gpufaas/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "gpufaas/rng.hpp"

namespace gpufaas {

namespace {

std::runtime_error parse_error(const std::string& origin, std::size_t line, const std::string& what) {
    return std::runtime_error(origin + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::int64_t TraceMatrix::function_total(std::size_t row) const {
    const auto& r = counts.at(row);
    return std::accumulate(r.begin(), r.end(), std::int64_t{0});
}

std::int64_t TraceMatrix::minute_total(int minute) const {
    std::int64_t sum = 0;
    for (const auto& row : counts) sum += row.at(static_cast<std::size_t>(minute));
    return sum;
}

std::int64_t TraceMatrix::grand_total() const {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) sum += function_total(i);
    return sum;
}

TraceMatrix parse_trace_csv(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw std::runtime_error(origin + ": empty trace file");
    ++lineno;

    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "function_id")
        throw parse_error(origin, lineno, "bad header '" + line + "'");
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (header[i] != "m" + std::to_string(i))
            throw parse_error(origin, lineno, "bad minute column '" + header[i] + "'");
    }

    TraceMatrix trace;
    trace.minutes = static_cast<int>(header.size() - 1);
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw parse_error(origin, lineno,
                              "expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        if (fields[0].empty()) throw parse_error(origin, lineno, "empty function_id");
        if (!seen.insert(fields[0]).second)
            throw parse_error(origin, lineno, "duplicate function_id '" + fields[0] + "'");
        std::vector<std::int64_t> row(static_cast<std::size_t>(trace.minutes));
        for (int m = 0; m < trace.minutes; ++m) {
            const std::string& f = fields[static_cast<std::size_t>(m) + 1];
            try {
                std::size_t pos = 0;
                long long v = std::stoll(f, &pos);
                if (pos != f.size()) throw std::invalid_argument("trailing characters");
                if (v < 0) throw std::invalid_argument("negative");
                row[static_cast<std::size_t>(m)] = v;
            } catch (const std::exception&) {
                throw parse_error(origin, lineno, "bad count '" + f + "'");
            }
        }
        trace.functions.push_back(fields[0]);
        trace.counts.push_back(std::move(row));
    }
    if (trace.functions.empty()) throw std::runtime_error(origin + ": trace has no function rows");
    return trace;
}

TraceMatrix load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
    return parse_trace_csv(in, path);
}

std::string trace_to_csv(const TraceMatrix& trace) {
    std::ostringstream out;
    out << "function_id";
    for (int m = 1; m <= trace.minutes; ++m) out << ",m" << m;
    out << "\n";
    for (std::size_t i = 0; i < trace.functions.size(); ++i) {
        out << trace.functions[i];
        for (std::int64_t v : trace.counts[i]) out << "," << v;
        out << "\n";
    }
    return out.str();
}

void save_trace(const TraceMatrix& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file '" + path + "'");
    out << trace_to_csv(trace);
    if (!out.good()) throw std::runtime_error("short write to trace file '" + path + "'");
}

std::vector<std::size_t> top_function_rows(const TraceMatrix& trace, int k) {
    if (k <= 0) throw std::runtime_error("top_function_rows: k must be positive");
    if (static_cast<std::size_t>(k) > trace.functions.size())
        throw std::runtime_error("top_function_rows: k=" + std::to_string(k) +
                                 " exceeds trace function count " +
                                 std::to_string(trace.functions.size()));
    std::vector<std::size_t> rows(trace.functions.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<std::int64_t> totals(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) totals[i] = trace.function_total(i);
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        if (totals[a] != totals[b]) return totals[a] > totals[b];
        return trace.functions[a] < trace.functions[b];
    });
    rows.resize(static_cast<std::size_t>(k));
    return rows;
}

double top_share(const TraceMatrix& trace, int k) {
    std::int64_t total = trace.grand_total();
    if (total == 0) throw std::runtime_error("top_share: trace has no invocations");
    std::int64_t top = 0;
    for (std::size_t row : top_function_rows(trace, k)) top += trace.function_total(row);
    return static_cast<double>(top) / static_cast<double>(total);
}

TraceMatrix make_synthetic_trace(const SyntheticTraceParams& params) {
    if (params.function_count <= 0 || params.minutes <= 0 || params.draws_per_minute <= 0)
        throw std::runtime_error("synthetic trace: all sizes must be positive");
    if (params.zipf_exponent < 0)
        throw std::runtime_error("synthetic trace: zipf_exponent must be non-negative");

    const std::size_t n = static_cast<std::size_t>(params.function_count);
    std::vector<double> cdf(n);
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        sum += std::pow(static_cast<double>(r + 1), -params.zipf_exponent);
        cdf[r] = sum;
    }
    for (std::size_t r = 0; r < n; ++r) cdf[r] /= sum;
    cdf[n - 1] = 1.0;  // guard against round-off at the tail

    TraceMatrix trace;
    trace.minutes = params.minutes;
    char name[32];
    for (std::size_t r = 0; r < n; ++r) {
        std::snprintf(name, sizeof name, "f%03zu", r);
        trace.functions.push_back(name);
        trace.counts.emplace_back(static_cast<std::size_t>(params.minutes), 0);
    }

    Rng rng(params.seed);
    for (int m = 0; m < params.minutes; ++m) {
        for (int d = 0; d < params.draws_per_minute; ++d) {
            double u = rng.uniform01();
            std::size_t idx = static_cast<std::size_t>(
                std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            if (idx >= n) idx = n - 1;
            trace.counts[idx][static_cast<std::size_t>(m)]++;
        }
    }
    return trace;
}

}  // namespace gpufaas
