#include <doctest.h>

#include <set>
#include <sstream>
#include <stdexcept>

#include "gpufaas/trace.hpp"
#include "support/test_util.hpp"

using namespace gpufaas;

namespace {

TraceMatrix small_trace() {
    std::istringstream in(
        "function_id,m1,m2,m3\n"
        "fa,10,0,5\n"
        "fb,3,3,1\n"
        "fc,4,2,1\n"
        "fd,0,0,1\n");
    return parse_trace_csv(in, "test");
}

}  // namespace

TEST_CASE("trace totals") {
    TraceMatrix t = small_trace();
    CHECK(t.minutes == 3);
    CHECK(t.functions.size() == 4);
    CHECK(t.function_total(0) == 15);
    CHECK(t.function_total(3) == 1);
    CHECK(t.minute_total(0) == 17);
    CHECK(t.minute_total(1) == 5);
    CHECK(t.minute_total(2) == 8);
    CHECK(t.grand_total() == 30);
}

TEST_CASE("trace csv parsing errors") {
    SUBCASE("header must name minutes") {
        std::istringstream in("function,x\nfa,1\n");
        CHECK_THROWS_AS(parse_trace_csv(in, "test"), std::runtime_error);
    }
    SUBCASE("duplicate function") {
        std::istringstream in("function_id,m1\nfa,1\nfa,2\n");
        CHECK_THROWS_AS(parse_trace_csv(in, "test"), std::runtime_error);
    }
    SUBCASE("negative count") {
        std::istringstream in("function_id,m1\nfa,-1\n");
        CHECK_THROWS_AS(parse_trace_csv(in, "test"), std::runtime_error);
    }
    SUBCASE("row width mismatch carries the line number") {
        std::istringstream in("function_id,m1,m2\nfa,1\nfb,1,2\n");
        CHECK_THROWS_WITH_AS(parse_trace_csv(in, "test"),
                             doctest::Contains("test:2:"), std::runtime_error);
    }
}

TEST_CASE("top function selection breaks total ties by id") {
    TraceMatrix t = small_trace();  // totals: fa 15, fb 7, fc 7, fd 1
    auto rows = top_function_rows(t, 3);
    REQUIRE(rows.size() == 3);
    CHECK(t.functions[rows[0]] == "fa");
    CHECK(t.functions[rows[1]] == "fb");  // tie with fc -> id order
    CHECK(t.functions[rows[2]] == "fc");
    CHECK(top_share(t, 3) == doctest::Approx(29.0 / 30.0));
    CHECK(top_share(t, 4) == doctest::Approx(1.0));
    CHECK_THROWS_AS(top_function_rows(t, 5), std::runtime_error);
    CHECK_THROWS_AS(top_function_rows(t, 0), std::runtime_error);
}

TEST_CASE("trace csv round-trips exactly") {
    TraceMatrix t = small_trace();
    std::istringstream in(trace_to_csv(t));
    TraceMatrix again = parse_trace_csv(in, "roundtrip");
    CHECK(again.functions == t.functions);
    CHECK(again.counts == t.counts);
    CHECK(again.minutes == t.minutes);
}

TEST_CASE("synthetic trace shape and mass") {
    SyntheticTraceParams p;  // defaults
    TraceMatrix t = make_synthetic_trace(p);
    CHECK(static_cast<int>(t.functions.size()) == p.function_count);
    CHECK(t.minutes == p.minutes);
    for (int m = 0; m < t.minutes; ++m) CHECK(t.minute_total(m) == p.draws_per_minute);
    CHECK(t.grand_total() == static_cast<std::int64_t>(p.minutes) * p.draws_per_minute);

    std::set<std::string> names(t.functions.begin(), t.functions.end());
    CHECK(names.size() == t.functions.size());

    // calibrated so the busiest 15 functions carry roughly 56% of invocations
    double share = top_share(t, 15);
    CHECK(share > 0.52);
    CHECK(share < 0.60);
}

TEST_CASE("synthetic trace is a pure function of its parameters") {
    SyntheticTraceParams p;
    TraceMatrix a = make_synthetic_trace(p);
    TraceMatrix b = make_synthetic_trace(p);
    CHECK(a.counts == b.counts);
    p.seed += 1;
    TraceMatrix c = make_synthetic_trace(p);
    CHECK(a.counts != c.counts);
}

TEST_CASE("bundled trace equals the default synthetic trace") {
    TraceMatrix bundled = load_trace(gpufaas::testing::source_path("data/trace_zipf.csv"));
    TraceMatrix synth = make_synthetic_trace(SyntheticTraceParams{});
    CHECK(bundled.functions == synth.functions);
    CHECK(bundled.counts == synth.counts);
}

TEST_CASE("synthetic trace parameter validation") {
    SyntheticTraceParams p;
    p.function_count = 0;
    CHECK_THROWS_AS(make_synthetic_trace(p), std::runtime_error);
    p = {};
    p.draws_per_minute = 0;
    CHECK_THROWS_AS(make_synthetic_trace(p), std::runtime_error);
    p = {};
    p.zipf_exponent = -0.1;
    CHECK_THROWS_AS(make_synthetic_trace(p), std::runtime_error);
}
