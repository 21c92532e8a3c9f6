#include <doctest.h>

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "gpufaas/engine.hpp"
#include "support/test_util.hpp"

using namespace gpufaas;
using gpufaas::testing::make_catalog;
using gpufaas::testing::make_requests;
using gpufaas::testing::source_path;

namespace {

SimConfig tiny_config() {
    SimConfig cfg;
    cfg.gpu_count = 2;
    cfg.capacity_mb = 8192.0;
    cfg.catalog_path = source_path("data/models.csv");
    cfg.workload.working_set_size = 5;
    cfg.workload.per_minute_total = 40;
    cfg.workload.duration_minutes = 2;
    cfg.debug_checks = true;
    return cfg;
}

}  // namespace

TEST_CASE("a completion frees the gpu for an arrival at the same instant") {
    Catalog cat = make_catalog({{"m", 1000, 1.0, 1.0}});
    SimConfig cfg;
    cfg.gpu_count = 1;
    cfg.capacity_mb = 4000.0;
    cfg.debug_checks = true;
    // r0 completes at exactly 2s (1s load + 1s infer); r1 arrives at 2s
    auto requests = make_requests({{"m", 0}, {"m", 2000000}});
    SimResult res = run_stream(cfg, cat, requests);

    REQUIRE(res.decisions.size() == 2);
    CHECK(res.decisions[0].kind == DecisionKind::DispatchMissIdle);
    CHECK(res.decisions[1].kind == DecisionKind::DispatchHitIdle);
    CHECK_FALSE(res.decisions[1].from_local_queue);
    CHECK(res.requests[1].dispatched_at_us == 2000000);
    CHECK(res.requests[1].completed_at_us == 3000000);
    CHECK(res.report.hits == 1);
    CHECK(res.report.misses == 1);
}

TEST_CASE("request accounting survives a run") {
    SimConfig cfg = tiny_config();
    Catalog cat = load_catalog(cfg.catalog_path);
    TraceMatrix trace = make_synthetic_trace(cfg.synthetic);
    auto requests = synthesize_workload(trace, cfg.workload, cat);
    SimResult res = run_stream(cfg, cat, requests);

    CHECK(res.report.request_count == 80);
    CHECK(res.report.hits + res.report.misses == 80);
    std::size_t dispatch_decisions = 0;
    for (const Decision& d : res.decisions)
        if (d.kind != DecisionKind::EnqueueLocalBusy) ++dispatch_decisions;
    CHECK(dispatch_decisions == 80);
    for (const Request& r : res.requests) {
        CHECK(r.dispatched_at_us >= r.arrival_us);
        CHECK(r.completed_at_us > r.dispatched_at_us);
    }
    CHECK(res.report.total_sim_time_s > 0.0);
}

TEST_CASE("identical configurations replay to identical bytes") {
    SimConfig cfg = tiny_config();
    Catalog cat = load_catalog(cfg.catalog_path);
    TraceMatrix trace = make_synthetic_trace(cfg.synthetic);

    std::ostringstream log_a, log_b;
    EventLogger logger_a(log_a, /*dump_caches=*/true);
    EventLogger logger_b(log_b, /*dump_caches=*/true);
    SimReport a = run(cfg, cat, trace, &logger_a);
    SimReport b = run(cfg, cat, trace, &logger_b);

    CHECK(log_a.str() == log_b.str());
    CHECK(log_a.str().find("\"event\":\"arrival\"") != std::string::npos);
    CHECK(log_a.str().find("\"skip_count\"") != std::string::npos);
    CHECK(report_to_json(a).dump() == report_to_json(b).dump());
}

TEST_CASE("the full runner loads its inputs from the config") {
    SimConfig cfg = tiny_config();
    SimReport direct = run(cfg);
    CHECK(direct.request_count == 80);

    // run again against the bundled trace file instead of the generator
    cfg.use_synthetic_trace = false;
    cfg.trace_path = source_path("data/trace_zipf.csv");
    SimReport from_file = run(cfg);
    CHECK(from_file.request_count == 80);
    CHECK(trace_label(cfg) == cfg.trace_path);
    cfg.use_synthetic_trace = true;
    CHECK(trace_label(cfg) == "synthetic");
}

TEST_CASE("tied request totals pick the lexicographically first model") {
    std::istringstream in("function_id,m1\nfa,2\nfb,2\n");
    TraceMatrix t = parse_trace_csv(in, "test");
    Catalog cat = make_catalog({{"x", 100, 1, 0.1}, {"y", 200, 1, 0.1}});
    SimConfig cfg;
    cfg.gpu_count = 2;
    cfg.capacity_mb = 1000.0;
    cfg.workload.working_set_size = 2;
    cfg.workload.per_minute_total = 4;
    cfg.workload.duration_minutes = 1;
    SimReport r = run(cfg, cat, t);
    CHECK(r.top_model == "x");
}

TEST_CASE("a single-model working set only misses while warming up") {
    SimConfig cfg = tiny_config();
    cfg.workload.working_set_size = 1;
    SimReport r = run(cfg);
    // the first miss warms one gpu and cannot be false; each further gpu warms
    // via a false miss (the model is already cached on a busy gpu), and once
    // warm the model is never evicted, so misses are bounded by the fleet size
    CHECK(r.misses <= cfg.gpu_count);
    CHECK(r.misses >= 1);
    CHECK(r.false_misses <= r.misses - 1);
    CHECK(r.evictions == 0);
    CHECK(r.hits == r.request_count - r.misses);
}

TEST_CASE("malformed request streams are rejected") {
    Catalog cat = make_catalog({{"m", 1000, 1, 1}});
    SimConfig cfg;
    cfg.gpu_count = 1;
    cfg.capacity_mb = 4000.0;

    SUBCASE("ids must be dense and ordered") {
        auto requests = make_requests({{"m", 0}, {"m", 1}});
        requests[1].request_id = 2;
        CHECK_THROWS_AS(run_stream(cfg, cat, requests), std::runtime_error);
    }
    SUBCASE("arrivals must be sorted") {
        auto requests = make_requests({{"m", 5}, {"m", 1}});
        CHECK_THROWS_AS(run_stream(cfg, cat, requests), std::runtime_error);
    }
    SUBCASE("models must exist") {
        auto requests = make_requests({{"ghost", 0}});
        CHECK_THROWS_AS(run_stream(cfg, cat, requests), std::runtime_error);
    }
    SUBCASE("models must fit a gpu") {
        Catalog fat = make_catalog({{"m", 9000, 1, 1}});
        auto requests = make_requests({{"m", 0}});
        CHECK_THROWS_AS(run_stream(cfg, fat, requests), std::runtime_error);
    }
}

TEST_CASE("sweep axes parse and validate their values") {
    SimConfig base;
    CHECK(apply_axis(base, "scheduler", "lb").scheduler.policy == Policy::LB);
    CHECK(apply_axis(base, "o3_limit", "7").scheduler.o3_limit == 7);
    CHECK(apply_axis(base, "working_set", "25").workload.working_set_size == 25);
    CHECK(apply_axis(base, "gpus", "3").gpu_count == 3);
    CHECK(apply_axis(base, "mem_mb", "4096").capacity_mb == doctest::Approx(4096.0));
    CHECK(apply_axis(base, "rpm", "100").workload.per_minute_total == 100);
    CHECK(apply_axis(base, "minutes", "2").workload.duration_minutes == 2);
    CHECK(apply_axis(base, "seed", "9").workload.seed == 9);

    CHECK_THROWS_AS(apply_axis(base, "nope", "1"), std::runtime_error);
    CHECK_THROWS_AS(apply_axis(base, "gpus", "12x"), std::runtime_error);
    CHECK_THROWS_AS(apply_axis(base, "gpus", ""), std::runtime_error);
    CHECK_THROWS_AS(apply_axis(base, "gpus", "0"), std::runtime_error);
    CHECK_THROWS_AS(apply_axis(base, "o3_limit", "-1"), std::runtime_error);
    CHECK_THROWS_AS(apply_axis(base, "scheduler", "fifo"), std::runtime_error);
}

TEST_CASE("sweeps preserve value order and serialize per run") {
    SimConfig cfg = tiny_config();
    auto runs = run_sweep(cfg, "o3_limit", {"25", "0"}, 1);
    REQUIRE(runs.size() == 2);
    CHECK(runs[0].value == "25");
    CHECK(runs[1].value == "0");
    CHECK(runs[0].config.scheduler.o3_limit == 25);
    CHECK(runs[0].report.request_count == 80);
    CHECK(runs[1].report.request_count == 80);

    std::string csv = runs_to_csv(runs);
    CHECK(csv.rfind("scheduler,o3_limit,working_set,gpus,mem_mb,rpm,minutes,seed,trace", 0) == 0);
    CHECK(csv.find("\nlalbo3,25,") != std::string::npos);
    CHECK(csv.find("\nlalbo3,0,") != std::string::npos);

    nlohmann::json j = runs_to_json(runs);
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 2);
    CHECK(j[0]["config"]["o3_limit"] == 25);
    CHECK(j[0]["metrics"]["request_count"] == 80);

    CHECK_THROWS_AS(run_sweep(cfg, "o3_limit", {}, 1), std::runtime_error);
    CHECK_THROWS_AS(run_sweep(cfg, "o3_limit", {"1"}, 0), std::runtime_error);
}

TEST_CASE("trace loading follows the configuration") {
    SimConfig cfg = tiny_config();
    TraceMatrix synth = load_or_make_trace(cfg);
    CHECK(static_cast<int>(synth.functions.size()) == cfg.synthetic.function_count);

    TraceMatrix tiny;
    tiny.functions = {"fa"};
    tiny.counts = {{3, 4}};
    tiny.minutes = 2;
    std::string path = "tmp_engine_trace.csv";
    save_trace(tiny, path);
    cfg.use_synthetic_trace = false;
    cfg.trace_path = path;
    TraceMatrix loaded = load_or_make_trace(cfg);
    CHECK(loaded.functions == tiny.functions);
    CHECK(loaded.counts == tiny.counts);
    std::remove(path.c_str());

    cfg.trace_path.clear();
    CHECK_THROWS_AS(load_or_make_trace(cfg), std::runtime_error);
}

TEST_CASE("configuration serializes for provenance") {
    SimConfig cfg = tiny_config();
    nlohmann::json j = config_to_json(cfg);
    CHECK(j["gpu_count"] == 2);
    CHECK(j["capacity_mb"] == doctest::Approx(8192.0));
    CHECK(j["scheduler"] == "lalbo3");
    CHECK(j["effective_o3_limit"] == 25);
    CHECK(j["working_set_size"] == 5);
    CHECK(j["trace"] == "synthetic");
    CHECK(j["synthetic"]["seed"] == 91);
}
