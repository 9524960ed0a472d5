#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "tdp/bench.hpp"

using namespace tdp;
using namespace tdp::bench;
using doctest::Approx;

TEST_CASE("wire throughput reproduces the reference-testbed cells") {
    CHECK(wire_throughput_gbps(21.80, 64) == Approx(14.65).epsilon(0.01));
    CHECK(wire_throughput_gbps(8.68, 512) == Approx(36.93).epsilon(0.01));
    CHECK(wire_throughput_gbps(13.75, 256) == Approx(30.36).epsilon(0.01));
    CHECK(wire_throughput_gbps(0, 64) == 0.0);
    CHECK(wire_throughput_gbps(0, 1518) == 0.0);
}

TEST_CASE("wire throughput domain errors") {
    CHECK_THROWS_AS(wire_throughput_gbps(1.0, 63), std::domain_error);
    CHECK_THROWS_AS(wire_throughput_gbps(1.0, 1519), std::domain_error);
    CHECK_THROWS_AS(wire_throughput_gbps(-0.1, 64), std::domain_error);
}

TEST_CASE("wire throughput is linear in mpps and increasing in frame size") {
    for (double m : {0.5, 3.0, 20.0}) {
        CHECK(wire_throughput_gbps(2 * m, 256) == Approx(2 * wire_throughput_gbps(m, 256)));
        CHECK(wire_throughput_gbps(m, 128) > wire_throughput_gbps(m, 64));
        CHECK(wire_throughput_gbps(m, 1518) > wire_throughput_gbps(m, 512));
    }
}

TEST_CASE("overhead equation") {
    CHECK(sgx_overhead_pct(21.80, 21.33) == Approx(2.16).epsilon(0.002));
    CHECK(sgx_overhead_pct(17.51, 15.73) == Approx(10.17).epsilon(0.002));
    CHECK(sgx_overhead_pct(5.0, 5.0) == 0.0);
    CHECK(sgx_overhead_pct(10.0, 11.0) == Approx(-10.0));  // trusted faster within noise
    CHECK_THROWS_AS(sgx_overhead_pct(0.0, 1.0), std::domain_error);
}

TEST_CASE("overhead orders with trusted throughput") {
    // overhead(v, t1) > overhead(v, t2) iff t1 < t2
    CHECK(sgx_overhead_pct(20, 15) > sgx_overhead_pct(20, 16));
    CHECK(sgx_overhead_pct(20, 19.99) > sgx_overhead_pct(20, 20.0));
}

namespace {

topo::RunResult fake_run(std::uint64_t frames, double secs) {
    topo::RunResult r;
    r.admitted = frames;
    r.sunk_frames = frames;
    r.duration_s = secs;
    r.size_hist.resize(65);
    topo::UnitReport u;
    u.role = "enclave";
    u.enclave_id = 1;
    u.gate.ecalls = 1;
    u.gate.ocalls = 10;
    u.gate.bytes_copied_out = 40;
    u.gate.bytes_copied_in = 10;
    r.units.push_back(u);
    return r;
}

}  // namespace

TEST_CASE("make_record aggregates repetitions and keeps wire consistent") {
    std::vector<topo::RunResult> reps;
    reps.push_back(fake_run(1'000'000, 1.0));  // 1.0 MPPS
    reps.push_back(fake_run(3'000'000, 1.0));  // 3.0 MPPS

    const RunRecord rec =
        make_record("l2fwd", "baseline", "trusted", "-", true, 64, 7, reps);
    CHECK(rec.mpps == Approx(2.0));
    CHECK(rec.wire_gbps == Approx(wire_throughput_gbps(rec.mpps, 64)));
    CHECK(rec.rx_frames == 4'000'000);
    CHECK(rec.tx_frames == 4'000'000);
    CHECK(rec.ecalls == 2);
    CHECK(rec.ocalls == 20);
    CHECK(rec.rep_mpps.size() == 2);
}

TEST_CASE("compute_overheads pairs rows and reports missing baselines") {
    std::vector<RunRecord> rows;
    rows.push_back(make_record("l2fwd", "baseline", "vanilla", "-", true, 64, 7,
                               {fake_run(2'000'000, 1.0)}));
    rows.push_back(make_record("l2fwd", "baseline", "trusted", "-", true, 64, 7,
                               {fake_run(1'000'000, 1.0)}));
    rows.push_back(make_record("l3fwd", "baseline", "trusted", "-", true, 64, 7,
                               {fake_run(1'000'000, 1.0)}));

    const auto warnings = compute_overheads(rows);
    REQUIRE(rows[1].overhead_pct.has_value());
    CHECK(*rows[1].overhead_pct == Approx(50.0));
    CHECK_FALSE(rows[2].overhead_pct.has_value());  // column left empty
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("MissingBaseline") == 0);
    CHECK(warnings[0].find("l3fwd") != std::string::npos);
}

TEST_CASE("csv has the pinned column order and two-decimal formatting") {
    std::vector<RunRecord> rows;
    rows.push_back(make_record("l2fwd", "baseline", "trusted", "-", true, 64, 7,
                               {fake_run(1'234'567, 1.0)}));
    const std::string csv = csv_string(rows);

    CHECK(csv.find("scenario,topology,mode,frame_size,mpps,wire_gbps,overhead_pct,"
                   "ecalls,ocalls,bytes_out,bytes_in,paging,drops\n") == 0);
    CHECK(csv.find("l2fwd,baseline,trusted,64,1.23,") != std::string::npos);
    // No baseline: the overhead field is empty between two commas.
    CHECK(csv.find(",,") != std::string::npos);
}

TEST_CASE("json report embeds host, config echo and self-consistent rows") {
    std::vector<RunRecord> rows;
    rows.push_back(make_record("l3fwd", "baseline", "trusted", "-", true, 128, 9,
                               {fake_run(2'000'000, 1.0)}));

    const std::string path = "/tmp/tdp_test_report.json";
    write_json(path, rows, host_info(), "{\"scenario\":\"l3fwd\"}", {"warning-1"});

    std::ifstream f(path);
    nlohmann::json doc = nlohmann::json::parse(f);
    CHECK(doc["config"]["scenario"] == "l3fwd");
    CHECK(doc["warnings"].size() == 1);
    REQUIRE(doc["runs"].size() == 1);
    const auto& run = doc["runs"][0];
    CHECK(run["scenario"] == "l3fwd");
    CHECK(run["frame_size"] == 128);
    // wire column recomputes from the row's own mpps
    CHECK(double(run["wire_gbps"]) ==
          Approx(wire_throughput_gbps(double(run["mpps"]), 128)));
    std::remove(path.c_str());
}
