#include <doctest.h>

#include <algorithm>
#include <cstdio>

#include "tdp/topo.hpp"

using namespace tdp;
using namespace tdp::topo;

namespace {

TopoConfig make_cfg(const std::string& scenario, Kind kind, Mode mode) {
    TopoConfig t;
    t.scenario = scenario;
    t.kind = kind;
    t.mode = mode;
    t.workers = 2;
    return t;
}

traffic::TrafficSpec small_spec(const std::string& scenario, std::uint32_t size = 64) {
    traffic::TrafficSpec s;
    s.layer = traffic::layer_for_scenario(scenario);
    s.frame_size = size;
    s.address_cardinality = 10'000;
    s.seed = 5;
    return s;
}

RunResult run_frames(const TopoConfig& t, const traffic::TrafficSpec& s,
                     std::uint64_t frames, bool capture = false) {
    auto dp = Dataplane::build(t, s);
    RunWindow w;
    w.frame_count = frames;
    w.capture_output = capture;
    return dp->run(w);
}

}  // namespace

TEST_CASE("baseline forwards every admitted frame") {
    const RunResult r =
        run_frames(make_cfg("l2fwd", Kind::baseline, Mode::trusted), small_spec("l2fwd"), 20'000);
    CHECK(r.admitted == 20'000);
    CHECK(r.sunk_frames == 20'000);
    CHECK(r.total_drops() == 0);
    CHECK(r.admitted == r.sunk_frames + r.total_drops());
    REQUIRE(r.units.size() == 1);
    CHECK(r.units[0].gate.ecalls == 1);
    CHECK(r.units[0].gate.ocalls == 0);  // plain forwarding never delegates
    CHECK(r.sunk_bytes == 20'000 * 64);
}

TEST_CASE("one worker is never enough") {
    TopoConfig t = make_cfg("l2fwd", Kind::baseline, Mode::trusted);
    t.workers = 1;
    CHECK_THROWS_AS(Dataplane::build(t, small_spec("l2fwd")), InsufficientWorkers);
}

TEST_CASE("oversubscription is flagged, and refusable") {
    TopoConfig t = make_cfg("l2fwd", Kind::parallel, Mode::trusted);
    t.n_enclaves = 3;  // needs 4 workers, have 2
    const RunResult r = run_frames(t, small_spec("l2fwd"), 5'000);
    CHECK(r.oversubscribed);
    CHECK(r.sunk_frames == 5'000);

    t.allow_oversubscription = false;
    CHECK_THROWS_AS(Dataplane::build(t, small_spec("l2fwd")), InsufficientWorkers);
}

TEST_CASE("trusted and vanilla baselines produce identical output bytes") {
    for (const std::string scenario : {"l2fwd", "l3fwd"}) {
        const RunResult v = run_frames(make_cfg(scenario, Kind::baseline, Mode::vanilla),
                                       small_spec(scenario), 20'000, true);
        const RunResult t = run_frames(make_cfg(scenario, Kind::baseline, Mode::trusted),
                                       small_spec(scenario), 20'000, true);
        REQUIRE(v.captured.size() == 20'000);
        CHECK(v.captured == t.captured);  // ordered equality
    }
}

TEST_CASE("parallel(1) equals baseline exactly") {
    TopoConfig p = make_cfg("l2fwd", Kind::parallel, Mode::trusted);
    p.n_enclaves = 1;
    const RunResult a = run_frames(p, small_spec("l2fwd"), 10'000, true);
    const RunResult b = run_frames(make_cfg("l2fwd", Kind::baseline, Mode::trusted),
                                   small_spec("l2fwd"), 10'000, true);
    CHECK(a.captured == b.captured);
}

TEST_CASE("parallel(3) output multiset equals baseline") {
    TopoConfig p = make_cfg("l3fwd", Kind::parallel, Mode::trusted);
    p.n_enclaves = 3;
    RunResult par = run_frames(p, small_spec("l3fwd"), 20'000, true);
    RunResult base = run_frames(make_cfg("l3fwd", Kind::baseline, Mode::trusted),
                                small_spec("l3fwd"), 20'000, true);
    REQUIRE(par.captured.size() == 20'000);
    std::sort(par.captured.begin(), par.captured.end());
    std::sort(base.captured.begin(), base.captured.end());
    CHECK(par.captured == base.captured);
    // All enclaves measured identical (same processing logic).
    CHECK(par.units.size() == 3);
}

TEST_CASE("secure parallel multiset equals secure baseline") {
    TopoConfig p = make_cfg("l2fwd-enc", Kind::parallel, Mode::trusted);
    p.n_enclaves = 2;
    RunResult par = run_frames(p, small_spec("l2fwd-enc"), 4'000, true);
    RunResult base = run_frames(make_cfg("l2fwd-enc", Kind::baseline, Mode::trusted),
                                small_spec("l2fwd-enc"), 4'000, true);
    std::sort(par.captured.begin(), par.captured.end());
    std::sort(base.captured.begin(), base.captured.end());
    CHECK(par.captured == base.captured);
}

TEST_CASE("repeated runs with one seed yield one multiset") {
    TopoConfig p = make_cfg("l3fwd", Kind::parallel, Mode::trusted);
    p.n_enclaves = 2;
    RunResult a = run_frames(p, small_spec("l3fwd"), 10'000, true);
    RunResult b = run_frames(p, small_spec("l3fwd"), 10'000, true);
    std::sort(a.captured.begin(), a.captured.end());
    std::sort(b.captured.begin(), b.captured.end());
    CHECK(a.captured == b.captured);
}

TEST_CASE("2-stage secure pipeline equals the single-enclave secure path") {
    TopoConfig pipe = make_cfg("l2fwd-enc", Kind::pipeline, Mode::trusted);
    pipe.stages = 2;
    const RunResult p = run_frames(pipe, small_spec("l2fwd-enc"), 4'000, true);
    const RunResult b = run_frames(make_cfg("l2fwd-enc", Kind::baseline, Mode::trusted),
                                   small_spec("l2fwd-enc"), 4'000, true);
    CHECK(p.captured == b.captured);  // spsc chain preserves order
    CHECK(p.units.size() == 2);
}

TEST_CASE("3-stage plain pipeline equals the baseline") {
    for (const std::string scenario : {"l2fwd", "l3fwd"}) {
        TopoConfig pipe = make_cfg(scenario, Kind::pipeline, Mode::trusted);
        pipe.stages = 3;
        const RunResult p = run_frames(pipe, small_spec(scenario), 8'000, true);
        const RunResult b = run_frames(make_cfg(scenario, Kind::baseline, Mode::trusted),
                                       small_spec(scenario), 8'000, true);
        CHECK(p.captured == b.captured);
    }
}

TEST_CASE("3-stage secure pipeline equals the baseline") {
    for (const std::string scenario : {"l2fwd-enc", "l3fwd-enc"}) {
        TopoConfig pipe = make_cfg(scenario, Kind::pipeline, Mode::trusted);
        pipe.stages = 3;
        const RunResult p = run_frames(pipe, small_spec(scenario), 3'000, true);
        const RunResult b = run_frames(make_cfg(scenario, Kind::baseline, Mode::trusted),
                                       small_spec(scenario), 3'000, true);
        CHECK(p.captured == b.captured);
        CHECK(p.units.size() == 3);
    }
}

TEST_CASE("tampered stage measurement aborts pipeline construction") {
    TopoConfig pipe = make_cfg("l2fwd", Kind::pipeline, Mode::trusted);
    pipe.stages = 2;
    pipe.hooks.forge_measurement_stage = 1;
    CHECK_THROWS_AS(Dataplane::build(pipe, small_spec("l2fwd")), tee::AttestationFailed);
}

TEST_CASE("lb with zero servers forwards straight to Tx") {
    TopoConfig t = make_cfg("lb-server", Kind::lb, Mode::trusted);
    t.n_servers = 0;
    const RunResult r = run_frames(t, small_spec("lb-server"), 10'000);
    CHECK(r.sunk_frames == 10'000);
    REQUIRE(r.units.size() == 1);
    CHECK(r.units[0].gate.ocalls == r.units[0].batches);
}

TEST_CASE("lb with five servers: each packet traverses exactly one backend") {
    TopoConfig t = make_cfg("lb-server", Kind::lb, Mode::trusted);
    t.n_servers = 5;
    const RunResult r = run_frames(t, small_spec("lb-server"), 10'000);
    CHECK(r.sunk_frames == 10'000);
    CHECK(r.total_drops() == 0);

    std::uint64_t server_frames = 0;
    int servers_hit = 0;
    for (const auto& u : r.units) {
        if (u.role == "lb") continue;
        server_frames += u.frames_in;
        if (u.frames_in > 0) ++servers_hit;
    }
    CHECK(server_frames == 10'000);  // exactly once each
    CHECK(servers_hit == 5);
}

TEST_CASE("two enclaves per server share the backend ring") {
    TopoConfig t = make_cfg("lb-server", Kind::lb, Mode::trusted);
    t.n_servers = 2;
    t.two_enclaves_per_server = true;
    const RunResult r = run_frames(t, small_spec("lb-server"), 10'000);
    CHECK(r.units.size() == 5);  // lb + 2x2 servers
    CHECK(r.sunk_frames == 10'000);
    std::uint64_t server_frames = 0;
    for (const auto& u : r.units)
        if (u.role != "lb") server_frames += u.frames_in;
    CHECK(server_frames == 10'000);
}

TEST_CASE("corrupting the trusted table breaks equivalence (test hook)") {
    const RunResult v = run_frames(make_cfg("l2fwd", Kind::baseline, Mode::vanilla),
                                   small_spec("l2fwd"), 5'000, true);
    TopoConfig t = make_cfg("l2fwd", Kind::baseline, Mode::trusted);
    t.hooks.corrupt_l2_table = true;
    const RunResult c = run_frames(t, small_spec("l2fwd"), 5'000, true);
    CHECK(v.captured != c.captured);
}

TEST_CASE("duration-mode runs exclude warmup and stay conservative") {
    TopoConfig t = make_cfg("l2fwd", Kind::baseline, Mode::trusted);
    auto dp = Dataplane::build(t, small_spec("l2fwd"));
    RunWindow w;
    w.warmup_s = 0.1;
    w.duration_s = 0.3;
    const RunResult r = dp->run(w);
    CHECK(r.admitted == r.sunk_frames + r.total_drops());
    CHECK(r.duration_s >= 0.3);
    CHECK(r.sunk_frames > 0);
}

TEST_CASE("a dataplane runs only once") {
    TopoConfig t = make_cfg("l2fwd", Kind::baseline, Mode::trusted);
    auto dp = Dataplane::build(t, small_spec("l2fwd"));
    RunWindow w;
    w.frame_count = 100;
    dp->run(w);
    CHECK_THROWS_AS(dp->run(w), std::logic_error);
}

TEST_CASE("record and replay through the capture file") {
    const std::string path = "/tmp/tdp_test_replay.tdpc";

    // Record the output of a vanilla l2fwd run.
    {
        TopoConfig t = make_cfg("l2fwd", Kind::baseline, Mode::vanilla);
        auto dp = Dataplane::build(t, small_spec("l2fwd"));
        RunWindow w;
        w.frame_count = 500;
        w.record_path = path;
        const RunResult r = dp->run(w);
        CHECK(r.sunk_frames == 500);
    }

    // Replay it as generator input; recorded frames still hit the table.
    {
        TopoConfig t = make_cfg("l2fwd", Kind::baseline, Mode::vanilla);
        t.replay_path = path;
        const RunResult r = run_frames(t, small_spec("l2fwd"), 1'500, true);
        CHECK(r.admitted == 1'500);
        CHECK(r.sunk_frames == 1'500);  // replayed dsts are still covered
        // The stream cycles over the 500 recorded frames.
        CHECK(r.captured[0] == r.captured[500]);
    }
    std::remove(path.c_str());
}
