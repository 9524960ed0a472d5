// Expands a RunConfig into the (scenario x sizes x modes x ...) run
// matrix and executes it, producing report rows.
#pragma once

#include <iosfwd>

#include "tdp/bench.hpp"
#include "tdp/config.hpp"

namespace tdp::runner {

struct RunEntry {
    topo::TopoConfig topo;
    traffic::TrafficSpec spec;
    std::string buffer_mode_label;  // CSV/JSON echo; "-" when not delegating
};

// The matrix a config describes, without executing it.
std::vector<RunEntry> expand(const RunConfig& cfg);

struct MatrixResult {
    std::vector<bench::RunRecord> rows;
    std::vector<std::string> warnings;
};

// Executes every entry `cfg.repetitions` times. Logs one line per run
// when `log` is non-null.
MatrixResult execute(const RunConfig& cfg, std::ostream* log);

}  // namespace tdp::runner
