#pragma once

#include <string>
#include <vector>

#include "moyal/matrix.hpp"
#include "moyal/weights.hpp"

namespace moyal {

// Versioned binary snapshot: magic "MSQSNAP1", u32 version, u32 cutoff,
// f64 time, u32 field count, then per field a 16-byte name and the
// row-major complex64 entries (float32 re, float32 im). A JSON sidecar
// `<file>.json` carries the parameters and field list.
struct Snapshot {
    double t = 0.0;
    int cutoff = 0;
    std::vector<std::pair<std::string, CMatrix>> fields;
};

void write_snapshot(const std::string& path, const Snapshot& snap, const ModelParams& params);
Snapshot read_snapshot(const std::string& path);

} // namespace moyal
