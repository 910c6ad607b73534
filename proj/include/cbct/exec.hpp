#pragma once

namespace cbct {

/// Controls how the projection/backprojection kernels are scheduled.
struct ExecPolicy {
    /// Number of OpenMP threads, 0 picks the runtime default.
    int threads = 0;
    /// Force the serial reference path; results are bit-identical across runs.
    bool deterministic = false;
    /// Permit deliberately expensive configurations (e.g. very large Siddon grids).
    bool allow_expensive = false;

    bool serial() const { return deterministic || threads == 1; }
};

} // namespace cbct
