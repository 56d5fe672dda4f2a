#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>

#include "config.hpp"

namespace qbdspin::cli {

struct RunOptions {
    std::size_t workers = 1;
    bool resume = false;
    std::uint64_t halt_after = 0; // stop after this many checkpoint writes (0: never)
};

/// Thrown when a run stops on SIGINT (or --halt-after) after saving its
/// checkpoints.
struct Interrupted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::atomic<bool>& stop_requested();

int cmd_kernel(const RunConfig& cfg, const RunOptions& opt);
int cmd_tc(const RunConfig& cfg, const RunOptions& opt);
int cmd_dispersion(const RunConfig& cfg, const RunOptions& opt);
int cmd_memory(const RunConfig& cfg, const RunOptions& opt);
int cmd_sweep(const RunConfig& cfg, const RunOptions& opt);

} // namespace qbdspin::cli
