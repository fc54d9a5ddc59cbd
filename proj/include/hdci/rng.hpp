#pragma once

#include <array>
#include <cstdint>
#include <Eigen/Dense>

namespace hdci {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The output is a pure function of (key, stream, counter), so independent
/// streams never share state and a replicate's draws do not depend on the
/// order in which a thread pool schedules replicates.
class Philox {
public:
    Philox(std::uint64_t key, std::uint64_t stream);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1].
    double uniform_open_zero();
    /// Standard normal via the Box-Muller transform; values are produced in pairs.
    double normal();
    /// Uniform integer in [0, bound) by rejection, bound > 0.
    std::uint64_t below(std::uint64_t bound);

    Eigen::VectorXd normals(Eigen::Index count);

private:
    void refill();

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> block_{};
    int block_pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Replicate seed derived from (base seed, cell index, replicate index).
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t cell, std::uint64_t replicate);

/// Sub-stream identifiers used by the design sampler.
enum Stream : std::uint64_t { kStreamBeta = 0, kStreamDesign = 1, kStreamNoise = 2, kStreamSplit = 3 };

}  // namespace hdci
