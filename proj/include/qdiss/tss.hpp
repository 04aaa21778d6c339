#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "qdiss/rng.hpp"

namespace qdiss {

// Static disorder ensembles over the slow bath. Each trajectory draws frozen
// energy shifts for the subsystem states, runs the full rate and dissipation
// pipeline with those shifts, and the observables are averaged.

enum class DisorderTopology {
    IndependentPerState,  // one independent Gaussian shift per state (local baths)
    AntiCorrelated,       // a single draw shifting the two states oppositely
                          // (one shared bath coupled with opposite signs)
};

// Frozen shifts for one trajectory. The slow modes displace every state's
// energy by the same mean, which cancels in all energy differences, so the
// draws are zero mean.
std::vector<double> sample_shifts(DisorderTopology topology, std::size_t n_states,
                                  double sigma, GaussianSampler& gauss);

struct EnsembleResult {
    std::size_t n = 0;
    std::vector<double> mean;
    std::vector<double> stderr_of_mean;  // for the tracked payload segment only
};

inline constexpr std::size_t kEnsembleBlock = 32;

// Averages a flat payload over n_traj trajectories.
//
// fill(traj, gauss, payload) overwrites the payload for one trajectory; its
// Gaussian stream is derived from (seed, traj) alone. Trajectories are
// grouped into fixed blocks of kEnsembleBlock; workers claim whole blocks,
// accumulate partial sums serially inside each block, and the partials are
// merged in block order. The result is therefore bit-identical for any
// worker count. Standard errors are tracked for payload[se_offset,
// se_offset + se_size).
EnsembleResult run_ensemble(
    std::size_t n_traj, std::size_t payload_size, std::size_t se_offset,
    std::size_t se_size, std::uint64_t seed, int workers,
    const std::function<void(std::size_t, GaussianSampler&, std::vector<double>&)>& fill);

}  // namespace qdiss
