#pragma once

#include <vector>

#include "fedmimo/channel.hpp"
#include "fedmimo/phy.hpp"

namespace fedmimo {

struct FixedPointResult {
    /// Converged normalized powers (watts, indexed by device id, zero outside
    /// the set); the active entries sum to the power budget.
    std::vector<double> normalized;
    int iterations = 0;
    bool converged = false;
};

struct FeasibilityReport {
    bool feasible = false;
    /// Watts per device id; zero outside the tested set. When feasible these
    /// powers meet every SINR target (with margin) under MMSE receivers.
    std::vector<double> powers;
    int iterations = 0;
    bool converged = false;
};

/// Runs the sum-power-normalized fixed-point iteration
///   p~_k = gamma_k / (h_k^H Sigma_k^{-1} h_k),  Sigma_k = sum_{i != k} p_i h_i h_i^H + sigma^2 I,
///   p <- P_sum * p~ / sum(p~)
/// from the given start (uniform split when empty). The map is a standard
/// interference function, so the normalized iterate converges to a unique
/// ray independent of the start.
FixedPointResult normalized_power_iteration(const std::vector<int>& candidates,
                                            const ChannelRealization& channels,
                                            const SinrTargets& targets, double sum_power_w,
                                            double sigma2_w,
                                            const std::vector<double>& initial = {});

/// Tests whether the candidate set can meet its SINR targets within the sum
/// power budget: feasible iff sum(p~) <= P_sum at the converged normalized
/// point. Infinite targets are rejected immediately. The returned powers are
/// p~ itself, which meets the targets whenever the sum condition holds
/// (monotonicity of the interference map).
FeasibilityReport feasibility_test(const std::vector<int>& candidates,
                                   const ChannelRealization& channels, const SinrTargets& targets,
                                   double sum_power_w, double sigma2_w);

}  // namespace fedmimo
