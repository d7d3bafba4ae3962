#pragma once

#include <map>
#include <vector>

#include "fedmimo/channel.hpp"
#include "fedmimo/phy.hpp"
#include "fedmimo/power_control.hpp"
#include "fedmimo/seeding.hpp"
#include "fedmimo/socp.hpp"

namespace fedmimo {

/// Device priorities from the scheduling relaxation: per-device slack s_k
/// (small s = easy to serve), the dual downlink beamformers, and the
/// weighted objective sum(alpha_k s_k).
struct PrioritySolution {
    std::vector<int> devices;     // program order
    std::vector<double> slacks;   // aligned with devices, clamped at 0
    std::map<int, cvec> dual_beamformers;
    double objective = 0.0;
    socp::SolveStatus status = socp::SolveStatus::failed;
    bool fallback_used = false;   // conic solve failed; channel-norm ranking instead
};

struct ScheduleResult {
    std::vector<int> scheduled;  // admission order
    PowerAllocation powers;
    BeamformerSet beamformers;
    double weighted_mass = 0.0;
    PrioritySolution priority;
};

/// Violations of the relaxation's constraint system at a given (s, m_hat)
/// point, evaluated in the original (unscaled) variables.
struct ConstraintResiduals {
    double cone = 0.0;      // max over devices of SOC constraint violation
    double equality = 0.0;  // max |Im(m_hat_k^H h_k)|
    double power = 0.0;     // max(0, sum ||m_hat||^2 - P_sum/sigma^2)
    double nonneg = 0.0;    // max(0, -s_k)

    double max_violation() const;
};

/// Real-embedded conic form of the priority relaxation over a device
/// subset. Beamformers are scaled by sqrt(P_sum/sigma^2) before embedding so
/// the solver sees O(1) data; extraction undoes the scaling.
struct ConeProgram {
    socp::Problem problem;
    std::vector<int> devices;
    int antenna_count = 0;
    double scale = 1.0;

    bool empty() const { return devices.empty(); }
    std::map<int, cvec> extract_beamformers(const socp::VectorXd& x) const;
    std::vector<double> extract_slacks(const socp::VectorXd& x) const;
};

/// Builds the relaxation over `devices` (each must carry a finite SINR
/// target): minimize sum(alpha_k s_k) subject to, for every k in the set,
///   Re(m_k^H h_k)/sqrt(gamma_k) + s_k >= sqrt(sum_{i != k} |m_i^H h_k|^2 + 1),
///   Im(m_k^H h_k) = 0,   s_k >= 0,   sum ||m_k||^2 <= P_sum/sigma^2.
/// Returns the empty-program sentinel when `devices` is empty.
ConeProgram build_cone_program(const std::vector<int>& devices,
                               const ChannelRealization& channels, const SinrTargets& targets,
                               const std::vector<double>& weights, double sum_power_w,
                               double sigma2_w);

PrioritySolution solve_priority(const ConeProgram& program);

/// Constraint system evaluated at an arbitrary candidate point.
ConstraintResiduals constraint_residuals(const std::vector<int>& devices,
                                         const ChannelRealization& channels,
                                         const SinrTargets& targets,
                                         const std::vector<double>& slacks,
                                         const std::map<int, cvec>& beamformers,
                                         double sum_power_w, double sigma2_w);

/// Dual downlink SINR of device k: |m_k^H h_k|^2 / (sum_{i!=k} |m_i^H h_k|^2 + 1).
double dual_sinr(int k, const std::map<int, cvec>& dual_beamformers,
                 const ChannelRealization& channels);

enum class DualFeasibility { feasible, infeasible, undecided };

/// Decides feasibility of the dual downlink system over the given set: the
/// relaxation restricted to the set admits a point with every slack at zero.
/// Decided by max slack <= 1e-6 at the relaxation's optimum; `undecided`
/// when the solve fails outright.
DualFeasibility dual_system_feasible(const std::vector<int>& devices,
                                     const ChannelRealization& channels,
                                     const SinrTargets& targets, double sum_power_w,
                                     double sigma2_w);

struct ScheduleOptions {
    /// Extra reweighted passes of the priority solve (weight <-
    /// alpha_k/(s_k + 1e-3)); 0 reproduces the single printed solve.
    int reweight_iterations = 0;
};

/// Priority-then-greedy scheduling: solve the relaxation over admissible
/// devices, sort slacks ascending (exact ties: larger weight first, then
/// lower id), admit one device at a time, and stop at the first prefix that
/// fails the power-control feasibility test. Returns the last feasible
/// prefix with its fixed-point powers and MMSE receive beamformers; the
/// empty result signals a postponed round.
ScheduleResult schedule_round(const ChannelRealization& channels, const SinrTargets& targets,
                              const std::vector<double>& weights, double sum_power_w,
                              double sigma2_w, const ScheduleOptions& options = {});

/// Uniformly random subset (size, then membership) of the admissible
/// devices, retried until the feasibility test passes (bounded attempts);
/// falls back to the largest feasible prefix of a random permutation.
ScheduleResult random_policy(const ChannelRealization& channels, const SinrTargets& targets,
                             const std::vector<double>& weights, double sum_power_w,
                             double sigma2_w, Rng& rng);

/// Ideal baseline: every device participates, wireless constraints ignored;
/// powers and beamformers are unused.
ScheduleResult full_policy(const std::vector<double>& weights);

}  // namespace fedmimo
