#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedmimo/fl.hpp"
#include "fedmimo/phy.hpp"

namespace fedmimo {

enum class Policy { proposed, random, full };

std::string policy_name(Policy p);
Policy parse_policy(const std::string& name);

/// Full experiment description. Defaults follow the reference system:
/// 50 devices in a 50-250 m annulus, 4 server antennas, 10 MHz, -174 dBm/Hz,
/// 1 s latency budget, 30 mW sum power, 32-bit parameters, one-step local
/// descent at rate 5e-3. The committed reference config scales this down
/// for test-suite runtimes.
struct ExperimentConfig {
    int device_count = 50;
    int antenna_count = 4;
    double inner_radius_m = 50.0;
    double outer_radius_m = 250.0;
    double bandwidth_hz = 10e6;
    double noise_psd_dbm_hz = -174.0;
    int bits_per_param = 32;
    int model_dim = 0;  // 0: derived from the dataset as (features+1)*classes
    double per_sample_compute_s = 1e-4;
    double latency_threshold_s = 1.0;
    double sum_power_w = 0.03;
    int rounds = 200;
    Policy policy = Policy::proposed;
    std::uint64_t master_seed = 1;
    double learning_rate = 5e-3;
    int reweight_iterations = 0;
    int synthetic_samples = 2000;
    int synthetic_features = 32;
    int synthetic_classes = 10;
    std::string dataset_path;  // empty: synthetic mixture
    std::string output_path;   // empty: caller handles persistence

    void validate() const;
    /// Physical-layer slice of the config; model_dim stays 0 when derived.
    PhyConfig phy() const;
};

/// Flat key=value text, '#' comments; unknown keys are errors.
ExperimentConfig load_config(const std::string& path);
void apply_key_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct RoundMetrics {
    int round = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    double grad_norm_sq = 0.0;  // at the pre-update model
    double weighted_mass = 0.0;
    int scheduled_count = 0;
    double residual_norm_sq = 0.0;
    double gap_term = 0.0;  // (1 - weighted_mass)^2
    double system_latency_s = 0.0;
};

struct ExperimentSummary {
    double final_loss = 0.0;
    double final_accuracy = 0.0;
    double mean_weighted_mass = 0.0;
    double convergence_bound = 0.0;     // right-hand side of the rate bound
    double mean_grad_norm_sq = 0.0;     // measured left-hand side
    double smoothness = 0.0;
    double kappa_analytic = 0.0;
    double kappa_probe = 0.0;
    double initial_loss = 0.0;
    double optimal_loss_estimate = 0.0; // achievable upper stand-in for F(w*)
    double step_size = 0.0;
    int postponed_draws = 0;   // extra channel redraws forced by empty schedules
    int fallback_rounds = 0;   // rounds where the conic solve failed
};

struct ExperimentRecord {
    ExperimentConfig config;
    Policy policy = Policy::proposed;
    std::vector<RoundMetrics> rounds;
    ExperimentSummary summary;
};

/// Runs the three-stage round loop (schedule, local updates, aggregate) for
/// the configured number of rounds. Deterministic given the master seed.
/// Rounds with an empty schedule redraw the channel (bounded retries) and do
/// not advance the round index. Aggregation identities and the residual and
/// descent bounds are asserted every round.
ExperimentRecord run_experiment(const ExperimentConfig& config);

/// Runs full, proposed, and random policies with the same master seed so
/// every policy sees identical channel draws per round; returns records in
/// that order.
std::vector<ExperimentRecord> compare_policies(const ExperimentConfig& config);

/// Delimited metrics table, one row per round, policy-major when several
/// records are given. Columns, in order: round, policy, loss, accuracy,
/// weighted_mass, scheduled_count, residual_norm_sq, gap_term,
/// system_latency, grad_norm_sq. A '# summary ...' footer line per record
/// carries the scalar results. Formatting is locale-free and value-exact,
/// so identical records produce byte-identical files.
void write_metrics(const std::vector<ExperimentRecord>& records, const std::string& path);

struct ParsedRecord {
    std::string policy;
    std::vector<RoundMetrics> rounds;
    std::map<std::string, double> summary;
};

std::vector<ParsedRecord> read_metrics(const std::string& path);

}  // namespace fedmimo
