#pragma once

#include <limits>
#include <map>
#include <vector>

#include "fedmimo/channel.hpp"

namespace fedmimo {

/// Physical-layer and timing constants. Powers are converted to watts at
/// parse time; the noise density is kept in dBm/Hz as configured and
/// converted exactly once by noise_power_w().
struct PhyConfig {
    double bandwidth_hz = 10e6;
    double noise_psd_dbm_hz = -174.0;
    int bits_per_param = 32;
    int model_dim = 30720;
    double per_sample_compute_s = 1e-4;
    double latency_threshold_s = 1.0;
    double sum_power_w = 0.03;

    void validate() const;
    double payload_bits() const { return static_cast<double>(bits_per_param) * model_dim; }
};

struct PowerAllocation {
    std::vector<double> powers;  // watts, indexed by device id; zero when unscheduled
};

/// Unit-norm receive combining vectors, keyed by device id.
struct BeamformerSet {
    std::map<int, cvec> receive;
};

/// Per-device SINR requirements implied by the latency budget. Devices whose
/// local computation alone exceeds the budget are marked inadmissible and
/// never enter a schedule.
struct SinrTargets {
    std::vector<double> required_rate_bps_hz;  // r_k
    std::vector<double> sinr_linear;           // 2^{r_k} - 1
    std::vector<bool> admissible;

    std::vector<int> admissible_ids() const;
    int device_count() const { return static_cast<int>(admissible.size()); }
};

double noise_power_w(const PhyConfig& cfg);

/// Uplink SINR of device k under receive beamformer m_k, transmit powers p,
/// and concurrent transmitters S. Throws std::domain_error if k is not in S.
double sinr_uplink(int k, const ChannelRealization& channels, const BeamformerSet& beams,
                   const PowerAllocation& p, const std::vector<int>& scheduled, double sigma2_w);

double uplink_rate_bps(double sinr_linear, double bandwidth_hz);

double local_latency_s(std::int64_t sample_count, const PhyConfig& cfg);

/// Transmission time of the model payload at the fixed rate implied by the
/// SINR. Zero SINR yields +infinity.
double uplink_latency_s(double sinr_linear, const PhyConfig& cfg);

/// max over S of (local + uplink) latency. Throws on empty S.
double system_latency_s(const std::vector<int>& scheduled, const std::vector<double>& local_s,
                        const std::vector<double>& uplink_s);

SinrTargets sinr_targets(const PhyConfig& cfg, const std::vector<double>& local_latencies_s);

/// MMSE receive filters for the scheduled set, normalized to unit norm:
/// m_k ∝ (σ²I + Σ_{i∈S} p_i h_i h_iᴴ)⁻¹ h_k.
BeamformerSet mmse_beamformers(const std::vector<int>& scheduled,
                               const ChannelRealization& channels, const PowerAllocation& p,
                               double sigma2_w);

}  // namespace fedmimo
