#include "fedmimo/phy.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace fedmimo {

void PhyConfig::validate() const {
    if (bandwidth_hz <= 0.0) throw std::invalid_argument("bandwidth must be positive");
    if (bits_per_param <= 0) throw std::invalid_argument("bits per parameter must be positive");
    if (model_dim <= 0) throw std::invalid_argument("model dimension must be positive");
    if (per_sample_compute_s <= 0.0)
        throw std::invalid_argument("per-sample compute time must be positive");
    if (latency_threshold_s <= 0.0)
        throw std::invalid_argument("latency threshold must be positive");
    if (sum_power_w <= 0.0) throw std::invalid_argument("sum power must be positive");
}

std::vector<int> SinrTargets::admissible_ids() const {
    std::vector<int> ids;
    for (int k = 0; k < device_count(); ++k)
        if (admissible[k]) ids.push_back(k);
    return ids;
}

double noise_power_w(const PhyConfig& cfg) {
    return cfg.bandwidth_hz * dbm_to_watts(cfg.noise_psd_dbm_hz);
}

double sinr_uplink(int k, const ChannelRealization& channels, const BeamformerSet& beams,
                   const PowerAllocation& p, const std::vector<int>& scheduled, double sigma2_w) {
    bool member = false;
    for (int i : scheduled)
        if (i == k) member = true;
    if (!member) throw std::domain_error("SINR requested for a device outside the scheduled set");

    const cvec& m = beams.receive.at(k);
    const auto gain = [&](int i) {
        const std::complex<double> v = m.dot(channels.vectors[i]);  // m^H h_i
        return std::norm(v);
    };
    double interference = 0.0;
    for (int i : scheduled)
        if (i != k) interference += p.powers[i] * gain(i);
    return p.powers[k] * gain(k) / (interference + sigma2_w);
}

double uplink_rate_bps(double sinr_linear, double bandwidth_hz) {
    if (sinr_linear < 0.0) throw std::domain_error("SINR must be nonnegative");
    return bandwidth_hz * std::log2(1.0 + sinr_linear);
}

double local_latency_s(std::int64_t sample_count, const PhyConfig& cfg) {
    return static_cast<double>(sample_count) * cfg.per_sample_compute_s;
}

double uplink_latency_s(double sinr_linear, const PhyConfig& cfg) {
    const double rate = uplink_rate_bps(sinr_linear, cfg.bandwidth_hz);
    if (rate == 0.0) return std::numeric_limits<double>::infinity();
    return cfg.payload_bits() / rate;
}

double system_latency_s(const std::vector<int>& scheduled, const std::vector<double>& local_s,
                        const std::vector<double>& uplink_s) {
    if (scheduled.empty()) throw std::domain_error("system latency of an empty schedule");
    double worst = 0.0;
    for (int k : scheduled) worst = std::max(worst, local_s[k] + uplink_s[k]);
    return worst;
}

SinrTargets sinr_targets(const PhyConfig& cfg, const std::vector<double>& local_latencies_s) {
    const int K = static_cast<int>(local_latencies_s.size());
    SinrTargets out;
    out.required_rate_bps_hz.assign(K, 0.0);
    out.sinr_linear.assign(K, std::numeric_limits<double>::infinity());
    out.admissible.assign(K, false);
    for (int k = 0; k < K; ++k) {
        const double budget = cfg.latency_threshold_s - local_latencies_s[k];
        if (budget <= 0.0) continue;  // computation alone blows the deadline
        const double r = cfg.payload_bits() / (cfg.bandwidth_hz * budget);
        out.required_rate_bps_hz[k] = r;
        out.sinr_linear[k] = std::exp2(r) - 1.0;  // overflows to +inf for huge r
        out.admissible[k] = true;
    }
    return out;
}

BeamformerSet mmse_beamformers(const std::vector<int>& scheduled,
                               const ChannelRealization& channels, const PowerAllocation& p,
                               double sigma2_w) {
    const int N = channels.antenna_count();
    cmat cov = sigma2_w * cmat::Identity(N, N);
    for (int i : scheduled) cov.noalias() += p.powers[i] * channels.vectors[i] * channels.vectors[i].adjoint();

    Eigen::LLT<cmat> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("interference covariance is not positive definite");

    BeamformerSet beams;
    for (int k : scheduled) {
        cvec m = llt.solve(channels.vectors[k]);
        const double n = m.norm();
        if (n == 0.0) throw std::runtime_error("degenerate MMSE direction");
        beams.receive[k] = m / n;
    }
    return beams;
}

}  // namespace fedmimo
