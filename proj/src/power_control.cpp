#include "fedmimo/power_control.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace fedmimo {

namespace {

// p~_k = gamma_k / (h_k^H Sigma_k^{-1} h_k) for every k in the set, where
// Sigma_k excludes k's own contribution. One Hermitian factorization per
// member; the sets are small, so plain O(|S| N^3) is fine.
std::vector<double> interference_map(const std::vector<int>& set,
                                     const ChannelRealization& channels,
                                     const std::vector<double>& gamma,
                                     const std::vector<double>& p, double sigma2_w) {
    const int N = channels.antenna_count();
    std::vector<double> out(set.size(), 0.0);
    for (std::size_t a = 0; a < set.size(); ++a) {
        const int k = set[a];
        cmat cov = sigma2_w * cmat::Identity(N, N);
        for (int i : set)
            if (i != k) cov.noalias() += p[i] * channels.vectors[i] * channels.vectors[i].adjoint();
        Eigen::LLT<cmat> llt(cov);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("interference covariance is not positive definite");
        const cvec x = llt.solve(channels.vectors[k]);
        const double quad = channels.vectors[k].dot(x).real();  // h^H Sigma^{-1} h > 0
        out[a] = gamma[k] / quad;
    }
    return out;
}

void check_candidates(const std::vector<int>& candidates, const ChannelRealization& channels,
                      const SinrTargets& targets) {
    if (candidates.empty()) throw std::domain_error("power iteration on an empty set");
    for (int k : candidates) {
        if (k < 0 || k >= channels.device_count())
            throw std::out_of_range("candidate device id out of range");
        if (!targets.admissible[k] || std::isinf(targets.sinr_linear[k]))
            throw std::domain_error("power iteration with an unattainable SINR target");
    }
}

}  // namespace

FixedPointResult normalized_power_iteration(const std::vector<int>& candidates,
                                            const ChannelRealization& channels,
                                            const SinrTargets& targets, double sum_power_w,
                                            double sigma2_w, const std::vector<double>& initial) {
    check_candidates(candidates, channels, targets);
    const int n = static_cast<int>(candidates.size());

    std::vector<double> p(channels.device_count(), 0.0);
    if (initial.empty()) {
        for (int k : candidates) p[k] = sum_power_w / n;
    } else {
        if (initial.size() != static_cast<std::size_t>(channels.device_count()))
            throw std::invalid_argument("initial power vector has the wrong length");
        for (int k : candidates) {
            if (initial[k] <= 0.0) throw std::invalid_argument("initial powers must be positive");
            p[k] = initial[k];
        }
    }

    FixedPointResult result;
    constexpr int kMaxIters = 2000;
    constexpr double kRelTol = 1e-13;
    for (result.iterations = 1; result.iterations <= kMaxIters; ++result.iterations) {
        const std::vector<double> tilde =
            interference_map(candidates, channels, targets.sinr_linear, p, sigma2_w);
        double total = 0.0;
        for (double v : tilde) total += v;

        double shift = 0.0;
        for (int a = 0; a < n; ++a) {
            const double scaled = sum_power_w * tilde[a] / total;
            shift = std::max(shift,
                             std::abs(scaled - p[candidates[a]]) / std::max(scaled, 1e-300));
            p[candidates[a]] = scaled;
        }
        if (shift < kRelTol) {
            result.converged = true;
            break;
        }
    }
    result.normalized = std::move(p);
    return result;
}

FeasibilityReport feasibility_test(const std::vector<int>& candidates,
                                   const ChannelRealization& channels, const SinrTargets& targets,
                                   double sum_power_w, double sigma2_w) {
    FeasibilityReport report;
    report.powers.assign(channels.device_count(), 0.0);
    if (candidates.empty()) throw std::domain_error("feasibility test on an empty set");

    for (int k : candidates) {
        if (k < 0 || k >= channels.device_count())
            throw std::out_of_range("candidate device id out of range");
        if (!targets.admissible[k] || std::isinf(targets.sinr_linear[k])) {
            report.feasible = false;  // no finite power meets an unattainable target
            return report;
        }
    }

    const FixedPointResult fp =
        normalized_power_iteration(candidates, channels, targets, sum_power_w, sigma2_w);
    report.iterations = fp.iterations;
    report.converged = fp.converged;

    // One exact map evaluation at the converged normalized point decides
    // feasibility. The fixed point satisfies p = c * p~ with c = P_sum /
    // sum(p~); c >= 1 means p~ <= p, hence f(p~) <= f(p) = p~ by
    // monotonicity: p~ meets every target within the budget.
    const std::vector<double> tilde =
        interference_map(candidates, channels, targets.sinr_linear, fp.normalized, sigma2_w);
    double total = 0.0;
    for (double v : tilde) total += v;
    report.feasible = total <= sum_power_w * (1.0 + 1e-8);
    if (report.feasible)
        for (std::size_t a = 0; a < candidates.size(); ++a)
            report.powers[candidates[a]] = tilde[a];
    return report;
}

}  // namespace fedmimo
