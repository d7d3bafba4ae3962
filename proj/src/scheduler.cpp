#include "fedmimo/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedmimo {

namespace {

constexpr double kSlackZeroSnap = 1e-9;   // slacks below this count as exact zeros
constexpr double kDualSlackTol = 1e-6;    // max slack deciding dual-system feasibility

// Ascending slack; exact ties prefer the heavier device, then the lower id.
struct PriorityOrder {
    double slack;
    double weight;
    int id;

    bool operator<(const PriorityOrder& o) const {
        if (slack != o.slack) return slack < o.slack;
        if (weight != o.weight) return weight > o.weight;
        return id < o.id;
    }
};

double snap_zero(double s) { return s < kSlackZeroSnap ? 0.0 : s; }

void check_inputs(const ChannelRealization& channels, const SinrTargets& targets,
                  const std::vector<double>& weights) {
    if (targets.device_count() != channels.device_count())
        throw std::invalid_argument("targets and channels disagree on device count");
    if (weights.size() != static_cast<std::size_t>(channels.device_count()))
        throw std::invalid_argument("weight vector has the wrong length");
}

}  // namespace

double ConstraintResiduals::max_violation() const {
    return std::max({cone, equality, power, nonneg});
}

std::map<int, cvec> ConeProgram::extract_beamformers(const socp::VectorXd& x) const {
    const int n = antenna_count;
    std::map<int, cvec> out;
    for (std::size_t a = 0; a < devices.size(); ++a) {
        cvec m(n);
        for (int j = 0; j < n; ++j)
            m(j) = std::complex<double>(x(2 * n * a + j), x(2 * n * a + n + j)) * scale;
        out[devices[a]] = std::move(m);
    }
    return out;
}

std::vector<double> ConeProgram::extract_slacks(const socp::VectorXd& x) const {
    const int base = 2 * antenna_count * static_cast<int>(devices.size());
    std::vector<double> s(devices.size());
    for (std::size_t a = 0; a < devices.size(); ++a) s[a] = std::max(0.0, x(base + a));
    return s;
}

ConeProgram build_cone_program(const std::vector<int>& devices,
                               const ChannelRealization& channels, const SinrTargets& targets,
                               const std::vector<double>& weights, double sum_power_w,
                               double sigma2_w) {
    check_inputs(channels, targets, weights);
    ConeProgram prog;
    prog.devices = devices;
    prog.antenna_count = channels.antenna_count();
    if (devices.empty()) return prog;

    const int ka = static_cast<int>(devices.size());
    const int n = prog.antenna_count;
    for (int k : devices) {
        if (k < 0 || k >= channels.device_count())
            throw std::out_of_range("device id out of range");
        if (!targets.admissible[k] || !std::isfinite(targets.sinr_linear[k]))
            throw std::domain_error("cone program over a device with no finite SINR target");
    }

    // m_hat = scale * u keeps solver data O(1): the budget turns into ||u|| <= 1
    // and channels are scaled up by the same factor.
    prog.scale = std::sqrt(sum_power_w / sigma2_w);
    std::vector<Eigen::VectorXd> re(ka), im(ka);
    for (int a = 0; a < ka; ++a) {
        re[a] = (prog.scale * channels.vectors[devices[a]]).real();
        im[a] = (prog.scale * channels.vectors[devices[a]]).imag();
    }

    const int nvars = 2 * n * ka + ka;
    const auto u_re = [&](int a) { return 2 * n * a; };
    const auto u_im = [&](int a) { return 2 * n * a + n; };
    const auto s_col = [&](int a) { return 2 * n * ka + a; };

    socp::Problem& p = prog.problem;
    p.dims.nonneg = ka;
    p.dims.soc.assign(ka, 2 * ka);
    p.dims.soc.push_back(2 * n * ka + 1);

    const int rows = p.dims.total();
    p.G = socp::MatrixXd::Zero(rows, nvars);
    p.h = socp::VectorXd::Zero(rows);
    p.c = socp::VectorXd::Zero(nvars);
    p.A = socp::MatrixXd::Zero(ka, nvars);
    p.b = socp::VectorXd::Zero(ka);

    for (int a = 0; a < ka; ++a) {
        p.c(s_col(a)) = weights[devices[a]];
        p.G(a, s_col(a)) = -1.0;  // slack row: s_a >= 0

        // Im(u_a^H g_a) = 0
        p.A.row(a).segment(u_re(a), n) = im[a].transpose();
        p.A.row(a).segment(u_im(a), n) = -re[a].transpose();
    }

    int off = ka;
    for (int a = 0; a < ka; ++a) {
        const double root_gamma = std::sqrt(targets.sinr_linear[devices[a]]);
        // cone head: Re(u_a^H g_a)/sqrt(gamma_a) + s_a
        p.G.row(off).segment(u_re(a), n) = -re[a].transpose() / root_gamma;
        p.G.row(off).segment(u_im(a), n) = -im[a].transpose() / root_gamma;
        p.G(off, s_col(a)) = -1.0;

        int r = off + 1;
        for (int b = 0; b < ka; ++b) {
            if (b == a) continue;
            // Re and Im of u_b^H g_a (interference of b's beam at a's channel)
            p.G.row(r).segment(u_re(b), n) = -re[a].transpose();
            p.G.row(r).segment(u_im(b), n) = -im[a].transpose();
            ++r;
            p.G.row(r).segment(u_re(b), n) = -im[a].transpose();
            p.G.row(r).segment(u_im(b), n) = re[a].transpose();
            ++r;
        }
        p.h(r) = 1.0;  // unit dual noise term closes the cone block
        off += 2 * ka;
    }

    p.h(off) = 1.0;  // ||u|| <= 1
    for (int j = 0; j < 2 * n * ka; ++j) p.G(off + 1 + j, j) = -1.0;

    return prog;
}

PrioritySolution solve_priority(const ConeProgram& program) {
    if (program.empty()) throw std::invalid_argument("priority solve on an empty program");
    PrioritySolution out;
    out.devices = program.devices;

    const socp::Solution sol = socp::solve(program.problem);
    out.status = sol.status;
    if (!sol.usable()) return out;

    out.slacks = program.extract_slacks(sol.x);
    out.dual_beamformers = program.extract_beamformers(sol.x);
    out.objective = sol.primal_objective;
    return out;
}

ConstraintResiduals constraint_residuals(const std::vector<int>& devices,
                                         const ChannelRealization& channels,
                                         const SinrTargets& targets,
                                         const std::vector<double>& slacks,
                                         const std::map<int, cvec>& beamformers,
                                         double sum_power_w, double sigma2_w) {
    if (slacks.size() != devices.size())
        throw std::invalid_argument("slack count does not match device count");
    ConstraintResiduals res;
    double power = 0.0;
    for (std::size_t a = 0; a < devices.size(); ++a) {
        const int k = devices[a];
        const cvec& mk = beamformers.at(k);
        power += mk.squaredNorm();

        double interference = 1.0;
        for (int i : devices) {
            if (i == k) continue;
            interference += std::norm(beamformers.at(i).dot(channels.vectors[k]));
        }
        const std::complex<double> direct = mk.dot(channels.vectors[k]);
        const double lhs = std::sqrt(interference);
        const double rhs = direct.real() / std::sqrt(targets.sinr_linear[k]) + slacks[a];
        res.cone = std::max(res.cone, lhs - rhs);
        res.equality = std::max(res.equality, std::abs(direct.imag()));
        res.nonneg = std::max(res.nonneg, -slacks[a]);
    }
    res.cone = std::max(res.cone, 0.0);
    res.nonneg = std::max(res.nonneg, 0.0);
    res.power = std::max(0.0, power - sum_power_w / sigma2_w);
    return res;
}

double dual_sinr(int k, const std::map<int, cvec>& dual_beamformers,
                 const ChannelRealization& channels) {
    const cvec& h = channels.vectors[k];
    const double signal = std::norm(dual_beamformers.at(k).dot(h));
    double interference = 1.0;
    for (const auto& [i, m] : dual_beamformers) {
        if (i == k) continue;
        interference += std::norm(m.dot(h));
    }
    return signal / interference;
}

DualFeasibility dual_system_feasible(const std::vector<int>& devices,
                                     const ChannelRealization& channels,
                                     const SinrTargets& targets, double sum_power_w,
                                     double sigma2_w) {
    if (devices.empty()) return DualFeasibility::feasible;
    const std::vector<double> ones(channels.device_count(), 1.0);
    const ConeProgram prog =
        build_cone_program(devices, channels, targets, ones, sum_power_w, sigma2_w);
    const PrioritySolution sol = solve_priority(prog);
    if (sol.status == socp::SolveStatus::failed) return DualFeasibility::undecided;
    const double worst = *std::max_element(sol.slacks.begin(), sol.slacks.end());
    return worst <= kDualSlackTol ? DualFeasibility::feasible : DualFeasibility::infeasible;
}

namespace {

// Shared greedy tail: admit along `order`, stop at the first infeasible
// prefix, fill powers/beams/mass from the last feasible one.
void admit_prefix(ScheduleResult& res, const std::vector<int>& order,
                  const ChannelRealization& channels, const SinrTargets& targets,
                  const std::vector<double>& weights, double sum_power_w, double sigma2_w) {
    std::vector<int> prefix;
    for (int k : order) {
        prefix.push_back(k);
        const FeasibilityReport rep =
            feasibility_test(prefix, channels, targets, sum_power_w, sigma2_w);
        if (!rep.feasible) {
            prefix.pop_back();
            break;
        }
        res.powers.powers = rep.powers;
        res.scheduled = prefix;
    }
    if (!res.scheduled.empty())
        res.beamformers = mmse_beamformers(res.scheduled, channels, res.powers, sigma2_w);
    for (int k : res.scheduled) res.weighted_mass += weights[k];
}

}  // namespace

ScheduleResult schedule_round(const ChannelRealization& channels, const SinrTargets& targets,
                              const std::vector<double>& weights, double sum_power_w,
                              double sigma2_w, const ScheduleOptions& options) {
    check_inputs(channels, targets, weights);
    ScheduleResult res;
    res.powers.powers.assign(channels.device_count(), 0.0);

    const std::vector<int> admissible = targets.admissible_ids();
    if (admissible.empty()) return res;  // postponed round

    ConeProgram prog =
        build_cone_program(admissible, channels, targets, weights, sum_power_w, sigma2_w);
    PrioritySolution pri = solve_priority(prog);

    const int reweights = std::clamp(options.reweight_iterations, 0, 3);
    for (int it = 0; it < reweights && pri.status != socp::SolveStatus::failed; ++it) {
        std::vector<double> rw = weights;
        for (std::size_t a = 0; a < pri.devices.size(); ++a)
            rw[pri.devices[a]] = weights[pri.devices[a]] / (pri.slacks[a] + 1e-3);
        const ConeProgram p2 =
            build_cone_program(admissible, channels, targets, rw, sum_power_w, sigma2_w);
        const PrioritySolution next = solve_priority(p2);
        if (next.status == socp::SolveStatus::failed) break;
        pri = next;
    }

    if (pri.status == socp::SolveStatus::failed) {
        // Strongest channel first keeps the round alive without priorities.
        pri.fallback_used = true;
        pri.devices = admissible;
        pri.slacks.resize(admissible.size());
        for (std::size_t a = 0; a < admissible.size(); ++a)
            pri.slacks[a] = 1.0 / (1.0 + channels.vectors[admissible[a]].squaredNorm());
    }

    std::vector<PriorityOrder> order(admissible.size());
    for (std::size_t a = 0; a < admissible.size(); ++a)
        order[a] = {snap_zero(pri.slacks[a]), weights[pri.devices[a]], pri.devices[a]};
    std::sort(order.begin(), order.end());

    std::vector<int> ids(order.size());
    for (std::size_t a = 0; a < order.size(); ++a) ids[a] = order[a].id;
    admit_prefix(res, ids, channels, targets, weights, sum_power_w, sigma2_w);
    res.priority = std::move(pri);
    return res;
}

ScheduleResult random_policy(const ChannelRealization& channels, const SinrTargets& targets,
                             const std::vector<double>& weights, double sum_power_w,
                             double sigma2_w, Rng& rng) {
    check_inputs(channels, targets, weights);
    ScheduleResult res;
    res.powers.powers.assign(channels.device_count(), 0.0);

    const std::vector<int> admissible = targets.admissible_ids();
    if (admissible.empty()) return res;
    const int ka = static_cast<int>(admissible.size());

    constexpr int kAttempts = 10;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        const int size = 1 + static_cast<int>(rng.uniform_index(ka));
        std::vector<int> pool = admissible;
        for (int i = 0; i < size; ++i) {
            const int j = i + static_cast<int>(rng.uniform_index(ka - i));
            std::swap(pool[i], pool[j]);
        }
        std::vector<int> subset(pool.begin(), pool.begin() + size);
        std::sort(subset.begin(), subset.end());

        const FeasibilityReport rep =
            feasibility_test(subset, channels, targets, sum_power_w, sigma2_w);
        if (!rep.feasible) continue;
        res.scheduled = subset;
        res.powers.powers = rep.powers;
        res.beamformers = mmse_beamformers(subset, channels, res.powers, sigma2_w);
        for (int k : subset) res.weighted_mass += weights[k];
        return res;
    }

    // No luck drawing whole subsets; take the largest feasible prefix of one
    // more random permutation.
    std::vector<int> perm = admissible;
    for (int i = 0; i < ka - 1; ++i) {
        const int j = i + static_cast<int>(rng.uniform_index(ka - i));
        std::swap(perm[i], perm[j]);
    }
    admit_prefix(res, perm, channels, targets, weights, sum_power_w, sigma2_w);
    return res;
}

ScheduleResult full_policy(const std::vector<double>& weights) {
    ScheduleResult res;
    res.powers.powers.assign(weights.size(), 0.0);
    res.scheduled.resize(weights.size());
    for (std::size_t k = 0; k < weights.size(); ++k) {
        res.scheduled[k] = static_cast<int>(k);
        res.weighted_mass += weights[k];
    }
    return res;
}

}  // namespace fedmimo
