#include <doctest.h>

#include <fedmimo/scheduler.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

using namespace fedmimo;

namespace {

struct Instance {
    ChannelRealization channels;
    SinrTargets targets;
    std::vector<double> weights;
    double sum_power_w = 0.03;
    double sigma2_w = 1e-13;
};

Instance make_instance(int devices, int antennas, std::uint64_t master, double gamma = 0.3) {
    Instance inst;
    const auto topo =
        draw_topology(devices, 50.0, 250.0, sub_seed(master, SeedStream::topology));
    inst.channels = draw_channels(topo, antennas, sub_seed(master, SeedStream::channel, 0));
    inst.targets.required_rate_bps_hz.assign(devices, std::log2(1.0 + gamma));
    inst.targets.sinr_linear.assign(devices, gamma);
    inst.targets.admissible.assign(devices, true);
    inst.weights.assign(devices, 1.0 / devices);
    return inst;
}

std::vector<int> all_ids(int devices) {
    std::vector<int> ids(devices);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

}  // namespace

TEST_CASE("cone program has the expected shape") {
    const auto inst = make_instance(4, 3, 100);
    const auto ids = all_ids(4);
    const auto prog = build_cone_program(ids, inst.channels, inst.targets, inst.weights,
                                         inst.sum_power_w, inst.sigma2_w);
    REQUIRE_FALSE(prog.empty());
    const int K = 4, N = 3;
    // Variables: 2N reals per beamformer plus one slack per device.
    CHECK(prog.problem.c.size() == 2 * N * K + K);
    // One phase-pinning equality per device.
    CHECK(prog.problem.A.rows() == K);
    // Cones: K nonneg slack rows, K SINR cones of size 2K, one power cone.
    CHECK(prog.problem.dims.nonneg == K);
    REQUIRE(prog.problem.dims.soc.size() == static_cast<std::size_t>(K + 1));
    for (int a = 0; a < K; ++a) CHECK(prog.problem.dims.soc[a] == 2 * K);
    CHECK(prog.problem.dims.soc[K] == 2 * N * K + 1);
    CHECK(prog.problem.G.rows() == prog.problem.dims.total());
    CHECK_NOTHROW(prog.problem.validate());

    // Objective: weights on the slack columns only.
    CHECK(prog.problem.c.head(2 * N * K).norm() == 0.0);
    for (int a = 0; a < K; ++a)
        CHECK(prog.problem.c[2 * N * K + a] == doctest::Approx(inst.weights[a]));
}

TEST_CASE("empty device set yields the empty sentinel") {
    const auto inst = make_instance(3, 2, 4);
    const auto prog = build_cone_program({}, inst.channels, inst.targets, inst.weights,
                                         inst.sum_power_w, inst.sigma2_w);
    CHECK(prog.empty());
    CHECK_THROWS_AS(solve_priority(prog), std::invalid_argument);
}

TEST_CASE("cone program rejects infinite targets and bad weights") {
    auto inst = make_instance(3, 2, 4);
    inst.targets.admissible[1] = false;
    inst.targets.sinr_linear[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(build_cone_program(all_ids(3), inst.channels, inst.targets, inst.weights,
                                       inst.sum_power_w, inst.sigma2_w),
                    std::domain_error);
    CHECK_NOTHROW(build_cone_program({0, 2}, inst.channels, inst.targets, inst.weights,
                                     inst.sum_power_w, inst.sigma2_w));
}

TEST_CASE("hand point satisfies the residual checker") {
    // m_hat = 0, s_k = 1 satisfies every constraint with equality on the
    // SINR cones: 0/sqrt(gamma) + 1 >= sqrt(0 + 1).
    const auto inst = make_instance(3, 2, 77);
    std::map<int, cvec> zero_beams;
    for (int k = 0; k < 3; ++k) zero_beams[k] = cvec::Zero(2);
    const auto res = constraint_residuals(all_ids(3), inst.channels, inst.targets,
                                          {1.0, 1.0, 1.0}, zero_beams, inst.sum_power_w,
                                          inst.sigma2_w);
    CHECK(res.max_violation() <= 1e-12);

    // Shrinking a slack below 1 violates its cone row by exactly the gap.
    const auto bad = constraint_residuals(all_ids(3), inst.channels, inst.targets,
                                          {0.25, 1.0, 1.0}, zero_beams, inst.sum_power_w,
                                          inst.sigma2_w);
    CHECK(bad.cone == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(bad.max_violation() == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("solved relaxation is feasible and phase-aligned") {
    const auto inst = make_instance(5, 4, 2024);
    const auto ids = all_ids(5);
    const auto prog = build_cone_program(ids, inst.channels, inst.targets, inst.weights,
                                         inst.sum_power_w, inst.sigma2_w);
    const auto sol = solve_priority(prog);
    REQUIRE(sol.status != socp::SolveStatus::failed);
    CHECK_FALSE(sol.fallback_used);
    REQUIRE(sol.devices == ids);
    REQUIRE(sol.slacks.size() == 5);
    for (double s : sol.slacks) CHECK(s >= 0.0);

    const auto res = constraint_residuals(ids, inst.channels, inst.targets, sol.slacks,
                                          sol.dual_beamformers, inst.sum_power_w, inst.sigma2_w);
    CHECK(res.max_violation() <= 1e-8);

    // Objective equals the weighted slack sum.
    double obj = 0.0;
    for (int a = 0; a < 5; ++a) obj += inst.weights[a] * sol.slacks[a];
    CHECK(sol.objective == doctest::Approx(obj).epsilon(1e-9));
}

TEST_CASE("single device has a closed-form optimal slack") {
    // One device: maximize Re(m^H h) under the power budget, so the optimal
    // slack is max(0, 1 - sqrt(P ||h||^2 / (sigma^2 gamma))).
    Instance inst;
    inst.channels.vectors = {cvec::Zero(4)};
    inst.targets.required_rate_bps_hz = {std::log2(1.3)};
    inst.targets.sinr_linear = {0.3};
    inst.targets.admissible = {true};
    inst.weights = {1.0};

    // Full-power SNR 1.2 >= gamma: slack 0.
    inst.channels.vectors[0](0) = {1e-6, 0.0};
    inst.channels.vectors[0](2) = {0.0, -1e-6};  // ||h||^2 = 2e-12, SNR = 0.6
    auto sol = solve_priority(build_cone_program({0}, inst.channels, inst.targets, inst.weights,
                                                 inst.sum_power_w, inst.sigma2_w));
    REQUIRE(sol.status != socp::SolveStatus::failed);
    CHECK(sol.slacks[0] <= 1e-7);

    // Full-power SNR gamma/25: slack 1 - 1/5 = 0.8.
    inst.channels.vectors[0].setZero();
    inst.channels.vectors[0](1) = {0.0, 2e-7};  // ||h||^2 = 4e-14, SNR = 0.012
    sol = solve_priority(build_cone_program({0}, inst.channels, inst.targets, inst.weights,
                                            inst.sum_power_w, inst.sigma2_w));
    REQUIRE(sol.status != socp::SolveStatus::failed);
    CHECK(sol.slacks[0] == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("dual_sinr matches a direct evaluation") {
    const auto inst = make_instance(3, 4, 808);
    std::map<int, cvec> beams;
    Rng rng(99);
    for (int k = 0; k < 3; ++k) {
        cvec m(4);
        for (int a = 0; a < 4; ++a) m[a] = std::complex<double>(rng.gaussian(), rng.gaussian());
        beams[k] = m;
    }
    for (int k = 0; k < 3; ++k) {
        const cvec& h = inst.channels.vectors[k];
        double interf = 0.0;
        for (int i = 0; i < 3; ++i)
            if (i != k) interf += std::norm(beams[i].dot(h));
        const double expect = std::norm(beams[k].dot(h)) / (interf + 1.0);
        CHECK(dual_sinr(k, beams, inst.channels) == doctest::Approx(expect).epsilon(1e-12));
    }

    // One beamformer, unit noise: c^2 |m^H h|^2 directly.
    std::map<int, cvec> solo{{0, 2.0 * inst.channels.vectors[0]}};
    const double expect = std::norm(solo[0].dot(inst.channels.vectors[0]));
    CHECK(dual_sinr(0, solo, inst.channels) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("priority order is equivariant under device relabeling") {
    const auto inst = make_instance(5, 4, 3003);
    const auto ids = all_ids(5);
    const auto sol = solve_priority(build_cone_program(
        ids, inst.channels, inst.targets, inst.weights, inst.sum_power_w, inst.sigma2_w));
    REQUIRE(sol.status != socp::SolveStatus::failed);

    // Reverse the device order; slacks must follow their devices.
    Instance rev = inst;
    std::reverse(rev.channels.vectors.begin(), rev.channels.vectors.end());
    const auto rsol = solve_priority(build_cone_program(
        ids, rev.channels, rev.targets, rev.weights, rev.sum_power_w, rev.sigma2_w));
    REQUIRE(rsol.status != socp::SolveStatus::failed);
    for (int a = 0; a < 5; ++a) {
        CHECK(rsol.slacks[4 - a] == doctest::Approx(sol.slacks[a]).epsilon(5e-4).scale(1.0));
    }
}

TEST_CASE("schedule_round admits a nonempty feasible prefix") {
    const auto inst = make_instance(6, 4, 606);
    const auto res = schedule_round(inst.channels, inst.targets, inst.weights, inst.sum_power_w,
                                    inst.sigma2_w);
    REQUIRE_FALSE(res.scheduled.empty());
    CHECK(res.priority.status != socp::SolveStatus::failed);

    // The reported mass is the weight sum of the scheduled set.
    double mass = 0.0;
    for (int k : res.scheduled) mass += inst.weights[k];
    CHECK(res.weighted_mass == doctest::Approx(mass).epsilon(1e-12));

    // Independent feasibility re-check of the returned set and powers.
    const auto rep = feasibility_test(res.scheduled, inst.channels, inst.targets,
                                      inst.sum_power_w, inst.sigma2_w);
    CHECK(rep.feasible);
    for (int k : res.scheduled) {
        const double got = sinr_uplink(k, inst.channels, res.beamformers, res.powers,
                                       res.scheduled, inst.sigma2_w);
        CHECK(got >= inst.targets.sinr_linear[k] * (1.0 - 1e-9));
    }

    // Admission follows ascending slack within the priority order.
    const auto& prio = res.priority;
    std::vector<double> slack_of(6, 0.0);
    for (std::size_t a = 0; a < prio.devices.size(); ++a) slack_of[prio.devices[a]] = prio.slacks[a];
    // Slacks below the zero-snap threshold may reorder among themselves.
    for (std::size_t i = 1; i < res.scheduled.size(); ++i) {
        CHECK(slack_of[res.scheduled[i - 1]] <= slack_of[res.scheduled[i]] + 1e-8);
    }
}

TEST_CASE("no admissible devices postpones the round") {
    auto inst = make_instance(3, 4, 11);
    std::fill(inst.targets.admissible.begin(), inst.targets.admissible.end(), false);
    std::fill(inst.targets.sinr_linear.begin(), inst.targets.sinr_linear.end(),
              std::numeric_limits<double>::infinity());
    const auto res = schedule_round(inst.channels, inst.targets, inst.weights, inst.sum_power_w,
                                    inst.sigma2_w);
    CHECK(res.scheduled.empty());
    CHECK(res.weighted_mass == 0.0);
}

TEST_CASE("random policy is deterministic and post-hoc feasible") {
    const auto inst = make_instance(6, 4, 1212);
    Rng rng_a(42), rng_b(42);
    const auto a = random_policy(inst.channels, inst.targets, inst.weights, inst.sum_power_w,
                                 inst.sigma2_w, rng_a);
    const auto b = random_policy(inst.channels, inst.targets, inst.weights, inst.sum_power_w,
                                 inst.sigma2_w, rng_b);
    CHECK(a.scheduled == b.scheduled);
    CHECK(a.powers.powers == b.powers.powers);

    Rng rng(7);
    for (int round = 0; round < 100; ++round) {
        const auto topo = draw_topology(6, 50.0, 250.0, sub_seed(900 + round, SeedStream::topology));
        const auto chan =
            draw_channels(topo, 4, sub_seed(900 + round, SeedStream::channel, 0), round);
        const auto res = random_policy(chan, inst.targets, inst.weights, inst.sum_power_w,
                                       inst.sigma2_w, rng);
        if (res.scheduled.empty()) continue;
        const auto rep = feasibility_test(res.scheduled, chan, inst.targets, inst.sum_power_w,
                                          inst.sigma2_w);
        CHECK(rep.feasible);
        // Members are unique and admissible.
        auto sorted = res.scheduled;
        std::sort(sorted.begin(), sorted.end());
        CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
}

TEST_CASE("full policy covers everyone with unit mass") {
    const std::vector<double> weights{0.25, 0.25, 0.3, 0.2};
    const auto res = full_policy(weights);
    CHECK(res.scheduled == all_ids(4));
    CHECK(res.weighted_mass == doctest::Approx(1.0).epsilon(1e-15));
    for (double p : res.powers.powers) CHECK(p == 0.0);
    CHECK(res.beamformers.receive.empty());
}

TEST_CASE("dual feasibility agrees with easy cases") {
    // Plenty of power, one device: feasible with slack 0.
    Instance inst;
    inst.channels.vectors = {cvec::Zero(4)};
    inst.channels.vectors[0](0) = {1e-5, 0.0};  // full-power SNR 30 >> gamma
    inst.targets.required_rate_bps_hz = {std::log2(1.3)};
    inst.targets.sinr_linear = {0.3};
    inst.targets.admissible = {true};
    inst.weights = {1.0};
    CHECK(dual_system_feasible({0}, inst.channels, inst.targets, inst.sum_power_w,
                               inst.sigma2_w) == DualFeasibility::feasible);
    CHECK(dual_system_feasible({}, inst.channels, inst.targets, inst.sum_power_w,
                               inst.sigma2_w) == DualFeasibility::feasible);

    // Absurd target: the relaxation needs slack, so the set is infeasible.
    auto hard = make_instance(2, 2, 22, 1e9);
    CHECK(dual_system_feasible({0, 1}, hard.channels, hard.targets, hard.sum_power_w,
                               hard.sigma2_w) == DualFeasibility::infeasible);
}
