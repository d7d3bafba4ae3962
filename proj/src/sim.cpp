#include "fedmimo/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedmimo/channel.hpp"
#include "fedmimo/scheduler.hpp"
#include "fedmimo/seeding.hpp"

namespace fedmimo {

std::string policy_name(Policy p) {
    switch (p) {
        case Policy::proposed: return "proposed";
        case Policy::random: return "random";
        case Policy::full: return "full";
    }
    throw std::logic_error("unreachable policy value");
}

Policy parse_policy(const std::string& name) {
    if (name == "proposed") return Policy::proposed;
    if (name == "random") return Policy::random;
    if (name == "full") return Policy::full;
    throw std::invalid_argument("unknown policy: " + name);
}

PhyConfig ExperimentConfig::phy() const {
    PhyConfig p;
    p.bandwidth_hz = bandwidth_hz;
    p.noise_psd_dbm_hz = noise_psd_dbm_hz;
    p.bits_per_param = bits_per_param;
    p.model_dim = model_dim;
    p.per_sample_compute_s = per_sample_compute_s;
    p.latency_threshold_s = latency_threshold_s;
    p.sum_power_w = sum_power_w;
    return p;
}

void ExperimentConfig::validate() const {
    if (device_count < 1) throw std::invalid_argument("device_count must be positive");
    if (antenna_count < 1) throw std::invalid_argument("antenna_count must be positive");
    if (!(inner_radius_m > 0.0) || !(outer_radius_m >= inner_radius_m))
        throw std::invalid_argument("annulus radii must satisfy 0 < inner <= outer");
    if (rounds < 1) throw std::invalid_argument("rounds must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (reweight_iterations < 0)
        throw std::invalid_argument("reweight_iterations must be nonnegative");
    if (model_dim < 0) throw std::invalid_argument("model_dim must be nonnegative");
    if (dataset_path.empty()) {
        if (synthetic_samples < device_count)
            throw std::invalid_argument("synthetic_samples must cover every device");
        if (synthetic_features < 1 || synthetic_classes < 2)
            throw std::invalid_argument("synthetic dataset shape is invalid");
    }
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth_hz must be positive");
    if (bits_per_param < 1) throw std::invalid_argument("bits_per_param must be positive");
    if (!(per_sample_compute_s > 0.0))
        throw std::invalid_argument("per_sample_compute_s must be positive");
    if (!(latency_threshold_s > 0.0))
        throw std::invalid_argument("latency_threshold_s must be positive");
    if (!(sum_power_w > 0.0)) throw std::invalid_argument("sum_power_w must be positive");
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long long v;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad integer for " + key + ": " + value);
    }
    if (pos != value.size()) throw std::invalid_argument("bad integer for " + key + ": " + value);
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    unsigned long long v;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad seed for " + key + ": " + value);
    }
    if (pos != value.size()) throw std::invalid_argument("bad seed for " + key + ": " + value);
    return v;
}

double parse_real(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad number for " + key + ": " + value);
    }
    if (pos != value.size()) throw std::invalid_argument("bad number for " + key + ": " + value);
    return v;
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void apply_key_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "device_count") cfg.device_count = static_cast<int>(parse_int(key, value));
    else if (key == "antenna_count") cfg.antenna_count = static_cast<int>(parse_int(key, value));
    else if (key == "inner_radius_m") cfg.inner_radius_m = parse_real(key, value);
    else if (key == "outer_radius_m") cfg.outer_radius_m = parse_real(key, value);
    else if (key == "bandwidth_hz") cfg.bandwidth_hz = parse_real(key, value);
    else if (key == "noise_psd_dbm_hz") cfg.noise_psd_dbm_hz = parse_real(key, value);
    else if (key == "bits_per_param") cfg.bits_per_param = static_cast<int>(parse_int(key, value));
    else if (key == "model_dim") cfg.model_dim = static_cast<int>(parse_int(key, value));
    else if (key == "per_sample_compute_s") cfg.per_sample_compute_s = parse_real(key, value);
    else if (key == "latency_threshold_s") cfg.latency_threshold_s = parse_real(key, value);
    else if (key == "sum_power_w") cfg.sum_power_w = parse_real(key, value);
    else if (key == "rounds") cfg.rounds = static_cast<int>(parse_int(key, value));
    else if (key == "policy") cfg.policy = parse_policy(value);
    else if (key == "master_seed") cfg.master_seed = parse_u64(key, value);
    else if (key == "learning_rate") cfg.learning_rate = parse_real(key, value);
    else if (key == "reweight_iterations")
        cfg.reweight_iterations = static_cast<int>(parse_int(key, value));
    else if (key == "synthetic_samples")
        cfg.synthetic_samples = static_cast<int>(parse_int(key, value));
    else if (key == "synthetic_features")
        cfg.synthetic_features = static_cast<int>(parse_int(key, value));
    else if (key == "synthetic_classes")
        cfg.synthetic_classes = static_cast<int>(parse_int(key, value));
    else if (key == "dataset_path") cfg.dataset_path = value;
    else if (key == "output_path") cfg.output_path = value;
    else throw std::invalid_argument("unknown config key: " + key);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        apply_key_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

namespace {

struct RoundContext {
    ScheduleResult schedule;
    ChannelRealization channels;
    int extra_draws = 0;
};

RoundContext schedule_with_postponement(const ExperimentConfig& config, const Topology& topo,
                                        const SinrTargets& targets,
                                        const std::vector<double>& weights, double sigma2,
                                        int round, Rng& policy_rng) {
    RoundContext ctx;
    for (int attempt = 0;; ++attempt) {
        if (attempt > 100)
            throw std::runtime_error("round " + std::to_string(round) +
                                     " postponed more than 100 times");
        // Postponed rounds redraw the block-fading channel under a fresh
        // sub-seed without advancing the round index.
        const std::uint64_t idx = static_cast<std::uint64_t>(round) * 128 + attempt;
        ctx.channels = draw_channels(topo, config.antenna_count,
                                     sub_seed(config.master_seed, SeedStream::channel, idx),
                                     round);
        switch (config.policy) {
            case Policy::full:
                ctx.schedule = full_policy(weights);
                break;
            case Policy::proposed:
                ctx.schedule =
                    schedule_round(ctx.channels, targets, weights, config.sum_power_w, sigma2,
                                   {config.reweight_iterations});
                break;
            case Policy::random:
                ctx.schedule = random_policy(ctx.channels, targets, weights,
                                             config.sum_power_w, sigma2, policy_rng);
                break;
        }
        if (!ctx.schedule.scheduled.empty()) return ctx;
        ctx.extra_draws += 1;
    }
}

}  // namespace

ExperimentRecord run_experiment(const ExperimentConfig& config) {
    config.validate();

    const Dataset dataset =
        config.dataset_path.empty()
            ? make_synthetic(config.synthetic_samples, config.synthetic_features,
                             config.synthetic_classes,
                             sub_seed(config.master_seed, SeedStream::dataset))
            : load_delimited(config.dataset_path);

    const std::vector<DataShard> shards = partition_noniid(
        dataset, config.device_count, sub_seed(config.master_seed, SeedStream::partition));
    std::vector<double> weights(config.device_count);
    for (int k = 0; k < config.device_count; ++k) weights[k] = shards[k].weight;

    PhyConfig phy = config.phy();
    if (phy.model_dim == 0) phy.model_dim = model_dimension(dataset);
    phy.validate();

    const Topology topo =
        draw_topology(config.device_count, config.inner_radius_m, config.outer_radius_m,
                      sub_seed(config.master_seed, SeedStream::topology));

    std::vector<double> local_s(config.device_count);
    for (int k = 0; k < config.device_count; ++k)
        local_s[k] = local_latency_s(shards[k].size(), phy);
    const SinrTargets targets = sinr_targets(phy, local_s);
    const double sigma2 = noise_power_w(phy);

    const CurvatureEstimates curv = estimate_smoothness_and_kappa(dataset);
    const double eta = std::min(config.learning_rate, 1.0 / curv.smoothness);

    ModelParams w = zero_model(dataset);
    const double initial_loss = loss_and_gradient(dataset, w).loss;
    const double fstar = optimal_loss_estimate(dataset, curv.smoothness);

    Rng policy_rng(sub_seed(config.master_seed, SeedStream::policy));

    ExperimentRecord rec;
    rec.config = config;
    rec.policy = config.policy;
    rec.rounds.reserve(config.rounds);

    ExperimentSummary& sum = rec.summary;
    std::vector<double> gaps;
    gaps.reserve(config.rounds);

    for (int t = 0; t < config.rounds; ++t) {
        RoundContext ctx = schedule_with_postponement(config, topo, targets, weights, sigma2,
                                                      t, policy_rng);
        sum.postponed_draws += ctx.extra_draws;
        const ScheduleResult& sched = ctx.schedule;

        if (config.policy == Policy::proposed && sched.priority.fallback_used) {
            sum.fallback_rounds += 1;
            if (t + 1 >= 10 && 2 * sum.fallback_rounds > t + 1)
                throw std::runtime_error(
                    "aborting: the conic solve failed in over half of the rounds");
        }

        const LossGrad before = loss_and_gradient(dataset, w);
        const ResidualInfo res =
            residual(dataset, w, shards, weights, sched.scheduled, eta);
        if (res.identity_residual > 1e-10 * (1.0 + w.weights.norm()))
            throw std::logic_error("aggregation identity violated at round " +
                                   std::to_string(t));

        const double mass = sched.weighted_mass;
        const double gap = (1.0 - mass) * (1.0 - mass);
        const double esq = res.residual.squaredNorm();
        if (esq > 4.0 * curv.kappa_analytic * gap + 1e-6)
            throw std::logic_error("scheduling residual bound violated at round " +
                                   std::to_string(t));

        std::map<int, ModelParams> locals;
        for (int k : sched.scheduled) locals.emplace(k, local_update(dataset, w, shards[k], eta));
        ModelParams w_next = aggregate(locals, weights, sched.scheduled);

        const LossGrad after = loss_and_gradient(dataset, w_next);
        const double gsq = before.gradient.squaredNorm();
        const double descent_rhs = before.loss - 0.5 * eta * gsq + 0.5 * eta * esq;
        if (after.loss > descent_rhs + 1e-8 * (1.0 + std::abs(descent_rhs)))
            throw std::logic_error("per-round descent inequality violated at round " +
                                   std::to_string(t));

        double latency = 0.0;
        if (config.policy == Policy::full) {
            latency = *std::max_element(local_s.begin(), local_s.end());
        } else {
            std::vector<double> uplink(config.device_count, 0.0);
            for (int k : sched.scheduled) {
                const double sinr = sinr_uplink(k, ctx.channels, sched.beamformers,
                                                sched.powers, sched.scheduled, sigma2);
                if (sinr < targets.sinr_linear[k] * (1.0 - 1e-9))
                    throw std::logic_error("achieved SINR fell below target at round " +
                                           std::to_string(t));
                uplink[k] = uplink_latency_s(sinr, phy);
            }
            latency = system_latency_s(sched.scheduled, local_s, uplink);
            if (latency > phy.latency_threshold_s * (1.0 + 1e-6))
                throw std::logic_error("latency budget exceeded at round " + std::to_string(t));
        }

        RoundMetrics m;
        m.round = t;
        m.loss = after.loss;
        m.accuracy = accuracy(dataset, w_next);
        m.grad_norm_sq = gsq;
        m.weighted_mass = mass;
        m.scheduled_count = static_cast<int>(sched.scheduled.size());
        m.residual_norm_sq = esq;
        m.gap_term = gap;
        m.system_latency_s = latency;
        rec.rounds.push_back(m);
        gaps.push_back(gap);
        w = std::move(w_next);
    }

    sum.final_loss = rec.rounds.back().loss;
    sum.final_accuracy = rec.rounds.back().accuracy;
    for (const RoundMetrics& m : rec.rounds) {
        sum.mean_weighted_mass += m.weighted_mass;
        sum.mean_grad_norm_sq += m.grad_norm_sq;
    }
    sum.mean_weighted_mass /= config.rounds;
    sum.mean_grad_norm_sq /= config.rounds;
    sum.smoothness = curv.smoothness;
    sum.kappa_analytic = curv.kappa_analytic;
    sum.kappa_probe = curv.kappa_probe;
    sum.initial_loss = initial_loss;
    sum.optimal_loss_estimate = fstar;
    sum.step_size = eta;

    BoundInputs bound;
    bound.smoothness = curv.smoothness;
    bound.gradient_bound = curv.kappa_analytic;
    bound.step_size = eta;
    bound.initial_loss = initial_loss;
    bound.optimal_loss_estimate = fstar;
    bound.round_count = config.rounds;
    sum.convergence_bound = convergence_bound(bound, gaps);

    if (!config.output_path.empty()) write_metrics({rec}, config.output_path);
    return rec;
}

std::vector<ExperimentRecord> compare_policies(const ExperimentConfig& config) {
    std::vector<ExperimentRecord> out;
    for (Policy p : {Policy::full, Policy::proposed, Policy::random}) {
        ExperimentConfig c = config;
        c.policy = p;
        c.output_path.clear();
        out.push_back(run_experiment(c));
    }
    return out;
}

void write_metrics(const std::vector<ExperimentRecord>& records, const std::string& path) {
    if (records.empty()) throw std::invalid_argument("no records to write");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write metrics file: " + path);

    const ExperimentConfig& c = records.front().config;
    out << "# device_count=" << c.device_count << " antenna_count=" << c.antenna_count
        << " rounds=" << c.rounds << " master_seed=" << c.master_seed
        << " bandwidth_hz=" << format_real(c.bandwidth_hz)
        << " sum_power_w=" << format_real(c.sum_power_w)
        << " latency_threshold_s=" << format_real(c.latency_threshold_s)
        << " learning_rate=" << format_real(c.learning_rate) << "\n";
    out << "round,policy,loss,accuracy,weighted_mass,scheduled_count,residual_norm_sq,"
           "gap_term,system_latency,grad_norm_sq\n";
    for (const ExperimentRecord& rec : records) {
        const std::string name = policy_name(rec.policy);
        for (const RoundMetrics& m : rec.rounds) {
            out << m.round << ',' << name << ',' << format_real(m.loss) << ','
                << format_real(m.accuracy) << ',' << format_real(m.weighted_mass) << ','
                << m.scheduled_count << ',' << format_real(m.residual_norm_sq) << ','
                << format_real(m.gap_term) << ',' << format_real(m.system_latency_s) << ','
                << format_real(m.grad_norm_sq) << "\n";
        }
    }
    for (const ExperimentRecord& rec : records) {
        const ExperimentSummary& s = rec.summary;
        out << "# summary policy=" << policy_name(rec.policy)
            << " final_loss=" << format_real(s.final_loss)
            << " final_accuracy=" << format_real(s.final_accuracy)
            << " mean_weighted_mass=" << format_real(s.mean_weighted_mass)
            << " convergence_bound=" << format_real(s.convergence_bound)
            << " mean_grad_norm_sq=" << format_real(s.mean_grad_norm_sq)
            << " smoothness=" << format_real(s.smoothness)
            << " kappa_analytic=" << format_real(s.kappa_analytic)
            << " kappa_probe=" << format_real(s.kappa_probe)
            << " initial_loss=" << format_real(s.initial_loss)
            << " optimal_loss_estimate=" << format_real(s.optimal_loss_estimate)
            << " step_size=" << format_real(s.step_size)
            << " postponed_draws=" << s.postponed_draws
            << " fallback_rounds=" << s.fallback_rounds << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ParsedRecord> read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metrics file: " + path);

    std::vector<ParsedRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# summary ", 0) == 0) {
            std::istringstream ss(line.substr(10));
            std::string token;
            std::string policy;
            std::map<std::string, double> kv;
            while (ss >> token) {
                const auto eq = token.find('=');
                if (eq == std::string::npos)
                    throw std::runtime_error("malformed summary token: " + token);
                const std::string key = token.substr(0, eq);
                const std::string val = token.substr(eq + 1);
                if (key == "policy")
                    policy = val;
                else
                    kv[key] = parse_real(key, val);
            }
            bool attached = false;
            for (ParsedRecord& r : records)
                if (r.policy == policy && r.summary.empty()) {
                    r.summary = kv;
                    attached = true;
                    break;
                }
            if (!attached)
                throw std::runtime_error("summary references unknown policy: " + policy);
            continue;
        }
        if (line.empty() || line.front() == '#' || line.rfind("round,", 0) == 0) continue;

        std::vector<std::string> fields;
        std::istringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 10)
            throw std::runtime_error("metrics row has wrong field count: " + line);

        RoundMetrics m;
        m.round = static_cast<int>(parse_int("round", fields[0]));
        const std::string& policy = fields[1];
        m.loss = parse_real("loss", fields[2]);
        m.accuracy = parse_real("accuracy", fields[3]);
        m.weighted_mass = parse_real("weighted_mass", fields[4]);
        m.scheduled_count = static_cast<int>(parse_int("scheduled_count", fields[5]));
        m.residual_norm_sq = parse_real("residual_norm_sq", fields[6]);
        m.gap_term = parse_real("gap_term", fields[7]);
        m.system_latency_s = parse_real("system_latency", fields[8]);
        m.grad_norm_sq = parse_real("grad_norm_sq", fields[9]);

        if (records.empty() || records.back().policy != policy) {
            ParsedRecord r;
            r.policy = policy;
            records.push_back(std::move(r));
        }
        records.back().rounds.push_back(m);
    }
    return records;
}

}  // namespace fedmimo
