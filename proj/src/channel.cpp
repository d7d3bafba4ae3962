#include "fedmimo/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "fedmimo/seeding.hpp"

namespace fedmimo {

double path_loss_db(double distance_m) {
    if (!(distance_m > 0.0)) {
        throw std::domain_error("path_loss_db: distance must be positive");
    }
    return -35.3 - 37.6 * std::log10(distance_m);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

Topology draw_topology(int device_count, double inner_radius_m, double outer_radius_m,
                       std::uint64_t seed) {
    if (device_count < 1) {
        throw std::invalid_argument("draw_topology: device_count must be >= 1");
    }
    if (!(0.0 < inner_radius_m && inner_radius_m <= outer_radius_m)) {
        throw std::invalid_argument("draw_topology: need 0 < inner_radius <= outer_radius");
    }
    Topology topo;
    topo.device_count = device_count;
    topo.inner_radius_m = inner_radius_m;
    topo.outer_radius_m = outer_radius_m;
    topo.distances_m.resize(device_count);
    Rng rng(seed);
    const double r0sq = inner_radius_m * inner_radius_m;
    const double r1sq = outer_radius_m * outer_radius_m;
    for (int k = 0; k < device_count; ++k) {
        // Uniform by area over the annulus.
        topo.distances_m[k] = std::sqrt(r0sq + rng.uniform() * (r1sq - r0sq));
    }
    return topo;
}

ChannelRealization draw_channels(const Topology& topology, int antenna_count, std::uint64_t seed,
                                 std::int64_t round_index) {
    if (antenna_count < 1) {
        throw std::invalid_argument("draw_channels: antenna_count must be >= 1");
    }
    if (topology.device_count < 1 ||
        topology.distances_m.size() != static_cast<std::size_t>(topology.device_count)) {
        throw std::invalid_argument("draw_channels: malformed topology");
    }
    ChannelRealization real;
    real.round_index = round_index;
    real.vectors.resize(topology.device_count);
    Rng rng(seed);
    const double inv_sqrt2 = std::sqrt(0.5);
    for (int k = 0; k < topology.device_count; ++k) {
        const double amp = std::sqrt(db_to_linear(path_loss_db(topology.distances_m[k])));
        cvec h(antenna_count);
        for (int a = 0; a < antenna_count; ++a) {
            // CN(0,1): independent N(0, 1/2) real and imaginary parts.
            const double re = rng.gaussian() * inv_sqrt2;
            const double im = rng.gaussian() * inv_sqrt2;
            h[a] = amp * std::complex<double>(re, im);
        }
        real.vectors[k] = std::move(h);
    }
    return real;
}

}  // namespace fedmimo
