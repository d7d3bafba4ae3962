#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace fedmimo {

using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;

/// Static device layout: distances from the receiver, fixed for a whole
/// experiment. Fading is redrawn per round on top of it.
struct Topology {
    int device_count = 0;
    std::vector<double> distances_m;
    double inner_radius_m = 0.0;
    double outer_radius_m = 0.0;
};

/// One block-fading realization: per-device channel vectors in linear
/// amplitude units, one entry per receive antenna.
struct ChannelRealization {
    std::vector<cvec> vectors;
    std::int64_t round_index = 0;

    int device_count() const { return static_cast<int>(vectors.size()); }
    int antenna_count() const { return vectors.empty() ? 0 : static_cast<int>(vectors[0].size()); }
};

/// Log-distance path loss in dB. Throws std::domain_error for distance <= 0.
double path_loss_db(double distance_m);

double db_to_linear(double db);
double dbm_to_watts(double dbm);

/// Device positions uniform over the annulus [inner, outer] by area.
Topology draw_topology(int device_count, double inner_radius_m, double outer_radius_m,
                       std::uint64_t seed);

/// Rayleigh block fading: h_k = sqrt(linear path loss) * g_k with g_k having
/// i.i.d. standard circularly-symmetric complex Gaussian entries.
/// Deterministic given (topology, antenna_count, seed).
ChannelRealization draw_channels(const Topology& topology, int antenna_count, std::uint64_t seed,
                                 std::int64_t round_index = 0);

}  // namespace fedmimo
