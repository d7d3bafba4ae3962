#include <doctest.h>

#include <fedmimo/channel.hpp>
#include <fedmimo/seeding.hpp>

#include <cmath>
#include <stdexcept>

using namespace fedmimo;

TEST_CASE("path loss matches the log-distance law at round distances") {
    CHECK(path_loss_db(1.0) == doctest::Approx(-35.3).epsilon(1e-12));
    CHECK(path_loss_db(10.0) == doctest::Approx(-72.9).epsilon(1e-12));
    CHECK(path_loss_db(100.0) == doctest::Approx(-110.5).epsilon(1e-12));
    CHECK_THROWS_AS(path_loss_db(0.0), std::domain_error);
    CHECK_THROWS_AS(path_loss_db(-5.0), std::domain_error);
}

TEST_CASE("unit conversions") {
    CHECK(db_to_linear(0.0) == doctest::Approx(1.0));
    CHECK(db_to_linear(10.0) == doctest::Approx(10.0));
    CHECK(db_to_linear(-30.0) == doctest::Approx(1e-3));
    CHECK(dbm_to_watts(0.0) == doctest::Approx(1e-3));
    CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0));
}

TEST_CASE("topology draws stay inside the annulus and are deterministic") {
    const auto topo = draw_topology(200, 50.0, 250.0, 42);
    REQUIRE(topo.device_count == 200);
    REQUIRE(topo.distances_m.size() == 200);
    for (double d : topo.distances_m) {
        CHECK(d >= 50.0);
        CHECK(d <= 250.0);
    }
    const auto again = draw_topology(200, 50.0, 250.0, 42);
    CHECK(topo.distances_m == again.distances_m);
    const auto other = draw_topology(200, 50.0, 250.0, 43);
    CHECK(topo.distances_m != other.distances_m);
}

TEST_CASE("area-uniform sampling fills the outer band more densely") {
    // With density proportional to radius, the sub-annulus [r0, mid] of
    // [50, 250] holds (mid^2-r0^2)/(r1^2-r0^2) = (150^2-50^2)/(250^2-50^2) = 1/3.
    const auto topo = draw_topology(20000, 50.0, 250.0, 7);
    int inner = 0;
    for (double d : topo.distances_m)
        if (d <= 150.0) ++inner;
    const double frac = static_cast<double>(inner) / 20000.0;
    CHECK(frac == doctest::Approx(1.0 / 3.0).epsilon(0.05));
}

TEST_CASE("channel draws have path-loss-scaled Rayleigh statistics") {
    Topology topo;
    topo.device_count = 2;
    topo.distances_m = {100.0, 1.0};
    topo.inner_radius_m = 1.0;
    topo.outer_radius_m = 100.0;

    const int antennas = 4096;
    const auto chan = draw_channels(topo, antennas, 11, 0);
    REQUIRE(chan.device_count() == 2);
    REQUIRE(chan.antenna_count() == antennas);
    CHECK(chan.round_index == 0);

    // E|h_kn|^2 equals the linear path loss; average over many antennas.
    for (int k = 0; k < 2; ++k) {
        const double expect = db_to_linear(path_loss_db(topo.distances_m[k]));
        const double avg = chan.vectors[k].squaredNorm() / antennas;
        CHECK(avg == doctest::Approx(expect).epsilon(0.10));
    }

    // Same seed, same draw; the round index is carried as metadata only.
    const auto same = draw_channels(topo, antennas, 11, 5);
    CHECK((chan.vectors[0] - same.vectors[0]).norm() == 0.0);
    CHECK(same.round_index == 5);
    const auto next = draw_channels(topo, antennas, 12, 0);
    CHECK((chan.vectors[0] - next.vectors[0]).norm() > 0.0);
}
