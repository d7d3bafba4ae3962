#include <doctest.h>

#include <fedmimo/socp.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

using namespace fedmimo::socp;

namespace {

// Deterministic interior point of R_+^l x SOCs: orthant entries in (0.5, 2),
// cone blocks with comfortable margin u0 > ||u1||.
VectorXd interior_point(const ConeDims& dims, unsigned salt) {
    VectorXd u(dims.total());
    int at = 0;
    auto next = [&salt]() {
        salt = salt * 1664525u + 1013904223u;
        return 0.5 + 1.5 * (salt >> 8) / 16777216.0;
    };
    for (int i = 0; i < dims.nonneg; ++i) u[at++] = next();
    for (int m : dims.soc) {
        double norm1 = 0.0;
        for (int i = 1; i < m; ++i) {
            u[at + i] = next() - 1.25;
            norm1 += u[at + i] * u[at + i];
        }
        u[at] = std::sqrt(norm1) + next();
        at += m;
    }
    return u;
}

ConeDims mixed_dims() {
    ConeDims dims;
    dims.nonneg = 3;
    dims.soc = {3, 4};
    return dims;
}

}  // namespace

TEST_CASE("jordan product and divide invert each other") {
    const ConeDims dims = mixed_dims();
    const VectorXd e = detail::cone_identity(dims);
    const VectorXd u = interior_point(dims, 17);
    const VectorXd v = interior_point(dims, 91);

    // e is the unit: e o u = u.
    CHECK((detail::jordan_product(e, u, dims) - u).norm() < 1e-14);

    // divide(u, u o v) returns v when u is interior.
    const VectorXd w = detail::jordan_product(u, v, dims);
    const VectorXd back = detail::jordan_divide(u, w, dims);
    CHECK((back - v).norm() < 1e-12);
}

TEST_CASE("max_step reaches the cone boundary exactly") {
    const ConeDims dims = mixed_dims();
    const VectorXd u = interior_point(dims, 3);
    VectorXd d = -interior_point(dims, 44);

    const double t = detail::max_step(u, d, dims);
    REQUIRE(std::isfinite(t));
    CHECK(t > 0.0);

    // Just inside the step: still a cone point. Just past it: not.
    auto min_margin = [&](const VectorXd& p) {
        double m = std::numeric_limits<double>::infinity();
        int at = 0;
        for (int i = 0; i < dims.nonneg; ++i) m = std::min(m, p[at++]);
        for (int mdim : dims.soc) {
            m = std::min(m, p[at] - p.segment(at + 1, mdim - 1).norm());
            at += mdim;
        }
        return m;
    };
    CHECK(min_margin(u + (t * (1.0 - 1e-9)) * d) >= 0.0);
    CHECK(min_margin(u + (t * (1.0 + 1e-6)) * d) < 0.0);

    // A direction pointing into the cone is unconstrained.
    CHECK(detail::max_step(u, detail::cone_identity(dims), dims) ==
          std::numeric_limits<double>::infinity());
}

TEST_CASE("interior_shift measures the distance to the cone") {
    const ConeDims dims = mixed_dims();
    const VectorXd u = interior_point(dims, 12);
    CHECK(detail::interior_shift(u, dims) < 0.0);

    // Shifting by the reported amount plus epsilon lands inside.
    VectorXd bad = u;
    bad[0] = -3.0;             // orthant violation
    bad[dims.nonneg] = -1.0;   // cone t-entry violation
    const double shift = detail::interior_shift(bad, dims);
    CHECK(shift > 0.0);
    const VectorXd fixed = bad + (shift + 1e-9) * detail::cone_identity(dims);
    CHECK(detail::interior_shift(fixed, dims) < 0.0);
}

TEST_CASE("NT scaling maps s and z to the same lambda") {
    const ConeDims dims = mixed_dims();
    const VectorXd s = interior_point(dims, 40);
    const VectorXd z = interior_point(dims, 41);
    const detail::Scaling w(s, z, dims);

    CHECK((w.apply(z) - w.lambda()).norm() < 1e-12);
    CHECK((w.apply_inverse(s) - w.lambda()).norm() < 1e-12);

    // W^{-1} W = identity on arbitrary vectors, and the matrix overload
    // agrees with the columnwise vector version.
    const VectorXd u = interior_point(dims, 99);
    CHECK((w.apply_inverse(w.apply(u)) - u).norm() < 1e-12);
    MatrixXd m(dims.total(), 2);
    m.col(0) = u;
    m.col(1) = s;
    const MatrixXd mi = w.apply_inverse(m);
    CHECK((mi.col(0) - w.apply_inverse(u)).norm() < 1e-13);
    CHECK((mi.col(1) - w.apply_inverse(VectorXd(s))).norm() < 1e-13);

    // lambda o lambda has the same block traces as s o z (scaling preserves
    // the Jordan inner products).
    const VectorXd ll = detail::jordan_product(w.lambda(), w.lambda(), dims);
    const VectorXd sz = detail::jordan_product(s, z, dims);
    CHECK(ll.head(dims.nonneg).isApprox(sz.head(dims.nonneg), 1e-12));
    CHECK(ll[dims.nonneg] == doctest::Approx(sz[dims.nonneg]).epsilon(1e-12));
}

TEST_CASE("identity scaling is a no-op") {
    const ConeDims dims = mixed_dims();
    const detail::Scaling w(dims);
    const VectorXd u = interior_point(dims, 8);
    CHECK((w.apply(u) - u).norm() == 0.0);
    CHECK((w.apply_inverse(u) - u).norm() == 0.0);
}

TEST_CASE("linear program with a known solution") {
    // min -2 x1 - x2  s.t.  x1 + x2 <= 4, x1 <= 3, x >= 0.
    // Optimum at (3, 1) with objective -7.
    Problem prob;
    prob.c = VectorXd{{-2.0, -1.0}};
    prob.A = MatrixXd(0, 2);
    prob.b = VectorXd(0);
    prob.G = MatrixXd{{1.0, 1.0}, {1.0, 0.0}, {-1.0, 0.0}, {0.0, -1.0}};
    prob.h = VectorXd{{4.0, 3.0, 0.0, 0.0}};
    prob.dims.nonneg = 4;

    const Solution sol = solve(prob);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.primal_objective == doctest::Approx(-7.0).epsilon(1e-9));
    CHECK(std::abs(sol.duality_gap) < 1e-7);
}

TEST_CASE("second-order cone projection problem") {
    // min t  s.t.  (t; x - a) in SOC, x = b  =>  t* = ||b - a||.
    // Variables (t, x1, x2); equality pins x.
    Problem prob;
    prob.c = VectorXd{{1.0, 0.0, 0.0}};
    prob.A = MatrixXd{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
    prob.b = VectorXd{{0.3, -0.4}};
    prob.G = MatrixXd::Zero(3, 3);
    prob.G(0, 0) = -1.0;
    prob.G(1, 1) = -1.0;
    prob.G(2, 2) = -1.0;
    prob.h = VectorXd{{0.0, -1.0, 1.0}};  // s = h - Gx = (t, x1 - 1, x2 + 1) in SOC
    prob.dims.soc = {3};

    const Solution sol = solve(prob);
    REQUIRE(sol.status == SolveStatus::optimal);
    const double expect = std::hypot(0.3 - 1.0, -0.4 + 1.0);
    CHECK(sol.x[0] == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("norm minimization with a sum constraint") {
    // min ||x||_2 s.t. 1'x = 1 in R^4  =>  x = 1/4 each, value 1/2.
    const int n = 4;
    Problem prob;
    prob.c = VectorXd::Zero(n + 1);
    prob.c[0] = 1.0;
    prob.A = MatrixXd::Zero(1, n + 1);
    prob.A.row(0).tail(n).setOnes();
    prob.b = VectorXd{{1.0}};
    prob.G = -MatrixXd::Identity(n + 1, n + 1);
    prob.h = VectorXd::Zero(n + 1);
    prob.dims.soc = {n + 1};

    const Solution sol = solve(prob);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.primal_objective == doctest::Approx(0.5).epsilon(1e-8));
    for (int i = 1; i <= n; ++i) CHECK(sol.x[i] == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("dual certificate matches at the optimum") {
    // Same LP as above; check complementary slackness numerically.
    Problem prob;
    prob.c = VectorXd{{-1.0, -2.0}};
    prob.A = MatrixXd(0, 2);
    prob.b = VectorXd(0);
    prob.G = MatrixXd{{1.0, 1.0}, {1.0, 0.0}, {-1.0, 0.0}, {0.0, -1.0}};
    prob.h = VectorXd{{4.0, 3.0, 0.0, 0.0}};
    prob.dims.nonneg = 4;

    const Solution sol = solve(prob);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK((prob.G.transpose() * sol.z + prob.c).norm() < 1e-7);
    CHECK(sol.z.minCoeff() > -1e-9);
    CHECK(std::abs(sol.s.dot(sol.z)) < 1e-6);
}

TEST_CASE("validate rejects inconsistent shapes") {
    Problem prob;
    prob.c = VectorXd{{1.0}};
    prob.G = MatrixXd{{-1.0}};
    prob.h = VectorXd{{0.0}};
    prob.dims.nonneg = 2;  // claims 2 rows, G has 1
    CHECK_THROWS_AS(prob.validate(), std::invalid_argument);

    prob.dims.nonneg = 1;
    CHECK_NOTHROW(prob.validate());

    prob.A = MatrixXd{{1.0}};
    prob.b = VectorXd(0);  // A has a row, b is empty
    CHECK_THROWS_AS(prob.validate(), std::invalid_argument);
}
