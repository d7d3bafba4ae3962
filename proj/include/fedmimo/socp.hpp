#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace fedmimo::socp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Cone layout: nonnegative orthant rows first, then second-order cone
/// blocks in order. A second-order cone of dimension m holds vectors u with
/// u(0) >= ||u(1..m-1)||.
struct ConeDims {
    int nonneg = 0;
    std::vector<int> soc;

    int total() const;
    /// Barrier degree: one per nonnegative row, one per cone block.
    int degree() const;
};

/// Conic program in standard form:
///   minimize    c'x
///   subject to  A x = b,   G x + s = h,   s in K.
/// A may have zero rows. G must have full column rank (slack or identity
/// rows guarantee this in every program built here).
struct Problem {
    VectorXd c;
    MatrixXd A;
    VectorXd b;
    MatrixXd G;
    VectorXd h;
    ConeDims dims;

    void validate() const;
};

enum class SolveStatus { optimal, near_optimal, failed };

struct Settings {
    int max_iterations = 100;
    double feastol = 1e-9;
    double abstol = 1e-9;
    double reltol = 1e-9;
    /// Fallback thresholds: an iterate within these counts as near_optimal
    /// instead of failed when the main tolerances were not reached.
    double near_feastol = 1e-6;
    double near_abstol = 1e-6;
    double near_reltol = 1e-4;
};

struct Solution {
    SolveStatus status = SolveStatus::failed;
    VectorXd x, y, s, z;
    double primal_objective = std::numeric_limits<double>::quiet_NaN();
    double dual_objective = std::numeric_limits<double>::quiet_NaN();
    double duality_gap = std::numeric_limits<double>::quiet_NaN();
    double relative_gap = std::numeric_limits<double>::quiet_NaN();
    double primal_residual = std::numeric_limits<double>::quiet_NaN();
    double dual_residual = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;

    bool usable() const { return status != SolveStatus::failed; }
};

/// Primal-dual interior-point method with Nesterov-Todd scaling and a
/// Mehrotra predictor-corrector step. Infeasible start; every program
/// solved here is strictly feasible by construction.
Solution solve(const Problem& prob, const Settings& settings = {});

namespace detail {

/// Euclidean Jordan algebra over R_+^l x SOC products, exposed for tests.
VectorXd cone_identity(const ConeDims& dims);
VectorXd jordan_product(const VectorXd& u, const VectorXd& v, const ConeDims& dims);
/// Solves lam o x = w for x. Requires lam in the cone interior.
VectorXd jordan_divide(const VectorXd& lam, const VectorXd& w, const ConeDims& dims);
/// sup { t >= 0 : u + t d in K } for u in int K; +inf when unbounded.
double max_step(const VectorXd& u, const VectorXd& d, const ConeDims& dims);
/// Largest over blocks of the distance to the cone along -e; negative when
/// u is already interior. Used to shift initial points into the cone.
double interior_shift(const VectorXd& u, const ConeDims& dims);

/// Nesterov-Todd scaling: the unique symmetric W with W z = W^{-1} s =
/// lambda for interior s, z. Diagonal on the orthant, a scaled hyperbolic
/// Householder reflection per cone block.
class Scaling {
  public:
    /// Identity scaling (used for initialization solves).
    explicit Scaling(const ConeDims& dims);
    Scaling(const VectorXd& s, const VectorXd& z, const ConeDims& dims);

    const VectorXd& lambda() const { return lambda_; }
    VectorXd apply(const VectorXd& u) const;
    VectorXd apply_inverse(const VectorXd& u) const;
    /// W^{-1} M, columnwise.
    MatrixXd apply_inverse(const MatrixXd& m) const;

  private:
    struct SocScale {
        VectorXd v;   // unit hyperbolic norm: v(0)^2 - ||v(1..)||^2 = 1
        double beta;  // positive scale
    };

    ConeDims dims_;
    VectorXd lp_w_;  // sqrt(s_i / z_i)
    std::vector<SocScale> socs_;
    VectorXd lambda_;
};

}  // namespace detail

}  // namespace fedmimo::socp
