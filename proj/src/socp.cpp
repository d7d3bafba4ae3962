#include "fedmimo/socp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedmimo::socp {

int ConeDims::total() const {
    int t = nonneg;
    for (int m : soc) t += m;
    return t;
}

int ConeDims::degree() const { return nonneg + static_cast<int>(soc.size()); }

void Problem::validate() const {
    const auto n = c.size();
    if (G.cols() != n) throw std::invalid_argument("G column count does not match c");
    if (G.rows() != h.size()) throw std::invalid_argument("G row count does not match h");
    if (A.rows() > 0 && A.cols() != n) throw std::invalid_argument("A column count does not match c");
    if (A.rows() != b.size()) throw std::invalid_argument("A row count does not match b");
    if (dims.nonneg < 0) throw std::invalid_argument("negative orthant dimension");
    for (int m : dims.soc)
        if (m < 1) throw std::invalid_argument("second-order cone blocks need dimension >= 1");
    if (dims.total() != G.rows()) throw std::invalid_argument("cone dimensions do not match G");
}

namespace detail {

namespace {

// sqrt(u0^2 - ||u1||^2) for an interior second-order cone point, computed
// as sqrt((u0-||u1||)(u0+||u1||)) to keep precision when u is near the
// boundary.
double hyperbolic_norm(const Eigen::Ref<const VectorXd>& u) {
    const double r = u.size() > 1 ? u.tail(u.size() - 1).norm() : 0.0;
    const double d = (u(0) - r) * (u(0) + r);
    if (d <= 0.0) throw std::runtime_error("cone iterate left the interior");
    return std::sqrt(d);
}

// Smallest positive root of a t^2 + b t + c = 0 with c > 0; +inf when the
// polynomial has no positive root.
double smallest_positive_root(double a, double b, double c) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
    if (scale == 0.0) return inf;
    if (std::abs(a) <= 1e-14 * scale) {
        if (b >= 0.0) return inf;
        return -c / b;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return inf;  // a > 0 here: c > 0 and no real root means f > 0 throughout
    const double sd = std::sqrt(disc);
    const double q = -0.5 * (b + (b >= 0.0 ? sd : -sd));
    const double r1 = q / a;
    const double r2 = (q != 0.0) ? c / q : inf;
    double best = inf;
    if (r1 > 0.0) best = std::min(best, r1);
    if (r2 > 0.0) best = std::min(best, r2);
    return best;
}

}  // namespace

VectorXd cone_identity(const ConeDims& dims) {
    VectorXd e = VectorXd::Zero(dims.total());
    e.head(dims.nonneg).setOnes();
    int off = dims.nonneg;
    for (int m : dims.soc) {
        e(off) = 1.0;
        off += m;
    }
    return e;
}

VectorXd jordan_product(const VectorXd& u, const VectorXd& v, const ConeDims& dims) {
    VectorXd out(dims.total());
    out.head(dims.nonneg) = u.head(dims.nonneg).cwiseProduct(v.head(dims.nonneg));
    int off = dims.nonneg;
    for (int m : dims.soc) {
        const auto us = u.segment(off, m);
        const auto vs = v.segment(off, m);
        out(off) = us.dot(vs);
        if (m > 1)
            out.segment(off + 1, m - 1) =
                us(0) * vs.tail(m - 1) + vs(0) * us.tail(m - 1);
        off += m;
    }
    return out;
}

VectorXd jordan_divide(const VectorXd& lam, const VectorXd& w, const ConeDims& dims) {
    VectorXd out(dims.total());
    out.head(dims.nonneg) = w.head(dims.nonneg).cwiseQuotient(lam.head(dims.nonneg));
    int off = dims.nonneg;
    for (int m : dims.soc) {
        const auto ls = lam.segment(off, m);
        const auto ws = w.segment(off, m);
        const double delta = (ls(0) - ls.tail(m - 1).norm()) * (ls(0) + ls.tail(m - 1).norm());
        if (delta <= 0.0 || ls(0) <= 0.0)
            throw std::runtime_error("Jordan division by a non-interior element");
        const double x0 = (ls(0) * ws(0) - ls.tail(m - 1).dot(ws.tail(m - 1))) / delta;
        out(off) = x0;
        if (m > 1) out.segment(off + 1, m - 1) = (ws.tail(m - 1) - x0 * ls.tail(m - 1)) / ls(0);
        off += m;
    }
    return out;
}

double max_step(const VectorXd& u, const VectorXd& d, const ConeDims& dims) {
    double t = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dims.nonneg; ++i)
        if (d(i) < 0.0) t = std::min(t, -u(i) / d(i));
    int off = dims.nonneg;
    for (int m : dims.soc) {
        const auto us = u.segment(off, m);
        const auto ds = d.segment(off, m);
        const double u1 = m > 1 ? us.tail(m - 1).squaredNorm() : 0.0;
        const double d1 = m > 1 ? ds.tail(m - 1).squaredNorm() : 0.0;
        const double ud = m > 1 ? us.tail(m - 1).dot(ds.tail(m - 1)) : 0.0;
        const double a = ds(0) * ds(0) - d1;
        const double b = 2.0 * (us(0) * ds(0) - ud);
        const double c = us(0) * us(0) - u1;
        t = std::min(t, smallest_positive_root(a, b, c));
        if (ds(0) < 0.0) t = std::min(t, -us(0) / ds(0));
        off += m;
    }
    return t;
}

double interior_shift(const VectorXd& u, const ConeDims& dims) {
    double t = -std::numeric_limits<double>::infinity();
    if (dims.nonneg > 0) t = std::max(t, -u.head(dims.nonneg).minCoeff());
    int off = dims.nonneg;
    for (int m : dims.soc) {
        const double r = m > 1 ? u.segment(off + 1, m - 1).norm() : 0.0;
        t = std::max(t, r - u(off));
        off += m;
    }
    return t;
}

Scaling::Scaling(const ConeDims& dims) : dims_(dims) {
    lp_w_ = VectorXd::Ones(dims.nonneg);
    for (int m : dims.soc) {
        SocScale s;
        s.v = VectorXd::Zero(m);
        s.v(0) = 1.0;
        s.beta = 1.0;
        socs_.push_back(std::move(s));
    }
    lambda_ = cone_identity(dims);
}

Scaling::Scaling(const VectorXd& s, const VectorXd& z, const ConeDims& dims) : dims_(dims) {
    lambda_.resize(dims.total());
    lp_w_.resize(dims.nonneg);
    for (int i = 0; i < dims.nonneg; ++i) {
        if (s(i) <= 0.0 || z(i) <= 0.0)
            throw std::runtime_error("orthant iterate left the interior");
        lp_w_(i) = std::sqrt(s(i) / z(i));
        lambda_(i) = std::sqrt(s(i) * z(i));
    }
    int off = dims.nonneg;
    for (int m : dims.soc) {
        const auto ss = s.segment(off, m);
        const auto zs = z.segment(off, m);
        const double a = hyperbolic_norm(ss);
        const double b = hyperbolic_norm(zs);
        const VectorXd sbar = ss / a;
        const VectorXd zbar = zs / b;
        const double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);

        // Scaling point w = (sbar + J zbar) / (2 gamma); the Householder
        // vector is its half-rapidity (w + e) / sqrt(2 (w0 + 1)) so that
        // (2 v v' - J)^2 realizes w's boost.
        SocScale sc;
        sc.v = VectorXd(m);
        sc.v(0) = (sbar(0) + zbar(0)) / (2.0 * gamma) + 1.0;
        if (m > 1) sc.v.tail(m - 1) = (sbar.tail(m - 1) - zbar.tail(m - 1)) / (2.0 * gamma);
        sc.v /= std::sqrt(2.0 * sc.v(0));
        sc.beta = std::sqrt(a / b);

        const double d = 2.0 * gamma + sbar(0) + zbar(0);
        lambda_(off) = gamma;
        if (m > 1)
            lambda_.segment(off + 1, m - 1) = ((gamma + zbar(0)) / d) * sbar.tail(m - 1) +
                                              ((gamma + sbar(0)) / d) * zbar.tail(m - 1);
        lambda_.segment(off, m) *= std::sqrt(a * b);
        socs_.push_back(std::move(sc));
        off += m;
    }
}

VectorXd Scaling::apply(const VectorXd& u) const {
    VectorXd out(dims_.total());
    out.head(dims_.nonneg) = u.head(dims_.nonneg).cwiseProduct(lp_w_);
    int off = dims_.nonneg;
    for (std::size_t k = 0; k < socs_.size(); ++k) {
        const int m = dims_.soc[k];
        const auto& v = socs_[k].v;
        const auto us = u.segment(off, m);
        const double t = v.dot(us);
        out(off) = socs_[k].beta * (2.0 * v(0) * t - us(0));
        if (m > 1)
            out.segment(off + 1, m - 1) =
                socs_[k].beta * (2.0 * t * v.tail(m - 1) + us.tail(m - 1));
        off += m;
    }
    return out;
}

VectorXd Scaling::apply_inverse(const VectorXd& u) const {
    VectorXd out(dims_.total());
    out.head(dims_.nonneg) = u.head(dims_.nonneg).cwiseQuotient(lp_w_);
    int off = dims_.nonneg;
    for (std::size_t k = 0; k < socs_.size(); ++k) {
        const int m = dims_.soc[k];
        const auto& v = socs_[k].v;
        const auto us = u.segment(off, m);
        // W^{-1} = (1/beta)(2 (Jv)(Jv)' - J), J = diag(1, -I)
        const double t = v(0) * us(0) - (m > 1 ? v.tail(m - 1).dot(us.tail(m - 1)) : 0.0);
        out(off) = (2.0 * v(0) * t - us(0)) / socs_[k].beta;
        if (m > 1)
            out.segment(off + 1, m - 1) =
                (-2.0 * t * v.tail(m - 1) + us.tail(m - 1)) / socs_[k].beta;
        off += m;
    }
    return out;
}

MatrixXd Scaling::apply_inverse(const MatrixXd& m) const {
    MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.col(j) = apply_inverse(VectorXd(m.col(j)));
    return out;
}

}  // namespace detail

namespace {

using detail::Scaling;

// Reduced system for one scaling: eliminate dz and ds, factor
// H = G'W^{-2}G once, then handle the equality block by a Schur complement.
class KktSolver {
  public:
    KktSolver(const Problem& p, const Scaling& w) : prob_(p) {
        gs_ = w.apply_inverse(p.G);
        MatrixXd h = gs_.transpose() * gs_;
        const double base = h.trace() / std::max<Eigen::Index>(1, h.rows());
        double reg = 0.0;
        for (int attempt = 0; attempt < 4; ++attempt) {
            llt_.compute(reg == 0.0 ? h : MatrixXd(h + reg * MatrixXd::Identity(h.rows(), h.cols())));
            if (llt_.info() == Eigen::Success) break;
            reg = (reg == 0.0) ? 1e-14 * base : reg * 1e4;
        }
        if (llt_.info() != Eigen::Success)
            throw std::runtime_error("reduced system is numerically singular");
        if (p.A.rows() > 0) {
            hi_at_ = llt_.solve(p.A.transpose());
            schur_ldlt_.compute(p.A * hi_at_);
            if (schur_ldlt_.info() != Eigen::Success)
                throw std::runtime_error("equality Schur complement factorization failed");
        }
    }

    // Solves H dx + A' dy = bx, A dx = by, with one refinement pass against
    // the unregularized reduced operator.
    void solve(const VectorXd& bx, const VectorXd& by, VectorXd& dx, VectorXd& dy) const {
        solve_once(bx, by, dx, dy);
        const VectorXd rx = gs_.transpose() * (gs_ * dx) + prob_.A.transpose() * dy - bx;
        const VectorXd ry = prob_.A * dx - by;
        VectorXd ex, ey;
        solve_once(rx, ry, ex, ey);
        dx -= ex;
        dy -= ey;
    }

    const MatrixXd& scaled_g() const { return gs_; }

  private:
    void solve_once(const VectorXd& bx, const VectorXd& by, VectorXd& dx, VectorXd& dy) const {
        const VectorXd t = llt_.solve(bx);
        if (prob_.A.rows() > 0) {
            dy = schur_ldlt_.solve(prob_.A * t - by);
            dx = t - hi_at_ * dy;
        } else {
            dy = VectorXd(0);
            dx = t;
        }
    }

    const Problem& prob_;
    MatrixXd gs_;      // W^{-1} G
    MatrixXd hi_at_;   // H^{-1} A'
    Eigen::LLT<MatrixXd> llt_;
    Eigen::LDLT<MatrixXd> schur_ldlt_;
};

struct Direction {
    VectorXd dx, dy, ds, dz;
};

// Newton direction for scaled complementarity target rhs_s:
//   lam o (W^{-1} ds + W dz) = rhs_s
// together with the three linear residual equations.
Direction newton_direction(const Problem& p, const KktSolver& kkt, const Scaling& w,
                           const VectorXd& rx, const VectorXd& ry, const VectorXd& rz,
                           const VectorXd& rhs_s) {
    const VectorXd wld = w.apply(detail::jordan_divide(w.lambda(), rhs_s, p.dims));
    const VectorXd bz = -rz - wld;
    const VectorXd w_bz = w.apply_inverse(bz);
    const VectorXd bx = -rx + kkt.scaled_g().transpose() * w_bz;

    Direction d;
    kkt.solve(bx, -ry, d.dx, d.dy);
    d.dz = w.apply_inverse(VectorXd(kkt.scaled_g() * d.dx - w_bz));
    d.ds = -rz - p.G * d.dx;
    return d;
}

}  // namespace

Solution solve(const Problem& prob_in, const Settings& settings) {
    prob_in.validate();
    Problem prob = prob_in;
    if (prob.A.cols() != prob.c.size()) {
        prob.A.resize(0, prob.c.size());  // equality-free program with a 0x0 A
        prob.b.resize(0);
    }
    const ConeDims& dims = prob.dims;
    const int mbar = dims.degree();
    const VectorXd e = detail::cone_identity(dims);

    Solution sol;

    // Initial point: least-squares primal for x, s; least-norm dual for y, z;
    // both shifted into the cone interior.
    try {
        const Scaling ident(dims);
        const KktSolver kkt0(prob, ident);
        VectorXd dy;
        kkt0.solve(prob.G.transpose() * prob.h, prob.b, sol.x, dy);
        sol.s = prob.h - prob.G * sol.x;
        const double ts = detail::interior_shift(sol.s, dims);
        if (ts >= -1e-8 * std::max(1.0, sol.s.norm())) sol.s += (1.0 + ts) * e;

        VectorXd xd;
        kkt0.solve(-prob.c, VectorXd::Zero(prob.b.size()), xd, sol.y);
        sol.z = prob.G * xd;
        const double tz = detail::interior_shift(sol.z, dims);
        if (tz >= -1e-8 * std::max(1.0, sol.z.norm())) sol.z += (1.0 + tz) * e;
    } catch (const std::runtime_error&) {
        sol.status = SolveStatus::failed;
        return sol;
    }

    const double bnorm = std::max(1.0, prob.b.norm());
    const double hnorm = std::max(1.0, prob.h.norm());
    const double cnorm = std::max(1.0, prob.c.norm());

    bool converged = false;
    for (int iter = 0;; ++iter) {
        const VectorXd rx = prob.c + prob.A.transpose() * sol.y + prob.G.transpose() * sol.z;
        const VectorXd ry = prob.A * sol.x - prob.b;
        const VectorXd rz = prob.G * sol.x + sol.s - prob.h;

        sol.primal_objective = prob.c.dot(sol.x);
        sol.dual_objective = -prob.b.dot(sol.y) - prob.h.dot(sol.z);
        sol.duality_gap = sol.s.dot(sol.z);
        if (sol.primal_objective < 0.0)
            sol.relative_gap = sol.duality_gap / -sol.primal_objective;
        else if (sol.dual_objective > 0.0)
            sol.relative_gap = sol.duality_gap / sol.dual_objective;
        else
            sol.relative_gap = std::numeric_limits<double>::infinity();
        sol.primal_residual = std::max(ry.norm() / bnorm, rz.norm() / hnorm);
        sol.dual_residual = rx.norm() / cnorm;
        sol.iterations = iter;

        if (sol.primal_residual <= settings.feastol && sol.dual_residual <= settings.feastol &&
            (sol.duality_gap <= settings.abstol || sol.relative_gap <= settings.reltol)) {
            converged = true;
            break;
        }
        if (iter >= settings.max_iterations) break;

        const double gap = sol.duality_gap;
        if (gap <= 0.0) break;
        const double mu = gap / mbar;

        try {
            const Scaling w(sol.s, sol.z, dims);
            const KktSolver kkt(prob, w);
            const VectorXd lam_sq = detail::jordan_product(w.lambda(), w.lambda(), dims);

            const Direction aff =
                newton_direction(prob, kkt, w, rx, ry, rz, VectorXd(-lam_sq));
            const double alpha_aff =
                std::min(1.0, std::min(detail::max_step(sol.s, aff.ds, dims),
                                       detail::max_step(sol.z, aff.dz, dims)));
            const double gap_aff =
                (sol.s + alpha_aff * aff.ds).dot(sol.z + alpha_aff * aff.dz);
            const double ratio = std::clamp(gap_aff / gap, 0.0, 1.0);
            const double sigma = ratio * ratio * ratio;

            const VectorXd corr = detail::jordan_product(w.apply_inverse(aff.ds),
                                                         w.apply(aff.dz), dims);
            const VectorXd rhs_s = -lam_sq - corr + sigma * mu * e;
            const Direction dir = newton_direction(prob, kkt, w, rx, ry, rz, rhs_s);

            const double alpha_max = std::min(detail::max_step(sol.s, dir.ds, dims),
                                              detail::max_step(sol.z, dir.dz, dims));
            const double alpha = std::min(1.0, 0.99 * alpha_max);
            if (alpha <= 1e-10) break;

            sol.x += alpha * dir.dx;
            sol.y += alpha * dir.dy;
            sol.s += alpha * dir.ds;
            sol.z += alpha * dir.dz;
        } catch (const std::runtime_error&) {
            break;  // scaling or factorization broke down; classify what we have
        }
    }

    if (converged) {
        sol.status = SolveStatus::optimal;
    } else if (sol.primal_residual <= settings.near_feastol &&
               sol.dual_residual <= settings.near_feastol &&
               (sol.duality_gap <= settings.near_abstol ||
                sol.relative_gap <= settings.near_reltol)) {
        sol.status = SolveStatus::near_optimal;
    } else {
        sol.status = SolveStatus::failed;
    }
    return sol;
}

}  // namespace fedmimo::socp
