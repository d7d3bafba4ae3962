#include "fedmimo/fl.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedmimo {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Stabilized softmax probabilities of one sample's logits, in place.
void softmax_inplace(Eigen::RowVectorXd& logits) {
    const double m = logits.maxCoeff();
    logits = (logits.array() - m).exp();
    logits /= logits.sum();
}

void check_model(const Dataset& ds, const ModelParams& model) {
    if (model.weights.size() != model_dimension(ds))
        throw std::invalid_argument("model dimension does not match dataset");
}

std::vector<int> all_indices(const Dataset& ds) {
    std::vector<int> idx(ds.sample_count());
    for (int i = 0; i < ds.sample_count(); ++i) idx[i] = i;
    return idx;
}

LossGrad mean_loss_grad(const Dataset& ds, const ModelParams& model,
                        const std::vector<int>& indices) {
    check_model(ds, model);
    if (indices.empty()) throw std::domain_error("loss over an empty sample set");
    LossGrad out;
    kernel::sum_loss_grad(ds, model.weights, indices, out.loss, out.gradient);
    out.loss /= static_cast<double>(indices.size());
    out.gradient /= static_cast<double>(indices.size());
    return out;
}

}  // namespace

int model_dimension(const Dataset& dataset) {
    return (dataset.feature_count() + 1) * dataset.num_classes;
}

ModelParams zero_model(const Dataset& dataset) {
    return {Eigen::VectorXd::Zero(model_dimension(dataset))};
}

namespace kernel {

namespace {

// Both kernels reduce over slices of this size; a fixed chunk makes the
// reduction tree independent of the thread count.
constexpr std::size_t kChunk = 256;

// Summed loss/gradient of one contiguous slice of the index list; the inner
// order is fixed so the parallel version can reproduce it chunk by chunk.
void accumulate_slice(const Dataset& ds, const RowMajorMap& w, const std::vector<int>& indices,
                      std::size_t begin, std::size_t end, double& loss, Eigen::VectorXd& grad) {
    const int f = ds.feature_count();
    const int c = ds.num_classes;
    Eigen::RowVectorXd logits(c);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> g(
        grad.data(), f + 1, c);
    for (std::size_t a = begin; a < end; ++a) {
        const int i = indices[a];
        logits.noalias() = ds.features.row(i) * w.topRows(f);
        logits += w.row(f);

        const double m = logits.maxCoeff();
        const double z = (logits.array() - m).exp().sum();
        loss += std::log(z) + m - logits(ds.labels[i]);

        logits = ((logits.array() - m).exp() / z).matrix();  // now probabilities
        logits(ds.labels[i]) -= 1.0;
        g.topRows(f).noalias() += ds.features.row(i).transpose() * logits;
        g.row(f) += logits;
    }
}

}  // namespace

void sum_loss_grad_serial(const Dataset& ds, const Eigen::VectorXd& w,
                          const std::vector<int>& indices, double& loss, Eigen::VectorXd& grad) {
    // Same partial sums and combine order as the parallel kernel, minus the
    // threading; the pair differs only in who executes the chunks.
    const std::size_t n = indices.size();
    const RowMajorMap wm(w.data(), ds.feature_count() + 1, ds.num_classes);
    loss = 0.0;
    grad = Eigen::VectorXd::Zero(w.size());
    Eigen::VectorXd part(w.size());
    for (std::size_t begin = 0; begin < n; begin += kChunk) {
        double loss_part = 0.0;
        part.setZero();
        accumulate_slice(ds, wm, indices, begin, std::min(begin + kChunk, n), loss_part, part);
        loss += loss_part;
        grad += part;
    }
}

void sum_loss_grad(const Dataset& ds, const Eigen::VectorXd& w, const std::vector<int>& indices,
                   double& loss, Eigen::VectorXd& grad) {
    const std::size_t n = indices.size();
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    const RowMajorMap wm(w.data(), ds.feature_count() + 1, ds.num_classes);

    std::vector<double> losses(chunks, 0.0);
    std::vector<Eigen::VectorXd> grads(chunks);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) {
        grads[ci] = Eigen::VectorXd::Zero(w.size());
        const std::size_t begin = static_cast<std::size_t>(ci) * kChunk;
        accumulate_slice(ds, wm, indices, begin, std::min(begin + kChunk, n), losses[ci],
                         grads[ci]);
    }

    loss = 0.0;
    grad = Eigen::VectorXd::Zero(w.size());
    for (std::size_t ci = 0; ci < chunks; ++ci) {
        loss += losses[ci];
        grad += grads[ci];
    }
}

}  // namespace kernel

LossGrad loss_and_gradient(const Dataset& dataset, const ModelParams& model) {
    return mean_loss_grad(dataset, model, all_indices(dataset));
}

LossGrad loss_and_gradient(const Dataset& dataset, const ModelParams& model,
                           const DataShard& shard) {
    return mean_loss_grad(dataset, model, shard.indices);
}

double accuracy(const Dataset& dataset, const ModelParams& model) {
    check_model(dataset, model);
    const int f = dataset.feature_count();
    const int c = dataset.num_classes;
    const RowMajorMap w(model.weights.data(), f + 1, c);
    Eigen::RowVectorXd logits(c);
    int hits = 0;
    for (int i = 0; i < dataset.sample_count(); ++i) {
        logits.noalias() = dataset.features.row(i) * w.topRows(f);
        logits += w.row(f);
        int best = 0;
        for (int j = 1; j < c; ++j)
            if (logits(j) > logits(best)) best = j;  // first max wins
        if (best == dataset.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / dataset.sample_count();
}

double max_sample_grad_sq(const Dataset& dataset, const ModelParams& model) {
    check_model(dataset, model);
    const int f = dataset.feature_count();
    const int c = dataset.num_classes;
    const RowMajorMap w(model.weights.data(), f + 1, c);
    Eigen::RowVectorXd logits(c);
    double worst = 0.0;
    for (int i = 0; i < dataset.sample_count(); ++i) {
        logits.noalias() = dataset.features.row(i) * w.topRows(f);
        logits += w.row(f);
        softmax_inplace(logits);
        logits(dataset.labels[i]) -= 1.0;
        const double xsq = dataset.features.row(i).squaredNorm() + 1.0;
        worst = std::max(worst, logits.squaredNorm() * xsq);
    }
    return worst;
}

ModelParams local_update(const Dataset& dataset, const ModelParams& prev,
                         const DataShard& shard, double eta) {
    if (eta <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (shard.indices.empty()) throw std::domain_error("local update on an empty shard");
    const LossGrad lg = loss_and_gradient(dataset, prev, shard);
    return {prev.weights - eta * lg.gradient};
}

ModelParams aggregate(const std::map<int, ModelParams>& locals,
                      const std::vector<double>& weights, const std::vector<int>& scheduled) {
    if (scheduled.empty()) throw std::domain_error("aggregation over an empty schedule");
    double mass = 0.0;
    for (int k : scheduled) mass += weights.at(k);
    ModelParams out{Eigen::VectorXd::Zero(locals.at(scheduled.front()).weights.size())};
    for (int k : scheduled) out.weights += weights.at(k) * locals.at(k).weights;
    out.weights /= mass;
    return out;
}

ResidualInfo residual(const Dataset& dataset, const ModelParams& prev,
                      const std::vector<DataShard>& shards, const std::vector<double>& weights,
                      const std::vector<int>& scheduled, double eta) {
    if (scheduled.empty()) throw std::domain_error("residual of an empty schedule");
    double mass = 0.0;
    for (int k : scheduled) mass += weights.at(k);

    const LossGrad global = loss_and_gradient(dataset, prev);

    Eigen::VectorXd mixed = Eigen::VectorXd::Zero(prev.weights.size());
    std::map<int, ModelParams> locals;
    for (int k : scheduled) {
        const DataShard& shard = shards.at(k);
        if (shard.owner != k) throw std::invalid_argument("shard owner does not match index");
        const LossGrad lg = loss_and_gradient(dataset, prev, shard);
        mixed += weights[k] * lg.gradient;
        locals.emplace(k, ModelParams{prev.weights - eta * lg.gradient});
    }

    ResidualInfo info;
    info.residual = mixed / mass - global.gradient;
    const ModelParams agg = aggregate(locals, weights, scheduled);
    info.identity_residual =
        (agg.weights - (prev.weights - eta * (global.gradient + info.residual))).norm();
    return info;
}

double convergence_bound(const BoundInputs& inputs, const std::vector<double>& gap_terms) {
    if (!(inputs.smoothness > 0.0) || !std::isfinite(inputs.smoothness))
        throw std::invalid_argument("smoothness must be positive and finite");
    if (!(inputs.gradient_bound >= 0.0) || !std::isfinite(inputs.gradient_bound))
        throw std::invalid_argument("gradient bound must be nonnegative and finite");
    if (!(inputs.step_size > 0.0) ||
        inputs.step_size > (1.0 + 1e-12) / inputs.smoothness)
        throw std::invalid_argument("step size must lie in (0, 1/L]");
    if (inputs.round_count <= 0 ||
        gap_terms.size() != static_cast<std::size_t>(inputs.round_count))
        throw std::invalid_argument("gap terms must cover every round");

    double gap_sum = 0.0;
    for (double g : gap_terms) gap_sum += g;
    const double tau = static_cast<double>(inputs.round_count);
    return 2.0 * (inputs.initial_loss - inputs.optimal_loss_estimate) /
               (inputs.step_size * tau) +
           4.0 * inputs.gradient_bound / tau * gap_sum;
}

CurvatureEstimates estimate_smoothness_and_kappa(const Dataset& dataset, int probe_steps) {
    dataset.validate();
    const int n = dataset.sample_count();
    const int f = dataset.feature_count();

    Eigen::MatrixXd moment(f + 1, f + 1);
    moment.topLeftCorner(f, f) = dataset.features.transpose() * dataset.features / n;
    moment.topRightCorner(f, 1) = dataset.features.colwise().mean().transpose();
    moment.bottomLeftCorner(1, f) = dataset.features.colwise().mean();
    moment(f, f) = 1.0;

    CurvatureEstimates est;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(moment, Eigen::EigenvaluesOnly);
    est.smoothness = std::max(0.5 * eig.eigenvalues().maxCoeff(), 1e-8);

    double max_xsq = 0.0;
    for (int i = 0; i < n; ++i)
        max_xsq = std::max(max_xsq, dataset.features.row(i).squaredNorm() + 1.0);
    est.kappa_analytic = 2.0 * max_xsq;

    // Probe descent from zero at step 1/L; the observed per-sample gradient
    // bound doubled is the empirical counterpart reported next to the
    // analytic value.
    ModelParams w = zero_model(dataset);
    double observed = 0.0;
    for (int t = 0; t < probe_steps; ++t) {
        observed = std::max(observed, max_sample_grad_sq(dataset, w));
        const LossGrad lg = loss_and_gradient(dataset, w);
        w.weights -= (1.0 / est.smoothness) * lg.gradient;
    }
    observed = std::max(observed, max_sample_grad_sq(dataset, w));
    est.kappa_probe = 2.0 * observed;
    return est;
}

double optimal_loss_estimate(const Dataset& dataset, double smoothness, int max_steps,
                             double grad_tol) {
    if (!(smoothness > 0.0)) throw std::invalid_argument("smoothness must be positive");
    const double step = 1.0 / smoothness;
    ModelParams x = zero_model(dataset);
    Eigen::VectorXd y = x.weights;
    Eigen::VectorXd x_prev = x.weights;
    double best = std::numeric_limits<double>::infinity();
    double t = 1.0;
    for (int k = 0; k < max_steps; ++k) {
        ModelParams ym{y};
        const LossGrad lg = loss_and_gradient(dataset, ym);
        best = std::min(best, lg.loss);
        if (lg.gradient.norm() < grad_tol) break;
        x_prev = x.weights;
        x.weights = y - step * lg.gradient;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x.weights + ((t - 1.0) / t_next) * (x.weights - x_prev);
        t = t_next;
    }
    best = std::min(best, loss_and_gradient(dataset, x).loss);
    return best;
}

}  // namespace fedmimo
