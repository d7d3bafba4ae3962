#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "fedmimo/data.hpp"

namespace fedmimo {

/// Multinomial logistic regression parameters. Feature-major layout over
/// bias-augmented inputs: weights((j * C) + c) multiplies feature j (j = F
/// is the constant-1 bias row) for class c, giving d = (F + 1) * C.
struct ModelParams {
    Eigen::VectorXd weights;
};

int model_dimension(const Dataset& dataset);
ModelParams zero_model(const Dataset& dataset);

struct LossGrad {
    double loss = 0.0;
    Eigen::VectorXd gradient;
};

/// Mean cross-entropy and exact gradient over the whole dataset. With data
/// weights proportional to shard sizes this equals the weighted global
/// objective.
LossGrad loss_and_gradient(const Dataset& dataset, const ModelParams& model);
LossGrad loss_and_gradient(const Dataset& dataset, const ModelParams& model,
                           const DataShard& shard);

/// Share of samples whose argmax logit matches the label, whole dataset.
double accuracy(const Dataset& dataset, const ModelParams& model);

/// max over samples of ||per-sample gradient||^2; factorizes as
/// ||softmax - onehot||^2 * ||augmented features||^2.
double max_sample_grad_sq(const Dataset& dataset, const ModelParams& model);

/// One full-batch gradient step on the shard.
ModelParams local_update(const Dataset& dataset, const ModelParams& prev,
                         const DataShard& shard, double eta);

/// Renormalized weighted average of the scheduled locals:
/// sum_{k in S} alpha_k w_k / sum_{k in S} alpha_k.
ModelParams aggregate(const std::map<int, ModelParams>& locals,
                      const std::vector<double>& weights, const std::vector<int>& scheduled);

struct ResidualInfo {
    Eigen::VectorXd residual;       // e_t
    double identity_residual = 0.0; // ||aggregate - (w - eta(grad F + e_t))||
};

/// Aggregation error of partial participation: e_t = (weighted mean of
/// scheduled shard gradients) - (global gradient). Also re-derives the
/// aggregated model and reports how exactly w_agg = w - eta(grad F + e_t)
/// holds; the identity is algebraic, so the residual is pure roundoff.
ResidualInfo residual(const Dataset& dataset, const ModelParams& prev,
                      const std::vector<DataShard>& shards, const std::vector<double>& weights,
                      const std::vector<int>& scheduled, double eta);

struct BoundInputs {
    double smoothness = 0.0;            // L
    double gradient_bound = 0.0;        // kappa
    double step_size = 0.0;             // constant learning rate, <= 1/L
    double initial_loss = 0.0;          // F(w_0)
    double optimal_loss_estimate = 0.0; // achievable stand-in for F(w*)
    int round_count = 0;
};

/// Convergence bound on the average squared gradient norm over the run:
///   2 (F(w_0) - F(w*)) / (step * tau) + (4 kappa / tau) * sum_t gap_t,
/// gap_t = (1 - scheduled weighted mass at round t)^2.
double convergence_bound(const BoundInputs& inputs, const std::vector<double>& gap_terms);

struct CurvatureEstimates {
    double smoothness = 0.0;     // 0.5 * lambda_max of augmented feature second moment
    double kappa_analytic = 0.0; // 2 * max ||augmented features||^2, global bound
    double kappa_probe = 0.0;    // 2 * max observed sample grad^2 over a probe descent
};

CurvatureEstimates estimate_smoothness_and_kappa(const Dataset& dataset, int probe_steps = 50);

/// Achievable stand-in for the optimal loss: accelerated full-batch descent
/// at step 1/L until the gradient norm drops below `grad_tol`, returning the
/// best loss seen. Convexity makes any returned value >= the true optimum.
double optimal_loss_estimate(const Dataset& dataset, double smoothness, int max_steps = 20000,
                             double grad_tol = 1e-8);

namespace kernel {

/// Serial reference: accumulates summed (not yet averaged) cross-entropy
/// loss and gradient over the index list, walking the same fixed-size
/// chunks the parallel kernel uses so the two agree bit for bit.
void sum_loss_grad_serial(const Dataset& dataset, const Eigen::VectorXd& w,
                          const std::vector<int>& indices, double& loss,
                          Eigen::VectorXd& grad);

/// Same contract, parallel over the chunks with a serial in-order combine:
/// results are bit-identical to the serial reference at any thread count.
void sum_loss_grad(const Dataset& dataset, const Eigen::VectorXd& w,
                   const std::vector<int>& indices, double& loss, Eigen::VectorXd& grad);

}  // namespace kernel

}  // namespace fedmimo
