#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gvf/complex.hpp"
#include "gvf/errors.hpp"
#include "gvf/model.hpp"

namespace gvf {

/// Allowed lambda1 values; 0 is accepted as the no-regulariser ablation.
inline constexpr double kLambda1Grid[] = {0.01, 0.1, 0.5};

struct LossConfig {
  double lambda1 = 0.1;
  double lambda2 = 0.1;
  double eps = 1e-8;
  int num_classes = 2;
  double p_drop = 0.2;

  void validate() const;
};

/// One window: complex, whitened node features, edge features, labels
/// (-1 marks an unlabeled vertex).
struct Batch {
  std::shared_ptr<const SimplicialComplex> complex;
  RealSparse mixing;
  Eigen::MatrixXd x;
  Eigen::MatrixXd edge_features;
  std::vector<int> labels;
};

Batch make_batch(std::shared_ptr<const SimplicialComplex> complex, Eigen::MatrixXd whitened_x,
                 Eigen::MatrixXd edge_features, std::vector<int> labels);

struct LossParts {
  double total = 0;
  double cls = 0;
  double geo = 0;
  double orth = 0;
  double rho = 0;  // ||curl F||^2 / (||F||^2 + eps), before clipping
  bool clipped = false;
  double gate_entropy = 0;
  double accuracy = 0;
};

/// Same layout as the trainable parts of GvfModel.
struct ModelGradients {
  std::vector<ExpertParams> experts;
  GatingParams gating;
  FlowParams flow;
  ReadoutHead readout;
  std::vector<Eigen::VectorXd> risk_axes;
};

/// L = L_cls + lambda1 L_geo + lambda2 L_orth on one window.
LossParts loss_total(const GvfModel& model, const Batch& batch, const LossConfig& cfg);

/// Loss and exact gradients of every trainable tensor. The rho clip acts as a
/// stop-gradient: when rho > 1 the geometric term contributes nothing.
/// No loss term reads the risk axes, so their gradient is zero.
std::pair<LossParts, ModelGradients> backward(const GvfModel& model, const Batch& batch, const LossConfig& cfg);

/// Flat view of one parameter tensor, for optimisers and gradient checks.
struct ParamView {
  std::string group;  // experts, gating, flow, readout, risk_axes
  std::string name;
  double* data = nullptr;
  Eigen::Index size = 0;
};

std::vector<ParamView> parameter_views(GvfModel& model);
std::vector<ParamView> gradient_views(ModelGradients& grads);

struct DropoutResult {
  Eigen::MatrixXd x;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> dropped;  // rows x N_mod
};

/// Zeroes each (row, modality) input block with probability p_drop,
/// redrawing any row that would lose every modality.
DropoutResult modality_dropout(const Eigen::MatrixXd& x, const BundleConfig& bundle, double p_drop,
                               std::mt19937_64& rng);

struct Sample {
  std::shared_ptr<const SimplicialComplex> complex;
  Eigen::MatrixXd features;  // raw, unwhitened
  Eigen::MatrixXd edge_features;
  std::vector<int> labels;
};

struct TrainConfig {
  LossConfig loss;
  double step = 1e-2;
  int epochs = 200;
  std::uint64_t seed = 1;
  /// Refit whitening on the training features before the first step.
  bool fit_whitening = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0;
  double cls = 0;
  double geo = 0;
  double orth = 0;
  double rho = 0;
  double gate_entropy = 0;
  double accuracy = 0;
};

struct TrainResult {
  GvfModel model;
  std::vector<EpochRecord> history;
};

class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, std::vector<EpochRecord> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<EpochRecord>& history() const { return history_; }

 private:
  std::vector<EpochRecord> history_;
};

inline constexpr double kDivergenceLoss = 1e6;

/// Plain SGD, one step per window, modality dropout on every step, risk axes
/// renormalised after every update.
TrainResult train(GvfModel model, const std::vector<Sample>& dataset, const TrainConfig& cfg);

/// Whitens a sample with the model's transform.
Batch prepare_batch(const GvfModel& model, const Sample& sample);

/// Argmax class per vertex.
std::vector<int> predict(const GvfModel& model, const Batch& batch);

/// Fraction of labelled vertices classified correctly across the samples.
double accuracy(const GvfModel& model, const std::vector<Sample>& samples);

/// Node risk section and edge flow produced by the model on a batch.
std::pair<Cochain, Cochain> model_flow(const GvfModel& model, const Batch& batch);

/// Regresses the flow constructor onto an observed edge flow by full-batch
/// gradient descent on mean squared error. Returns the final mean squared
/// error.
double fit_flow(FlowParams& fp, const SimplicialComplex& k, const Cochain& r, const Eigen::MatrixXd& edge_features,
                const Cochain& target, int steps, double step);

}  // namespace gvf
