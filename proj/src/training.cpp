#include "gvf/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gvf/dec.hpp"
#include "gvf/log.hpp"

namespace gvf {

void LossConfig::validate() const {
  const bool in_grid =
      lambda1 == 0.0 || std::find(std::begin(kLambda1Grid), std::end(kLambda1Grid), lambda1) != std::end(kLambda1Grid);
  if (!in_grid) throw ValidationError("lambda1 must be one of 0.01, 0.1, 0.5 (or 0 to disable)");
  if (!(lambda2 >= 0)) throw ValidationError("lambda2 must be >= 0");
  if (!(eps > 0)) throw ValidationError("eps must be > 0");
  if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
  if (!(p_drop >= 0 && p_drop < 1)) throw ValidationError("p_drop must lie in [0, 1)");
}

void TrainConfig::validate() const {
  loss.validate();
  if (!(step > 0)) throw ValidationError("step must be > 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
}

Batch make_batch(std::shared_ptr<const SimplicialComplex> complex, Eigen::MatrixXd whitened_x,
                 Eigen::MatrixXd edge_features, std::vector<int> labels) {
  if (!complex) throw ValidationError("batch needs a complex");
  const auto nv = static_cast<Eigen::Index>(complex->num_vertices());
  if (whitened_x.rows() != nv) throw ValidationError("feature rows must equal the vertex count");
  if (edge_features.rows() != static_cast<Eigen::Index>(complex->num_edges())) {
    throw ValidationError("edge feature rows must equal the edge count");
  }
  if (static_cast<Eigen::Index>(labels.size()) != nv) throw ValidationError("one label per vertex is required");
  Batch b;
  b.mixing = neighborhood_mixing(*complex);
  b.complex = std::move(complex);
  b.x = std::move(whitened_x);
  b.edge_features = std::move(edge_features);
  b.labels = std::move(labels);
  return b;
}

namespace {

struct FlowCache {
  Eigen::MatrixXd zp, zm;  // MLP inputs for (i,j,e) and (j,i,-e)
  Eigen::MatrixXd hp, hm;  // hidden activations
  Eigen::MatrixXd f;       // antisymmetrised flow, edges x m
};

FlowCache flow_forward(const FlowParams& fp, const SimplicialComplex& k, const Eigen::MatrixXd& r,
                       const Eigen::MatrixXd& e) {
  const Eigen::Index ne = static_cast<Eigen::Index>(k.num_edges());
  const Eigen::Index m = r.cols();
  const Eigen::Index p = e.cols();
  if (fp.w1.cols() != 2 * m + p || fp.w2.rows() != m) {
    throw ValidationError("flow parameters do not match risk channels / edge feature width");
  }
  FlowCache c;
  c.zp.resize(ne, 2 * m + p);
  c.zm.resize(ne, 2 * m + p);
  for (Eigen::Index idx = 0; idx < ne; ++idx) {
    const auto& [i, j] = k.edges()[static_cast<std::size_t>(idx)];
    c.zp.row(idx) << r.row(i), r.row(j), e.row(idx);
    c.zm.row(idx) << r.row(j), r.row(i), -e.row(idx);
  }
  const auto layer = [&](const Eigen::MatrixXd& z) {
    Eigen::MatrixXd h = (z * fp.w1.transpose()).rowwise() + fp.b1.transpose();
    if (!fp.linear) h = h.array().tanh().matrix();
    return h;
  };
  c.hp = layer(c.zp);
  c.hm = layer(c.zm);
  const Eigen::MatrixXd mp = (c.hp * fp.w2.transpose()).rowwise() + fp.b2.transpose();
  const Eigen::MatrixXd mm = (c.hm * fp.w2.transpose()).rowwise() + fp.b2.transpose();
  c.f = 0.5 * (mp - mm);
  return c;
}

// Accumulates parameter gradients into `g` and returns d/dr (|V| x m).
Eigen::MatrixXd flow_backward(const FlowParams& fp, const SimplicialComplex& k, const FlowCache& c,
                              const Eigen::MatrixXd& df, Eigen::Index num_vertices, FlowParams& g) {
  const Eigen::Index m = df.cols();
  Eigen::MatrixXd dr = Eigen::MatrixXd::Zero(num_vertices, m);
  const auto branch = [&](const Eigen::MatrixXd& z, const Eigen::MatrixXd& h, const Eigen::MatrixXd& dm) {
    g.w2 += dm.transpose() * h;
    g.b2 += dm.colwise().sum().transpose();
    Eigen::MatrixXd dpre = dm * fp.w2;
    if (!fp.linear) dpre.array() *= (1.0 - h.array().square());
    g.w1 += dpre.transpose() * z;
    g.b1 += dpre.colwise().sum().transpose();
    return Eigen::MatrixXd(dpre * fp.w1);
  };
  const Eigen::MatrixXd dzp = branch(c.zp, c.hp, 0.5 * df);
  const Eigen::MatrixXd dzm = branch(c.zm, c.hm, -0.5 * df);
  for (Eigen::Index idx = 0; idx < dzp.rows(); ++idx) {
    const auto& [i, j] = k.edges()[static_cast<std::size_t>(idx)];
    dr.row(i) += dzp.row(idx).head(m) + dzm.row(idx).segment(m, m);
    dr.row(j) += dzp.row(idx).segment(m, m) + dzm.row(idx).head(m);
  }
  return dr;
}

FlowParams zeros_like(const FlowParams& p) {
  FlowParams g = p;
  g.w1.setZero();
  g.b1.setZero();
  g.w2.setZero();
  g.b2.setZero();
  return g;
}

struct ExpertCache {
  Eigen::MatrixXd block;  // x^(n)
  Eigen::MatrixXd h;      // tanh layer
  Eigen::MatrixXd a;      // mixed
  Eigen::MatrixXd out;    // |V| x m, masked
};

struct ForwardCache {
  std::vector<ExpertCache> experts;
  Eigen::MatrixXd gate_hidden;
  Eigen::MatrixXd gates;
  Eigen::MatrixXd r;
  Eigen::MatrixXd probs;
  FlowCache flow;
  Eigen::MatrixXd curl;
  LossParts parts;
  int labeled = 0;
};

bool outside_fiber(const BundleConfig& bundle, int n, Eigen::Index c) {
  const int lo = bundle.fiber_offset(n);
  return c < lo || c >= lo + bundle.modalities[static_cast<std::size_t>(n)].fiber_dim;
}

ForwardCache forward(const GvfModel& model, const Batch& batch, const LossConfig& cfg) {
  cfg.validate();
  const BundleConfig& bundle = model.bundle;
  const SimplicialComplex& k = *batch.complex;
  if (model.readout.w.rows() != cfg.num_classes) throw ValidationError("readout rows must equal num_classes");
  if (batch.x.rows() != static_cast<Eigen::Index>(k.num_vertices()) || batch.x.cols() != bundle.input_dim()) {
    throw ValidationError("batch features do not match the complex and bundle");
  }
  ForwardCache c;
  for (int n = 0; n < bundle.num_modalities(); ++n) {
    const ExpertParams& e = model.experts[static_cast<std::size_t>(n)];
    ExpertCache ec;
    ec.block = batch.x.middleCols(bundle.input_offset(n), bundle.modalities[static_cast<std::size_t>(n)].input_dim);
    ec.h = ((ec.block * e.w1.transpose()).rowwise() + e.b1.transpose()).array().tanh().matrix();
    ec.a = batch.mixing * ec.h;
    ec.out = (ec.a * e.w2.transpose()).rowwise() + e.b2.transpose();
    if (e.masked) {
      for (Eigen::Index col = 0; col < ec.out.cols(); ++col) {
        if (outside_fiber(bundle, n, col)) ec.out.col(col).setZero();
      }
    }
    c.experts.push_back(std::move(ec));
  }
  c.gate_hidden =
      ((batch.x * model.gating.w1.transpose()).rowwise() + model.gating.b1.transpose()).array().tanh().matrix();
  Eigen::MatrixXd logits = (c.gate_hidden * model.gating.w2.transpose()).rowwise() + model.gating.b2.transpose();
  c.gates = logits;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    c.gates.row(i) = (logits.row(i).array() - logits.row(i).maxCoeff()).exp().matrix();
    c.gates.row(i) /= c.gates.row(i).sum();
  }
  c.r = Eigen::MatrixXd::Zero(batch.x.rows(), bundle.fiber_dim());
  for (int n = 0; n < bundle.num_modalities(); ++n) {
    c.r += c.gates.col(n).asDiagonal() * c.experts[static_cast<std::size_t>(n)].out;
  }

  // Classification.
  Eigen::MatrixXd scores = (c.r * model.readout.w.transpose()).rowwise() + model.readout.b.transpose();
  c.probs = scores;
  double ce = 0;
  int correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double mx = scores.row(i).maxCoeff();
    const double lse = mx + std::log((scores.row(i).array() - mx).exp().sum());
    c.probs.row(i) = (scores.row(i).array() - lse).exp().matrix();
    const int y = batch.labels[static_cast<std::size_t>(i)];
    if (y < 0) continue;
    if (y >= cfg.num_classes) throw ValidationError("label out of range");
    ce += lse - scores(i, y);
    Eigen::Index arg;
    scores.row(i).maxCoeff(&arg);
    correct += arg == y ? 1 : 0;
    ++c.labeled;
  }
  if (c.labeled == 0) throw ValidationError("batch has no labelled vertices");
  c.parts.cls = ce / c.labeled;
  c.parts.accuracy = static_cast<double>(correct) / c.labeled;

  // Geometric regulariser on the flow.
  c.flow = flow_forward(model.flow, k, c.r, batch.edge_features);
  c.curl = k.b2_real().transpose() * c.flow.f;
  const double f2 = c.flow.f.squaredNorm() + cfg.eps;
  c.parts.rho = c.curl.squaredNorm() / f2;
  c.parts.clipped = c.parts.rho > 1.0;
  c.parts.geo = -std::log1p(std::min(c.parts.rho, 1.0));

  // Modality orthogonality.
  double orth = 0;
  for (int n = 0; n < bundle.num_modalities(); ++n) {
    const auto& out = c.experts[static_cast<std::size_t>(n)].out;
    for (Eigen::Index col = 0; col < out.cols(); ++col) {
      if (outside_fiber(bundle, n, col)) orth += out.col(col).squaredNorm();
    }
  }
  c.parts.orth = orth;

  double entropy = 0;
  for (Eigen::Index i = 0; i < c.gates.rows(); ++i) {
    for (Eigen::Index n = 0; n < c.gates.cols(); ++n) {
      const double g = c.gates(i, n);
      if (g > 0) entropy -= g * std::log(g);
    }
  }
  c.parts.gate_entropy = c.gates.rows() > 0 ? entropy / static_cast<double>(c.gates.rows()) : 0.0;
  c.parts.total = c.parts.cls + cfg.lambda1 * c.parts.geo + cfg.lambda2 * c.parts.orth;
  return c;
}

}  // namespace

LossParts loss_total(const GvfModel& model, const Batch& batch, const LossConfig& cfg) {
  return forward(model, batch, cfg).parts;
}

std::pair<LossParts, ModelGradients> backward(const GvfModel& model, const Batch& batch, const LossConfig& cfg) {
  const ForwardCache c = forward(model, batch, cfg);
  const BundleConfig& bundle = model.bundle;
  const SimplicialComplex& k = *batch.complex;
  const Eigen::Index nv = batch.x.rows();

  ModelGradients g;
  // Readout.
  Eigen::MatrixXd dscores = Eigen::MatrixXd::Zero(nv, cfg.num_classes);
  for (Eigen::Index i = 0; i < nv; ++i) {
    const int y = batch.labels[static_cast<std::size_t>(i)];
    if (y < 0) continue;
    dscores.row(i) = c.probs.row(i);
    dscores(i, y) -= 1.0;
  }
  dscores /= static_cast<double>(c.labeled);
  g.readout.w = dscores.transpose() * c.r;
  g.readout.b = dscores.colwise().sum().transpose();
  Eigen::MatrixXd dr = dscores * model.readout.w;

  // Geometric term through the flow constructor and the curl contraction.
  g.flow = zeros_like(model.flow);
  Eigen::MatrixXd df = Eigen::MatrixXd::Zero(c.flow.f.rows(), c.flow.f.cols());
  if (cfg.lambda1 != 0.0 && !c.parts.clipped && k.num_triangles() > 0) {
    const double f2 = c.flow.f.squaredNorm() + cfg.eps;
    const double c2 = c.curl.squaredNorm();
    const double dgeo_drho = -1.0 / (1.0 + c.parts.rho);
    df = cfg.lambda1 * dgeo_drho * (2.0 / f2 * (k.b2_real() * c.curl) - 2.0 * c2 / (f2 * f2) * c.flow.f);
  }
  dr += flow_backward(model.flow, k, c.flow, df, nv, g.flow);

  // Mixture of experts.
  Eigen::MatrixXd dgates(nv, bundle.num_modalities());
  for (int n = 0; n < bundle.num_modalities(); ++n) {
    const ExpertParams& e = model.experts[static_cast<std::size_t>(n)];
    const ExpertCache& ec = c.experts[static_cast<std::size_t>(n)];
    dgates.col(n) = (dr.array() * ec.out.array()).rowwise().sum().matrix();
    Eigen::MatrixXd dout = c.gates.col(n).asDiagonal() * dr;
    for (Eigen::Index col = 0; col < dout.cols(); ++col) {
      if (!outside_fiber(bundle, n, col)) continue;
      if (e.masked) {
        dout.col(col).setZero();
      } else {
        dout.col(col) += 2.0 * cfg.lambda2 * ec.out.col(col);
      }
    }
    ExpertParams eg = e;
    eg.w2 = dout.transpose() * ec.a;
    eg.b2 = dout.colwise().sum().transpose();
    const Eigen::MatrixXd dh = batch.mixing * (dout * e.w2);
    const Eigen::MatrixXd dz = (dh.array() * (1.0 - ec.h.array().square())).matrix();
    eg.w1 = dz.transpose() * ec.block;
    eg.b1 = dz.colwise().sum().transpose();
    g.experts.push_back(std::move(eg));
  }
  const Eigen::VectorXd weighted = (dgates.array() * c.gates.array()).rowwise().sum();
  const Eigen::MatrixXd dlogits = (c.gates.array() * (dgates.colwise() - weighted).array()).matrix();
  g.gating.w2 = dlogits.transpose() * c.gate_hidden;
  g.gating.b2 = dlogits.colwise().sum().transpose();
  const Eigen::MatrixXd dgh = dlogits * model.gating.w2;
  const Eigen::MatrixXd dgz = (dgh.array() * (1.0 - c.gate_hidden.array().square())).matrix();
  g.gating.w1 = dgz.transpose() * batch.x;
  g.gating.b1 = dgz.colwise().sum().transpose();

  for (const auto& u : model.risk_axes) g.risk_axes.push_back(Eigen::VectorXd::Zero(u.size()));
  return {c.parts, std::move(g)};
}

namespace {

void push(std::vector<ParamView>& out, const std::string& group, const std::string& name, Eigen::MatrixXd& m) {
  out.push_back({group, name, m.data(), m.size()});
}
void push(std::vector<ParamView>& out, const std::string& group, const std::string& name, Eigen::VectorXd& v) {
  out.push_back({group, name, v.data(), v.size()});
}

std::vector<ParamView> views(std::vector<ExpertParams>& experts, GatingParams& gating, FlowParams& flow,
                             ReadoutHead& readout, std::vector<Eigen::VectorXd>& axes) {
  std::vector<ParamView> out;
  for (std::size_t n = 0; n < experts.size(); ++n) {
    const std::string p = "expert" + std::to_string(n) + ".";
    push(out, "experts", p + "w1", experts[n].w1);
    push(out, "experts", p + "b1", experts[n].b1);
    push(out, "experts", p + "w2", experts[n].w2);
    push(out, "experts", p + "b2", experts[n].b2);
  }
  push(out, "gating", "gating.w1", gating.w1);
  push(out, "gating", "gating.b1", gating.b1);
  push(out, "gating", "gating.w2", gating.w2);
  push(out, "gating", "gating.b2", gating.b2);
  push(out, "flow", "flow.w1", flow.w1);
  push(out, "flow", "flow.b1", flow.b1);
  push(out, "flow", "flow.w2", flow.w2);
  push(out, "flow", "flow.b2", flow.b2);
  push(out, "readout", "readout.w", readout.w);
  push(out, "readout", "readout.b", readout.b);
  for (std::size_t n = 0; n < axes.size(); ++n) push(out, "risk_axes", "u" + std::to_string(n), axes[n]);
  return out;
}

}  // namespace

std::vector<ParamView> parameter_views(GvfModel& model) {
  return views(model.experts, model.gating, model.flow, model.readout, model.risk_axes);
}

std::vector<ParamView> gradient_views(ModelGradients& grads) {
  return views(grads.experts, grads.gating, grads.flow, grads.readout, grads.risk_axes);
}

DropoutResult modality_dropout(const Eigen::MatrixXd& x, const BundleConfig& bundle, double p_drop,
                               std::mt19937_64& rng) {
  if (!(p_drop >= 0 && p_drop < 1)) throw ValidationError("p_drop must lie in [0, 1)");
  const int nmod = bundle.num_modalities();
  DropoutResult out;
  out.x = x;
  out.dropped = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(x.rows(), nmod, false);
  if (p_drop == 0.0) return out;
  std::bernoulli_distribution coin(p_drop);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    bool all = true;
    do {
      all = true;
      for (int n = 0; n < nmod; ++n) {
        out.dropped(i, n) = coin(rng);
        all = all && out.dropped(i, n);
      }
    } while (all);
    for (int n = 0; n < nmod; ++n) {
      if (out.dropped(i, n)) {
        out.x.row(i).segment(bundle.input_offset(n), bundle.modalities[static_cast<std::size_t>(n)].input_dim).setZero();
      }
    }
  }
  return out;
}

Batch prepare_batch(const GvfModel& model, const Sample& sample) {
  return make_batch(sample.complex, model.whitening.apply(sample.features), sample.edge_features, sample.labels);
}

std::vector<int> predict(const GvfModel& model, const Batch& batch) {
  const MoeOutput out = moe_forward(batch.mixing, batch.x, model.bundle, model.experts, model.gating);
  const Eigen::MatrixXd scores =
      (out.risk.values * model.readout.w.transpose()).rowwise() + model.readout.b.transpose();
  std::vector<int> labels(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index arg;
    scores.row(i).maxCoeff(&arg);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return labels;
}

double accuracy(const GvfModel& model, const std::vector<Sample>& samples) {
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    const auto pred = predict(model, prepare_batch(model, s));
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (s.labels[i] < 0) continue;
      ++total;
      correct += pred[i] == s.labels[i] ? 1 : 0;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

std::pair<Cochain, Cochain> model_flow(const GvfModel& model, const Batch& batch) {
  MoeOutput out = moe_forward(batch.mixing, batch.x, model.bundle, model.experts, model.gating);
  Cochain f = flow_field(*batch.complex, out.risk, batch.edge_features, model.flow);
  return {std::move(out.risk), std::move(f)};
}

TrainResult train(GvfModel model, const std::vector<Sample>& dataset, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw ValidationError("training dataset is empty");
  if (cfg.fit_whitening || !model.whitening.fitted()) {
    Eigen::Index rows = 0;
    for (const auto& s : dataset) rows += s.features.rows();
    Eigen::MatrixXd all(rows, model.bundle.input_dim());
    Eigen::Index at = 0;
    for (const auto& s : dataset) {
      all.middleRows(at, s.features.rows()) = s.features;
      at += s.features.rows();
    }
    model.whitening = whiten_fit(all, model.bundle);
  }
  std::vector<Batch> batches;
  batches.reserve(dataset.size());
  for (const auto& s : dataset) batches.push_back(prepare_batch(model, s));

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    for (const Batch& clean : batches) {
      Batch step_batch = clean;
      step_batch.x = modality_dropout(clean.x, model.bundle, cfg.loss.p_drop, rng).x;
      auto [parts, grads] = backward(model, step_batch, cfg.loss);
      if (!std::isfinite(parts.total) || parts.total > kDivergenceLoss) {
        result.history.push_back(rec);
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + " (loss " +
                                   std::to_string(parts.total) + ")",
                               result.history);
      }
      auto params = parameter_views(model);
      auto gviews = gradient_views(grads);
      for (std::size_t v = 0; v < params.size(); ++v) {
        Eigen::Map<Eigen::VectorXd>(params[v].data, params[v].size) -=
            cfg.step * Eigen::Map<Eigen::VectorXd>(gviews[v].data, gviews[v].size);
      }
      apply_spectral_norm(model.experts);
      for (auto& u : model.risk_axes) {
        const double nrm = u.norm();
        if (nrm > 0) u /= nrm;
      }
      rec.loss += parts.total;
      rec.cls += parts.cls;
      rec.geo += parts.geo;
      rec.orth += parts.orth;
      rec.rho += parts.rho;
      rec.gate_entropy += parts.gate_entropy;
    }
    const double nb = static_cast<double>(batches.size());
    rec.loss /= nb;
    rec.cls /= nb;
    rec.geo /= nb;
    rec.orth /= nb;
    rec.rho /= nb;
    rec.gate_entropy /= nb;
    rec.accuracy = accuracy(model, dataset);
    result.history.push_back(rec);
    logger()->debug("epoch {}: loss {:.6g} cls {:.6g} geo {:.6g} rho {:.4g} acc {:.3f}", epoch, rec.loss, rec.cls,
                    rec.geo, rec.rho, rec.accuracy);
  }
  result.model = std::move(model);
  return result;
}

double fit_flow(FlowParams& fp, const SimplicialComplex& k, const Cochain& r, const Eigen::MatrixXd& edge_features,
                const Cochain& target, int steps, double step) {
  check_cochain(k, r, 0);
  check_cochain(k, target, 1);
  const double count = static_cast<double>(std::max<Eigen::Index>(target.values.size(), 1));
  double mse = 0;
  for (int s = 0; s <= steps; ++s) {
    const FlowCache c = flow_forward(fp, k, r.values, edge_features);
    const Eigen::MatrixXd diff = c.f - target.values;
    mse = diff.squaredNorm() / count;
    if (s == steps) break;
    FlowParams g = zeros_like(fp);
    flow_backward(fp, k, c, 2.0 / count * diff, r.rows(), g);
    fp.w1 -= step * g.w1;
    fp.b1 -= step * g.b1;
    fp.w2 -= step * g.w2;
    fp.b2 -= step * g.b2;
  }
  return mse;
}

}  // namespace gvf
