#include "statmix/trainer.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace statmix {

std::string model_tag(ModelKind kind) {
  return kind == ModelKind::kLinearSoftmax ? "linear" : "mlp";
}

ModelKind model_kind_from_tag(const std::string& tag) {
  if (tag == "linear") return ModelKind::kLinearSoftmax;
  if (tag == "mlp") return ModelKind::kMlp;
  throw std::runtime_error("unknown model tag '" + tag + "' (expected linear or mlp)");
}

void TrainerConfig::validate() const {
  if (lr0 <= 0.0) throw std::runtime_error("lr0 must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::runtime_error("momentum must be in [0, 1)");
  if (model == ModelKind::kMlp && hidden_units < 1) {
    throw std::runtime_error("hidden_units must be >= 1 for the mlp model");
  }
  if (init_scale <= 0.0) throw std::runtime_error("init_scale must be positive");
}

double cosine_lr(int epoch, double lr0, int total_epochs) {
  if (total_epochs < 1) throw std::runtime_error("cosine_lr: total_epochs must be >= 1");
  if (epoch < 0 || epoch > total_epochs) {
    throw std::runtime_error("cosine_lr: epoch " + std::to_string(epoch) + " outside [0, " +
                             std::to_string(total_epochs) + "]");
  }
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / total_epochs));
}

void sgd_momentum_step(ModelState& state, const std::vector<Eigen::MatrixXd>& grads, double lr,
                       double momentum) {
  if (grads.size() != state.params.size()) {
    throw std::runtime_error("sgd_momentum_step: gradient count mismatch");
  }
  for (std::size_t t = 0; t < grads.size(); ++t) {
    if (grads[t].rows() != state.params[t].rows() || grads[t].cols() != state.params[t].cols()) {
      throw std::runtime_error("sgd_momentum_step: shape mismatch for tensor " + state.names[t]);
    }
    if (!grads[t].allFinite()) {
      throw std::runtime_error("training error: non-finite gradient in tensor " + state.names[t]);
    }
    state.velocity[t] = momentum * state.velocity[t] + grads[t];
    state.params[t] -= lr * state.velocity[t];
    if (!state.params[t].allFinite()) {
      throw std::runtime_error("training error: non-finite values in tensor " + state.names[t] +
                               " after update");
    }
  }
  state.step += 1;
}

EvalMatrix make_eval_matrix(const Dataset& ds) {
  EvalMatrix m;
  if (ds.images.empty()) return m;
  const Eigen::Index dim = ds.images.front().value_count();
  m.inputs.resize(dim, static_cast<Eigen::Index>(ds.images.size()));
  m.labels.resize(ds.images.size());
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    m.inputs.col(static_cast<Eigen::Index>(i)) = flatten(ds.images[i]);
    m.labels[i] = ds.images[i].label;
  }
  return m;
}

TrainBatch make_train_batch(const std::vector<Image>& batch) {
  TrainBatch b;
  if (batch.empty()) return b;
  const Eigen::Index dim = batch.front().value_count();
  b.inputs.resize(dim, static_cast<Eigen::Index>(batch.size()));
  b.labels.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    b.inputs.col(static_cast<Eigen::Index>(i)) = flatten(batch[i]);
    b.labels[i] = batch[i].label;
  }
  return b;
}

namespace {

// Uniform(-s, s) with s = init_scale / sqrt(fan_in), filled row-major so the
// layout of draws is pinned.
void init_uniform(Eigen::MatrixXd& m, double bound, RandomStream& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.next_double_in(-bound, bound);
    }
  }
}

// Column-wise softmax with max subtraction.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  p.rowwise() -= logits.colwise().maxCoeff();
  p = p.array().exp();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

}  // namespace

Classifier::Classifier(const TrainerConfig& cfg, int input_dim, int num_classes,
                       RandomStream init_rng)
    : cfg_(cfg), input_dim_(input_dim), num_classes_(num_classes) {
  cfg_.validate();
  if (input_dim < 1 || num_classes < 2) {
    throw std::runtime_error("Classifier: need input_dim >= 1 and num_classes >= 2");
  }

  auto add_param = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols, double bound) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
    if (bound > 0.0) init_uniform(m, bound, init_rng);
    state_.names.push_back(name);
    state_.params.push_back(std::move(m));
    state_.velocity.push_back(Eigen::MatrixXd::Zero(rows, cols));
  };

  if (cfg_.model == ModelKind::kLinearSoftmax) {
    add_param("W", num_classes, input_dim, cfg_.init_scale / std::sqrt(double(input_dim)));
    add_param("b", num_classes, 1, 0.0);
  } else {
    add_param("W1", cfg_.hidden_units, input_dim, cfg_.init_scale / std::sqrt(double(input_dim)));
    add_param("b1", cfg_.hidden_units, 1, 0.0);
    add_param("W2", num_classes, cfg_.hidden_units,
              cfg_.init_scale / std::sqrt(double(cfg_.hidden_units)));
    add_param("b2", num_classes, 1, 0.0);
  }
}

Eigen::MatrixXd Classifier::logits(const Eigen::MatrixXd& inputs, Eigen::MatrixXd* hidden_out) const {
  if (inputs.rows() != input_dim_) {
    throw std::runtime_error("configuration error: model expects input_dim " +
                             std::to_string(input_dim_) + " but batch has " +
                             std::to_string(inputs.rows()) + " features");
  }
  if (cfg_.model == ModelKind::kLinearSoftmax) {
    return (state_.params[0] * inputs).colwise() + state_.params[1].col(0);
  }
  Eigen::MatrixXd hidden =
      (((state_.params[0] * inputs).colwise() + state_.params[1].col(0)).array().tanh()).matrix();
  Eigen::MatrixXd out = (state_.params[2] * hidden).colwise() + state_.params[3].col(0);
  if (hidden_out) *hidden_out = std::move(hidden);
  return out;
}

double Classifier::mean_loss(const TrainBatch& batch) const {
  const Eigen::MatrixXd p = softmax(logits(batch.inputs));
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    loss -= std::log(std::max(p(batch.labels[i], static_cast<Eigen::Index>(i)), 1e-300));
  }
  return loss / static_cast<double>(batch.labels.size());
}

std::vector<Eigen::MatrixXd> Classifier::gradients(const TrainBatch& batch) const {
  const auto batch_size = static_cast<Eigen::Index>(batch.labels.size());
  Eigen::MatrixXd hidden;
  const Eigen::MatrixXd out =
      logits(batch.inputs, cfg_.model == ModelKind::kMlp ? &hidden : nullptr);

  // dL/dlogits for mean cross-entropy: (softmax - onehot) / B.
  Eigen::MatrixXd delta = softmax(out);
  for (Eigen::Index i = 0; i < batch_size; ++i) delta(batch.labels[static_cast<std::size_t>(i)], i) -= 1.0;
  delta /= static_cast<double>(batch_size);

  std::vector<Eigen::MatrixXd> grads;
  if (cfg_.model == ModelKind::kLinearSoftmax) {
    grads.push_back(delta * batch.inputs.transpose());
    grads.push_back(delta.rowwise().sum());
  } else {
    Eigen::MatrixXd d_hidden =
        (state_.params[2].transpose() * delta).array() * (1.0 - hidden.array().square());
    grads.push_back(d_hidden * batch.inputs.transpose());
    grads.push_back(d_hidden.rowwise().sum());
    grads.push_back(delta * hidden.transpose());
    grads.push_back(delta.rowwise().sum());
  }
  return grads;
}

double Classifier::train_batch(const TrainBatch& batch, double lr) {
  if (batch.labels.empty()) throw std::runtime_error("train_batch: empty batch");
  const double loss = mean_loss(batch);
  sgd_momentum_step(state_, gradients(batch), lr, cfg_.momentum);
  return loss;
}

std::vector<int> Classifier::predict(const Eigen::MatrixXd& inputs) const {
  const Eigen::MatrixXd out = logits(inputs);
  std::vector<int> pred(static_cast<std::size_t>(out.cols()));
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    int best = 0;
    for (int k = 1; k < num_classes_; ++k) {
      if (out(k, i) > out(best, i)) best = k;  // strict: ties keep the lowest index
    }
    pred[static_cast<std::size_t>(i)] = best;
  }
  return pred;
}

double Classifier::evaluate(const EvalMatrix& test) const {
  if (test.labels.empty()) throw std::runtime_error("evaluate: empty test set");
  const std::vector<int> pred = predict(test.inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.labels.size(); ++i) {
    if (pred[i] == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.labels.size());
}

double train_epoch(Classifier& classifier,
                   const std::function<std::optional<TrainBatch>()>& next_batch, double lr) {
  double loss_sum = 0.0;
  std::size_t batches = 0;
  while (auto batch = next_batch()) {
    loss_sum += classifier.train_batch(*batch, lr);
    ++batches;
  }
  classifier.state().epoch += 1;
  return batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
}

namespace {

void put_u32_le(std::uint32_t v, std::ofstream& out) {
  const char bytes[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                         static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  out.write(bytes, 4);
}

std::uint32_t get_u32_le(std::ifstream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw std::runtime_error("checkpoint truncated");
  return static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
         static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
}

}  // namespace

void save_checkpoint(const ModelState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  put_u32_le(static_cast<std::uint32_t>(state.params.size()), out);
  for (const Eigen::MatrixXd& p : state.params) {
    put_u32_le(static_cast<std::uint32_t>(p.rows()), out);
    put_u32_le(static_cast<std::uint32_t>(p.cols()), out);
  }
  for (const Eigen::MatrixXd& p : state.params) {
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(p(r, c)));
        const char bytes[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8),
                               static_cast<char>(bits >> 16), static_cast<char>(bits >> 24)};
        out.write(bytes, 4);
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Eigen::MatrixXd> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  const std::uint32_t count = get_u32_le(in);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(count);
  for (auto& [rows, cols] : shapes) {
    rows = get_u32_le(in);
    cols = get_u32_le(in);
  }
  std::vector<Eigen::MatrixXd> tensors;
  tensors.reserve(count);
  for (const auto& [rows, cols] : shapes) {
    Eigen::MatrixXd t(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        t(r, c) = static_cast<double>(std::bit_cast<float>(get_u32_le(in)));
      }
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

}  // namespace statmix
