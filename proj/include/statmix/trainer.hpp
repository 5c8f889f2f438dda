#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "statmix/image.hpp"
#include "statmix/rng.hpp"

namespace statmix {

enum class ModelKind { kLinearSoftmax, kMlp };

std::string model_tag(ModelKind kind);                 // "linear" | "mlp"
ModelKind model_kind_from_tag(const std::string& tag);

struct TrainerConfig {
  ModelKind model = ModelKind::kLinearSoftmax;
  int hidden_units = 64;   // MLP only
  double lr0 = 0.01;
  double momentum = 0.9;
  double init_scale = 1.0;  // multiplies the 1/sqrt(fan_in) uniform init bound

  void validate() const;
};

// Cosine annealing from lr0 at epoch 0 to exactly 0 at epoch T:
// lr0 * 0.5 * (1 + cos(pi * epoch / T)).
double cosine_lr(int epoch, double lr0, int total_epochs);

// Parameters, heavy-ball velocities (same shapes), and counters. Biases are
// stored as single-column matrices.
struct ModelState {
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> params;
  std::vector<Eigen::MatrixXd> velocity;
  std::int64_t step = 0;
  int epoch = 0;
};

// Heavy-ball update: v <- momentum*v + g; w <- w - lr*v. Throws on a
// non-finite gradient or parameter, naming the tensor.
void sgd_momentum_step(ModelState& state, const std::vector<Eigen::MatrixXd>& grads, double lr,
                       double momentum);

struct TrainBatch {
  Eigen::MatrixXd inputs;   // input_dim x batch
  std::vector<int> labels;  // batch
};

// Pre-flattened evaluation set, built once and shared read-only across nodes.
struct EvalMatrix {
  Eigen::MatrixXd inputs;
  std::vector<int> labels;
};
EvalMatrix make_eval_matrix(const Dataset& ds);
TrainBatch make_train_batch(const std::vector<Image>& batch);

// Softmax cross-entropy classifier on flattened pixels, optionally with one
// tanh hidden layer. Double precision, analytic gradients.
class Classifier {
 public:
  Classifier(const TrainerConfig& cfg, int input_dim, int num_classes, RandomStream init_rng);

  // One SGD-with-momentum step on the batch; returns the mean loss.
  double train_batch(const TrainBatch& batch, double lr);

  double mean_loss(const TrainBatch& batch) const;
  std::vector<Eigen::MatrixXd> gradients(const TrainBatch& batch) const;

  // Argmax class per column; ties break toward the lowest class index.
  std::vector<int> predict(const Eigen::MatrixXd& inputs) const;

  // Fraction of correct test predictions; order-independent by construction.
  double evaluate(const EvalMatrix& test) const;
  double evaluate(const Dataset& test) const { return evaluate(make_eval_matrix(test)); }

  ModelState& state() { return state_; }
  const ModelState& state() const { return state_; }
  int input_dim() const { return input_dim_; }
  int num_classes() const { return num_classes_; }
  const TrainerConfig& config() const { return cfg_; }

 private:
  Eigen::MatrixXd logits(const Eigen::MatrixXd& inputs, Eigen::MatrixXd* hidden_out = nullptr) const;

  TrainerConfig cfg_;
  int input_dim_ = 0;
  int num_classes_ = 0;
  ModelState state_;
};

// Drains a batch source (nullopt ends the epoch), stepping after every batch;
// returns the mean per-batch loss and advances the epoch counter.
double train_epoch(Classifier& classifier,
                   const std::function<std::optional<TrainBatch>()>& next_batch, double lr);

// Debug checkpoint: little-endian u32 tensor count, then u32 rows / u32 cols
// per tensor, then every tensor's data as row-major f32.
void save_checkpoint(const ModelState& state, const std::string& path);
std::vector<Eigen::MatrixXd> load_checkpoint(const std::string& path);

}  // namespace statmix
