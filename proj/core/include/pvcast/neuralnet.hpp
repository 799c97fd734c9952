#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pvcast/schedule.hpp"

namespace pvcast::neuralnet {

enum class Activation { identity, logistic, tanh, relu };
enum class Solver { adam, lbfgs };

std::string_view to_string(Activation a);
std::string_view to_string(Solver s);
std::optional<Activation> activation_from_string(std::string_view name);
std::optional<Solver> solver_from_string(std::string_view name);

struct MlpConfig {
  Activation activation = Activation::relu;
  LrSchedule lr_schedule = LrSchedule::constant;
  Solver solver = Solver::adam;
  std::vector<std::size_t> hidden_layers{100};
  std::uint64_t seed = 0;
  std::size_t max_epochs = 500;
  double initial_lr = 1e-3;
  double tolerance = 1e-6;
  /// adam mini-batch size; clipped to the row count.
  std::size_t batch_size = 200;

  /// Throws InvalidConfig.
  void validate() const;
};

struct Layer {
  Eigen::MatrixXd weights;  // fan_in x fan_out
  Eigen::VectorXd bias;     // fan_out
};

/// Fully connected regressor: hidden layers use `config.activation`, the
/// scalar output layer is linear.
struct Mlp {
  MlpConfig config;
  std::size_t input_dim = 0;
  std::vector<Layer> layers;
  std::vector<double> loss_history;  // one entry per epoch / lbfgs iteration
  std::vector<double> lr_history;    // adam only

  /// Throws DimensionMismatch.
  double forward(std::span<const double> x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;

  std::size_t parameter_count() const;
  /// Layer by layer: weights (column-major), then bias.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);
};

/// Glorot-uniform weights and biases, deterministic from config.seed.
/// Throws InvalidConfig.
Mlp init(const MlpConfig& config, std::size_t input_dim);

struct LossGradient {
  double loss = 0.0;         // 0.5 * mean (yhat - y)^2
  Eigen::VectorXd gradient;  // same layout as Mlp::parameters()
};

/// Exact backpropagated gradient of 0.5 * mean squared error.
/// Throws DimensionMismatch or InvalidArgument on an empty batch.
LossGradient gradient(const Mlp& mlp, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Trains with the configured solver. adam: mini-batch, shuffled every
/// epoch from a seed derived from config.seed, stops after max_epochs or
/// ten epochs without a `tolerance` improvement (adaptive: once the rate
/// decays below 1e-6). lbfgs: full batch, memory 10, strong-Wolfe line
/// search, stops after max_epochs iterations or a relative loss change
/// below `tolerance`. Throws NonFiniteLoss on divergence.
Mlp train(Mlp mlp, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

nlohmann::json config_to_json(const MlpConfig& config);
MlpConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Mlp& mlp);
Mlp from_json(const nlohmann::json& j);

}  // namespace pvcast::neuralnet
