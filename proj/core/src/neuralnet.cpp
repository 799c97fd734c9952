#include "pvcast/neuralnet.hpp"

#include <cmath>
#include <numeric>

#include "lbfgs.hpp"
#include "pvcast/error.hpp"
#include "pvcast/random.hpp"

namespace pvcast::neuralnet {

using nlohmann::json;

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::logistic: return "logistic";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "identity";
}

std::string_view to_string(Solver s) { return s == Solver::adam ? "adam" : "lbfgs"; }

std::optional<Activation> activation_from_string(std::string_view name) {
  for (auto a : {Activation::identity, Activation::logistic, Activation::tanh, Activation::relu})
    if (to_string(a) == name) return a;
  return std::nullopt;
}

std::optional<Solver> solver_from_string(std::string_view name) {
  for (auto s : {Solver::adam, Solver::lbfgs})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

void MlpConfig::validate() const {
  if (hidden_layers.empty()) fail(Errc::InvalidConfig, "hidden_layers must be non-empty");
  for (auto h : hidden_layers)
    if (h == 0) fail(Errc::InvalidConfig, "hidden layer sizes must be positive");
  if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) fail(Errc::InvalidConfig, "initial_lr must be > 0");
  if (!(tolerance >= 0.0)) fail(Errc::InvalidConfig, "tolerance must be >= 0");
  if (batch_size == 0) fail(Errc::InvalidConfig, "batch_size must be positive");
}

namespace {

void activate(Activation act, Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::identity: break;
    case Activation::logistic: z = (1.0 + (-z.array()).exp()).inverse().matrix(); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
  }
}

// derivative expressed through the activation output `a`
Eigen::ArrayXXd activation_derivative(Activation act, const Eigen::MatrixXd& a) {
  switch (act) {
    case Activation::identity: return Eigen::ArrayXXd::Ones(a.rows(), a.cols());
    case Activation::logistic: return a.array() * (1.0 - a.array());
    case Activation::tanh: return 1.0 - a.array().square();
    case Activation::relu: return (a.array() > 0.0).cast<double>();
  }
  return Eigen::ArrayXXd::Ones(a.rows(), a.cols());
}

void check_batch(const Mlp& mlp, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (static_cast<std::size_t>(x.cols()) != mlp.input_dim)
    fail(Errc::DimensionMismatch, "expected " + std::to_string(mlp.input_dim) + " inputs, got " +
                                      std::to_string(x.cols()));
  if (x.rows() != y.size()) fail(Errc::DimensionMismatch, "X and y row counts differ");
  if (x.rows() == 0) fail(Errc::InvalidArgument, "empty batch");
}

// Forward pass keeping every layer's activation; activations[0] = x.
std::vector<Eigen::MatrixXd> forward_all(const Mlp& mlp, const Eigen::MatrixXd& x) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(mlp.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    Eigen::MatrixXd z = acts.back() * mlp.layers[l].weights;
    z.rowwise() += mlp.layers[l].bias.transpose();
    if (l + 1 < mlp.layers.size()) activate(mlp.config.activation, z);
    acts.push_back(std::move(z));
  }
  return acts;
}

LossGradient loss_and_gradient(const Mlp& mlp, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto acts = forward_all(mlp, x);
  const Eigen::VectorXd resid = acts.back().col(0) - y;
  const double n = static_cast<double>(x.rows());
  LossGradient out;
  out.loss = 0.5 * resid.squaredNorm() / n;
  out.gradient.resize(static_cast<Eigen::Index>(mlp.parameter_count()));

  std::vector<Eigen::VectorXd> grads(2 * mlp.layers.size());
  Eigen::MatrixXd delta = resid / n;  // n x 1
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    const Eigen::MatrixXd gw = acts[l].transpose() * delta;
    grads[2 * l] = Eigen::Map<const Eigen::VectorXd>(gw.data(), gw.size());
    grads[2 * l + 1] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = ((delta * mlp.layers[l].weights.transpose()).array() *
               activation_derivative(mlp.config.activation, acts[l]))
                  .matrix();
    }
  }
  Eigen::Index offset = 0;
  for (const auto& g : grads) {
    out.gradient.segment(offset, g.size()) = g;
    offset += g.size();
  }
  return out;
}

void check_finite(double loss) {
  if (!std::isfinite(loss)) fail(Errc::NonFiniteLoss, "training loss became non-finite");
}

void train_adam(Mlp& mlp, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  constexpr int no_change_limit = 10;
  const auto& cfg = mlp.config;
  const auto n = static_cast<std::size_t>(x.rows());
  const std::size_t batch = std::min(cfg.batch_size, n);

  Eigen::VectorXd params = mlp.parameters();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
  LearningRate lr(cfg.lr_schedule, cfg.initial_lr, cfg.tolerance);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  double best = std::numeric_limits<double>::infinity();
  int no_change = 0;
  std::uint64_t step = 0;
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, {0xada, epoch}));
    rng.shuffle(order);
    const double rate = lr.current();
    mlp.lr_history.push_back(rate);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      xb.resize(static_cast<Eigen::Index>(end - start), x.cols());
      yb.resize(static_cast<Eigen::Index>(end - start));
      for (std::size_t i = start; i < end; ++i) {
        xb.row(static_cast<Eigen::Index>(i - start)) = x.row(static_cast<Eigen::Index>(order[i]));
        yb(static_cast<Eigen::Index>(i - start)) = y(static_cast<Eigen::Index>(order[i]));
      }
      const auto lg = loss_and_gradient(mlp, xb, yb);
      check_finite(lg.loss);
      ++step;
      m = beta1 * m + (1.0 - beta1) * lg.gradient;
      v = beta2 * v + (1.0 - beta2) * lg.gradient.cwiseProduct(lg.gradient);
      const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      params -= (rate * (m / corr1).array() / ((v / corr2).array().sqrt() + eps)).matrix();
      mlp.set_parameters(params);
    }
    const double loss = 0.5 * (mlp.predict(x) - y).squaredNorm() / static_cast<double>(n);
    check_finite(loss);
    mlp.loss_history.push_back(loss);
    lr.end_epoch(loss);
    if (cfg.lr_schedule == LrSchedule::adaptive) {
      if (lr.exhausted()) break;
    } else {
      no_change = loss > best - cfg.tolerance ? no_change + 1 : 0;
      if (no_change >= no_change_limit) break;
    }
    best = std::min(best, loss);
  }
}

void train_lbfgs(Mlp& mlp, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  detail::LbfgsOptions opt;
  opt.max_iterations = mlp.config.max_epochs;
  opt.tolerance = mlp.config.tolerance;
  Mlp work = mlp;
  auto objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
    work.set_parameters(p);
    auto lg = loss_and_gradient(work, x, y);
    grad = std::move(lg.gradient);
    return lg.loss;
  };
  auto result = detail::minimize_lbfgs(objective, mlp.parameters(), opt);
  for (double f : result.history) check_finite(f);
  check_finite(result.f);
  mlp.set_parameters(result.x);
  mlp.loss_history.insert(mlp.loss_history.end(), result.history.begin(), result.history.end());
}

}  // namespace

double Mlp::forward(std::span<const double> x) const {
  if (x.size() != input_dim)
    fail(Errc::DimensionMismatch, "expected " + std::to_string(input_dim) + " inputs, got " + std::to_string(x.size()));
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = x[i];
  return forward_all(*this, row).back()(0, 0);
}

Eigen::VectorXd Mlp::predict(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim)
    fail(Errc::DimensionMismatch, "expected " + std::to_string(input_dim) + " inputs, got " + std::to_string(x.cols()));
  if (x.rows() == 0) return Eigen::VectorXd(0);
  return forward_all(*this, x).back().col(0);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Eigen::VectorXd Mlp::parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index offset = 0;
  for (const auto& l : layers) {
    flat.segment(offset, l.weights.size()) = Eigen::Map<const Eigen::VectorXd>(l.weights.data(), l.weights.size());
    offset += l.weights.size();
    flat.segment(offset, l.bias.size()) = l.bias;
    offset += l.bias.size();
  }
  return flat;
}

void Mlp::set_parameters(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count())
    fail(Errc::DimensionMismatch, "parameter vector has wrong length");
  Eigen::Index offset = 0;
  for (auto& l : layers) {
    Eigen::Map<Eigen::VectorXd>(l.weights.data(), l.weights.size()) = flat.segment(offset, l.weights.size());
    offset += l.weights.size();
    l.bias = flat.segment(offset, l.bias.size());
    offset += l.bias.size();
  }
}

Mlp init(const MlpConfig& config, std::size_t input_dim) {
  config.validate();
  if (input_dim == 0) fail(Errc::InvalidConfig, "input dimension must be >= 1");
  Mlp mlp;
  mlp.config = config;
  mlp.input_dim = input_dim;
  Rng rng(derive_seed(config.seed, {0x1417}));
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), config.hidden_layers.begin(), config.hidden_layers.end());
  sizes.push_back(1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(sizes[l]);
    const auto fan_out = static_cast<Eigen::Index>(sizes[l + 1]);
    const double gain = config.activation == Activation::logistic ? 2.0 : 1.0;
    const double limit = std::sqrt(gain * 6.0 / static_cast<double>(fan_in + fan_out));
    Layer layer{Eigen::MatrixXd(fan_in, fan_out), Eigen::VectorXd(fan_out)};
    for (Eigen::Index c = 0; c < fan_out; ++c)
      for (Eigen::Index r = 0; r < fan_in; ++r) layer.weights(r, c) = rng.uniform(-limit, limit);
    for (Eigen::Index c = 0; c < fan_out; ++c) layer.bias(c) = rng.uniform(-limit, limit);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

LossGradient gradient(const Mlp& mlp, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  check_batch(mlp, x, y);
  return loss_and_gradient(mlp, x, y);
}

Mlp train(Mlp mlp, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  mlp.config.validate();
  check_batch(mlp, x, y);
  if (!x.allFinite() || !y.allFinite()) fail(Errc::InvalidArgument, "training data must be finite");
  if (mlp.config.max_epochs == 0) return mlp;
  if (mlp.config.solver == Solver::adam)
    train_adam(mlp, x, y);
  else
    train_lbfgs(mlp, x, y);
  return mlp;
}

// ---------------------------------------------------------------- json

json config_to_json(const MlpConfig& c) {
  return {{"activation", to_string(c.activation)},
          {"lr_schedule", to_string(c.lr_schedule)},
          {"solver", to_string(c.solver)},
          {"hidden_layers", c.hidden_layers},
          {"seed", c.seed},
          {"max_epochs", c.max_epochs},
          {"initial_lr", c.initial_lr},
          {"tolerance", c.tolerance},
          {"batch_size", c.batch_size}};
}

MlpConfig config_from_json(const json& j) {
  MlpConfig c;
  try {
    const auto act = activation_from_string(j.at("activation").get<std::string>());
    const auto sched = lr_schedule_from_string(j.at("lr_schedule").get<std::string>());
    const auto solver = solver_from_string(j.at("solver").get<std::string>());
    if (!act || !sched || !solver) fail(Errc::InvalidConfig, "unknown activation, schedule or solver name");
    c.activation = *act;
    c.lr_schedule = *sched;
    c.solver = *solver;
    c.hidden_layers = j.at("hidden_layers").get<std::vector<std::size_t>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.initial_lr = j.at("initial_lr").get<double>();
    c.tolerance = j.at("tolerance").get<double>();
    c.batch_size = j.value("batch_size", std::size_t{200});
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, e.what());
  }
  c.validate();
  return c;
}

json to_json(const Mlp& mlp) {
  json layers = json::array();
  for (const auto& l : mlp.layers) {
    std::vector<double> w(l.weights.data(), l.weights.data() + l.weights.size());
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"fan_in", l.weights.rows()}, {"fan_out", l.weights.cols()}, {"weights", w}, {"bias", b}});
  }
  return {{"config", config_to_json(mlp.config)},
          {"input_dim", mlp.input_dim},
          {"layers", layers},
          {"loss_history", mlp.loss_history}};
}

Mlp from_json(const json& j) {
  Mlp mlp;
  try {
    mlp.config = config_from_json(j.at("config"));
    mlp.input_dim = j.at("input_dim").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
      const auto fan_in = lj.at("fan_in").get<Eigen::Index>();
      const auto fan_out = lj.at("fan_out").get<Eigen::Index>();
      const auto w = lj.at("weights").get<std::vector<double>>();
      const auto b = lj.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != fan_in * fan_out || static_cast<Eigen::Index>(b.size()) != fan_out)
        fail(Errc::InvalidConfig, "layer shape does not match its weights");
      Layer layer{Eigen::Map<const Eigen::MatrixXd>(w.data(), fan_in, fan_out),
                  Eigen::Map<const Eigen::VectorXd>(b.data(), fan_out)};
      mlp.layers.push_back(std::move(layer));
    }
    mlp.loss_history = j.value("loss_history", std::vector<double>{});
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, e.what());
  }
  // shapes must chain from input_dim through the hidden sizes to one output
  std::size_t prev = mlp.input_dim;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    if (static_cast<std::size_t>(mlp.layers[l].weights.rows()) != prev)
      fail(Errc::InvalidConfig, "layer " + std::to_string(l) + " does not chain");
    prev = static_cast<std::size_t>(mlp.layers[l].weights.cols());
  }
  if (prev != 1 || mlp.layers.size() != mlp.config.hidden_layers.size() + 1)
    fail(Errc::InvalidConfig, "network topology does not match its config");
  return mlp;
}

}  // namespace pvcast::neuralnet
