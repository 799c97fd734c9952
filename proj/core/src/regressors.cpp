#include "pvcast/regressors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "pvcast/error.hpp"
#include "pvcast/random.hpp"
#include "pvcast/schedule.hpp"

namespace pvcast::regressors {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 10> kNames{{
    {Kind::ols, "ols"},
    {Kind::sgd_linear, "sgd_linear"},
    {Kind::passive_aggressive, "passive_aggressive"},
    {Kind::ransac, "ransac"},
    {Kind::decision_tree, "decision_tree"},
    {Kind::random_forest, "random_forest"},
    {Kind::bagging, "bagging"},
    {Kind::adaboost, "adaboost"},
    {Kind::gradient_boosting, "gradient_boosting"},
    {Kind::svr_linear, "svr_linear"},
}};

ParamDef real(std::string name, double vmin, double vmax, double smin, double smax, double def, bool log = false) {
  return ParamDef{std::move(name), vmin, vmax, smin, smax, def, false, log, {}};
}

ParamDef integer(std::string name, double vmin, double vmax, double smin, double smax, double def) {
  return ParamDef{std::move(name), vmin, vmax, smin, smax, def, true, false, {}};
}

ParamDef categorical(std::string name, std::vector<std::string> choices, double def) {
  const double last = static_cast<double>(choices.size() - 1);
  return ParamDef{std::move(name), 0.0, last, 0.0, last, def, true, false, std::move(choices)};
}

bool is_linear(Kind k) {
  return k == Kind::ols || k == Kind::sgd_linear || k == Kind::passive_aggressive || k == Kind::ransac ||
         k == Kind::svr_linear;
}

// ---------------------------------------------------------------- linear

VectorXd linear_predict(const std::vector<double>& coef, const MatrixXd& x) {
  const auto d = x.cols();
  const Eigen::Map<const VectorXd> w(coef.data(), d);
  return (x * w).array() + coef[static_cast<std::size_t>(d)];
}

std::vector<double> ols_on(const MatrixXd& x, const VectorXd& y) {
  MatrixXd a(x.rows(), x.cols() + 1);
  a << x, VectorXd::Ones(x.rows());
  const VectorXd c = a.colPivHouseholderQr().solve(y);
  return {c.data(), c.data() + c.size()};
}

void require_finite(const std::vector<double>& coef) {
  for (double c : coef) require(std::isfinite(c), Errc::FitDiverged, "non-finite coefficients");
}

std::vector<double> fit_sgd(const RegressorSpec& s, const MatrixXd& x, const VectorXd& y) {
  const auto n = x.rows(), d = x.cols();
  const double alpha = s.param("alpha");
  const auto epochs = static_cast<std::size_t>(s.param("n_iterations"));
  const auto schedule = static_cast<LrSchedule>(static_cast<int>(s.param("schedule")));
  LearningRate lr(schedule, s.param("eta0"), 1e-9);
  VectorXd w = VectorXd::Zero(d);
  double b = 0.0;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng rng(derive_seed(s.seed, {0x59d, epoch}));
    rng.shuffle(order);
    const double eta = lr.current();
    for (Index i : order) {
      const double err = x.row(i).dot(w) + b - y(i);
      w -= eta * (err * x.row(i).transpose() + alpha * w);
      b -= eta * err;
    }
    const double loss = 0.5 * ((x * w).array() + b - y.array()).square().mean() + 0.5 * alpha * w.squaredNorm();
    require(std::isfinite(loss), Errc::FitDiverged, "sgd_linear loss is not finite");
    lr.end_epoch(loss);
    if (lr.exhausted()) break;
  }
  std::vector<double> coef(w.data(), w.data() + d);
  coef.push_back(b);
  return coef;
}

// PA-I regression with an epsilon-insensitive margin.
std::vector<double> fit_passive_aggressive(const RegressorSpec& s, const MatrixXd& x, const VectorXd& y) {
  const auto n = x.rows(), d = x.cols();
  const double c = s.param("C"), eps = s.param("epsilon");
  const auto epochs = static_cast<std::size_t>(s.param("n_iterations"));
  VectorXd w = VectorXd::Zero(d);
  double b = 0.0;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng rng(derive_seed(s.seed, {0x9a, epoch}));
    rng.shuffle(order);
    for (Index i : order) {
      const double r = y(i) - (x.row(i).dot(w) + b);
      const double loss = std::abs(r) - eps;
      if (loss <= 0.0) continue;
      const double tau = std::min(c, loss / (x.row(i).squaredNorm() + 1.0));
      const double step = std::copysign(tau, r);
      w += step * x.row(i).transpose();
      b += step;
    }
  }
  std::vector<double> coef(w.data(), w.data() + d);
  coef.push_back(b);
  require_finite(coef);
  return coef;
}

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

MatrixXd take_rows(const MatrixXd& x, const std::vector<Index>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

VectorXd take(const VectorXd& y, const std::vector<Index>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = y(rows[i]);
  return out;
}

std::vector<double> fit_ransac(const RegressorSpec& s, const MatrixXd& x, const VectorXd& y) {
  const auto n = x.rows(), d = x.cols();
  require(y.maxCoeff() > y.minCoeff(), Errc::DegenerateData, "ransac needs a target with non-zero variance");
  const auto base = ols_on(x, y);
  const VectorXd base_res = (y - linear_predict(base, x)).cwiseAbs();
  double threshold = s.param("residual_scale") * median({base_res.data(), base_res.data() + n});
  threshold = std::max(threshold, 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff()));

  const auto min_samples = static_cast<std::size_t>(std::min<Index>(n, d + 1));
  const auto trials = static_cast<std::size_t>(s.param("max_trials"));
  Rng rng(derive_seed(s.seed, {0x7a5}));
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  std::vector<Index> best_inliers;
  double best_sse = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < min_samples; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
    const std::vector<Index> subset(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(min_samples));
    const auto coef = ols_on(take_rows(x, subset), take(y, subset));
    const VectorXd res = y - linear_predict(coef, x);
    std::vector<Index> inliers;
    double sse = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (std::abs(res(i)) <= threshold) {
        inliers.push_back(i);
        sse += res(i) * res(i);
      }
    }
    if (inliers.size() > best_inliers.size() || (inliers.size() == best_inliers.size() && sse < best_sse)) {
      best_inliers = std::move(inliers);
      best_sse = sse;
    }
  }
  if (best_inliers.size() < min_samples) return base;
  auto coef = ols_on(take_rows(x, best_inliers), take(y, best_inliers));
  require_finite(coef);
  return coef;
}

// Full-batch subgradient descent on
//   0.5 / (C n) ||w||^2 + mean max(0, |y - w.x - b| - epsilon)
// started from the least-squares solution; keeps the best iterate.
std::vector<double> fit_svr(const RegressorSpec& s, const MatrixXd& x, const VectorXd& y) {
  const auto n = x.rows(), d = x.cols();
  const double lambda = 1.0 / (s.param("C") * static_cast<double>(n));
  const double eps = s.param("epsilon"), eta0 = s.param("learning_rate");
  const auto iterations = static_cast<std::size_t>(s.param("n_iterations"));
  const auto start = ols_on(x, y);
  VectorXd w = Eigen::Map<const VectorXd>(start.data(), d);
  double b = start[static_cast<std::size_t>(d)];

  auto objective = [&](const VectorXd& r) {
    return 0.5 * lambda * w.squaredNorm() + (r.cwiseAbs().array() - eps).max(0.0).mean();
  };
  VectorXd r = y - ((x * w).array() + b).matrix();
  double best = objective(r);
  VectorXd best_w = w;
  double best_b = b;
  for (std::size_t t = 1; t <= iterations; ++t) {
    VectorXd coeff = VectorXd::Zero(n);  // d loss / d prediction
    for (Index i = 0; i < n; ++i)
      if (std::abs(r(i)) > eps) coeff(i) = r(i) > 0.0 ? -1.0 : 1.0;
    coeff /= static_cast<double>(n);
    const VectorXd gw = x.transpose() * coeff + lambda * w;
    const double gb = coeff.sum();
    const double eta = eta0 / std::sqrt(static_cast<double>(t));
    w -= eta * gw;
    b -= eta * gb;
    r = y - ((x * w).array() + b).matrix();
    const double f = objective(r);
    if (f < best) {
      best = f;
      best_w = w;
      best_b = b;
    }
  }
  std::vector<double> coef(best_w.data(), best_w.data() + d);
  coef.push_back(best_b);
  require_finite(coef);
  return coef;
}

// ---------------------------------------------------------------- trees

struct Node {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct TreeOptions {
  int max_depth = 10;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 = all
};

// Weighted CART on squared error. `rows` may repeat (bootstrap samples).
class TreeBuilder {
 public:
  TreeBuilder(const MatrixXd& x, const VectorXd& y, const VectorXd& w, TreeOptions opt, Rng* rng)
      : x_(x), y_(y), w_(w), opt_(opt), rng_(rng) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<Node> build(std::vector<Index> rows) {
    nodes_.clear();
    rows_ = std::move(rows);
    grow(0, rows_.size(), 0);
    return std::move(nodes_);
  }

 private:
  struct Entry {
    double v;
    double y;
    double w;
  };

  int grow(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sw = 0.0, swy = 0.0, swy2 = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const Index r = rows_[i];
      sw += w_(r);
      swy += w_(r) * y_(r);
      swy2 += w_(r) * y_(r) * y_(r);
    }
    nodes_[static_cast<std::size_t>(id)].value = sw > 0.0 ? swy / sw : 0.0;
    const std::size_t count = end - begin;
    const double impurity = swy2 - (sw > 0.0 ? swy * swy / sw : 0.0);
    if (depth >= opt_.max_depth || count < opt_.min_samples_split || count < 2 * opt_.min_samples_leaf ||
        !(impurity > 1e-14 * std::max(1.0, swy2)))
      return id;

    std::size_t n_features = features_.size();
    if (opt_.max_features > 0 && opt_.max_features < n_features) {
      n_features = opt_.max_features;
      for (std::size_t i = 0; i < n_features; ++i)
        std::swap(features_[i], features_[i + rng_->index(features_.size() - i)]);
    }

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 0.0;
    std::vector<Entry> entries(count);
    for (std::size_t fi = 0; fi < n_features; ++fi) {
      const int f = features_[fi];
      for (std::size_t i = 0; i < count; ++i) {
        const Index r = rows_[begin + i];
        entries[i] = {x_(r, f), y_(r), w_(r)};
      }
      std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.v < b.v; });
      double lw = 0.0, lwy = 0.0, lwy2 = 0.0;
      for (std::size_t i = 0; i + 1 < count; ++i) {
        lw += entries[i].w;
        lwy += entries[i].w * entries[i].y;
        lwy2 += entries[i].w * entries[i].y * entries[i].y;
        const std::size_t left_count = i + 1;
        if (left_count < opt_.min_samples_leaf) continue;
        if (count - left_count < opt_.min_samples_leaf) break;
        if (!(entries[i].v < entries[i + 1].v)) continue;
        const double rw = sw - lw, rwy = swy - lwy, rwy2 = swy2 - lwy2;
        const double left_sse = lw > 0.0 ? lwy2 - lwy * lwy / lw : 0.0;
        const double right_sse = rw > 0.0 ? rwy2 - rwy * rwy / rw : 0.0;
        const double gain = impurity - left_sse - right_sse;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          const double mid = 0.5 * (entries[i].v + entries[i + 1].v);
          best_threshold = mid < entries[i + 1].v ? mid : entries[i].v;
        }
      }
    }
    if (best_feature < 0) return id;

    const auto split = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                      rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                      [&](Index r) { return x_(r, best_feature) <= best_threshold; });
    const auto mid = static_cast<std::size_t>(split - rows_.begin());
    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    Node& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  const MatrixXd& x_;
  const VectorXd& y_;
  const VectorXd& w_;
  TreeOptions opt_;
  Rng* rng_;
  std::vector<int> features_;
  std::vector<Index> rows_;
  std::vector<Node> nodes_;
};

void encode_tree(const std::vector<Node>& nodes, std::vector<double>& out) {
  out.push_back(static_cast<double>(nodes.size()));
  for (const auto& n : nodes) {
    out.push_back(n.feature);
    out.push_back(n.threshold);
    out.push_back(n.left);
    out.push_back(n.right);
    out.push_back(n.value);
  }
}

// Reads the tree starting at `pos` and advances `pos` past it.
struct TreeView {
  const double* nodes = nullptr;
  std::size_t count = 0;

  double eval(const MatrixXd& x, Index row) const {
    std::size_t i = 0;
    for (;;) {
      const double* n = nodes + 5 * i;
      if (n[0] < 0.0) return n[4];
      i = static_cast<std::size_t>(x(row, static_cast<Index>(n[0])) <= n[1] ? n[2] : n[3]);
    }
  }
};

TreeView read_tree(const std::vector<double>& state, std::size_t& pos) {
  require(pos < state.size(), Errc::InvalidArgument, "truncated tree state");
  TreeView t;
  t.count = static_cast<std::size_t>(state[pos]);
  require(t.count >= 1 && pos + 1 + 5 * t.count <= state.size(), Errc::InvalidArgument, "truncated tree state");
  t.nodes = state.data() + pos + 1;
  pos += 1 + 5 * t.count;
  return t;
}

std::vector<Index> all_rows(Index n) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

std::vector<Node> grow_tree(const MatrixXd& x, const VectorXd& y, const VectorXd& w, std::vector<Index> rows,
                            const TreeOptions& opt, Rng* rng) {
  return TreeBuilder(x, y, w, opt, rng).build(std::move(rows));
}

std::vector<double> fit_decision_tree(const RegressorSpec& s, const MatrixXd& x, const VectorXd& y) {
  TreeOptions opt;
  opt.max_depth = static_cast<int>(s.param("max_depth"));
  opt.min_samples_split = static_cast<std::size_t>(s.param("min_samples_split"));
  opt.min_samples_leaf = static_cast<std::size_t>(s.param("min_samples_leaf"));
  std::vector<double> state;
  encode_tree(grow_tree(x, y, VectorXd::Ones(x.rows()), all_rows(x.rows()), opt, nullptr), state);
  return state;
}

std::vector<double> fit_tree_ensemble(const RegressorSpec& s, const MatrixXd& x, const VectorXd& y, bool forest) {
  const auto n = x.rows();
  TreeOptions opt;
  opt.max_depth = static_cast<int>(s.param("max_depth"));
  std::size_t count = 0, draws = static_cast<std::size_t>(n);
  if (forest) {
    count = static_cast<std::size_t>(s.param("n_trees"));
    opt.min_samples_leaf = static_cast<std::size_t>(s.param("min_samples_leaf"));
    opt.max_features = static_cast<std::size_t>((x.cols() + 2) / 3);
  } else {
    count = static_cast<std::size_t>(s.param("n_estimators"));
    draws = static_cast<std::size_t>(std::max(1.0, std::ceil(s.param("max_samples") * static_cast<double>(n))));
  }
  const VectorXd w = VectorXd::Ones(n);
  std::vector<double> state{static_cast<double>(count)};
  for (std::size_t t = 0; t < count; ++t) {
    Rng rng(derive_seed(s.seed, {forest ? 0xf0u : 0xbau, t}));
    std::vector<Index> rows(draws);
    for (auto& r : rows) r = static_cast<Index>(rng.index(static_cast<std::size_t>(n)));
    encode_tree(grow_tree(x, y, w, std::move(rows), opt, &rng), state);
  }
  return state;
}

double weighted_median(const std::vector<double>& values, const std::vector<double>& weights) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double cum = 0.0;
  for (auto i : order) {
    cum += weights[i];
    if (cum >= 0.5 * total) return values[i];
  }
  return values[order.back()];
}

// AdaBoost.R2 with linear loss; trees are fitted on the boosting weights
// directly rather than on weighted resamples.
std::vector<double> fit_adaboost(const RegressorSpec& s, const MatrixXd& x, const VectorXd& y) {
  const auto n = x.rows();
  const auto rounds = static_cast<std::size_t>(s.param("n_estimators"));
  const double lr = s.param("learning_rate");
  TreeOptions opt;
  opt.max_depth = static_cast<int>(s.param("max_depth"));
  VectorXd w = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  std::vector<double> state{0.0};
  std::size_t kept = 0;
  for (std::size_t m = 0; m < rounds; ++m) {
    const auto nodes = grow_tree(x, y, w, all_rows(n), opt, nullptr);
    std::vector<double> encoded;
    encode_tree(nodes, encoded);
    std::size_t pos = 0;
    const TreeView tree = read_tree(encoded, pos);
    VectorXd err(n);
    for (Index i = 0; i < n; ++i) err(i) = std::abs(tree.eval(x, i) - y(i));
    const double max_err = err.maxCoeff();
    if (max_err <= 0.0) {  // perfect fit: keep it and stop
      state.push_back(1.0);
      state.insert(state.end(), encoded.begin(), encoded.end());
      ++kept;
      break;
    }
    const VectorXd loss = err / max_err;
    const double avg_loss = w.dot(loss) / w.sum();
    if (avg_loss >= 0.5) {
      if (kept == 0) {
        state.push_back(1.0);
        state.insert(state.end(), encoded.begin(), encoded.end());
        ++kept;
      }
      break;
    }
    const double beta = avg_loss / (1.0 - avg_loss);
    state.push_back(lr * std::log(1.0 / beta));
    state.insert(state.end(), encoded.begin(), encoded.end());
    ++kept;
    for (Index i = 0; i < n; ++i) w(i) *= std::pow(beta, (1.0 - loss(i)) * lr);
    const double total = w.sum();
    if (!(total > 0.0)) break;
    w /= total;
  }
  state[0] = static_cast<double>(kept);
  return state;
}

// Squared-loss gradient boosting with shrinkage. The initial model is the
// target mean; every round fits a depth-limited tree to the residuals.
std::vector<double> fit_gradient_boosting(const RegressorSpec& s, const MatrixXd& x, const VectorXd& y) {
  const auto n = x.rows();
  const auto rounds = static_cast<std::size_t>(s.param("n_estimators"));
  const double lr = s.param("learning_rate"), subsample = s.param("subsample");
  TreeOptions opt;
  opt.max_depth = static_cast<int>(s.param("max_depth"));
  const double init = y.mean();
  VectorXd f = VectorXd::Constant(n, init);
  const VectorXd w = VectorXd::Ones(n);
  const auto draws = static_cast<std::size_t>(std::max(1.0, std::ceil(subsample * static_cast<double>(n))));
  std::vector<double> state{init, lr, static_cast<double>(rounds)};
  std::vector<Index> pool = all_rows(n);
  for (std::size_t m = 0; m < rounds; ++m) {
    const VectorXd residual = y - f;
    std::vector<Index> rows = pool;
    if (draws < pool.size()) {
      Rng rng(derive_seed(s.seed, {0x9b, m}));
      for (std::size_t i = 0; i < draws; ++i) std::swap(rows[i], rows[i + rng.index(rows.size() - i)]);
      rows.resize(draws);
      std::sort(rows.begin(), rows.end());
    }
    std::vector<double> encoded;
    encode_tree(grow_tree(x, residual, w, std::move(rows), opt, nullptr), encoded);
    std::size_t pos = 0;
    const TreeView tree = read_tree(encoded, pos);
    for (Index i = 0; i < n; ++i) f(i) += lr * tree.eval(x, i);
    state.insert(state.end(), encoded.begin(), encoded.end());
  }
  return state;
}

// ---------------------------------------------------------------- prediction

std::vector<VectorXd> staged(const FittedRegressor& m, const MatrixXd& x, bool all_stages) {
  const auto n = x.rows();
  const auto& st = m.state;
  std::vector<VectorXd> out;
  switch (m.spec.kind) {
    case Kind::adaboost: {
      const auto count = static_cast<std::size_t>(st.at(0));
      std::size_t pos = 1;
      std::vector<double> weights;
      std::vector<TreeView> trees;
      for (std::size_t t = 0; t < count; ++t) {
        weights.push_back(st.at(pos++));
        trees.push_back(read_tree(st, pos));
      }
      MatrixXd votes(n, static_cast<Index>(count));
      for (std::size_t t = 0; t < count; ++t)
        for (Index i = 0; i < n; ++i) votes(i, static_cast<Index>(t)) = trees[t].eval(x, i);
      for (std::size_t k = all_stages ? 1 : count; k <= count; ++k) {
        VectorXd pred(n);
        const std::vector<double> w(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(k));
        for (Index i = 0; i < n; ++i) {
          std::vector<double> v(k);
          for (std::size_t t = 0; t < k; ++t) v[t] = votes(i, static_cast<Index>(t));
          pred(i) = weighted_median(v, w);
        }
        out.push_back(std::move(pred));
      }
      break;
    }
    case Kind::gradient_boosting: {
      const double lr = st.at(1);
      const auto count = static_cast<std::size_t>(st.at(2));
      VectorXd f = VectorXd::Constant(n, st.at(0));
      std::size_t pos = 3;
      for (std::size_t t = 0; t < count; ++t) {
        const TreeView tree = read_tree(st, pos);
        for (Index i = 0; i < n; ++i) f(i) += lr * tree.eval(x, i);
        if (all_stages || t + 1 == count) out.push_back(f);
      }
      if (count == 0) out.push_back(f);
      break;
    }
    default:
      fail(Errc::InvalidArgument, "staged predictions need a boosting model");
  }
  return out;
}

VectorXd predict_unchecked(const FittedRegressor& m, const MatrixXd& x) {
  const auto n = x.rows();
  const auto& st = m.state;
  if (is_linear(m.spec.kind)) return linear_predict(st, x);
  switch (m.spec.kind) {
    case Kind::decision_tree: {
      std::size_t pos = 0;
      const TreeView tree = read_tree(st, pos);
      VectorXd out(n);
      for (Index i = 0; i < n; ++i) out(i) = tree.eval(x, i);
      return out;
    }
    case Kind::random_forest:
    case Kind::bagging: {
      const auto count = static_cast<std::size_t>(st.at(0));
      std::size_t pos = 1;
      VectorXd sum = VectorXd::Zero(n);
      for (std::size_t t = 0; t < count; ++t) {
        const TreeView tree = read_tree(st, pos);
        for (Index i = 0; i < n; ++i) sum(i) += tree.eval(x, i);
      }
      return sum / static_cast<double>(std::max<std::size_t>(count, 1));
    }
    default:
      return staged(m, x, false).back();
  }
}

void check_dims(const FittedRegressor& m, const MatrixXd& x) {
  require(static_cast<std::size_t>(x.cols()) == m.input_dim, Errc::DimensionMismatch,
          "expected " + std::to_string(m.input_dim) + " columns, got " + std::to_string(x.cols()));
}

}  // namespace

std::string_view to_string(Kind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<Kind> kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

const std::vector<Kind>& all_kinds() {
  static const std::vector<Kind> kinds = [] {
    std::vector<Kind> v;
    for (const auto& entry : kNames) v.push_back(entry.first);
    return v;
  }();
  return kinds;
}

const std::vector<ParamDef>& param_schema(Kind kind) {
  static const std::vector<ParamDef> none;
  static const std::vector<ParamDef> sgd{
      real("eta0", 1e-6, 10.0, 1e-3, 0.1, 0.01, true),
      real("alpha", 0.0, 1.0, 1e-6, 1e-1, 1e-4, true),
      integer("n_iterations", 1, 10000, 20, 500, 200),
      categorical("schedule", {"constant", "invscaling", "adaptive"}, 1),
  };
  static const std::vector<ParamDef> pa{
      real("C", 1e-6, 1e3, 1e-3, 10.0, 1.0, true),
      real("epsilon", 0.0, 10.0, 0.0, 0.3, 0.1),
      integer("n_iterations", 1, 10000, 5, 200, 50),
  };
  static const std::vector<ParamDef> ransac{
      integer("max_trials", 1, 10000, 20, 300, 100),
      real("residual_scale", 0.01, 100.0, 0.5, 3.0, 1.0, true),
  };
  static const std::vector<ParamDef> tree{
      integer("max_depth", 1, 64, 2, 10, 10),
      integer("min_samples_split", 2, 1e6, 2, 20, 2),
      integer("min_samples_leaf", 1, 1e6, 1, 10, 1),
  };
  static const std::vector<ParamDef> forest{
      integer("n_trees", 1, 2000, 10, 200, 100),
      integer("max_depth", 1, 64, 2, 10, 10),
      integer("min_samples_leaf", 1, 1e6, 1, 10, 1),
  };
  static const std::vector<ParamDef> bagging{
      integer("n_estimators", 1, 2000, 5, 100, 10),
      real("max_samples", 0.05, 1.0, 0.3, 1.0, 1.0),
      integer("max_depth", 1, 64, 2, 10, 10),
  };
  static const std::vector<ParamDef> ada{
      integer("n_estimators", 1, 2000, 10, 200, 50),
      real("learning_rate", 1e-4, 10.0, 0.01, 1.0, 1.0, true),
      integer("max_depth", 1, 64, 2, 10, 3),
  };
  static const std::vector<ParamDef> gb{
      integer("n_estimators", 1, 5000, 10, 200, 100),
      real("learning_rate", 1e-4, 1.0, 0.01, 1.0, 0.1, true),
      integer("max_depth", 1, 64, 2, 10, 3),
      real("subsample", 0.05, 1.0, 0.5, 1.0, 1.0),
  };
  static const std::vector<ParamDef> svr{
      real("C", 1e-6, 1e4, 0.01, 100.0, 1.0, true),
      real("epsilon", 0.0, 10.0, 0.0, 0.3, 0.1),
      integer("n_iterations", 1, 100000, 50, 1000, 200),
      real("learning_rate", 1e-6, 10.0, 1e-3, 0.5, 0.01, true),
  };
  switch (kind) {
    case Kind::ols: return none;
    case Kind::sgd_linear: return sgd;
    case Kind::passive_aggressive: return pa;
    case Kind::ransac: return ransac;
    case Kind::decision_tree: return tree;
    case Kind::random_forest: return forest;
    case Kind::bagging: return bagging;
    case Kind::adaboost: return ada;
    case Kind::gradient_boosting: return gb;
    case Kind::svr_linear: return svr;
  }
  return none;
}

double RegressorSpec::param(std::string_view name) const {
  for (const auto& def : param_schema(kind)) {
    if (def.name != name) continue;
    const auto it = params.find(def.name);
    return it == params.end() ? def.default_value : it->second;
  }
  fail(Errc::InvalidParam, std::string(name));
}

void RegressorSpec::validate() const {
  const auto& schema = param_schema(kind);
  for (const auto& [name, value] : params) {
    const auto it = std::find_if(schema.begin(), schema.end(), [&](const ParamDef& d) { return d.name == name; });
    require(it != schema.end(), Errc::InvalidParam, name);
    require(std::isfinite(value) && value >= it->valid_min && value <= it->valid_max, Errc::InvalidParam, name);
    require(!it->integer || value == std::floor(value), Errc::InvalidParam, name);
  }
}

RegressorSpec default_spec(Kind kind, std::uint64_t seed) {
  RegressorSpec s;
  s.kind = kind;
  s.seed = seed;
  for (const auto& def : param_schema(kind)) s.params[def.name] = def.default_value;
  return s;
}

FittedRegressor fit(const RegressorSpec& spec, const MatrixXd& x, const VectorXd& y) {
  spec.validate();
  require(x.rows() == y.size(), Errc::DimensionMismatch,
          std::to_string(x.rows()) + " rows vs " + std::to_string(y.size()) + " targets");
  require(x.cols() >= 1, Errc::DimensionMismatch, "no feature columns");
  require(x.rows() >= 2, Errc::InsufficientData, "at least 2 rows are required");
  require(x.allFinite() && y.allFinite(), Errc::InvalidArgument, "non-finite training value");

  FittedRegressor m;
  m.spec = spec;
  m.input_dim = static_cast<std::size_t>(x.cols());
  switch (spec.kind) {
    case Kind::ols: m.state = ols_on(x, y); break;
    case Kind::sgd_linear: m.state = fit_sgd(spec, x, y); break;
    case Kind::passive_aggressive: m.state = fit_passive_aggressive(spec, x, y); break;
    case Kind::ransac: m.state = fit_ransac(spec, x, y); break;
    case Kind::decision_tree: m.state = fit_decision_tree(spec, x, y); break;
    case Kind::random_forest: m.state = fit_tree_ensemble(spec, x, y, true); break;
    case Kind::bagging: m.state = fit_tree_ensemble(spec, x, y, false); break;
    case Kind::adaboost: m.state = fit_adaboost(spec, x, y); break;
    case Kind::gradient_boosting: m.state = fit_gradient_boosting(spec, x, y); break;
    case Kind::svr_linear: m.state = fit_svr(spec, x, y); break;
  }
  const VectorXd pred = predict_unchecked(m, x);
  require(pred.allFinite(), Errc::FitDiverged, std::string(to_string(spec.kind)) + " produced non-finite fits");
  m.train_score = (pred - y).cwiseAbs().mean();
  return m;
}

VectorXd predict(const FittedRegressor& model, const MatrixXd& x) {
  if (x.rows() == 0) return VectorXd(0);
  check_dims(model, x);
  return predict_unchecked(model, x);
}

std::vector<VectorXd> staged_predict(const FittedRegressor& model, const MatrixXd& x) {
  check_dims(model, x);
  return staged(model, x, true);
}

std::vector<double> linear_coefficients(const FittedRegressor& model) {
  require(is_linear(model.spec.kind), Errc::InvalidArgument,
          std::string(to_string(model.spec.kind)) + " is not a linear model");
  return model.state;
}

json spec_to_json(const RegressorSpec& spec) {
  json params = json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  return {{"kind", to_string(spec.kind)}, {"seed", spec.seed}, {"params", params}};
}

RegressorSpec spec_from_json(const json& j) {
  try {
    RegressorSpec s;
    const auto kind = kind_from_string(j.at("kind").get<std::string>());
    require(kind.has_value(), Errc::InvalidParam, "kind");
    s.kind = *kind;
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("params").items()) s.params[k] = v.get<double>();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(Errc::InvalidParam, std::string("malformed regressor spec: ") + e.what());
  }
}

json to_json(const FittedRegressor& model) {
  return {{"spec", spec_to_json(model.spec)},
          {"input_dim", model.input_dim},
          {"state", model.state},
          {"train_score", model.train_score}};
}

FittedRegressor from_json(const json& j) {
  try {
    FittedRegressor m;
    m.spec = spec_from_json(j.at("spec"));
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.state = j.at("state").get<std::vector<double>>();
    m.train_score = j.at("train_score").get<double>();
    require(m.input_dim >= 1, Errc::InvalidParam, "input_dim");
    if (is_linear(m.spec.kind))
      require(m.state.size() == m.input_dim + 1, Errc::InvalidParam, "linear state size");
    return m;
  } catch (const json::exception& e) {
    fail(Errc::InvalidParam, std::string("malformed regressor: ") + e.what());
  }
}

}  // namespace pvcast::regressors
