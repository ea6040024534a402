#ifndef TAMP2D_NN_HPP_
#define TAMP2D_NN_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tamp2d/config.hpp"
#include "tamp2d/problems.hpp"

namespace tamp2d {

enum class Activation : std::uint8_t { kReLU, kIdentity, kSoftmaxHeads };
enum class Loss : std::uint8_t { kMSE, kCrossEntropy, kNegativeLikelihood };

struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  Activation act = Activation::kReLU;
};

// Immutable after construction: training produces new versioned snapshots.
struct Network {
  std::vector<Layer> layers;
  std::vector<int> head_splits;  // output partition when the head is softmax
  double l2_coeff = 0.0;
  std::uint64_t version = 0;

  int input_dim() const { return static_cast<int>(layers.front().W.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().W.rows()); }
};

inline Network init_xavier(const std::vector<int>& dims,
                           const std::vector<int>& head_splits, Rng& rng,
                           double l2_coeff, Activation output_act) {
  if (dims.size() < 2) throw std::invalid_argument("need at least 2 dims");
  Network net;
  net.l2_coeff = l2_coeff;
  net.head_splits = head_splits;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const int fan_in = dims[i];
    const int fan_out = dims[i + 1];
    if (fan_in <= 0 || fan_out <= 0)
      throw std::invalid_argument("zero layer dimension");
    Layer l;
    l.W.resize(fan_out, fan_in);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) l.W(r, c) = rng.uniform(-bound, bound);
    l.b = Eigen::VectorXd::Zero(fan_out);
    l.act = (i + 2 == dims.size()) ? output_act : Activation::kReLU;
    net.layers.push_back(std::move(l));
  }
  int sum = 0;
  for (int h : head_splits) sum += h;
  if (!head_splits.empty() && sum != dims.back())
    throw std::invalid_argument("head splits do not span the output");
  return net;
}

inline void softmax_rows_per_head(Eigen::MatrixXd& z,
                                  const std::vector<int>& splits) {
  int off = 0;
  for (int h : splits) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      auto seg = z.row(r).segment(off, h);
      const double m = seg.maxCoeff();
      seg = (seg.array() - m).exp();
      seg /= seg.sum();
    }
    off += h;
  }
}

// Raw pre-activation outputs of the final layer (softmax not applied).
inline Eigen::MatrixXd forward_logits(const Network& net,
                                      const Eigen::MatrixXd& inputs) {
  if (!inputs.allFinite())
    throw std::invalid_argument("forward: non-finite input");
  if (inputs.cols() != net.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  Eigen::MatrixXd a = inputs;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    Eigen::MatrixXd z =
        (a * l.W.transpose()).rowwise() + l.b.transpose();
    if (l.act == Activation::kReLU) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

inline Eigen::MatrixXd forward(const Network& net,
                               const Eigen::MatrixXd& inputs) {
  Eigen::MatrixXd out = forward_logits(net, inputs);
  if (net.layers.back().act == Activation::kSoftmaxHeads)
    softmax_rows_per_head(out, net.head_splits.empty()
                                   ? std::vector<int>{net.output_dim()}
                                   : net.head_splits);
  return out;
}

// Supervision batch. For MSE, `targets` holds regression rows. For the
// discrete losses, `classes` holds one class index per head per row.
// `weights` scales each example's loss contribution.
struct Batch {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  Eigen::MatrixXi classes;
  Eigen::VectorXd weights;  // empty = all ones

  int size() const { return static_cast<int>(inputs.rows()); }
};

struct Gradients {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
  double loss = 0.0;
  bool clamped = false;  // a NegativeLikelihood probability hit the clamp

  bool finite() const {
    for (const auto& m : dW)
      if (!m.allFinite()) return false;
    for (const auto& v : db)
      if (!v.allFinite()) return false;
    return true;
  }
};

// Gradients of mean batch loss + l2_coeff * ||params||^2 over all weights
// and biases, by backpropagation through the fixed layer vocabulary.
inline Gradients grad(const Network& net, const Batch& batch, Loss loss) {
  const int n = batch.size();
  if (n == 0) {
    Gradients g;
    for (const Layer& l : net.layers) {
      g.dW.push_back(2.0 * net.l2_coeff * l.W);
      g.db.push_back(2.0 * net.l2_coeff * l.b);
    }
    return g;
  }
  if (!batch.inputs.allFinite())
    throw std::invalid_argument("grad: non-finite batch input");

  const std::size_t L = net.layers.size();
  std::vector<Eigen::MatrixXd> acts(L + 1);  // acts[i] = input to layer i
  std::vector<Eigen::MatrixXd> zs(L);
  acts[0] = batch.inputs;
  for (std::size_t i = 0; i < L; ++i) {
    const Layer& l = net.layers[i];
    zs[i] = (acts[i] * l.W.transpose()).rowwise() + l.b.transpose();
    acts[i + 1] =
        l.act == Activation::kReLU ? zs[i].cwiseMax(0.0).eval() : zs[i];
  }

  Eigen::VectorXd w = batch.weights.size() == n
                          ? batch.weights
                          : Eigen::VectorXd::Ones(n);
  const std::vector<int> splits = net.head_splits.empty()
                                      ? std::vector<int>{net.output_dim()}
                                      : net.head_splits;

  Gradients g;
  Eigen::MatrixXd delta;  // dL/dz of the output layer
  const Eigen::MatrixXd& y = acts[L];

  if (loss == Loss::kMSE) {
    if (batch.targets.rows() != n || batch.targets.cols() != y.cols())
      throw std::invalid_argument("grad: MSE target shape mismatch");
    Eigen::MatrixXd diff = y - batch.targets;
    for (int i = 0; i < n; ++i) g.loss += w[i] * diff.row(i).squaredNorm();
    g.loss /= n;
    delta = diff.array().colwise() * (2.0 * w.array() / n);
  } else {
    if (batch.classes.rows() != n ||
        batch.classes.cols() != static_cast<int>(splits.size()))
      throw std::invalid_argument("grad: class index shape mismatch");
    Eigen::MatrixXd probs = y;
    softmax_rows_per_head(probs, splits);
    delta = Eigen::MatrixXd::Zero(n, y.cols());
    for (int i = 0; i < n; ++i) {
      if (loss == Loss::kCrossEntropy) {
        int off = 0;
        for (std::size_t h = 0; h < splits.size(); ++h) {
          const int c = batch.classes(i, static_cast<int>(h));
          if (c < 0) {  // head not supervised for this example
            off += splits[h];
            continue;
          }
          const double p = std::max(probs(i, off + c), 1e-300);
          g.loss += -w[i] * std::log(p);
          for (int k = 0; k < splits[h]; ++k)
            delta(i, off + k) = w[i] * (probs(i, off + k) - (k == c ? 1.0 : 0.0)) / n;
          off += splits[h];
        }
      } else {  // NegativeLikelihood: -log(1 - p(action))
        double p = 1.0;
        int off = 0;
        for (std::size_t h = 0; h < splits.size(); ++h) {
          const int c = batch.classes(i, static_cast<int>(h));
          if (c >= 0) p *= probs(i, off + c);
          off += splits[h];
        }
        if (p > 1.0 - 1e-6) {
          p = 1.0 - 1e-6;
          g.clamped = true;
        }
        g.loss += -w[i] * std::log(1.0 - p);
        const double scale = w[i] * p / (1.0 - p) / n;
        off = 0;
        for (std::size_t h = 0; h < splits.size(); ++h) {
          const int c = batch.classes(i, static_cast<int>(h));
          if (c < 0) {
            off += splits[h];
            continue;
          }
          for (int k = 0; k < splits[h]; ++k)
            delta(i, off + k) = scale * ((k == c ? 1.0 : 0.0) - probs(i, off + k));
          off += splits[h];
        }
      }
    }
    g.loss /= n;
  }

  g.dW.resize(L);
  g.db.resize(L);
  for (int i = static_cast<int>(L) - 1; i >= 0; --i) {
    g.dW[i] = delta.transpose() * acts[i] + 2.0 * net.l2_coeff * net.layers[i].W;
    g.db[i] = delta.colwise().sum().transpose() +
              2.0 * net.l2_coeff * net.layers[i].b;
    if (i > 0) {
      delta = (delta * net.layers[i].W).eval();
      delta = delta.array() * (zs[i - 1].array() > 0.0).cast<double>();
    }
  }
  g.loss += net.l2_coeff * [&] {
    double s = 0.0;
    for (const Layer& l : net.layers)
      s += l.W.squaredNorm() + l.b.squaredNorm();
    return s;
  }();
  return g;
}

struct TrainStepResult {
  Network net;
  bool applied = false;
  double loss = 0.0;
};

// Plain SGD. Returns a new snapshot with the version incremented; a
// non-finite gradient rejects the parameter update but still versions the
// snapshot so the caller can observe the event.
inline TrainStepResult train_step(const Network& net, const Batch& batch,
                                  double lr, Loss loss) {
  if (!(lr >= 0.0) || !std::isfinite(lr))
    throw std::invalid_argument("train_step: bad learning rate");
  Gradients g = grad(net, batch, loss);
  TrainStepResult r;
  r.net = net;
  r.net.version = net.version + 1;
  r.loss = g.loss;
  if (!g.finite()) return r;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    r.net.layers[i].W -= lr * g.dW[i];
    r.net.layers[i].b -= lr * g.db[i];
  }
  r.applied = true;
  return r;
}

// Checkpoint layout: magic, layer count, per-layer (rows, cols, activation),
// head split list, l2 coefficient, version, then parameters row-major as
// 64-bit floats. A key-value sidecar carries run metadata.
inline void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  const char magic[4] = {'T', '2', 'N', 'N'};
  out.write(magic, 4);
  auto put_u64 = [&out](std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
  };
  put_u64(net.layers.size());
  for (const Layer& l : net.layers) {
    put_u64(static_cast<std::uint64_t>(l.W.rows()));
    put_u64(static_cast<std::uint64_t>(l.W.cols()));
    put_u64(static_cast<std::uint64_t>(l.act));
  }
  put_u64(net.head_splits.size());
  for (int h : net.head_splits) put_u64(static_cast<std::uint64_t>(h));
  out.write(reinterpret_cast<const char*>(&net.l2_coeff), 8);
  put_u64(net.version);
  for (const Layer& l : net.layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) {
        const double v = l.W(r, c);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
    for (Eigen::Index r = 0; r < l.b.size(); ++r) {
      const double v = l.b[r];
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
}

inline Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "T2NN")
    throw std::runtime_error("bad checkpoint magic: " + path);
  auto get_u64 = [&in]() {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  Network net;
  const std::uint64_t n_layers = get_u64();
  std::vector<std::pair<std::uint64_t, std::uint64_t>> shapes;
  for (std::uint64_t i = 0; i < n_layers; ++i) {
    const std::uint64_t rows = get_u64();
    const std::uint64_t cols = get_u64();
    const auto act = static_cast<Activation>(get_u64());
    shapes.emplace_back(rows, cols);
    Layer l;
    l.act = act;
    net.layers.push_back(std::move(l));
  }
  const std::uint64_t n_heads = get_u64();
  for (std::uint64_t i = 0; i < n_heads; ++i)
    net.head_splits.push_back(static_cast<int>(get_u64()));
  in.read(reinterpret_cast<char*>(&net.l2_coeff), 8);
  net.version = get_u64();
  for (std::uint64_t i = 0; i < n_layers; ++i) {
    Layer& l = net.layers[i];
    l.W.resize(shapes[i].first, shapes[i].second);
    l.b.resize(shapes[i].first);
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c)
        in.read(reinterpret_cast<char*>(&l.W(r, c)), 8);
    for (Eigen::Index r = 0; r < l.b.size(); ++r)
      in.read(reinterpret_cast<char*>(&l.b[r]), 8);
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return net;
}

}  // namespace tamp2d

#endif  // TAMP2D_NN_HPP_
