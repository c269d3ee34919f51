#ifndef SIGGAN_MODEL_HPP
#define SIGGAN_MODEL_HPP

// Generator and discriminator networks.
//
// Both agents share one layout: a Recurrent Block (stacked LSTMs + FC) and a
// Geometric Block (stacked GCNs on the window's visibility graph + LSTM + FC)
// whose outputs are summed and fed, optionally with the raw features, to a
// 128-64-1 Feedforward Block with PReLU between the layers.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "siggan/autograd.hpp"
#include "siggan/error.hpp"
#include "siggan/tensor.hpp"
#include "siggan/visibility.hpp"

namespace siggan {

enum class LossKind { Mse, Kld };

/// Components removed for an ablation run; all false is the full model.
struct Ablation {
  bool geometric = false;
  bool recurrent = false;
  bool feedforward = false;
  bool skip = false;
  bool dropout = false;

  friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct SigGanConfig {
  LossKind loss_kind = LossKind::Mse;
  std::size_t batch_size = 30;
  double learning_rate = 0.000797;
  std::size_t gnn_neurons = 190;
  std::size_t geo_lstm_neurons = 120;
  std::size_t rec_lstm_neurons = 190;
  std::size_t gnn_layers = 3;
  std::size_t rec_lstm_layers = 7;
  double dropout = 0.31;
  std::size_t seq_len = 100;
  GraphDirection graph_direction = GraphDirection::Undirected;
  std::size_t epochs = 100;
  std::size_t sig_degree = 5;
  std::size_t noise_features = 1;
  bool skip_layer = true;
  Ablation ablation;
  std::uint64_t seed = 0;
  double grad_clip = 5.0;
  /// Weight of the discriminator's penalty loss(Dis(S), S); 0 leaves its
  /// ascent unbounded.
  double dis_anchor = 20.0;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;

  /// Tuned hyperparameters for each loss.
  static SigGanConfig defaults(LossKind kind) {
    SigGanConfig c;
    c.loss_kind = kind;
    if (kind == LossKind::Kld) {
      c.learning_rate = 0.000221;
      c.gnn_neurons = 110;
      c.geo_lstm_neurons = 70;
      c.rec_lstm_neurons = 190;
      c.gnn_layers = 2;
      c.rec_lstm_layers = 4;
      c.dropout = 0.35;
    }
    return c;
  }

  double effective_dropout() const { return ablation.dropout ? 0.0 : dropout; }
  bool effective_skip() const { return skip_layer && !ablation.skip && !ablation.feedforward; }

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(batch_size, "batch_size");
    positive(gnn_neurons, "gnn_neurons");
    positive(geo_lstm_neurons, "geo_lstm_neurons");
    positive(rec_lstm_neurons, "rec_lstm_neurons");
    positive(gnn_layers, "gnn_layers");
    positive(rec_lstm_layers, "rec_lstm_layers");
    positive(sig_degree, "sig_degree");
    positive(noise_features, "noise_features");
    if (seq_len < 2) throw ConfigError("seq_len must be at least 2");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be nonnegative");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
    if (!(dis_anchor >= 0.0)) throw ConfigError("dis_anchor must be nonnegative");
    if (!(rms_decay >= 0.0 && rms_decay < 1.0)) throw ConfigError("rms_decay must lie in [0, 1)");
    if (!(rms_epsilon > 0.0)) throw ConfigError("rms_epsilon must be positive");
    if (ablation.geometric && ablation.recurrent) {
      throw ConfigError("cannot remove both the geometric and the recurrent block");
    }
  }

  friend bool operator==(const SigGanConfig&, const SigGanConfig&) = default;
};

struct ForwardMode {
  bool training = false;   // dropout active
  bool trainable = false;  // parameters receive gradients
};

class Network {
 public:
  struct Dense {
    Parameter w;
    Parameter b;
  };
  struct Lstm {
    Parameter wx;
    Parameter wh;
    Parameter b;
  };

  Network() = default;

  /// `features` is F: the column count of the input and of each block's output.
  Network(const SigGanConfig& cfg, std::size_t features, Rng& rng, const std::string& prefix)
      : cfg_(cfg), features_(features) {
    cfg.validate();
    const auto F = static_cast<Eigen::Index>(features);
    const Eigen::Index block_out = cfg.ablation.feedforward ? 1 : F;

    Eigen::Index in = F;
    for (std::size_t l = 0; l < cfg.rec_lstm_layers; ++l) {
      const auto h = static_cast<Eigen::Index>(cfg.rec_lstm_neurons);
      rec_lstm_.push_back(make_lstm(prefix + ".recurrent.lstm" + std::to_string(l), in, h, rng));
      in = h;
    }
    rec_fc_ = make_dense(prefix + ".recurrent.fc", in, block_out, rng);

    in = F;
    for (std::size_t l = 0; l < cfg.gnn_layers; ++l) {
      const auto k = static_cast<Eigen::Index>(cfg.gnn_neurons);
      gcn_.emplace_back(prefix + ".geometric.gcn" + std::to_string(l), glorot_uniform(in, k, rng));
      in = k;
    }
    const auto gh = static_cast<Eigen::Index>(cfg.geo_lstm_neurons);
    geo_lstm_ = make_lstm(prefix + ".geometric.lstm", in, gh, rng);
    geo_fc_ = make_dense(prefix + ".geometric.fc", gh, block_out, rng);

    const Eigen::Index ff_in = cfg.effective_skip() ? 2 * F : F;
    ff_[0] = make_dense(prefix + ".feedforward.fc0", ff_in, 128, rng);
    ff_[1] = make_dense(prefix + ".feedforward.fc1", 128, 64, rng);
    ff_[2] = make_dense(prefix + ".feedforward.fc2", 64, 1, rng);
  }

  const SigGanConfig& config() const { return cfg_; }
  std::size_t features() const { return features_; }

  /// Fixed order; checkpoints depend on it.
  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    for (auto& l : rec_lstm_) out.insert(out.end(), {&l.wx, &l.wh, &l.b});
    out.insert(out.end(), {&rec_fc_.w, &rec_fc_.b});
    for (auto& g : gcn_) out.push_back(&g);
    out.insert(out.end(), {&geo_lstm_.wx, &geo_lstm_.wh, &geo_lstm_.b, &geo_fc_.w, &geo_fc_.b});
    for (auto& d : ff_) out.insert(out.end(), {&d.w, &d.b});
    return out;
  }
  std::vector<const Parameter*> parameters() const {
    std::vector<const Parameter*> out;
    for (Parameter* p : const_cast<Network*>(this)->parameters()) out.push_back(p);
    return out;
  }

  /// Stacked LSTMs then FC; output (T x F), or (T x 1) when the feedforward block is removed.
  Var recurrent_block(Var x, ForwardMode mode, Rng& rng) {
    Var r = x;
    for (auto& l : rec_lstm_) {
      r = nn::lstm_forward(r, bind(x, l.wx, mode), bind(x, l.wh, mode), bind(x, l.b, mode));
      r = nn::dropout(r, cfg_.effective_dropout(), mode.training, rng);
    }
    return nn::dense_forward(r, bind(x, rec_fc_.w, mode), bind(x, rec_fc_.b, mode));
  }

  /// Stacked GCNs on the normalized adjacency, then one LSTM and one FC.
  Var geometric_block(Var x, const Tensor& normalized_adjacency, ForwardMode mode, Rng& rng) {
    Var h = x;
    for (auto& theta : gcn_) {
      h = nn::gcn_forward(h, normalized_adjacency, bind(x, theta, mode));
      h = nn::dropout(h, cfg_.effective_dropout(), mode.training, rng);
    }
    h = nn::lstm_forward(h, bind(x, geo_lstm_.wx, mode), bind(x, geo_lstm_.wh, mode),
                         bind(x, geo_lstm_.b, mode));
    h = nn::dropout(h, cfg_.effective_dropout(), mode.training, rng);
    return nn::dense_forward(h, bind(x, geo_fc_.w, mode), bind(x, geo_fc_.b, mode));
  }

  /// Sum of the two patterns, optional skip concatenation with the raw
  /// features, then FC(128) -> PReLU -> FC(64) -> PReLU -> FC(1).
  Var feedforward_block(Var time, Var graph, Var x, ForwardMode mode) {
    Var total = nn::add(time, graph);
    if (cfg_.ablation.feedforward) return total;
    if (cfg_.effective_skip()) total = nn::concat_cols(total, x);
    Var y = nn::prelu(nn::dense_forward(total, bind(x, ff_[0].w, mode), bind(x, ff_[0].b, mode)));
    y = nn::prelu(nn::dense_forward(y, bind(x, ff_[1].w, mode), bind(x, ff_[1].b, mode)));
    return nn::dense_forward(y, bind(x, ff_[2].w, mode), bind(x, ff_[2].b, mode));
  }

  /// Full agent: (T x F) input and its visibility graph to a (T x 1) output.
  Var forward(Tape& tape, const Tensor& input, const Tensor& normalized_adjacency,
              ForwardMode mode, Rng& rng) {
    if (input.cols() != static_cast<Eigen::Index>(features_)) {
      throw ShapeError("network expects " + std::to_string(features_) + " input features, got " +
                       shape_string(input));
    }
    Var x = tape.constant(input);
    const Eigen::Index width = cfg_.ablation.feedforward ? 1 : input.cols();
    Var time = cfg_.ablation.recurrent ? tape.constant(Tensor::Zero(input.rows(), width))
                                       : recurrent_block(x, mode, rng);
    Var graph = cfg_.ablation.geometric
                    ? tape.constant(Tensor::Zero(input.rows(), width))
                    : geometric_block(x, normalized_adjacency, mode, rng);
    return feedforward_block(time, graph, x, mode);
  }

 private:
  static Var bind(Var anchor, Parameter& p, ForwardMode mode) {
    return anchor.tape->parameter(p, mode.trainable);
  }

  static Dense make_dense(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng) {
    return Dense{Parameter(name + ".w", glorot_uniform(in, out, rng)),
                 Parameter(name + ".b", Tensor::Zero(1, out))};
  }

  static Lstm make_lstm(const std::string& name, Eigen::Index in, Eigen::Index hidden, Rng& rng) {
    Tensor bias = Tensor::Zero(1, 4 * hidden);
    bias.block(0, hidden, 1, hidden).setOnes();  // forget gate
    Tensor wx(in, 4 * hidden);
    for (int g = 0; g < 4; ++g) wx.block(0, g * hidden, in, hidden) = glorot_uniform(in, hidden, rng);
    return Lstm{Parameter(name + ".wx", std::move(wx)),
                Parameter(name + ".wh", orthogonal(hidden, 4 * hidden, rng)),
                Parameter(name + ".b", std::move(bias))};
  }

  SigGanConfig cfg_;
  std::size_t features_ = 0;
  std::vector<Lstm> rec_lstm_;
  Dense rec_fc_;
  std::vector<Parameter> gcn_;
  Lstm geo_lstm_;
  Dense geo_fc_;
  Dense ff_[3];
};

/// Generator (theta) and discriminator (eta).
struct SigGan {
  SigGanConfig config;
  Network generator;
  Network discriminator;

  SigGan() = default;
  explicit SigGan(const SigGanConfig& cfg) : config(cfg) {
    Rng rng(cfg.seed);
    generator = Network(cfg, cfg.noise_features, rng, "gen");
    discriminator = Network(cfg, 1, rng, "dis");
  }
};

/// Visibility graph of a window as a dense 0/1 matrix.
inline Tensor adjacency_matrix(const VisibilityGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Tensor a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = g(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ? 1.0 : 0.0;
    }
  }
  return a;
}

/// Normalized adjacency of the visibility graph of `window`.
inline Tensor window_adjacency(std::span<const double> window, GraphDirection direction) {
  return nn::normalized_adjacency(adjacency_matrix(natural_visibility(window, direction)));
}

// ---------------------------------------------------------------------------
// Losses between agent outputs. Both compare the lead-lag signature and the
// cumulative-sum signature of the two (T x 1) outputs.

inline Var sig_mse_loss(Var fake, Var real, std::size_t degree) {
  using nn::SignatureKind;
  Var a = nn::mse(nn::series_signature(fake, degree, SignatureKind::LeadLag),
                  nn::series_signature(real, degree, SignatureKind::LeadLag));
  Var b = nn::mse(nn::series_signature(fake, degree, SignatureKind::Cumulative),
                  nn::series_signature(real, degree, SignatureKind::Cumulative));
  return nn::add(a, b);
}

/// KL between softmax-normalized signatures, constant term included.
inline Var sig_kld_loss(Var fake, Var real, std::size_t degree) {
  using nn::SignatureKind;
  Var a = nn::kl_softmax(nn::series_signature(fake, degree, SignatureKind::LeadLag),
                         nn::series_signature(real, degree, SignatureKind::LeadLag));
  Var b = nn::kl_softmax(nn::series_signature(fake, degree, SignatureKind::Cumulative),
                         nn::series_signature(real, degree, SignatureKind::Cumulative));
  return nn::add(a, b);
}

inline Var sig_loss(LossKind kind, Var fake, Var real, std::size_t degree) {
  return kind == LossKind::Mse ? sig_mse_loss(fake, real, degree)
                               : sig_kld_loss(fake, real, degree);
}

inline double sig_loss(LossKind kind, const Tensor& fake, const Tensor& real, std::size_t degree) {
  Tape tape;
  return sig_loss(kind, tape.constant(fake), tape.constant(real), degree).value()(0, 0);
}

}  // namespace siggan

#endif  // SIGGAN_MODEL_HPP
