#ifndef SIGGAN_TRAIN_HPP
#define SIGGAN_TRAIN_HPP

// Adversarial training and generation.
//
// Each step draws one batch of real windows, one noise matrix per window and
// one dropout seed per window and agent. The discriminator then takes an
// ascent step on the batch loss and the generator a descent step on the same
// batch, both with RMSProp after global-norm clipping. Windows are processed
// on independent tapes and their gradients summed in window order, so the
// result does not depend on the thread count.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "siggan/autograd.hpp"
#include "siggan/checkpoint.hpp"
#include "siggan/error.hpp"
#include "siggan/model.hpp"
#include "siggan/optim.hpp"
#include "siggan/preprocess.hpp"
#include "siggan/tensor.hpp"

namespace siggan {

struct TrainOptions {
  std::size_t threads = 1;
  /// Called after every epoch with (epoch index, mean generator loss).
  std::function<void(std::size_t, double)> on_epoch;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> loss_trace;
};

/// One window of a batch with everything the two passes need.
struct BatchItem {
  Tensor real;        // (T x 1), gaussianized
  Tensor adjacency;   // normalized, from the real window
  Tensor noise;       // (T x F)
  std::uint64_t gen_seed = 0;
  std::uint64_t dis_seed = 0;
};

enum class Agent { Generator, Discriminator };

namespace detail {

/// Uniform integer in [0, n) by rejection, independent of the standard library.
inline std::uint64_t bounded(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

inline void shuffle(std::vector<std::size_t>& xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) {
    std::swap(xs[i - 1], xs[static_cast<std::size_t>(bounded(rng, i))]);
  }
}

inline Tensor column(std::span<const double> xs) {
  Tensor t(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) t(static_cast<Eigen::Index>(i), 0) = xs[i];
  return t;
}

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers and rethrows the
/// first failure in index order.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t i = worker; i < n; i += stride) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  if (workers == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Objective of `trained` on one window; its gradients go to `sink`. The
/// generator's objective is loss(fake, Dis(S)). The discriminator's subtracts
/// dis_anchor * loss(S, Dis(S)), which keeps its ascent bounded.
inline double window_loss(SigGan& gan, const BatchItem& item, bool training, Agent trained,
                          const Tape::GradSink& sink) {
  Tape tape;
  Rng gen_rng(item.gen_seed);
  Rng dis_rng(item.dis_seed);
  Var fake = gan.generator.forward(tape, item.noise, item.adjacency,
                                   {training, trained == Agent::Generator}, gen_rng);
  Var real = gan.discriminator.forward(tape, item.real, item.adjacency,
                                       {training, trained == Agent::Discriminator}, dis_rng);
  const auto& c = gan.config;
  Var loss = sig_loss(c.loss_kind, fake, real, c.sig_degree);
  Var objective = loss;
  if (trained == Agent::Discriminator && c.dis_anchor > 0.0) {
    Var anchor = sig_loss(c.loss_kind, tape.constant(item.real), real, c.sig_degree);
    objective = nn::add(loss, nn::scale(anchor, -c.dis_anchor));
  }
  if (sink) tape.backward(objective, 1.0, sink);
  return objective.value()(0, 0);
}

/// Mean loss over the batch with gradients of the mean summed into the
/// parameters of `trained`.
inline double batch_loss(SigGan& gan, std::span<const BatchItem> batch, Agent trained,
                         std::size_t threads = 1) {
  Network& net = trained == Agent::Generator ? gan.generator : gan.discriminator;
  const auto params = net.parameters();
  std::unordered_map<const Parameter*, std::size_t> slot;
  for (std::size_t i = 0; i < params.size(); ++i) slot.emplace(params[i], i);

  std::vector<std::vector<Tensor>> grads(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  detail::parallel_for(batch.size(), threads, [&](std::size_t w) {
    auto& buf = grads[w];
    buf.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      buf[i] = Tensor::Zero(params[i]->value.rows(), params[i]->value.cols());
    }
    Tape::GradSink sink = [&](Parameter& p, const Tensor& g) { buf[slot.at(&p)] += g; };
    losses[w] = window_loss(gan, batch[w], true, trained, sink);
  });

  double total = 0.0;
  for (std::size_t w = 0; w < batch.size(); ++w) {
    total += losses[w];
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->grad += scale * grads[w][i];
  }
  return total * scale;
}

/// Same loss without gradients or dropout.
inline double evaluate_batch(SigGan& gan, std::span<const BatchItem> batch) {
  double total = 0.0;
  for (const auto& item : batch) total += window_loss(gan, item, false, Agent::Generator, nullptr);
  return total / static_cast<double>(batch.size());
}

struct Optimizers {
  RmsPropState generator;
  RmsPropState discriminator;

  explicit Optimizers(const SigGanConfig& c)
      : generator{c.learning_rate, c.rms_decay, c.rms_epsilon, {}},
        discriminator{c.learning_rate, c.rms_decay, c.rms_epsilon, {}} {}
};

/// Discriminator ascent on the batch loss. Returns the loss before the step.
inline double discriminator_step(SigGan& gan, std::span<const BatchItem> batch, RmsPropState& opt,
                                 std::size_t threads = 1) {
  const auto params = gan.discriminator.parameters();
  zero_grad(params);
  const double loss = batch_loss(gan, batch, Agent::Discriminator, threads);
  for (Parameter* p : params) p->grad = -p->grad;
  clip_grad_norm(params, gan.config.grad_clip);
  rmsprop_step(params, opt);
  zero_grad(params);
  return loss;
}

/// Generator descent on the batch loss. Returns the loss before the step.
inline double generator_step(SigGan& gan, std::span<const BatchItem> batch, RmsPropState& opt,
                             std::size_t threads = 1) {
  const auto params = gan.generator.parameters();
  zero_grad(params);
  const double loss = batch_loss(gan, batch, Agent::Generator, threads);
  clip_grad_norm(params, gan.config.grad_clip);
  rmsprop_step(params, opt);
  zero_grad(params);
  return loss;
}

/// Seeded source of batches over a fixed set of gaussianized windows.
class BatchSampler {
 public:
  BatchSampler(std::vector<ReturnWindow> windows, const SigGanConfig& cfg, Rng& rng)
      : windows_(std::move(windows)), cfg_(cfg), rng_(rng) {
    adjacency_.reserve(windows_.size());
    for (const auto& w : windows_) adjacency_.push_back(window_adjacency(w, cfg.graph_direction));
    order_.resize(windows_.size());
  }

  std::size_t batches_per_epoch() const { return windows_.size() / cfg_.batch_size; }

  void start_epoch() {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    detail::shuffle(order_, rng_);
  }

  std::vector<BatchItem> batch(std::size_t b) {
    std::vector<BatchItem> out(cfg_.batch_size);
    const auto T = static_cast<Eigen::Index>(cfg_.seq_len);
    const auto F = static_cast<Eigen::Index>(cfg_.noise_features);
    for (std::size_t k = 0; k < cfg_.batch_size; ++k) {
      const std::size_t idx = order_[b * cfg_.batch_size + k];
      out[k].real = detail::column(windows_[idx]);
      out[k].adjacency = adjacency_[idx];
      out[k].noise = standard_normal(T, F, rng_);
      out[k].gen_seed = rng_();
      out[k].dis_seed = rng_();
    }
    return out;
  }

 private:
  std::vector<ReturnWindow> windows_;
  std::vector<Tensor> adjacency_;
  std::vector<std::size_t> order_;
  SigGanConfig cfg_;
  Rng& rng_;
};

/// Seed of the training stream, distinct from the initialization stream.
inline Rng training_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x7261696eU};
  return Rng(seq);
}

inline TrainResult train(const ReturnSeries& returns, const SigGanConfig& cfg,
                         const TrainOptions& options = {}) {
  cfg.validate();
  if (returns.size() < cfg.seq_len + cfg.batch_size) {
    throw SizeError("training needs at least seq_len + batch_size = " +
                    std::to_string(cfg.seq_len + cfg.batch_size) + " returns, got " +
                    std::to_string(returns.size()));
  }
  const Prepared prep = prepare_returns(returns);

  TrainResult result;
  result.checkpoint.stats = prep.stats;
  result.checkpoint.model = SigGan(cfg);
  SigGan& gan = result.checkpoint.model;
  if (cfg.epochs == 0) return result;

  Rng rng = training_rng(cfg.seed);
  BatchSampler sampler(windows(prep.gaussianized, {cfg.seq_len, 1}), cfg, rng);
  Optimizers opt(cfg);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    sampler.start_epoch();
    double sum = 0.0;
    const std::size_t nb = sampler.batches_per_epoch();
    for (std::size_t b = 0; b < nb; ++b, ++step) {
      const auto batch = sampler.batch(b);
      try {
        discriminator_step(gan, batch, opt.discriminator, options.threads);
        sum += generator_step(gan, batch, opt.generator, options.threads);
      } catch (const NumericError& e) {
        throw NumericError("training step " + std::to_string(step) + " (epoch " +
                           std::to_string(epoch) + "): " + e.what());
      }
    }
    const double mean_loss = sum / static_cast<double>(nb);
    result.loss_trace.push_back(mean_loss);
    if (options.on_epoch) options.on_epoch(epoch, mean_loss);
  }
  return result;
}

/// Output of the generator in model space for one conditioning window.
inline Tensor generator_output(SigGan& gan, const Tensor& noise, const Tensor& adjacency) {
  Tape tape;
  Rng unused(0);
  return gan.generator.forward(tape, noise, adjacency, {false, false}, unused).value();
}

/// `n_samples` synthetic log-return windows. Windows of `conditioning` (raw
/// log returns) supply the graphs, cycled in order.
inline std::vector<ReturnWindow> generate(Checkpoint& ckpt, const ReturnSeries& conditioning,
                                          std::size_t n_samples, std::uint64_t seed) {
  const SigGanConfig& cfg = ckpt.config();
  if (!(ckpt.model.generator.config() == cfg) ||
      ckpt.model.generator.features() != cfg.noise_features) {
    throw VersionError("checkpoint generator does not match its configuration");
  }
  if (n_samples == 0) return {};
  if (conditioning.size() < cfg.seq_len) {
    throw SizeError("conditioning series has " + std::to_string(conditioning.size()) +
                    " returns, a window needs " + std::to_string(cfg.seq_len));
  }
  const auto latent = apply_preprocess(conditioning.values, ckpt.stats);
  const auto wins = windows(latent, {cfg.seq_len, 1});
  Rng rng(seed);
  const auto T = static_cast<Eigen::Index>(cfg.seq_len);
  const auto F = static_cast<Eigen::Index>(cfg.noise_features);
  std::vector<ReturnWindow> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Tensor adj = window_adjacency(wins[i % wins.size()], cfg.graph_direction);
    const Tensor noise = standard_normal(T, F, rng);
    const Tensor y = generator_output(ckpt.model, noise, adj);
    out.push_back(invert_preprocess(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                                    ckpt.stats));
  }
  return out;
}

}  // namespace siggan

#endif  // SIGGAN_TRAIN_HPP
