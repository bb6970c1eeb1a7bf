#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "orientbot/dataset.hpp"
#include "orientbot/errors.hpp"
#include "orientbot/model.hpp"
#include "orientbot/rng.hpp"

namespace orientbot::nn {

struct TrainConfig {
  double learningRate = 0.01;
  std::size_t minibatchSize = 100;      // samples per minibatch
  std::size_t minibatchesPerStep = 100; // one step = this many minibatches
  std::size_t steps = 30;
  std::uint64_t seed = 0;
  /// Stop after the first step whose validation accuracy reaches this value;
  /// 0 disables early stopping.
  double stopAtValAccuracy = 0.0;
  /// Worker threads for per-sample gradient evaluation. Gradients are reduced
  /// in a fixed chunk order, so results are reproducible for a given count.
  std::size_t threads = 1;
};

struct TrainReport {
  std::vector<double> stepLoss;     // mean minibatch loss per step
  std::vector<double> valAccuracy;  // validation accuracy per step
  std::size_t stepsRun = 0;
};

namespace detail {

struct LayerCacheSlot {
  Conv2dCache conv;
  LrnCache lrn;
  ReluCache relu;
  FcCache fc;
  std::vector<std::size_t> inShape;
};

/// Per-layer gradient accumulators plus pre-transposed weights for the
/// backward pass. Transposes are refreshed after every SGD update.
struct GradBuffers {
  std::vector<Tensor> weights;
  std::vector<Tensor> bias;

  explicit GradBuffers(const OrientationModel& model) {
    weights.resize(model.layers().size());
    bias.resize(model.layers().size());
    for (std::size_t i = 0; i < model.layers().size(); ++i) {
      if (model.params()[i].has()) {
        weights[i] = Tensor(model.params()[i].weights.shape());
        bias[i] = Tensor(model.params()[i].bias.shape());
      }
    }
  }

  void zero() {
    for (auto& t : weights)
      if (!t.empty()) t.fill(0.0);
    for (auto& t : bias)
      if (!t.empty()) t.fill(0.0);
  }

  void add(const GradBuffers& other) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      for (std::size_t j = 0; j < weights[i].size(); ++j)
        weights[i][j] += other.weights[i][j];
      for (std::size_t j = 0; j < bias[i].size(); ++j)
        bias[i][j] += other.bias[i][j];
    }
  }
};

struct TransposedWeights {
  std::vector<Tensor> t;  // per layer; empty where not applicable

  void refresh(const OrientationModel& model) {
    t.resize(model.layers().size());
    for (std::size_t i = 0; i < model.layers().size(); ++i) {
      const auto& spec = model.layers()[i];
      if (spec.kind == LayerKind::conv)
        t[i] = transpose_filters(model.params()[i].weights);
      else if (spec.kind == LayerKind::fc)
        t[i] = transpose_fc_weights(model.params()[i].weights);
    }
  }
};

/// Forward + backward for one sample; accumulates parameter gradients into
/// `grads` and returns the loss. The final layer must be softmax (trained
/// with fused softmax cross-entropy).
inline double sample_grad(const OrientationModel& model,
                          const TransposedWeights& tw, const Tensor& image,
                          int label, std::vector<LayerCacheSlot>& slots,
                          GradBuffers& grads) {
  const auto& layers = model.layers();
  const auto& params = model.params();
  const std::size_t n = layers.size();
  if (n == 0 || layers.back().kind != LayerKind::softmax)
    throw ArgumentError("training requires a softmax output layer");
  slots.resize(n);

  Tensor x = image;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    LayerCacheSlot& slot = slots[i];
    switch (layers[i].kind) {
      case LayerKind::conv:
        x = conv2d_forward(x, params[i].weights, params[i].bias,
                           layers[i].stride, layers[i].padding, &slot.conv);
        break;
      case LayerKind::lrn:
        x = lrn_forward(x, layers[i].lrn, &slot.lrn);
        break;
      case LayerKind::relu:
        x = relu_forward(x, &slot.relu);
        break;
      case LayerKind::flatten:
        slot.inShape = x.shape();
        x = x.reshaped({x.size()});
        break;
      case LayerKind::fc:
        x = fc_forward(x, params[i].weights, params[i].bias, &slot.fc);
        break;
      case LayerKind::softmax:
        throw ArgumentError("softmax must be the final layer");
    }
  }

  SoftmaxLoss sm = softmax_cross_entropy(x, label);
  Tensor grad = std::move(sm.gradLogits);

  for (std::size_t ri = n - 1; ri-- > 0;) {
    LayerCacheSlot& slot = slots[ri];
    switch (layers[ri].kind) {
      case LayerKind::conv:
        grad = conv2d_backward_into(grad, slot.conv, tw.t[ri],
                                    grads.weights[ri], grads.bias[ri]);
        break;
      case LayerKind::lrn:
        grad = lrn_backward(grad, slot.lrn);
        break;
      case LayerKind::relu:
        grad = relu_backward(grad, slot.relu);
        break;
      case LayerKind::flatten:
        grad = grad.reshaped(slot.inShape);
        break;
      case LayerKind::fc:
        grad = fc_backward_into(grad, slot.fc, tw.t[ri], grads.weights[ri],
                                grads.bias[ri]);
        break;
      case LayerKind::softmax:
        break;
    }
  }
  return sm.loss;
}

}  // namespace detail

/// Fraction of dataset samples whose argmax prediction matches the label.
inline double evaluate_accuracy(const OrientationModel& model,
                                const data::Dataset& dataset,
                                std::size_t threads = 1) {
  if (dataset.samples.empty())
    throw ArgumentError("cannot evaluate accuracy on an empty dataset");
  const std::size_t n = dataset.samples.size();
  const std::size_t workers = std::max<std::size_t>(1, threads);
  std::vector<std::size_t> correct(workers, 0);
  auto run = [&](std::size_t w) {
    const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
    std::size_t c = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& s = dataset.samples[i];
      if (predict(model, s.image).classIndex == s.classLabel) ++c;
    }
    correct[w] = c;
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  std::size_t total = 0;
  for (auto c : correct) total += c;
  return static_cast<double>(total) / static_cast<double>(n);
}

/// Plain SGD training: theta <- theta - lr * grad, gradients averaged over
/// each minibatch. Minibatches are drawn by seeded shuffling without
/// replacement per epoch. Records mean loss and validation accuracy per step.
inline TrainReport train(OrientationModel& model,
                         const data::Dataset& trainSet, const TrainConfig& cfg,
                         const data::Dataset& valSet) {
  if (trainSet.samples.empty())
    throw ArgumentError("training dataset must be non-empty");
  if (cfg.learningRate < 0.0)
    throw ArgumentError("learning rate must not be negative");
  if (cfg.minibatchSize == 0 || cfg.minibatchesPerStep == 0)
    throw ArgumentError("minibatch size and count must be positive");

  const std::size_t n = trainSet.samples.size();
  const std::size_t workers = std::max<std::size_t>(1, cfg.threads);

  Rng shuffleRng(mix_seed(cfg.seed));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n;  // forces a shuffle before the first draw

  auto reshuffle = [&] {
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<std::size_t>(shuffleRng.below(i))]);
    cursor = 0;
  };

  detail::TransposedWeights tw;
  tw.refresh(model);
  std::vector<detail::GradBuffers> grads(
      workers, detail::GradBuffers(model));
  std::vector<std::vector<detail::LayerCacheSlot>> slots(workers);

  TrainReport report;
  std::vector<std::size_t> batch(cfg.minibatchSize);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    double stepLossSum = 0.0;
    for (std::size_t mb = 0; mb < cfg.minibatchesPerStep; ++mb) {
      for (std::size_t b = 0; b < cfg.minibatchSize; ++b) {
        if (cursor >= n) reshuffle();
        batch[b] = order[cursor++];
      }

      for (auto& g : grads) g.zero();
      std::vector<double> lossSum(workers, 0.0);

      auto work = [&](std::size_t w) {
        const std::size_t lo = cfg.minibatchSize * w / workers;
        const std::size_t hi = cfg.minibatchSize * (w + 1) / workers;
        double sum = 0.0;
        for (std::size_t b = lo; b < hi; ++b) {
          const auto& s = trainSet.samples[batch[b]];
          sum += detail::sample_grad(model, tw, s.image, s.classLabel,
                                     slots[w], grads[w]);
        }
        lossSum[w] = sum;
      };
      if (workers == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
      }

      // fixed reduction order: worker 0, 1, 2, ...
      for (std::size_t w = 1; w < workers; ++w) grads[0].add(grads[w]);
      double batchLoss = 0.0;
      for (auto l : lossSum) batchLoss += l;
      batchLoss /= static_cast<double>(cfg.minibatchSize);
      if (!std::isfinite(batchLoss))
        throw DivergenceError("training diverged: non-finite loss at step " +
                              std::to_string(step + 1) + ", minibatch " +
                              std::to_string(mb + 1));
      stepLossSum += batchLoss;

      const double scale =
          cfg.learningRate / static_cast<double>(cfg.minibatchSize);
      for (std::size_t i = 0; i < model.layers().size(); ++i) {
        auto& p = model.params()[i];
        if (!p.has()) continue;
        for (std::size_t j = 0; j < p.weights.size(); ++j)
          p.weights[j] -= scale * grads[0].weights[i][j];
        for (std::size_t j = 0; j < p.bias.size(); ++j)
          p.bias[j] -= scale * grads[0].bias[i][j];
      }
      tw.refresh(model);
    }

    report.stepLoss.push_back(stepLossSum /
                              static_cast<double>(cfg.minibatchesPerStep));
    report.valAccuracy.push_back(
        valSet.samples.empty() ? 0.0
                               : evaluate_accuracy(model, valSet, workers));
    report.stepsRun = step + 1;

    if (cfg.stopAtValAccuracy > 0.0 &&
        report.valAccuracy.back() >= cfg.stopAtValAccuracy)
      break;
  }

  if (cfg.steps > 0) model.set_trained(true);
  return report;
}

/// Identical mechanics to train(), starting from an already trained model.
inline TrainReport fine_tune(OrientationModel& model,
                             const data::Dataset& newDataset,
                             const TrainConfig& cfg,
                             const data::Dataset& valSet) {
  if (!model.trained())
    throw ArgumentError("fine_tune requires an already trained model");
  return train(model, newDataset, cfg, valSet);
}

}  // namespace orientbot::nn
