#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orientbot/layers.hpp"
#include "orientbot/rng.hpp"
#include "orientbot/tensor.hpp"

namespace orientbot::nn {

enum class LayerKind : std::uint32_t {
  conv = 0,
  lrn = 1,
  relu = 2,
  flatten = 3,
  fc = 4,
  softmax = 5,
};

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::lrn: return "lrn";
    case LayerKind::relu: return "relu";
    case LayerKind::flatten: return "flatten";
    case LayerKind::fc: return "fc";
    case LayerKind::softmax: return "softmax";
  }
  return "?";
}

/// One layer of the network with its per-kind hyperparameters.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  // conv
  std::size_t filterSize = 0;
  std::size_t outChannels = 0;
  std::size_t stride = 1;
  Padding padding = Padding::same;
  // fc
  std::size_t units = 0;
  // lrn
  LrnParams lrn;

  static LayerSpec conv2d(std::size_t filterSize, std::size_t outChannels,
                          std::size_t stride, Padding padding) {
    LayerSpec s;
    s.kind = LayerKind::conv;
    s.filterSize = filterSize;
    s.outChannels = outChannels;
    s.stride = stride;
    s.padding = padding;
    return s;
  }
  static LayerSpec localResponseNorm(LrnParams p = {}) {
    LayerSpec s;
    s.kind = LayerKind::lrn;
    s.lrn = p;
    return s;
  }
  static LayerSpec relu() {
    LayerSpec s;
    s.kind = LayerKind::relu;
    return s;
  }
  static LayerSpec flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
  }
  static LayerSpec fullyConnected(std::size_t units) {
    LayerSpec s;
    s.kind = LayerKind::fc;
    s.units = units;
    return s;
  }
  static LayerSpec softmax() {
    LayerSpec s;
    s.kind = LayerKind::softmax;
    return s;
  }
};

/// Shape of a layer's output given its input shape.
inline std::vector<std::size_t> layer_output_shape(
    const LayerSpec& spec, const std::vector<std::size_t>& in) {
  switch (spec.kind) {
    case LayerKind::conv: {
      if (in.size() != 3)
        throw ShapeError("conv layer requires a rank-3 input");
      return {conv_out_extent(in[0], spec.filterSize, spec.stride, spec.padding),
              conv_out_extent(in[1], spec.filterSize, spec.stride, spec.padding),
              spec.outChannels};
    }
    case LayerKind::lrn:
    case LayerKind::relu:
    case LayerKind::softmax:
      return in;
    case LayerKind::flatten: {
      std::size_t n = 1;
      for (auto e : in) n *= e;
      return {n};
    }
    case LayerKind::fc:
      if (in.size() != 1) throw ShapeError("fc layer requires a rank-1 input");
      return {spec.units};
  }
  throw ArgumentError("unknown layer kind");
}

struct LayerParams {
  Tensor weights;
  Tensor bias;
  bool has() const { return !weights.empty(); }
};

/// Ordered layer stack with parameters; produces 8-way class distributions
/// from 32x32x3 images.
class OrientationModel {
 public:
  OrientationModel() = default;

  OrientationModel(std::vector<LayerSpec> layers,
                   std::vector<std::size_t> inputShape, std::uint64_t seed)
      : layers_(std::move(layers)),
        inputShape_(std::move(inputShape)),
        rngSeed_(seed) {
    init_params();
  }

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::vector<LayerParams>& params() { return params_; }
  const std::vector<LayerParams>& params() const { return params_; }
  const std::vector<std::size_t>& input_shape() const { return inputShape_; }
  std::uint64_t rng_seed() const { return rngSeed_; }
  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }

  /// Shapes flowing through the stack: inputShape, then one per layer.
  std::vector<std::vector<std::size_t>> shape_chain() const {
    std::vector<std::vector<std::size_t>> chain{inputShape_};
    for (const auto& spec : layers_)
      chain.push_back(layer_output_shape(spec, chain.back()));
    return chain;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.weights.size() + p.bias.size();
    return n;
  }

  /// Restore from deserialized pieces.
  static OrientationModel assemble(std::vector<LayerSpec> layers,
                                   std::vector<std::size_t> inputShape,
                                   std::vector<LayerParams> params,
                                   std::uint64_t seed, bool trained) {
    OrientationModel m;
    m.layers_ = std::move(layers);
    m.inputShape_ = std::move(inputShape);
    m.params_ = std::move(params);
    m.rngSeed_ = seed;
    m.trained_ = trained;
    return m;
  }

 private:
  void init_params() {
    Rng rng(rngSeed_);
    auto chain = shape_chain();  // also validates the layer chaining
    params_.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const LayerSpec& spec = layers_[i];
      const auto& in = chain[i];
      if (spec.kind == LayerKind::conv) {
        const std::size_t inC = in[2];
        Tensor w({spec.filterSize, spec.filterSize, inC, spec.outChannels});
        const double stddev =
            std::sqrt(2.0 / static_cast<double>(spec.filterSize *
                                                spec.filterSize * inC));
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = stddev * rng.normal();
        params_[i].weights = std::move(w);
        params_[i].bias = Tensor({spec.outChannels});  // zero biases
      } else if (spec.kind == LayerKind::fc) {
        const std::size_t inN = in[0];
        Tensor w({inN, spec.units});
        const double stddev = std::sqrt(2.0 / static_cast<double>(inN));
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = stddev * rng.normal();
        params_[i].weights = std::move(w);
        params_[i].bias = Tensor({spec.units});
      }
    }
  }

  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> inputShape_;
  std::vector<LayerParams> params_;
  std::uint64_t rngSeed_ = 0;
  bool trained_ = false;
};

/// The body-orientation network: two 5x5x64 stride-2 conv layers (SAME
/// padding), each followed by LRN and ReLU, then fc 384, fc 192 and an
/// 8-way softmax head. Input is a 32x32x3 image.
inline OrientationModel build_paper_model(std::uint64_t seed) {
  std::vector<LayerSpec> layers{
      LayerSpec::conv2d(5, 64, 2, Padding::same),
      LayerSpec::localResponseNorm(),
      LayerSpec::relu(),
      LayerSpec::conv2d(5, 64, 2, Padding::same),
      LayerSpec::localResponseNorm(),
      LayerSpec::relu(),
      LayerSpec::flatten(),
      LayerSpec::fullyConnected(384),
      LayerSpec::relu(),
      LayerSpec::fullyConnected(192),
      LayerSpec::relu(),
      LayerSpec::fullyConnected(8),
      LayerSpec::softmax(),
  };
  return OrientationModel(std::move(layers), {32, 32, 3}, seed);
}

/// Forward pass producing class probabilities.
inline Tensor forward(const OrientationModel& model, const Tensor& image) {
  if (image.shape() != model.input_shape())
    throw ShapeError("model input must be " +
                     Tensor::shape_string(model.input_shape()) + ", got " +
                     image.shape_string());
  Tensor x = image;
  const auto& layers = model.layers();
  const auto& params = model.params();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& spec = layers[i];
    switch (spec.kind) {
      case LayerKind::conv:
        x = conv2d_forward(x, params[i].weights, params[i].bias, spec.stride,
                           spec.padding);
        break;
      case LayerKind::lrn:
        x = lrn_forward(x, spec.lrn);
        break;
      case LayerKind::relu:
        x = relu_forward(x);
        break;
      case LayerKind::flatten:
        x = x.reshaped({x.size()});
        break;
      case LayerKind::fc:
        x = fc_forward(x, params[i].weights, params[i].bias);
        break;
      case LayerKind::softmax:
        x = softmax(x);
        break;
    }
  }
  return x;
}

/// Argmax with ties broken toward the lowest index.
inline int argmax_class(const Tensor& probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = static_cast<int>(i);
  return best;
}

struct Prediction {
  Tensor probs;
  int classIndex = 0;
};

/// Class distribution and argmax class for one image (values in [0,1]).
inline Prediction predict(const OrientationModel& model, const Tensor& image) {
  Prediction p;
  p.probs = forward(model, image);
  p.classIndex = argmax_class(p.probs);
  return p;
}

}  // namespace orientbot::nn
