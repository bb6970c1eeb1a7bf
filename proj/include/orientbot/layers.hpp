#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "orientbot/errors.hpp"
#include "orientbot/tensor.hpp"

namespace orientbot::nn {

enum class Padding { same, valid };

/// Output spatial extent of a convolution along one axis.
/// SAME padding keeps ceil(in/stride); VALID keeps floor((in-k)/stride)+1.
inline std::size_t conv_out_extent(std::size_t in, std::size_t k,
                                   std::size_t stride, Padding padding) {
  if (padding == Padding::same) return (in + stride - 1) / stride;
  if (in < k) throw ShapeError("valid conv: input smaller than filter");
  return (in - k) / stride + 1;
}

/// Leading pad along one axis. SAME splits total pad low/high, extra on high.
inline std::size_t conv_pad_before(std::size_t in, std::size_t k,
                                   std::size_t stride, Padding padding) {
  if (padding == Padding::valid) return 0;
  const std::size_t out = conv_out_extent(in, k, stride, padding);
  const std::size_t span = (out - 1) * stride + k;
  const std::size_t total = span > in ? span - in : 0;
  return total / 2;
}

struct Conv2dCache {
  Tensor input;    // (H, W, C)
  Tensor filters;  // (kH, kW, inC, outC)
  std::size_t stride = 0;
  Padding padding = Padding::same;
  bool valid = false;
};

struct Conv2dGrads {
  Tensor input;
  Tensor filters;
  Tensor bias;
};

/// 2-D convolution (cross-correlation), channel-last. Returns the
/// pre-activation feature map plus per-filter bias; activations are a
/// separate op.
inline Tensor conv2d_forward(const Tensor& input, const Tensor& filters,
                             const Tensor& bias, std::size_t stride,
                             Padding padding, Conv2dCache* cache = nullptr) {
  if (input.rank() != 3)
    throw ShapeError("conv2d input must be rank 3 (H,W,C), got " +
                     input.shape_string());
  if (filters.rank() != 4)
    throw ShapeError("conv2d filters must be rank 4 (kH,kW,inC,outC), got " +
                     filters.shape_string());
  if (input.extent(2) != filters.extent(2))
    throw ShapeError("conv2d channel mismatch: input " + input.shape_string() +
                     " vs filters " + filters.shape_string());
  if (stride < 1) throw ArgumentError("conv2d stride must be >= 1");
  const std::size_t outC = filters.extent(3);
  if (bias.rank() != 1 || bias.extent(0) != outC)
    throw ShapeError("conv2d bias must be rank 1 of extent outC, got " +
                     bias.shape_string());

  const std::size_t inH = input.extent(0), inW = input.extent(1),
                    inC = input.extent(2);
  const std::size_t kH = filters.extent(0), kW = filters.extent(1);
  const std::size_t outH = conv_out_extent(inH, kH, stride, padding);
  const std::size_t outW = conv_out_extent(inW, kW, stride, padding);
  const long padTop =
      static_cast<long>(conv_pad_before(inH, kH, stride, padding));
  const long padLeft =
      static_cast<long>(conv_pad_before(inW, kW, stride, padding));

  Tensor out({outH, outW, outC});
  double* o = out.data();
  for (std::size_t oy = 0; oy < outH; ++oy)
    for (std::size_t ox = 0; ox < outW; ++ox)
      for (std::size_t c = 0; c < outC; ++c)
        o[(oy * outW + ox) * outC + c] = bias[c];

  const double* x = input.data();
  const double* w = filters.data();
  for (std::size_t oy = 0; oy < outH; ++oy) {
    for (std::size_t ox = 0; ox < outW; ++ox) {
      double* orow = o + (oy * outW + ox) * outC;
      for (std::size_t fy = 0; fy < kH; ++fy) {
        const long iy = static_cast<long>(oy * stride + fy) - padTop;
        if (iy < 0 || iy >= static_cast<long>(inH)) continue;
        for (std::size_t fx = 0; fx < kW; ++fx) {
          const long ix = static_cast<long>(ox * stride + fx) - padLeft;
          if (ix < 0 || ix >= static_cast<long>(inW)) continue;
          const double* xpix = x + (iy * inW + ix) * inC;
          const double* wrow = w + (fy * kW + fx) * inC * outC;
          for (std::size_t ic = 0; ic < inC; ++ic) {
            const double xv = xpix[ic];
            const double* wk = wrow + ic * outC;
            for (std::size_t oc = 0; oc < outC; ++oc) orow[oc] += xv * wk[oc];
          }
        }
      }
    }
  }

  if (cache) {
    cache->input = input;
    cache->filters = filters;
    cache->stride = stride;
    cache->padding = padding;
    cache->valid = true;
  }
  return out;
}

/// Filters transposed to (kH, kW, outC, inC); keeps the input-gradient loop
/// contiguous in its innermost dimension.
inline Tensor transpose_filters(const Tensor& filters) {
  const std::size_t kH = filters.extent(0), kW = filters.extent(1),
                    inC = filters.extent(2), outC = filters.extent(3);
  Tensor t({kH, kW, outC, inC});
  for (std::size_t fy = 0; fy < kH; ++fy)
    for (std::size_t fx = 0; fx < kW; ++fx)
      for (std::size_t ic = 0; ic < inC; ++ic)
        for (std::size_t oc = 0; oc < outC; ++oc)
          t.at(fy, fx, oc, ic) = filters.at(fy, fx, ic, oc);
  return t;
}

/// Core of the convolution backward pass. Adds the filter and bias gradients
/// into the given accumulators (used directly by the minibatch trainer) and
/// returns the input gradient. `filtersT` must be
/// transpose_filters(cache.filters).
inline Tensor conv2d_backward_into(const Tensor& gradOut,
                                   const Conv2dCache& cache,
                                   const Tensor& filtersT,
                                   Tensor& gradFiltersAcc,
                                   Tensor& gradBiasAcc) {
  if (!cache.valid) throw ArgumentError("conv2d_backward: missing cache");
  const Tensor& input = cache.input;
  const Tensor& filters = cache.filters;
  const std::size_t stride = cache.stride;
  const Padding padding = cache.padding;

  const std::size_t inH = input.extent(0), inW = input.extent(1),
                    inC = input.extent(2);
  const std::size_t kH = filters.extent(0), kW = filters.extent(1);
  const std::size_t outC = filters.extent(3);
  const std::size_t outH = conv_out_extent(inH, kH, stride, padding);
  const std::size_t outW = conv_out_extent(inW, kW, stride, padding);
  if (gradOut.rank() != 3 || gradOut.extent(0) != outH ||
      gradOut.extent(1) != outW || gradOut.extent(2) != outC)
    throw ShapeError("conv2d_backward gradOut shape " + gradOut.shape_string() +
                     " does not match forward output");

  const long padTop =
      static_cast<long>(conv_pad_before(inH, kH, stride, padding));
  const long padLeft =
      static_cast<long>(conv_pad_before(inW, kW, stride, padding));

  Tensor gradInput(input.shape());

  const double* go = gradOut.data();
  const double* x = input.data();
  const double* wt = filtersT.data();
  double* gx = gradInput.data();
  double* gw = gradFiltersAcc.data();
  double* gb = gradBiasAcc.data();

  for (std::size_t oy = 0; oy < outH; ++oy) {
    for (std::size_t ox = 0; ox < outW; ++ox) {
      const double* grow = go + (oy * outW + ox) * outC;
      for (std::size_t oc = 0; oc < outC; ++oc) gb[oc] += grow[oc];
      for (std::size_t fy = 0; fy < kH; ++fy) {
        const long iy = static_cast<long>(oy * stride + fy) - padTop;
        if (iy < 0 || iy >= static_cast<long>(inH)) continue;
        for (std::size_t fx = 0; fx < kW; ++fx) {
          const long ix = static_cast<long>(ox * stride + fx) - padLeft;
          if (ix < 0 || ix >= static_cast<long>(inW)) continue;
          const double* xpix = x + (iy * inW + ix) * inC;
          double* gxpix = gx + (iy * inW + ix) * inC;
          double* gwrow = gw + (fy * kW + fx) * inC * outC;
          const double* wtrow = wt + (fy * kW + fx) * outC * inC;
          for (std::size_t ic = 0; ic < inC; ++ic) {
            const double xv = xpix[ic];
            double* gwk = gwrow + ic * outC;
            for (std::size_t oc = 0; oc < outC; ++oc) gwk[oc] += xv * grow[oc];
          }
          for (std::size_t oc = 0; oc < outC; ++oc) {
            const double gv = grow[oc];
            const double* wti = wtrow + oc * inC;
            for (std::size_t ic = 0; ic < inC; ++ic) gxpix[ic] += gv * wti[ic];
          }
        }
      }
    }
  }
  return gradInput;
}

/// Gradients of the convolution w.r.t. input, filters and bias.
inline Conv2dGrads conv2d_backward(const Tensor& gradOut,
                                   const Conv2dCache& cache) {
  if (!cache.valid) throw ArgumentError("conv2d_backward: missing cache");
  Conv2dGrads g;
  g.filters = Tensor(cache.filters.shape());
  g.bias = Tensor({cache.filters.extent(3)});
  const Tensor filtersT = transpose_filters(cache.filters);
  g.input = conv2d_backward_into(gradOut, cache, filtersT, g.filters, g.bias);
  return g;
}

/// Local response normalization constants. Defaults follow the usual
/// cross-channel setup: k=2, n=5, alpha=1e-4, beta=0.75.
struct LrnParams {
  double k = 2.0;
  std::size_t n = 5;
  double alpha = 1e-4;
  double beta = 0.75;
};

struct LrnCache {
  Tensor input;
  Tensor denom;     // k + alpha * windowed sum of squares
  Tensor denomPow;  // denom^(-beta)
  LrnParams params;
  bool valid = false;
};

/// Cross-channel LRN over the last (channel) axis:
///   out[..., c] = in[..., c] / (k + alpha * sum_{c' in window(c,n)} in^2)^beta
/// with the window clipped at channel bounds.
inline Tensor lrn_forward(const Tensor& input, const LrnParams& p,
                          LrnCache* cache = nullptr) {
  if (input.rank() < 1) throw ShapeError("lrn input must have rank >= 1");
  if (p.n % 2 == 0) throw ArgumentError("lrn window n must be odd");
  if (p.k <= 0.0) throw ArgumentError("lrn k must be positive");

  const std::size_t channels = input.extent(input.rank() - 1);
  const std::size_t pixels = input.size() / channels;
  const long half = static_cast<long>(p.n / 2);

  Tensor out(input.shape());
  Tensor denom(input.shape());
  Tensor denomPow(input.shape());
  const double* x = input.data();
  double* o = out.data();
  double* d = denom.data();
  double* dp = denomPow.data();

  for (std::size_t pix = 0; pix < pixels; ++pix) {
    const double* xc = x + pix * channels;
    double* oc = o + pix * channels;
    double* dc = d + pix * channels;
    double* dpc = dp + pix * channels;
    for (long c = 0; c < static_cast<long>(channels); ++c) {
      const long lo = std::max<long>(0, c - half);
      const long hi = std::min<long>(static_cast<long>(channels) - 1, c + half);
      double sum = 0.0;
      for (long j = lo; j <= hi; ++j) sum += xc[j] * xc[j];
      dc[c] = p.k + p.alpha * sum;
      dpc[c] = std::pow(dc[c], -p.beta);
      oc[c] = xc[c] * dpc[c];
    }
  }

  if (cache) {
    cache->input = input;
    cache->denom = std::move(denom);
    cache->denomPow = std::move(denomPow);
    cache->params = p;
    cache->valid = true;
  }
  return out;
}

inline Tensor lrn_backward(const Tensor& gradOut, const LrnCache& cache) {
  if (!cache.valid) throw ArgumentError("lrn_backward: missing cache");
  if (!gradOut.same_shape(cache.input))
    throw ShapeError("lrn_backward gradOut shape " + gradOut.shape_string() +
                     " does not match input " + cache.input.shape_string());
  const LrnParams& p = cache.params;
  const std::size_t channels = cache.input.extent(cache.input.rank() - 1);
  const std::size_t pixels = cache.input.size() / channels;
  const long half = static_cast<long>(p.n / 2);

  Tensor gradIn(cache.input.shape());
  const double* x = cache.input.data();
  const double* g = gradOut.data();
  const double* d = cache.denom.data();
  const double* dp = cache.denomPow.data();
  double* gi = gradIn.data();

  // d out[c'] / d in[c] has a direct term (c'=c) and a window term through
  // the squared sum; the clipped window relation is symmetric, so
  // c in window(c') iff c' in window(c).
  std::vector<double> e(channels);
  for (std::size_t pix = 0; pix < pixels; ++pix) {
    const double* xc = x + pix * channels;
    const double* gc = g + pix * channels;
    const double* dc = d + pix * channels;
    const double* dpc = dp + pix * channels;
    double* gic = gi + pix * channels;
    for (std::size_t c = 0; c < channels; ++c)
      e[c] = gc[c] * xc[c] * dpc[c] / dc[c];
    for (long c = 0; c < static_cast<long>(channels); ++c) {
      const long lo = std::max<long>(0, c - half);
      const long hi = std::min<long>(static_cast<long>(channels) - 1, c + half);
      double winSum = 0.0;
      for (long j = lo; j <= hi; ++j) winSum += e[j];
      gic[c] = gc[c] * dpc[c] - 2.0 * p.alpha * p.beta * xc[c] * winSum;
    }
  }
  return gradIn;
}

struct ReluCache {
  Tensor input;
  bool valid = false;
};

inline Tensor relu_forward(const Tensor& input, ReluCache* cache = nullptr) {
  Tensor out(input.shape());
  const double* x = input.data();
  double* o = out.data();
  for (std::size_t i = 0; i < input.size(); ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
  if (cache) {
    cache->input = input;
    cache->valid = true;
  }
  return out;
}

inline Tensor relu_backward(const Tensor& gradOut, const ReluCache& cache) {
  if (!cache.valid) throw ArgumentError("relu_backward: missing cache");
  if (!gradOut.same_shape(cache.input))
    throw ShapeError("relu_backward shape mismatch");
  Tensor gradIn(cache.input.shape());
  const double* x = cache.input.data();
  const double* g = gradOut.data();
  double* gi = gradIn.data();
  for (std::size_t i = 0; i < gradIn.size(); ++i)
    gi[i] = x[i] > 0.0 ? g[i] : 0.0;
  return gradIn;
}

struct FcCache {
  Tensor input;    // (in)
  Tensor weights;  // (in, out)
  bool valid = false;
};

struct FcGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

/// Fully connected layer: out[j] = sum_i in[i] * W[i][j] + b[j].
inline Tensor fc_forward(const Tensor& input, const Tensor& weights,
                         const Tensor& bias, FcCache* cache = nullptr) {
  if (input.rank() != 1)
    throw ShapeError("fc input must be rank 1, got " + input.shape_string());
  if (weights.rank() != 2 || weights.extent(0) != input.extent(0))
    throw ShapeError("fc weights " + weights.shape_string() +
                     " do not match input " + input.shape_string());
  const std::size_t in = weights.extent(0), out = weights.extent(1);
  if (bias.rank() != 1 || bias.extent(0) != out)
    throw ShapeError("fc bias shape mismatch");

  Tensor o({out});
  double* op = o.data();
  const double* xp = input.data();
  const double* wp = weights.data();
  for (std::size_t j = 0; j < out; ++j) op[j] = bias[j];
  for (std::size_t i = 0; i < in; ++i) {
    const double xv = xp[i];
    const double* wrow = wp + i * out;
    for (std::size_t j = 0; j < out; ++j) op[j] += xv * wrow[j];
  }
  if (cache) {
    cache->input = input;
    cache->weights = weights;
    cache->valid = true;
  }
  return o;
}

/// Weights transposed to (out, in) for the backward input-gradient loop.
inline Tensor transpose_fc_weights(const Tensor& weights) {
  const std::size_t in = weights.extent(0), out = weights.extent(1);
  Tensor t({out, in});
  for (std::size_t i = 0; i < in; ++i)
    for (std::size_t j = 0; j < out; ++j)
      t[j * in + i] = weights[i * out + j];
  return t;
}

/// Core of the fully connected backward pass; adds weight and bias gradients
/// into the accumulators and returns the input gradient. `weightsT` must be
/// transpose_fc_weights(cache.weights).
inline Tensor fc_backward_into(const Tensor& gradOut, const FcCache& cache,
                               const Tensor& weightsT, Tensor& gradWeightsAcc,
                               Tensor& gradBiasAcc) {
  if (!cache.valid) throw ArgumentError("fc_backward: missing cache");
  const std::size_t in = cache.weights.extent(0),
                    out = cache.weights.extent(1);
  if (gradOut.rank() != 1 || gradOut.extent(0) != out)
    throw ShapeError("fc_backward gradOut shape mismatch");

  Tensor gradInput({in});

  const double* go = gradOut.data();
  const double* xp = cache.input.data();
  const double* wt = weightsT.data();
  double* gxp = gradInput.data();
  double* gwp = gradWeightsAcc.data();
  double* gbp = gradBiasAcc.data();

  for (std::size_t j = 0; j < out; ++j) gbp[j] += go[j];
  for (std::size_t i = 0; i < in; ++i) {
    const double xv = xp[i];
    double* gwrow = gwp + i * out;
    for (std::size_t j = 0; j < out; ++j) gwrow[j] += xv * go[j];
  }
  for (std::size_t j = 0; j < out; ++j) {
    const double gv = go[j];
    const double* wtrow = wt + j * in;
    for (std::size_t i = 0; i < in; ++i) gxp[i] += gv * wtrow[i];
  }
  return gradInput;
}

inline FcGrads fc_backward(const Tensor& gradOut, const FcCache& cache) {
  if (!cache.valid) throw ArgumentError("fc_backward: missing cache");
  FcGrads g;
  g.weights = Tensor(cache.weights.shape());
  g.bias = Tensor({cache.weights.extent(1)});
  const Tensor weightsT = transpose_fc_weights(cache.weights);
  g.input = fc_backward_into(gradOut, cache, weightsT, g.weights, g.bias);
  return g;
}

/// Softmax probabilities (numerically stabilized).
inline Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 1) throw ShapeError("softmax expects a rank-1 tensor");
  const std::size_t n = logits.size();
  Tensor p({n});
  double m = logits[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, logits[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
  return p;
}

struct SoftmaxLoss {
  double loss = 0.0;
  Tensor gradLogits;
  Tensor probs;
};

/// Cross-entropy loss over softmax(logits) against an integer class label.
/// gradLogits = probs - onehot(label).
inline SoftmaxLoss softmax_cross_entropy(const Tensor& logits, int label) {
  if (logits.rank() != 1) throw ShapeError("softmax expects a rank-1 tensor");
  const std::size_t n = logits.size();
  if (label < 0 || static_cast<std::size_t>(label) >= n)
    throw ArgumentError("label " + std::to_string(label) + " out of 0.." +
                        std::to_string(n - 1));
  SoftmaxLoss r;
  r.probs = softmax(logits);
  double m = logits[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, logits[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(logits[i] - m);
  r.loss = -(logits[static_cast<std::size_t>(label)] - m - std::log(sum));
  r.gradLogits = r.probs;
  r.gradLogits[static_cast<std::size_t>(label)] -= 1.0;
  return r;
}

}  // namespace orientbot::nn
