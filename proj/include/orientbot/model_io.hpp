#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "orientbot/errors.hpp"
#include "orientbot/model.hpp"

namespace orientbot::nn {

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts unsupported");

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("truncated model file");
  return v;
}

}  // namespace detail

inline constexpr char kModelMagic[4] = {'O', 'B', 'N', 'N'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Binary model format: magic "OBNN", u32 version, u32 layer count, per-layer
/// kind tag + hyperparameters + parameter dims, then raw f64 parameter
/// payloads in declaration order, then input shape, rng seed and trained flag.
inline void save_model(const OrientationModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open model file for writing: " + path);

  out.write(kModelMagic, 4);
  detail::write_pod(out, kModelVersion);
  detail::write_pod(out, static_cast<std::uint32_t>(model.layers().size()));

  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const LayerSpec& spec = model.layers()[i];
    detail::write_pod(out, static_cast<std::uint32_t>(spec.kind));
    switch (spec.kind) {
      case LayerKind::conv:
        detail::write_pod(out, static_cast<std::uint32_t>(spec.filterSize));
        detail::write_pod(out, static_cast<std::uint32_t>(spec.outChannels));
        detail::write_pod(out, static_cast<std::uint32_t>(spec.stride));
        detail::write_pod(out, static_cast<std::uint32_t>(
                                   spec.padding == Padding::same ? 0 : 1));
        break;
      case LayerKind::lrn:
        detail::write_pod(out, static_cast<std::uint32_t>(spec.lrn.n));
        detail::write_pod(out, spec.lrn.k);
        detail::write_pod(out, spec.lrn.alpha);
        detail::write_pod(out, spec.lrn.beta);
        break;
      case LayerKind::fc:
        detail::write_pod(out, static_cast<std::uint32_t>(spec.units));
        break;
      default:
        break;
    }
    const LayerParams& p = model.params()[i];
    const std::uint32_t tensors = p.has() ? 2u : 0u;
    detail::write_pod(out, tensors);
    if (p.has()) {
      for (const Tensor* t : {&p.weights, &p.bias}) {
        detail::write_pod(out, static_cast<std::uint32_t>(t->rank()));
        for (auto e : t->shape())
          detail::write_pod(out, static_cast<std::uint32_t>(e));
      }
    }
  }

  for (const auto& p : model.params()) {
    if (!p.has()) continue;
    out.write(reinterpret_cast<const char*>(p.weights.data()),
              static_cast<std::streamsize>(p.weights.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(p.bias.data()),
              static_cast<std::streamsize>(p.bias.size() * sizeof(double)));
  }

  detail::write_pod(out, static_cast<std::uint32_t>(model.input_shape().size()));
  for (auto e : model.input_shape())
    detail::write_pod(out, static_cast<std::uint32_t>(e));
  detail::write_pod(out, static_cast<std::uint64_t>(model.rng_seed()));
  detail::write_pod(out, static_cast<std::uint8_t>(model.trained() ? 1 : 0));

  if (!out) throw IoError("write failed: " + path);
}

inline OrientationModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);

  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4) throw FormatError("truncated model file");
  if (std::memcmp(magic, kModelMagic, 4) != 0)
    throw FormatError("magic mismatch: not a model file");
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != kModelVersion)
    throw FormatError("unsupported model version " + std::to_string(version));

  const auto layerCount = detail::read_pod<std::uint32_t>(in);
  std::vector<LayerSpec> layers;
  std::vector<LayerParams> params(layerCount);
  std::vector<std::vector<std::vector<std::size_t>>> dims(layerCount);

  for (std::uint32_t i = 0; i < layerCount; ++i) {
    LayerSpec spec;
    const auto kind = detail::read_pod<std::uint32_t>(in);
    if (kind > static_cast<std::uint32_t>(LayerKind::softmax))
      throw FormatError("unknown layer kind tag " + std::to_string(kind));
    spec.kind = static_cast<LayerKind>(kind);
    switch (spec.kind) {
      case LayerKind::conv:
        spec.filterSize = detail::read_pod<std::uint32_t>(in);
        spec.outChannels = detail::read_pod<std::uint32_t>(in);
        spec.stride = detail::read_pod<std::uint32_t>(in);
        spec.padding = detail::read_pod<std::uint32_t>(in) == 0 ? Padding::same
                                                                : Padding::valid;
        break;
      case LayerKind::lrn:
        spec.lrn.n = detail::read_pod<std::uint32_t>(in);
        spec.lrn.k = detail::read_pod<double>(in);
        spec.lrn.alpha = detail::read_pod<double>(in);
        spec.lrn.beta = detail::read_pod<double>(in);
        break;
      case LayerKind::fc:
        spec.units = detail::read_pod<std::uint32_t>(in);
        break;
      default:
        break;
    }
    const auto tensors = detail::read_pod<std::uint32_t>(in);
    if (tensors != 0 && tensors != 2)
      throw FormatError("layer " + std::to_string(i) +
                        ": unexpected parameter tensor count");
    for (std::uint32_t t = 0; t < tensors; ++t) {
      const auto rank = detail::read_pod<std::uint32_t>(in);
      if (rank > 4) throw FormatError("parameter tensor rank > 4");
      std::vector<std::size_t> shape(rank);
      for (auto& e : shape) e = detail::read_pod<std::uint32_t>(in);
      dims[i].push_back(std::move(shape));
    }
    layers.push_back(spec);
  }

  for (std::uint32_t i = 0; i < layerCount; ++i) {
    if (dims[i].empty()) continue;
    Tensor w(dims[i][0]);
    Tensor b(dims[i][1]);
    in.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(w.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != w.size() * sizeof(double))
      throw FormatError("truncated model file");
    in.read(reinterpret_cast<char*>(b.data()),
            static_cast<std::streamsize>(b.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != b.size() * sizeof(double))
      throw FormatError("truncated model file");
    params[i].weights = std::move(w);
    params[i].bias = std::move(b);
  }

  const auto inputRank = detail::read_pod<std::uint32_t>(in);
  if (inputRank > 4) throw FormatError("input shape rank > 4");
  std::vector<std::size_t> inputShape(inputRank);
  for (auto& e : inputShape) e = detail::read_pod<std::uint32_t>(in);
  const auto seed = detail::read_pod<std::uint64_t>(in);
  const auto trained = detail::read_pod<std::uint8_t>(in);

  return OrientationModel::assemble(std::move(layers), std::move(inputShape),
                                    std::move(params), seed, trained != 0);
}

}  // namespace orientbot::nn
