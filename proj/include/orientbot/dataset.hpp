#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "orientbot/errors.hpp"
#include "orientbot/labels.hpp"
#include "orientbot/rng.hpp"
#include "orientbot/tensor.hpp"

namespace orientbot::data {

inline constexpr std::size_t kImageSize = 32;
inline constexpr std::size_t kImageChannels = 3;

/// One 32x32x3 image with its class label, plus the continuous angle and the
/// joint triple when the source provides them.
struct LabeledSample {
  nn::Tensor image;  // (32, 32, 3), values in [0, 1]
  int classLabel = 0;
  std::optional<double> trueAngle;
  std::optional<labels::JointTriple> joints;

  bool operator==(const LabeledSample& other) const {
    return image == other.image && classLabel == other.classLabel &&
           trueAngle == other.trueAngle && joints == other.joints;
  }
};

enum class Provenance { synthetic, imported };

struct Dataset {
  std::vector<LabeledSample> samples;
  Provenance provenance = Provenance::imported;
  std::uint64_t seed = 0;

  std::size_t size() const { return samples.size(); }

  std::array<std::size_t, 8> class_histogram() const {
    std::array<std::size_t, 8> h{};
    for (const auto& s : samples) h[static_cast<std::size_t>(s.classLabel)]++;
    return h;
  }
};

/// Seeded shuffle-then-partition split. The validation set takes the first
/// round(n * valFraction) shuffled samples; train and val are disjoint and
/// their union is the input multiset.
inline std::pair<Dataset, Dataset> split(const Dataset& dataset,
                                         double valFraction,
                                         std::uint64_t seed) {
  if (!(valFraction > 0.0 && valFraction < 1.0))
    throw ArgumentError("valFraction must be in (0, 1)");
  const std::size_t n = dataset.samples.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  const std::size_t valCount = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * valFraction));

  Dataset val{{}, dataset.provenance, seed};
  Dataset train{{}, dataset.provenance, seed};
  val.samples.reserve(valCount);
  train.samples.reserve(n - valCount);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < valCount)
      val.samples.push_back(dataset.samples[idx[i]]);
    else
      train.samples.push_back(dataset.samples[idx[i]]);
  }
  return {std::move(train), std::move(val)};
}

inline constexpr char kDatasetMagic[4] = {'O', 'B', 'D', 'S'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint8_t kFlagHasAngle = 0x01;
inline constexpr std::uint8_t kFlagHasJoints = 0x02;

/// Dataset file: magic "OBDS", u32 version=1, u32 sampleCount, u8 flags
/// (hasAngle, hasJoints), then per record: 32*32*3 little-endian f32 image
/// values (channel-last), u8 label, f32 angle if flagged, 9 f32 joint
/// coordinates if flagged.
inline void save_dataset(const Dataset& dataset, const std::string& path) {
  const bool hasAngle =
      !dataset.samples.empty() && dataset.samples.front().trueAngle.has_value();
  const bool hasJoints =
      !dataset.samples.empty() && dataset.samples.front().joints.has_value();
  for (const auto& s : dataset.samples) {
    if (s.trueAngle.has_value() != hasAngle ||
        s.joints.has_value() != hasJoints)
      throw ArgumentError(
          "dataset mixes samples with and without angle/joints");
    if (s.image.shape() != std::vector<std::size_t>{kImageSize, kImageSize,
                                                    kImageChannels})
      throw ShapeError("dataset image must be 32x32x3, got " +
                       s.image.shape_string());
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open dataset file for writing: " + path);
  out.write(kDatasetMagic, 4);
  const std::uint32_t version = kDatasetVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint32_t count = static_cast<std::uint32_t>(dataset.samples.size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  const std::uint8_t flags = (hasAngle ? kFlagHasAngle : 0) |
                             (hasJoints ? kFlagHasJoints : 0);
  out.write(reinterpret_cast<const char*>(&flags), 1);

  std::vector<float> buf(kImageSize * kImageSize * kImageChannels);
  for (const auto& s : dataset.samples) {
    for (std::size_t i = 0; i < buf.size(); ++i)
      buf[i] = static_cast<float>(s.image[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    const std::uint8_t label = static_cast<std::uint8_t>(s.classLabel);
    out.write(reinterpret_cast<const char*>(&label), 1);
    if (hasAngle) {
      const float a = static_cast<float>(*s.trueAngle);
      out.write(reinterpret_cast<const char*>(&a), sizeof(float));
    }
    if (hasJoints) {
      const auto& j = *s.joints;
      const float c[9] = {
          static_cast<float>(j.neck.x),         static_cast<float>(j.neck.y),
          static_cast<float>(j.neck.z),
          static_cast<float>(j.rightUpperLeg.x),
          static_cast<float>(j.rightUpperLeg.y),
          static_cast<float>(j.rightUpperLeg.z),
          static_cast<float>(j.leftUpperLeg.x),
          static_cast<float>(j.leftUpperLeg.y),
          static_cast<float>(j.leftUpperLeg.z)};
      out.write(reinterpret_cast<const char*>(c), sizeof(c));
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);

  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4) throw FormatError("truncated dataset file");
  if (std::memcmp(magic, kDatasetMagic, 4) != 0)
    throw FormatError("magic mismatch: not a dataset file");
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (!in) throw FormatError("truncated dataset file");
  if (version != kDatasetVersion)
    throw FormatError("unsupported dataset version " + std::to_string(version));
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  std::uint8_t flags = 0;
  in.read(reinterpret_cast<char*>(&flags), 1);
  if (!in) throw FormatError("truncated dataset file");

  const bool hasAngle = flags & kFlagHasAngle;
  const bool hasJoints = flags & kFlagHasJoints;

  Dataset dataset;
  dataset.provenance = Provenance::imported;
  dataset.samples.reserve(count);
  std::vector<float> buf(kImageSize * kImageSize * kImageChannels);
  for (std::uint32_t r = 0; r < count; ++r) {
    LabeledSample s;
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float))
      throw FormatError("truncated dataset file (record " + std::to_string(r) +
                        ")");
    s.image = nn::Tensor({kImageSize, kImageSize, kImageChannels});
    for (std::size_t i = 0; i < buf.size(); ++i)
      s.image[i] = static_cast<double>(buf[i]);
    std::uint8_t label = 0;
    in.read(reinterpret_cast<char*>(&label), 1);
    if (!in) throw FormatError("truncated dataset file (record " +
                               std::to_string(r) + ")");
    if (label >= 8)
      throw FormatError("dataset record " + std::to_string(r) +
                        ": label out of range");
    s.classLabel = label;
    if (hasAngle) {
      float a = 0;
      in.read(reinterpret_cast<char*>(&a), sizeof(float));
      if (!in) throw FormatError("truncated dataset file (record " +
                                 std::to_string(r) + ")");
      s.trueAngle = static_cast<double>(a);
    }
    if (hasJoints) {
      float c[9];
      in.read(reinterpret_cast<char*>(c), sizeof(c));
      if (!in) throw FormatError("truncated dataset file (record " +
                                 std::to_string(r) + ")");
      labels::JointTriple j;
      j.neck = {c[0], c[1], c[2]};
      j.rightUpperLeg = {c[3], c[4], c[5]};
      j.leftUpperLeg = {c[6], c[7], c[8]};
      s.joints = j;
    }
    dataset.samples.push_back(std::move(s));
  }
  return dataset;
}

}  // namespace orientbot::data
