#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "orientbot/errors.hpp"
#include "orientbot/labels.hpp"

namespace orientbot::eval {

/// 8x8 confusion counts; rows are true labels, columns predictions.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, 8>, 8> counts{};

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts)
      for (auto c : row) t += c;
    return t;
  }

  std::uint64_t trace() const {
    std::uint64_t t = 0;
    for (int i = 0; i < 8; ++i) t += counts[i][i];
    return t;
  }
};

/// Angular distance between two class centers, whole degrees.
inline std::uint64_t class_distance_deg(int t, int p) {
  const int d = std::abs(t - p);
  return 45ull * static_cast<std::uint64_t>(std::min(d, 8 - d));
}

inline ConfusionMatrix confusion(const std::vector<int>& preds,
                                 const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    throw ArgumentError("confusion: predictions and labels differ in length");
  if (preds.empty()) throw ArgumentError("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= 8 || preds[i] < 0 || preds[i] >= 8)
      throw ArgumentError("confusion: class index out of 0..7");
    cm.counts[static_cast<std::size_t>(labels[i])]
             [static_cast<std::size_t>(preds[i])]++;
  }
  return cm;
}

inline double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw ArgumentError("accuracy: empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

/// Mean wrapped angular distance between true and predicted class centers,
/// averaged over all samples (correct predictions contribute 0). Computed in
/// exact integer arithmetic before the final division.
inline double mean_orientation_error(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0)
    throw ArgumentError("mean_orientation_error: empty confusion matrix");
  std::uint64_t weighted = 0;
  for (int t = 0; t < 8; ++t)
    for (int p = 0; p < 8; ++p)
      weighted += cm.counts[static_cast<std::size_t>(t)]
                           [static_cast<std::size_t>(p)] *
                  class_distance_deg(t, p);
  return static_cast<double>(weighted) / static_cast<double>(total);
}

/// Among misclassified mass, the fraction whose predicted class is 45 deg
/// from the true class. Undefined (rejected) without misclassifications.
inline double nearest_label_fraction(const ConfusionMatrix& cm) {
  std::uint64_t off = 0, near45 = 0;
  for (int t = 0; t < 8; ++t)
    for (int p = 0; p < 8; ++p) {
      if (t == p) continue;
      const std::uint64_t c =
          cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
      off += c;
      if (class_distance_deg(t, p) == 45) near45 += c;
    }
  if (off == 0)
    throw ArgumentError(
        "nearest_label_fraction: no misclassifications; undefined");
  return static_cast<double>(near45) / static_cast<double>(off);
}

/// CSV rendering with true labels as rows: header "degrees,0,45,...", then
/// one row per true class labeled by its center angle.
inline std::string to_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "degrees";
  for (int p = 0; p < 8; ++p) os << "," << p * 45;
  os << "\n";
  for (int t = 0; t < 8; ++t) {
    os << t * 45;
    for (int p = 0; p < 8; ++p)
      os << ","
         << cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    os << "\n";
  }
  return os.str();
}

}  // namespace orientbot::eval
