#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "orientbot/errors.hpp"

namespace orientbot::labels {

inline constexpr int kNumClasses = 8;
inline constexpr double kSectorDeg = 45.0;

/// Wrap an angle into [0, 360).
inline double wrap_degrees(double a) {
  double r = std::fmod(a, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r = 0.0;  // fmod can return 360.0 - tiny -> rounded up
  return r;
}

/// Wrapped distance between two angles, in [0, 180].
inline double angular_difference(double a, double b) {
  double d = std::fabs(wrap_degrees(a) - wrap_degrees(b));
  return std::min(d, 360.0 - d);
}

/// Class index for an orientation angle. Sectors are 45 deg wide, centered on
/// multiples of 45 deg; the exact boundary k*45+22.5 rounds up to the next
/// class.
inline int angle_to_class(double degrees) {
  const double a = wrap_degrees(degrees);
  const long k = static_cast<long>(std::floor(a / kSectorDeg + 0.5));
  return static_cast<int>(((k % kNumClasses) + kNumClasses) % kNumClasses);
}

/// Center angle of a class sector.
inline double class_to_angle(int c) {
  if (c < 0 || c >= kNumClasses)
    throw ArgumentError("class index " + std::to_string(c) + " out of 0..7");
  return c * kSectorDeg;
}

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

inline bool operator==(const Vec3& a, const Vec3& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) {
  return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
}

/// Neck and upper-leg joint positions in meters, Z-up world frame.
struct JointTriple {
  Vec3 neck;
  Vec3 rightUpperLeg;
  Vec3 leftUpperLeg;
};

inline bool operator==(const JointTriple& a, const JointTriple& b) {
  return a.neck == b.neck && a.rightUpperLeg == b.rightUpperLeg &&
         a.leftUpperLeg == b.leftUpperLeg;
}

/// Body orientation angle from a joint triple.
///
/// forward = (neck -> rightUpperLeg) x (neck -> leftUpperLeg), projected onto
/// the XY plane. The returned angle is the wrapped difference between the
/// body-forward bearing and the bearing from the body toward the observer, so
/// 0 deg means the body faces the observer.
inline double body_orientation_from_joints(const JointTriple& j,
                                           double observerBearingDeg) {
  const Vec3 toRight = j.rightUpperLeg - j.neck;
  const Vec3 toLeft = j.leftUpperLeg - j.neck;
  const Vec3 forward = cross(toRight, toLeft);
  const double scale = norm(toRight) * norm(toLeft);
  if (norm(forward) <= 1e-12 * std::max(scale, 1e-300))
    throw DegeneratePoseError("joints are collinear; no body plane");
  const double xy = std::hypot(forward.x, forward.y);
  if (xy <= 1e-9 * norm(forward))
    throw DegeneratePoseError("body forward vector is vertical");
  const double forwardBearing =
      std::atan2(forward.y, forward.x) * 180.0 / 3.14159265358979323846;
  return wrap_degrees(forwardBearing - observerBearingDeg);
}

/// One row of a joint-coordinate CSV extract.
struct JointCsvRow {
  long frameId = 0;
  JointTriple joints;
  double observerBearingDeg = 0.0;
};

/// Parse a joint CSV: one header line, then rows
/// frameId, neckX, neckY, neckZ, rHipX, rHipY, rHipZ, lHipX, lHipY, lHipZ,
/// observerBearingDeg.
inline std::vector<JointCsvRow> parse_joint_csv(std::istream& in) {
  std::vector<JointCsvRow> rows;
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("joint CSV is empty (missing header)");
  std::size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::istringstream ls(line);
    JointCsvRow row;
    double f[11];
    char comma;
    for (int i = 0; i < 11; ++i) {
      if (!(ls >> f[i]))
        throw FormatError("joint CSV line " + std::to_string(lineNo) +
                          ": expected 11 numeric fields");
      if (i < 10 && !(ls >> comma))
        throw FormatError("joint CSV line " + std::to_string(lineNo) +
                          ": expected comma after field " + std::to_string(i + 1));
    }
    row.frameId = static_cast<long>(f[0]);
    row.joints.neck = {f[1], f[2], f[3]};
    row.joints.rightUpperLeg = {f[4], f[5], f[6]};
    row.joints.leftUpperLeg = {f[7], f[8], f[9]};
    row.observerBearingDeg = f[10];
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<JointCsvRow> load_joint_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open joint CSV: " + path);
  return parse_joint_csv(in);
}

}  // namespace orientbot::labels
