#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "orientbot/errors.hpp"
#include "orientbot/labels.hpp"

namespace orientbot::plan {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator-(const Vec2& a, const Vec2& b) {
  return {a.x - b.x, a.y - b.y};
}
inline Vec2 operator+(const Vec2& a, const Vec2& b) {
  return {a.x + b.x, a.y + b.y};
}
inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

/// Bearing of the direction from `from` to `to`, degrees in [0, 360).
inline double bearing_deg(const Vec2& from, const Vec2& to) {
  return labels::wrap_degrees(std::atan2(to.y - from.y, to.x - from.x) *
                              180.0 / 3.14159265358979323846);
}

/// Planar position in meters plus heading in degrees, wrapped to [0, 360).
struct Pose2D {
  double x = 0.0, y = 0.0;
  double headingDeg = 0.0;

  Vec2 position() const { return {x, y}; }
};

struct CellIndex {
  long x = 0, y = 0;
  bool operator==(const CellIndex& o) const { return x == o.x && y == o.y; }
};

/// 2-D free/occupied cell field. `origin` is the world position of the
/// lower-left corner of cell (0,0); cell (i,j) covers the half-open square
/// [origin + (i,j)*res, origin + (i+1,j+1)*res).
class OccupancyGrid {
 public:
  OccupancyGrid() = default;

  OccupancyGrid(std::size_t width, std::size_t height, double resolution,
                Vec2 origin)
      : width_(width),
        height_(height),
        resolution_(resolution),
        origin_(origin),
        occupied_(width * height, 0) {
    if (width == 0 || height == 0)
      throw ArgumentError("grid dimensions must be positive");
    if (!(resolution > 0.0)) throw ArgumentError("grid resolution must be > 0");
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  double resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }

  bool in_bounds(const CellIndex& c) const {
    return c.x >= 0 && c.y >= 0 && c.x < static_cast<long>(width_) &&
           c.y < static_cast<long>(height_);
  }
  bool in_bounds(const Vec2& p) const { return in_bounds(world_to_cell(p)); }

  bool occupied(const CellIndex& c) const {
    return occupied_[index(c)] != 0;
  }
  void set_occupied(const CellIndex& c, bool value) {
    occupied_[index(c)] = value ? 1 : 0;
  }

  CellIndex world_to_cell(const Vec2& p) const {
    return {static_cast<long>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<long>(std::floor((p.y - origin_.y) / resolution_))};
  }

  Vec2 cell_center(const CellIndex& c) const {
    return {origin_.x + (static_cast<double>(c.x) + 0.5) * resolution_,
            origin_.y + (static_cast<double>(c.y) + 0.5) * resolution_};
  }

 private:
  std::size_t index(const CellIndex& c) const {
    if (!in_bounds(c))
      throw ArgumentError("cell (" + std::to_string(c.x) + "," +
                          std::to_string(c.y) + ") out of grid bounds");
    return static_cast<std::size_t>(c.y) * width_ +
           static_cast<std::size_t>(c.x);
  }

  std::size_t width_ = 0, height_ = 0;
  double resolution_ = 0.0;
  Vec2 origin_;
  std::vector<std::uint8_t> occupied_;
};

/// 8-connected breadth-first reachability between two cells over free cells.
/// With `cutCorners` false, a diagonal step additionally requires at least
/// one of its two orthogonal neighbors to be free.
inline bool cells_connected(const OccupancyGrid& grid, const CellIndex& from,
                            const CellIndex& to, bool cutCorners = true) {
  if (!grid.in_bounds(from) || !grid.in_bounds(to))
    throw ArgumentError("cells_connected: cell out of bounds");
  if (grid.occupied(from) || grid.occupied(to)) return false;
  if (from == to) return true;
  std::vector<std::uint8_t> seen(grid.width() * grid.height(), 0);
  auto id = [&](const CellIndex& c) {
    return static_cast<std::size_t>(c.y) * grid.width() +
           static_cast<std::size_t>(c.x);
  };
  std::queue<CellIndex> q;
  q.push(from);
  seen[id(from)] = 1;
  while (!q.empty()) {
    const CellIndex c = q.front();
    q.pop();
    for (long dy = -1; dy <= 1; ++dy)
      for (long dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const CellIndex nb{c.x + dx, c.y + dy};
        if (!grid.in_bounds(nb) || seen[id(nb)] || grid.occupied(nb)) continue;
        if (!cutCorners && dx != 0 && dy != 0) {
          if (grid.occupied({c.x + dx, c.y}) && grid.occupied({c.x, c.y + dy}))
            continue;
        }
        if (nb == to) return true;
        seen[id(nb)] = 1;
        q.push(nb);
      }
  }
  return false;
}

/// Shortest 8-connected BFS path (sequence of cells from `from` to `to`,
/// inclusive), or nullopt if unreachable. Never cuts corners, so straight-line
/// motion between consecutive cell centers stays in free cells.
inline std::optional<std::vector<CellIndex>> bfs_path(const OccupancyGrid& grid,
                                                      const CellIndex& from,
                                                      const CellIndex& to) {
  if (!grid.in_bounds(from) || !grid.in_bounds(to))
    throw ArgumentError("bfs_path: cell out of bounds");
  if (grid.occupied(from) || grid.occupied(to)) return std::nullopt;
  const std::size_t n = grid.width() * grid.height();
  std::vector<std::int32_t> parent(n, -1);
  auto id = [&](const CellIndex& c) {
    return static_cast<std::size_t>(c.y) * grid.width() +
           static_cast<std::size_t>(c.x);
  };
  std::queue<CellIndex> q;
  q.push(from);
  parent[id(from)] = static_cast<std::int32_t>(id(from));
  bool found = (from == to);
  while (!q.empty() && !found) {
    const CellIndex c = q.front();
    q.pop();
    for (long dy = -1; dy <= 1 && !found; ++dy)
      for (long dx = -1; dx <= 1 && !found; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const CellIndex nb{c.x + dx, c.y + dy};
        if (!grid.in_bounds(nb) || parent[id(nb)] >= 0 || grid.occupied(nb))
          continue;
        if (dx != 0 && dy != 0 &&
            (grid.occupied({c.x + dx, c.y}) || grid.occupied({c.x, c.y + dy})))
          continue;
        parent[id(nb)] = static_cast<std::int32_t>(id(c));
        if (nb == to) found = true;
        else q.push(nb);
      }
  }
  if (!found) return std::nullopt;
  std::vector<CellIndex> path;
  CellIndex c = to;
  while (!(c == from)) {
    path.push_back(c);
    const std::size_t p = static_cast<std::size_t>(parent[id(c)]);
    c = {static_cast<long>(p % grid.width()),
         static_cast<long>(p / grid.width())};
  }
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  return path;
}

/// Every cell the real segment a->b touches (supercover traversal). When the
/// segment passes exactly through a cell corner, all adjacent cells count as
/// touched.
inline std::vector<CellIndex> supercover_cells(const OccupancyGrid& grid,
                                               const Vec2& a, const Vec2& b) {
  std::vector<CellIndex> cells;
  const double res = grid.resolution();
  // work in grid coordinates (units of cells, origin at cell (0,0) corner)
  double ax = (a.x - grid.origin().x) / res, ay = (a.y - grid.origin().y) / res;
  double bx = (b.x - grid.origin().x) / res, by = (b.y - grid.origin().y) / res;

  long cx = static_cast<long>(std::floor(ax));
  long cy = static_cast<long>(std::floor(ay));
  const long ex = static_cast<long>(std::floor(bx));
  const long ey = static_cast<long>(std::floor(by));

  const double dx = bx - ax, dy = by - ay;
  const long sx = dx > 0 ? 1 : -1;
  const long sy = dy > 0 ? 1 : -1;

  // parametric distance to the next vertical/horizontal grid line
  auto tNext = [](double p, double d, long s) {
    if (d == 0.0) return 1e300;
    const double boundary =
        s > 0 ? std::floor(p) + 1.0 : std::ceil(p) - 1.0;
    return (boundary - p) / d;
  };

  double tMaxX = tNext(ax, dx, sx);
  double tMaxY = tNext(ay, dy, sy);
  const double tDeltaX = dx == 0.0 ? 1e300 : std::fabs(1.0 / dx);
  const double tDeltaY = dy == 0.0 ? 1e300 : std::fabs(1.0 / dy);

  cells.push_back({cx, cy});
  const double eps = 1e-12;
  std::size_t guard = 4 * (grid.width() + grid.height()) + 16;
  while ((cx != ex || cy != ey) && guard-- > 0) {
    if (std::fabs(tMaxX - tMaxY) < eps) {
      // exact corner crossing: both side cells are touched as well
      cells.push_back({cx + sx, cy});
      cells.push_back({cx, cy + sy});
      cx += sx;
      cy += sy;
      tMaxX += tDeltaX;
      tMaxY += tDeltaY;
    } else if (tMaxX < tMaxY) {
      cx += sx;
      tMaxX += tDeltaX;
    } else {
      cy += sy;
      tMaxY += tDeltaY;
    }
    cells.push_back({cx, cy});
  }
  return cells;
}

/// PGM (P2 or P5) grid file with a text sidecar "<path>.meta" holding
/// resolution and origin. Pixel 0 = occupied, 255 = free; values below 128
/// read as occupied. Row 0 of the image is the top of the map (highest y).
inline void save_pgm(const OccupancyGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open grid file for writing: " + path);
  out << "P2\n" << grid.width() << " " << grid.height() << "\n255\n";
  for (long y = static_cast<long>(grid.height()) - 1; y >= 0; --y) {
    for (long x = 0; x < static_cast<long>(grid.width()); ++x)
      out << (grid.occupied({x, y}) ? 0 : 255)
          << (x + 1 < static_cast<long>(grid.width()) ? " " : "");
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);

  std::ofstream meta(path + ".meta");
  if (!meta) throw IoError("cannot open grid sidecar for writing: " + path);
  meta << "resolution " << grid.resolution() << "\n";
  meta << "origin " << grid.origin().x << " " << grid.origin().y << "\n";
}

inline OccupancyGrid load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open grid file: " + path);

  auto next_token = [&in]() {
    std::string tok;
    while (true) {
      int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
        continue;
      }
      if (!(in >> tok)) throw FormatError("truncated PGM header");
      return tok;
    }
  };

  const std::string magic = next_token();
  if (magic != "P2" && magic != "P5")
    throw FormatError("grid file is not P2/P5 PGM");
  const std::size_t w = std::stoul(next_token());
  const std::size_t h = std::stoul(next_token());
  const unsigned maxval = static_cast<unsigned>(std::stoul(next_token()));
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255)
    throw FormatError("unsupported PGM geometry");

  double resolution = 0.1;
  Vec2 origin{0.0, 0.0};
  {
    std::ifstream meta(path + ".meta");
    if (meta) {
      std::string key;
      while (meta >> key) {
        if (key == "resolution") meta >> resolution;
        else if (key == "origin") meta >> origin.x >> origin.y;
        else { std::string skip; std::getline(meta, skip); }
      }
    }
  }

  OccupancyGrid grid(w, h, resolution, origin);
  if (magic == "P2") {
    for (long row = 0; row < static_cast<long>(h); ++row)
      for (long x = 0; x < static_cast<long>(w); ++x) {
        unsigned v;
        if (!(in >> v)) throw FormatError("truncated PGM pixel data");
        grid.set_occupied({x, static_cast<long>(h) - 1 - row}, v < 128);
      }
  } else {
    in.get();  // single whitespace after maxval
    std::vector<char> buf(w * h);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size())
      throw FormatError("truncated PGM pixel data");
    for (long row = 0; row < static_cast<long>(h); ++row)
      for (long x = 0; x < static_cast<long>(w); ++x) {
        const unsigned v = static_cast<std::uint8_t>(
            buf[static_cast<std::size_t>(row) * w + static_cast<std::size_t>(x)]);
        grid.set_occupied({x, static_cast<long>(h) - 1 - row}, v < 128);
      }
  }
  return grid;
}

}  // namespace orientbot::plan
