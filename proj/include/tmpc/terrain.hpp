#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tmpc/errors.hpp"
#include "tmpc/rng.hpp"

namespace tmpc {

// Common grid layout shared by Heightmap and SignedDistanceMap.
struct GridSpec {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double resolution = 1.0;  // meters per cell
  int nx = 0;
  int ny = 0;

  double max_x() const { return origin_x + resolution * (nx - 1); }
  double max_y() const { return origin_y + resolution * (ny - 1); }
};

namespace detail {

// Bilinear interpolation over a row-major grid, clamped at the boundary so the
// field extends flat beyond the map.
inline double bilinear(const GridSpec& g, const std::vector<double>& values,
                       double x, double y) {
  double gx = (x - g.origin_x) / g.resolution;
  double gy = (y - g.origin_y) / g.resolution;
  gx = std::clamp(gx, 0.0, static_cast<double>(g.nx - 1));
  gy = std::clamp(gy, 0.0, static_cast<double>(g.ny - 1));
  int i0 = std::min(static_cast<int>(gx), g.nx - 2);
  int j0 = std::min(static_cast<int>(gy), g.ny - 2);
  const double fx = gx - i0;
  const double fy = gy - j0;
  const double* row0 = values.data() + static_cast<std::size_t>(j0) * g.nx + i0;
  const double* row1 = row0 + g.nx;
  const double a = row0[0] + fx * (row0[1] - row0[0]);
  const double b = row1[0] + fx * (row1[1] - row1[0]);
  return a + fy * (b - a);
}

}  // namespace detail

// Rigid terrain as a regular grid of heights. Immutable after construction;
// all queries are pure, so maps are safely shared across rollout workers.
struct Heightmap {
  GridSpec grid;
  std::vector<double> heights;  // row-major, index j*nx + i (j indexes y)

  double& at(int i, int j) { return heights[static_cast<std::size_t>(j) * grid.nx + i]; }
  double at(int i, int j) const { return heights[static_cast<std::size_t>(j) * grid.nx + i]; }
  double cell_x(int i) const { return grid.origin_x + grid.resolution * i; }
  double cell_y(int j) const { return grid.origin_y + grid.resolution * j; }

  void validate() const {
    if (grid.nx < 2 || grid.ny < 2)
      throw ConfigError("heightmap: grid must be at least 2x2");
    if (!(grid.resolution > 0.0))
      throw ConfigError("heightmap: resolution must be positive");
    if (heights.size() != static_cast<std::size_t>(grid.nx) * grid.ny)
      throw ConfigError("heightmap: height count does not match grid size");
    for (double v : heights)
      if (!std::isfinite(v)) throw ConfigError("heightmap: non-finite height");
  }
};

// Terrain height at an arbitrary location; exact at cell centers, bilinear in
// between, clamped (flat) outside the map.
inline double height_at(const Heightmap& m, double x, double y) {
  return detail::bilinear(m.grid, m.heights, x, y);
}

struct Slope {
  double fx = 0.0;  // df/dx
  double fy = 0.0;  // df/dy
};

// Central finite differences of height_at with one-cell step.
inline Slope gradient_at(const Heightmap& m, double x, double y) {
  const double r = m.grid.resolution;
  return {(height_at(m, x + r, y) - height_at(m, x - r, y)) / (2.0 * r),
          (height_at(m, x, y + r) - height_at(m, x, y - r)) / (2.0 * r)};
}

// Unit upward surface normal. The slope vector enters with negated x/y
// components so that rising terrain tilts the normal away from the rise.
inline Eigen::Vector3d normal_at(const Heightmap& m, double x, double y) {
  const Slope s = gradient_at(m, x, y);
  return Eigen::Vector3d(-s.fx, -s.fy, 1.0).normalized();
}

// Separable Gaussian low-pass with the kernel truncated at 3 sigma and
// renormalized; replicate padding at the edges keeps flat terrain flat.
inline Heightmap gaussian_smooth(const Heightmap& m, double sigma_m) {
  if (sigma_m < 0.0) throw ConfigError("gaussian_smooth: sigma must be >= 0");
  if (sigma_m == 0.0) return m;

  const double sigma_c = sigma_m / m.grid.resolution;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_c));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma_c * sigma_c));
    sum += kernel[k + radius];
  }
  for (double& w : kernel) w /= sum;

  const int nx = m.grid.nx, ny = m.grid.ny;
  Heightmap out = m;
  std::vector<double> tmp(m.heights.size());
  // along x
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * m.at(std::clamp(i + k, 0, nx - 1), j);
      tmp[static_cast<std::size_t>(j) * nx + i] = acc;
    }
  }
  // along y
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * tmp[static_cast<std::size_t>(std::clamp(j + k, 0, ny - 1)) * nx + i];
      out.at(i, j) = acc;
    }
  }
  return out;
}

enum class PerimeterKind { kObstacle, kPathBoundary };

// Simple closed polygon marking an obstacle or a path boundary.
struct Perimeter {
  PerimeterKind kind = PerimeterKind::kObstacle;
  std::vector<Eigen::Vector2d> vertices;

  void validate() const {
    const std::size_t n = vertices.size();
    if (n < 3) throw ConfigError("perimeter: needs at least 3 vertices");
    double area2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = vertices[i];
      const auto& b = vertices[(i + 1) % n];
      area2 += a.x() * b.y() - b.x() * a.y();
    }
    if (std::abs(area2) < 1e-12) throw ConfigError("perimeter: zero area");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        // skip edges sharing a vertex
        if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
        if (detailSegmentsIntersect(vertices[i], vertices[(i + 1) % n],
                                    vertices[j], vertices[(j + 1) % n]))
          throw ConfigError("perimeter: self-intersecting polygon");
      }
    }
  }

 private:
  static bool detailSegmentsIntersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                      const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
    auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
      return u.x() * v.y() - u.y() * v.x();
    };
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
  }
};

namespace detail {

inline double point_segment_distance(const Eigen::Vector2d& p,
                                     const Eigen::Vector2d& a,
                                     const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

inline bool point_in_polygon(const Eigen::Vector2d& p,
                             const std::vector<Eigen::Vector2d>& vs) {
  bool inside = false;
  const std::size_t n = vs.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const bool straddles = (vs[i].y() > p.y()) != (vs[j].y() > p.y());
    if (straddles) {
      const double x_at = vs[j].x() + (p.y() - vs[j].y()) / (vs[i].y() - vs[j].y()) *
                                          (vs[i].x() - vs[j].x());
      if (p.x() < x_at) inside = !inside;
    }
  }
  return inside;
}

}  // namespace detail

// Signed minimum 2D Euclidean distance to the perimeter. For obstacles the
// value is negative inside; for path boundaries negative outside.
inline double signed_distance(const Eigen::Vector2d& p, const Perimeter& perim) {
  double d = std::numeric_limits<double>::infinity();
  const auto& vs = perim.vertices;
  const std::size_t n = vs.size();
  for (std::size_t i = 0; i < n; ++i)
    d = std::min(d, detail::point_segment_distance(p, vs[i], vs[(i + 1) % n]));
  const bool inside = detail::point_in_polygon(p, vs);
  const bool violating = (perim.kind == PerimeterKind::kObstacle) ? inside : !inside;
  return violating ? -d : d;
}

// Per-cell minimum of per-perimeter signed distances. Queried via bilinear
// interpolation like a heightmap. With no features every cell is +infinity
// ("no feature anywhere"); queries short-circuit on that flag so interpolation
// never mixes infinities.
struct SignedDistanceMap {
  GridSpec grid;
  std::vector<double> values;
  bool has_features = false;

  double value_at(double x, double y) const {
    if (!has_features) return std::numeric_limits<double>::infinity();
    return detail::bilinear(grid, values, x, y);
  }
};

inline SignedDistanceMap build_sdist_map(const GridSpec& grid,
                                         const std::vector<Perimeter>& perimeters) {
  SignedDistanceMap map;
  map.grid = grid;
  map.has_features = !perimeters.empty();
  map.values.assign(static_cast<std::size_t>(grid.nx) * grid.ny,
                    std::numeric_limits<double>::infinity());
  if (!map.has_features) return map;
  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.origin_y + grid.resolution * j;
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.origin_x + grid.resolution * i;
      double d = std::numeric_limits<double>::infinity();
      for (const auto& p : perimeters)
        d = std::min(d, signed_distance(Eigen::Vector2d(x, y), p));
      map.values[static_cast<std::size_t>(j) * grid.nx + i] = d;
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Synthetic terrain generators.

enum class TerrainKind { kFlat, kRamp, kSineRidge, kBumpField };

struct SynthSpec {
  TerrainKind kind = TerrainKind::kFlat;
  GridSpec grid{0.0, 0.0, 0.5, 64, 64};
  double height = 0.0;       // flat
  double slope_x = 0.0;      // ramp
  double slope_y = 0.0;      // ramp
  double amplitude = 0.0;    // sine_ridge / bump_field
  double wavelength = 1.0;   // sine_ridge
  double angle = 0.0;        // sine_ridge crest direction, radians from +x
  int n_bumps = 0;           // bump_field
  double bump_radius = 1.0;  // bump_field
  std::uint64_t seed = 0;    // bump_field
};

inline Heightmap synth_terrain(const SynthSpec& spec) {
  Heightmap m;
  m.grid = spec.grid;
  m.heights.assign(static_cast<std::size_t>(spec.grid.nx) * spec.grid.ny, 0.0);
  switch (spec.kind) {
    case TerrainKind::kFlat:
      std::fill(m.heights.begin(), m.heights.end(), spec.height);
      break;
    case TerrainKind::kRamp:
      for (int j = 0; j < m.grid.ny; ++j)
        for (int i = 0; i < m.grid.nx; ++i)
          m.at(i, j) = spec.slope_x * m.cell_x(i) + spec.slope_y * m.cell_y(j);
      break;
    case TerrainKind::kSineRidge: {
      if (!(spec.wavelength > 0.0))
        throw ConfigError("synth_terrain: sine_ridge wavelength must be > 0");
      const double kx = std::cos(spec.angle), ky = std::sin(spec.angle);
      for (int j = 0; j < m.grid.ny; ++j)
        for (int i = 0; i < m.grid.nx; ++i) {
          const double s = kx * m.cell_x(i) + ky * m.cell_y(j);
          m.at(i, j) = spec.amplitude * std::sin(2.0 * M_PI * s / spec.wavelength);
        }
      break;
    }
    case TerrainKind::kBumpField: {
      if (spec.n_bumps < 0) throw ConfigError("synth_terrain: n_bumps must be >= 0");
      if (!(spec.bump_radius > 0.0))
        throw ConfigError("synth_terrain: bump_radius must be > 0");
      RngStream rng(substream(spec.seed, 0xB0B5));
      struct Bump { double x, y, a; };
      std::vector<Bump> bumps(spec.n_bumps);
      for (auto& b : bumps) {
        b.x = rng.uniform(spec.grid.origin_x, spec.grid.max_x());
        b.y = rng.uniform(spec.grid.origin_y, spec.grid.max_y());
        b.a = rng.uniform(0.3, 1.0) * spec.amplitude;
      }
      const double inv2r2 = 1.0 / (2.0 * spec.bump_radius * spec.bump_radius);
      for (int j = 0; j < m.grid.ny; ++j)
        for (int i = 0; i < m.grid.nx; ++i) {
          double z = 0.0;
          for (const auto& b : bumps) {
            const double dx = m.cell_x(i) - b.x, dy = m.cell_y(j) - b.y;
            z += b.a * std::exp(-(dx * dx + dy * dy) * inv2r2);
          }
          m.at(i, j) = z;
        }
      break;
    }
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Heightmap file format:
//   TERRAIN v1
//   origin <x> <y>
//   resolution <r>
//   size <nx> <ny>
//   <ny rows of nx heights, row-major, y-major outer>

inline void save_heightmap(const Heightmap& m, std::ostream& os) {
  os << "TERRAIN v1\n";
  os << "origin " << m.grid.origin_x << ' ' << m.grid.origin_y << '\n';
  os << "resolution " << m.grid.resolution << '\n';
  os << "size " << m.grid.nx << ' ' << m.grid.ny << '\n';
  os.precision(17);
  for (int j = 0; j < m.grid.ny; ++j) {
    for (int i = 0; i < m.grid.nx; ++i) {
      if (i) os << ' ';
      os << m.at(i, j);
    }
    os << '\n';
  }
}

inline void save_heightmap(const Heightmap& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open for writing: " + path);
  save_heightmap(m, f);
  if (!f) throw ConfigError("write failed: " + path);
}

inline Heightmap load_heightmap(std::istream& is, const std::string& name = "<stream>") {
  auto fail = [&](int line, const std::string& why) -> ConfigError {
    return ConfigError(name + ":" + std::to_string(line) + ": " + why);
  };
  std::string line;
  int lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(is, line)) throw fail(lineno + 1, "unexpected end of file");
    ++lineno;
  };
  next_line();
  if (line != "TERRAIN v1") throw fail(lineno, "expected header 'TERRAIN v1'");
  Heightmap m;
  {
    next_line();
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag >> m.grid.origin_x >> m.grid.origin_y) || tag != "origin")
      throw fail(lineno, "expected 'origin <x> <y>'");
  }
  {
    next_line();
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag >> m.grid.resolution) || tag != "resolution")
      throw fail(lineno, "expected 'resolution <r>'");
  }
  {
    next_line();
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag >> m.grid.nx >> m.grid.ny) || tag != "size")
      throw fail(lineno, "expected 'size <nx> <ny>'");
  }
  if (m.grid.nx < 2 || m.grid.ny < 2) throw fail(lineno, "size must be at least 2x2");
  m.heights.resize(static_cast<std::size_t>(m.grid.nx) * m.grid.ny);
  for (int j = 0; j < m.grid.ny; ++j) {
    next_line();
    std::istringstream ss(line);
    for (int i = 0; i < m.grid.nx; ++i)
      if (!(ss >> m.at(i, j)))
        throw fail(lineno, "expected " + std::to_string(m.grid.nx) + " heights");
  }
  m.validate();
  return m;
}

inline Heightmap load_heightmap(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open: " + path);
  return load_heightmap(f, path);
}

}  // namespace tmpc
