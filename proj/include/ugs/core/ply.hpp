#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "ugs/core/gaussian_set.hpp"

namespace ugs {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> colours;  // empty when the file has no RGB
  bool has_colours() const { return !colours.empty(); }
};

/// Reads vertex positions (required x,y,z properties, any order) and optional
/// red/green/blue from an ASCII or binary-little-endian PLY. Parse errors name
/// the offending header line.
PointCloud read_ply_points(const std::filesystem::path& path);

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// Writes points (double precision; ASCII uses %.17g so values round-trip).
void write_ply_points(const std::filesystem::path& path,
                      const std::vector<Eigen::Vector3d>& points,
                      const std::vector<Eigen::Vector3d>& colours,
                      PlyFormat format);

/// Builds a GaussianSet from points: one Gaussian per point, identity
/// rotation, isotropic log-scale from the mean distance to the 3 nearest
/// neighbours, initial opacity 0.1, DC colour from the cloud or the default.
GaussianSet gaussians_from_points(const PointCloud& cloud,
                                  const Eigen::Vector3d& colour_default,
                                  int sh_degree = 0);

/// gaussians_from_points applied to a PLY file.
GaussianSet ingest_point_cloud(const std::filesystem::path& path,
                               const Eigen::Vector3d& colour_default,
                               int sh_degree = 0);

/// Mean distance from each point to its 3 nearest neighbours (fewer when the
/// cloud is smaller); 0.1 for a single point.
std::vector<double> mean_knn_distances(const std::vector<Eigen::Vector3d>& pts,
                                       int k = 3);

}  // namespace ugs
