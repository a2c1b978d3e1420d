#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "polargs/core/image.h"
#include "polargs/fusion/mesh.h"

namespace polargs {

// Area-weighted uniform samples on the surface; deterministic in `seed`.
std::vector<Eigen::Vector3d> SampleMesh(const TriangleMesh& mesh, size_t count, uint64_t seed);

// Static 3-d tree for nearest-neighbour distances.
class PointTree {
 public:
  explicit PointTree(const std::vector<Eigen::Vector3d>& points);
  double NearestSquaredDistance(const Eigen::Vector3d& q) const;  // +inf when empty
  // Index (into the construction order) of the nearest point; ties go to the
  // lower index. Throws kData when empty.
  size_t Nearest(const Eigen::Vector3d& q) const;
  size_t size() const { return xs_.size(); }

 private:
  struct Node {
    Eigen::Vector3d lo, hi;
    uint32_t begin, end;
    int32_t left = -1, right = -1;
  };
  int Build(uint32_t begin, uint32_t end, const std::vector<Eigen::Vector3d>& pts);
  std::vector<Node> nodes_;
  std::vector<double> xs_, ys_, zs_;
  std::vector<uint32_t> ids_;
};

// Symmetric mean nearest-neighbour distance:
// 0.5 * (mean_a d(a, B) + mean_b d(b, A)). Throws kData on an empty set.
double ChamferDistance(const std::vector<Eigen::Vector3d>& a,
                       const std::vector<Eigen::Vector3d>& b);

// Mean angle in degrees between unit normals over mask pixels where both
// maps hold a normal. Throws kData when no pixel qualifies.
double NormalMaeDegrees(const FloatImage& pred, const FloatImage& gt, const Mask& mask);

// Oriented surface samples.
struct SurfaceSamples {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;  // unit
};

// SampleMesh with the face normal of every sample.
SurfaceSamples SampleMeshOriented(const TriangleMesh& mesh, size_t count, uint64_t seed);

// Mean angle in degrees between each predicted sample normal and the normal of
// its nearest reference sample.
double SurfaceNormalMaeDegrees(const SurfaceSamples& pred, const SurfaceSamples& ref);

}  // namespace polargs
