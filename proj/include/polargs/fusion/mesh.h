#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "polargs/fusion/tsdf.h"

namespace polargs {

struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;

  double Area() const;
  Eigen::Vector3d FaceNormal(size_t t) const;  // unit, zero for degenerate faces
  int EulerCharacteristic() const;             // V - E + F
  bool IsClosedManifold() const;               // every edge shared by exactly two faces
};

// Iso-surface at 0. Cells touching an unobserved voxel are skipped, ambiguous
// faces are resolved with the bilinear saddle test, and vertices on shared
// edges are welded. Faces are wound so their normals point toward positive
// values.
TriangleMesh ExtractMesh(const TsdfVolume& volume);

// Same as above on a raw grid (x fastest) with all weights positive.
TriangleMesh ExtractMesh(const std::vector<float>& values, int nx, int ny, int nz,
                         const Eigen::Vector3d& origin, double spacing);

// Drops faces with repeated or coincident corners and unreferenced vertices.
void RemoveDegenerateFaces(TriangleMesh* mesh);

// Binary little-endian PLY with double vertices and int faces.
void WriteMeshPly(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh ReadMeshPly(const std::filesystem::path& path);  // faces optional

}  // namespace polargs
