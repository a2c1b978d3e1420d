#include <algorithm>
#include <array>
#include <map>
#include <unordered_map>
#include <utility>

#include <Eigen/Geometry>

#include "polargs/core/error.h"
#include "polargs/fusion/mesh.h"

namespace polargs {
namespace {

// Cube corner c has offset (c & 1, (c >> 1) & 1, c >> 2).
constexpr int Bit(int c, int axis) { return (c >> axis) & 1; }

struct CubeTables {
  std::array<std::array<int, 2>, 12> edge_corners{};  // lower corner first
  std::array<int, 12> edge_axis{};
  std::array<std::array<int, 4>, 6> face_corners{};  // counter-clockwise seen from outside
  std::array<std::array<int, 4>, 6> face_edges{};    // edge m joins corners m and m + 1

  CubeTables() {
    int e = 0;
    for (int axis = 0; axis < 3; ++axis) {
      for (int c = 0; c < 8; ++c) {
        if (Bit(c, axis)) continue;
        edge_corners[e] = {c, c | (1 << axis)};
        edge_axis[e] = axis;
        ++e;
      }
    }
    int f = 0;
    for (int axis = 0; axis < 3; ++axis) {
      const int u = (axis + 1) % 3, v = (axis + 2) % 3;
      for (int side = 0; side < 2; ++side) {
        constexpr int kCycle[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        std::array<int, 4> q;
        for (int m = 0; m < 4; ++m) {
          q[m] = (side << axis) | (kCycle[m][0] << u) | (kCycle[m][1] << v);
        }
        if (side == 0) std::reverse(q.begin(), q.end());
        face_corners[f] = q;
        for (int m = 0; m < 4; ++m) {
          const int a = std::min(q[m], q[(m + 1) % 4]), b = std::max(q[m], q[(m + 1) % 4]);
          for (int k = 0; k < 12; ++k) {
            if (edge_corners[k][0] == a && edge_corners[k][1] == b) face_edges[f][m] = k;
          }
        }
        ++f;
      }
    }
  }
};

const CubeTables& Tables() {
  static const CubeTables tables;
  return tables;
}

class Extractor {
 public:
  Extractor(const float* values, const float* weights, int nx, int ny, int nz,
            const Eigen::Vector3d& origin, double spacing)
      : values_(values), weights_(weights), nx_(nx), ny_(ny), nz_(nz), origin_(origin),
        spacing_(spacing) {}

  TriangleMesh Run() {
    const CubeTables& t = Tables();
    for (int k = 0; k + 1 < nz_; ++k) {
      for (int j = 0; j + 1 < ny_; ++j) {
        for (int i = 0; i + 1 < nx_; ++i) Cell(t, i, j, k);
      }
    }
    return std::move(mesh_);
  }

 private:
  size_t Index(int i, int j, int k) const { return (static_cast<size_t>(k) * ny_ + j) * nx_ + i; }

  int Vertex(const CubeTables& t, int i, int j, int k, int edge, const double* f) {
    const int c0 = t.edge_corners[edge][0], c1 = t.edge_corners[edge][1];
    const int gi = i + Bit(c0, 0), gj = j + Bit(c0, 1), gk = k + Bit(c0, 2);
    const uint64_t key = static_cast<uint64_t>(Index(gi, gj, gk)) * 3 + t.edge_axis[edge];
    auto [it, inserted] = vertex_of_edge_.try_emplace(key, static_cast<int>(mesh_.vertices.size()));
    if (inserted) {
      const double s = f[c0] / (f[c0] - f[c1]);
      Eigen::Vector3d p = origin_ + spacing_ * Eigen::Vector3d(gi, gj, gk);
      p[t.edge_axis[edge]] += s * spacing_;
      mesh_.vertices.push_back(p);
    }
    return it->second;
  }

  void Cell(const CubeTables& t, int i, int j, int k) {
    double f[8];
    int inside = 0;
    for (int c = 0; c < 8; ++c) {
      const size_t idx = Index(i + Bit(c, 0), j + Bit(c, 1), k + Bit(c, 2));
      if (weights_ && !(weights_[idx] > 0.0f)) return;
      f[c] = values_[idx];
      inside |= (f[c] < 0.0) << c;
    }
    if (inside == 0 || inside == 0xff) return;
    auto in = [&](int c) { return (inside >> c) & 1; };

    // Directed segments on the faces, inside region on their left.
    std::array<int, 12> next;
    next.fill(-1);
    for (int face = 0; face < 6; ++face) {
      const auto& q = t.face_corners[face];
      const auto& e = t.face_edges[face];
      int crossings = 0;
      for (int m = 0; m < 4; ++m) crossings += in(q[m]) != in(q[(m + 1) % 4]);
      if (crossings == 0) continue;
      if (crossings == 2) {
        int a = -1, b = -1;
        for (int m = 0; m < 4; ++m) {
          const bool i0 = in(q[m]), i1 = in(q[(m + 1) % 4]);
          if (i0 && !i1) a = e[m];
          if (!i0 && i1) b = e[m];
        }
        next[a] = b;
        continue;
      }
      // Ambiguous face: the bilinear saddle decides whether the inside corners
      // are joined across the face.
      const double f0 = f[q[0]], f1 = f[q[1]], f2 = f[q[2]], f3 = f[q[3]];
      const double saddle = (f0 * f2 - f1 * f3) / (f0 + f2 - f1 - f3);
      const bool joined = saddle < 0.0;
      for (int m = 0; m < 4; ++m) {
        if (!in(q[m])) continue;
        next[e[m]] = joined ? e[(m + 1) % 4] : e[(m + 3) % 4];
      }
    }

    std::array<bool, 12> seen{};
    std::vector<int> loop;
    std::vector<uint64_t> keys;
    for (int start = 0; start < 12; ++start) {
      if (next[start] < 0 || seen[start]) continue;
      loop.clear();
      for (int e = start; !seen[e]; e = next[e]) {
        POLARGS_CHECK(next[e] >= 0, ErrorKind::kNumerical, "marching cubes: open contour");
        seen[e] = true;
        loop.push_back(Vertex(t, i, j, k, e, f));
      }
      // Fan from the lexicographically lowest vertex so that a sign flip of the
      // field yields the same triangles wound the other way.
      size_t root = 0;
      for (size_t m = 1; m < loop.size(); ++m) {
        if (PositionKey(loop[m]) < PositionKey(loop[root])) root = m;
      }
      std::rotate(loop.begin(), loop.begin() + root, loop.end());
      for (size_t m = 1; m + 1 < loop.size(); ++m) {
        mesh_.triangles.push_back({loop[0], loop[m + 1], loop[m]});
      }
    }
  }

  std::array<double, 3> PositionKey(int v) const {
    const Eigen::Vector3d& p = mesh_.vertices[v];
    return {p.z(), p.y(), p.x()};
  }

  const float* values_;
  const float* weights_;
  int nx_, ny_, nz_;
  Eigen::Vector3d origin_;
  double spacing_;
  TriangleMesh mesh_;
  std::unordered_map<uint64_t, int> vertex_of_edge_;
};

}  // namespace

TriangleMesh ExtractMesh(const TsdfVolume& volume) {
  Extractor ex(volume.tsdf().data(), volume.weight().data(), volume.nx(), volume.ny(),
               volume.nz(), volume.origin(), volume.config().voxel_size);
  TriangleMesh mesh = ex.Run();
  RemoveDegenerateFaces(&mesh);
  return mesh;
}

TriangleMesh ExtractMesh(const std::vector<float>& values, int nx, int ny, int nz,
                         const Eigen::Vector3d& origin, double spacing) {
  POLARGS_CHECK(nx > 1 && ny > 1 && nz > 1 &&
                    values.size() == static_cast<size_t>(nx) * ny * nz,
                ErrorKind::kDimension, "marching cubes: grid size mismatch");
  Extractor ex(values.data(), nullptr, nx, ny, nz, origin, spacing);
  TriangleMesh mesh = ex.Run();
  RemoveDegenerateFaces(&mesh);
  return mesh;
}

void RemoveDegenerateFaces(TriangleMesh* mesh) {
  // Weld exactly coincident vertices (zero crossings that land on grid points).
  std::map<std::array<double, 3>, int> by_position;
  std::vector<int> remap(mesh->vertices.size());
  for (size_t v = 0; v < mesh->vertices.size(); ++v) {
    const Eigen::Vector3d& p = mesh->vertices[v];
    remap[v] = by_position.try_emplace({p.x(), p.y(), p.z()}, static_cast<int>(v)).first->second;
  }
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh->triangles.size());
  for (auto tri : mesh->triangles) {
    for (int& v : tri) v = remap[v];
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
    const Eigen::Vector3d& a = mesh->vertices[tri[0]];
    const Eigen::Vector3d n = (mesh->vertices[tri[1]] - a).cross(mesh->vertices[tri[2]] - a);
    if (!(n.squaredNorm() > 0.0)) continue;
    kept.push_back(tri);
  }
  std::vector<int> compact(mesh->vertices.size(), -1);
  std::vector<Eigen::Vector3d> vertices;
  for (auto& tri : kept) {
    for (int& v : tri) {
      if (compact[v] < 0) {
        compact[v] = static_cast<int>(vertices.size());
        vertices.push_back(mesh->vertices[v]);
      }
      v = compact[v];
    }
  }
  mesh->vertices = std::move(vertices);
  mesh->triangles = std::move(kept);
}

double TriangleMesh::Area() const {
  double area = 0.0;
  for (const auto& t : triangles) {
    area += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  }
  return area;
}

Eigen::Vector3d TriangleMesh::FaceNormal(size_t t) const {
  const auto& f = triangles[t];
  const Eigen::Vector3d n =
      (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
  const double len = n.norm();
  return len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
}

int TriangleMesh::EulerCharacteristic() const {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : triangles) {
    for (int m = 0; m < 3; ++m) {
      const int a = t[m], b = t[(m + 1) % 3];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
  }
  return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) +
         static_cast<int>(triangles.size());
}

bool TriangleMesh::IsClosedManifold() const {
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : triangles) {
    for (int m = 0; m < 3; ++m) {
      if (++directed[{t[m], t[(m + 1) % 3]}] > 1) return false;
    }
  }
  for (const auto& [e, count] : directed) {
    if (!directed.count({e.second, e.first})) return false;
  }
  return !triangles.empty();
}

}  // namespace polargs
