#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Geometry>

#include "polargs/core/error.h"
#include "polargs/core/parallel.h"
#include "polargs/fusion/metrics.h"
#include "polargs/simd/kernels.h"

namespace polargs {

SurfaceSamples SampleMeshOriented(const TriangleMesh& mesh, size_t count, uint64_t seed) {
  POLARGS_CHECK(!mesh.triangles.empty(), ErrorKind::kData, "sample_mesh: mesh has no faces");
  std::vector<double> cdf(mesh.triangles.size());
  double total = 0.0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& f = mesh.triangles[t];
    total += 0.5 * (mesh.vertices[f[1]] - mesh.vertices[f[0]])
                       .cross(mesh.vertices[f[2]] - mesh.vertices[f[0]])
                       .norm();
    cdf[t] = total;
  }
  POLARGS_CHECK(total > 0.0, ErrorKind::kData, "sample_mesh: mesh has zero area");
  SurfaceSamples out;
  out.points.resize(count);
  out.normals.resize(count);
  ParallelFor(0, static_cast<int64_t>(count), [&](int64_t s) {
    const double pick = HashUniform(seed, s, 0) * total;
    const size_t t = std::min<size_t>(std::upper_bound(cdf.begin(), cdf.end(), pick) - cdf.begin(),
                                      cdf.size() - 1);
    const auto& f = mesh.triangles[t];
    const double r1 = std::sqrt(HashUniform(seed, s, 1)), r2 = HashUniform(seed, s, 2);
    out.points[s] = (1.0 - r1) * mesh.vertices[f[0]] + r1 * (1.0 - r2) * mesh.vertices[f[1]] +
                    r1 * r2 * mesh.vertices[f[2]];
    out.normals[s] = mesh.FaceNormal(t);
  });
  return out;
}

std::vector<Eigen::Vector3d> SampleMesh(const TriangleMesh& mesh, size_t count, uint64_t seed) {
  return SampleMeshOriented(mesh, count, seed).points;
}

namespace {

constexpr uint32_t kLeafSize = 32;

double BoxSquaredDistance(const Eigen::Vector3d& q, const Eigen::Vector3d& lo,
                          const Eigen::Vector3d& hi) {
  const Eigen::Vector3d d = (lo - q).cwiseMax(q - hi).cwiseMax(0.0);
  return d.squaredNorm();
}

}  // namespace

PointTree::PointTree(const std::vector<Eigen::Vector3d>& points) {
  ids_.resize(points.size());
  std::iota(ids_.begin(), ids_.end(), 0u);
  if (!points.empty()) Build(0, static_cast<uint32_t>(points.size()), points);
  xs_.resize(points.size());
  ys_.resize(points.size());
  zs_.resize(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    xs_[i] = points[ids_[i]].x();
    ys_[i] = points[ids_[i]].y();
    zs_[i] = points[ids_[i]].z();
  }
}

int PointTree::Build(uint32_t begin, uint32_t end, const std::vector<Eigen::Vector3d>& pts) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = node.hi = pts[ids_[begin]];
  for (uint32_t i = begin + 1; i < end; ++i) {
    node.lo = node.lo.cwiseMin(pts[ids_[i]]);
    node.hi = node.hi.cwiseMax(pts[ids_[i]]);
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;
  int axis;
  (node.hi - node.lo).maxCoeff(&axis);
  const uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(ids_.begin() + begin, ids_.begin() + mid, ids_.begin() + end,
                   [&pts, axis](uint32_t a, uint32_t b) {
                     return pts[a][axis] < pts[b][axis] || (pts[a][axis] == pts[b][axis] && a < b);
                   });
  const int left = Build(begin, mid, pts);
  const int right = Build(mid, end, pts);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double PointTree::NearestSquaredDistance(const Eigen::Vector3d& q) const {
  double best = std::numeric_limits<double>::infinity();
  if (nodes_.empty()) return best;
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (BoxSquaredDistance(q, node.lo, node.hi) >= best) continue;
    if (node.left < 0) {
      simd::MinSqDistArgs a{q.x(), q.y(), q.z(), xs_.data() + node.begin, ys_.data() + node.begin,
                            zs_.data() + node.begin, node.end - node.begin};
      best = std::min(best, simd::MinSqDist(a));
      continue;
    }
    const Node& l = nodes_[node.left];
    const Node& r = nodes_[node.right];
    const double dl = BoxSquaredDistance(q, l.lo, l.hi);
    const double dr = BoxSquaredDistance(q, r.lo, r.hi);
    // Push the farther child first so the nearer one is searched first.
    if (dl < dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

size_t PointTree::Nearest(const Eigen::Vector3d& q) const {
  POLARGS_CHECK(!nodes_.empty(), ErrorKind::kData, "point_tree: empty tree");
  double best = std::numeric_limits<double>::infinity();
  size_t best_id = 0;
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (BoxSquaredDistance(q, node.lo, node.hi) >= best) continue;
    if (node.left < 0) {
      for (uint32_t i = node.begin; i < node.end; ++i) {
        const double dx = xs_[i] - q.x(), dy = ys_[i] - q.y(), dz = zs_[i] - q.z();
        const double d = dx * dx + dy * dy + dz * dz;
        if (d < best || (d == best && ids_[i] < best_id)) {
          best = d;
          best_id = ids_[i];
        }
      }
      continue;
    }
    const Node& l = nodes_[node.left];
    const Node& r = nodes_[node.right];
    if (BoxSquaredDistance(q, l.lo, l.hi) < BoxSquaredDistance(q, r.lo, r.hi)) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best_id;
}

namespace {

double MeanNearest(const std::vector<Eigen::Vector3d>& from, const PointTree& to) {
  std::vector<double> d(from.size());
  ParallelFor(0, static_cast<int64_t>(from.size()),
              [&](int64_t i) { d[i] = std::sqrt(to.NearestSquaredDistance(from[i])); });
  return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

}  // namespace

double ChamferDistance(const std::vector<Eigen::Vector3d>& a,
                       const std::vector<Eigen::Vector3d>& b) {
  POLARGS_CHECK(!a.empty() && !b.empty(), ErrorKind::kData, "chamfer: empty point set");
  const PointTree ta(a), tb(b);
  const double ab = MeanNearest(a, tb);
  const double ba = MeanNearest(b, ta);
  return 0.5 * (ab + ba);
}

double NormalMaeDegrees(const FloatImage& pred, const FloatImage& gt, const Mask& mask) {
  POLARGS_CHECK(pred.SameSize(gt) && pred.channels() == 3 && gt.channels() == 3 &&
                    mask.width() == pred.width() && mask.height() == pred.height(),
                ErrorKind::kDimension, "normal_mae: size mismatch");
  double sum = 0.0;
  size_t count = 0;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const Eigen::Vector3d p(pred.at(x, y, 0), pred.at(x, y, 1), pred.at(x, y, 2));
      const Eigen::Vector3d g(gt.at(x, y, 0), gt.at(x, y, 1), gt.at(x, y, 2));
      if (!(p.norm() > 1e-12 && g.norm() > 1e-12)) continue;
      sum += std::atan2(p.cross(g).norm(), p.dot(g));
      ++count;
    }
  }
  POLARGS_CHECK(count > 0, ErrorKind::kData, "normal_mae: no pixel with both normals");
  return sum / static_cast<double>(count) * 180.0 / std::numbers::pi;
}

double SurfaceNormalMaeDegrees(const SurfaceSamples& pred, const SurfaceSamples& ref) {
  POLARGS_CHECK(!pred.points.empty() && !ref.points.empty(), ErrorKind::kData,
                "surface_normal_mae: empty sample set");
  POLARGS_CHECK(pred.points.size() == pred.normals.size() &&
                    ref.points.size() == ref.normals.size(),
                ErrorKind::kDimension, "surface_normal_mae: one normal per point required");
  const PointTree tree(ref.points);
  std::vector<double> angle(pred.points.size());
  ParallelFor(0, static_cast<int64_t>(pred.points.size()), [&](int64_t i) {
    const Eigen::Vector3d& p = pred.normals[i];
    const Eigen::Vector3d& g = ref.normals[tree.Nearest(pred.points[i])];
    angle[i] = std::atan2(p.cross(g).norm(), p.dot(g));
  });
  return std::accumulate(angle.begin(), angle.end(), 0.0) / static_cast<double>(angle.size()) *
         180.0 / std::numbers::pi;
}

}  // namespace polargs
