#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "polargs/core/error.h"
#include "polargs/fusion/mesh.h"

namespace polargs {

void WriteMeshPly(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  POLARGS_CHECK(out.good(), ErrorKind::kData, "cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\n"
      << "end_header\n";
  for (const Eigen::Vector3d& v : mesh.vertices) {
    const std::array<double, 3> xyz = {v.x(), v.y(), v.z()};
    out.write(reinterpret_cast<const char*>(xyz.data()), sizeof(xyz));
  }
  for (const auto& t : mesh.triangles) {
    const uint8_t n = 3;
    out.write(reinterpret_cast<const char*>(&n), 1);
    const std::array<int32_t, 3> idx = {t[0], t[1], t[2]};
    out.write(reinterpret_cast<const char*>(idx.data()), sizeof(idx));
  }
  POLARGS_CHECK(out.good(), ErrorKind::kData, "write failed: " + path.string());
}

TriangleMesh ReadMeshPly(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  POLARGS_CHECK(in.good(), ErrorKind::kData, "cannot open " + path.string());
  std::string line;
  POLARGS_CHECK(std::getline(in, line) && line == "ply", ErrorKind::kFormat,
                "not a PLY file: " + path.string());
  size_t n_vertices = 0, n_faces = 0;
  std::string element;
  int vertex_props = 0;
  bool binary = false, face_list = false;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      binary = fmt == "binary_little_endian";
    } else if (word == "element") {
      size_t count = 0;
      ss >> element >> count;
      if (element == "vertex") {
        n_vertices = count;
      } else if (element == "face") {
        n_faces = count;
      } else {
        Throw(ErrorKind::kFormat, "unexpected PLY element " + element);
      }
    } else if (word == "property") {
      std::string type;
      ss >> type;
      if (element == "vertex") {
        std::string name;
        ss >> name;
        static const char* kXyz[3] = {"x", "y", "z"};
        POLARGS_CHECK(vertex_props < 3 && type == "double" && name == kXyz[vertex_props],
                      ErrorKind::kFormat, "unexpected PLY vertex property " + name);
        ++vertex_props;
      } else {
        std::string count_type, index_type, name;
        ss >> count_type >> index_type >> name;
        POLARGS_CHECK(type == "list" && count_type == "uchar" && index_type == "int" &&
                          name == "vertex_indices",
                      ErrorKind::kFormat, "unexpected PLY face property");
        face_list = true;
      }
    }
  }
  POLARGS_CHECK(binary && vertex_props == 3 && line == "end_header" &&
                    (n_faces == 0 || face_list),
                ErrorKind::kFormat, "unsupported mesh PLY layout: " + path.string());
  TriangleMesh mesh;
  mesh.vertices.resize(n_vertices);
  for (Eigen::Vector3d& v : mesh.vertices) {
    std::array<double, 3> xyz;
    in.read(reinterpret_cast<char*>(xyz.data()), sizeof(xyz));
    v = {xyz[0], xyz[1], xyz[2]};
  }
  mesh.triangles.resize(n_faces);
  for (auto& t : mesh.triangles) {
    uint8_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 1);
    POLARGS_CHECK(!in || n == 3, ErrorKind::kFormat, "only triangle faces are supported");
    std::array<int32_t, 3> idx;
    in.read(reinterpret_cast<char*>(idx.data()), sizeof(idx));
    for (int m = 0; m < 3; ++m) {
      POLARGS_CHECK(idx[m] >= 0 && static_cast<size_t>(idx[m]) < n_vertices, ErrorKind::kFormat,
                    "face index out of range in " + path.string());
      t[m] = idx[m];
    }
  }
  POLARGS_CHECK(in.good(), ErrorKind::kFormat, "truncated PLY: " + path.string());
  return mesh;
}

}  // namespace polargs
