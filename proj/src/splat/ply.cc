#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "polargs/core/error.h"
#include "polargs/splat/gaussian.h"

namespace polargs {
namespace {

constexpr std::array<const char*, 15> kProps = {
    "x", "y", "z", "qw", "qx", "qy", "qz", "sx", "sy", "sz",
    "opacity", "red", "green", "blue", "reflective"};

}  // namespace

void WriteCloudPly(const std::filesystem::path& path, const GaussianCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  POLARGS_CHECK(out.good(), ErrorKind::kData, "cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n";
  char scale[32];
  std::snprintf(scale, sizeof(scale), "%.17g", cloud.scene_scale);
  out << "comment scene_scale " << scale << "\n";
  out << "element vertex " << cloud.size() << "\n";
  for (const char* p : kProps) out << "property double " << p << "\n";
  out << "end_header\n";
  for (const Gaussian& g : cloud.gaussians) {
    const std::array<double, 15> v = {
        g.mu.x(),       g.mu.y(),       g.mu.z(),        g.quat.w(),
        g.quat.x(),     g.quat.y(),     g.quat.z(),      g.log_scale.x(),
        g.log_scale.y(), g.log_scale.z(), g.opacity_logit, g.color.x(),
        g.color.y(),    g.color.z(),    g.reflective ? 1.0 : 0.0};
    out.write(reinterpret_cast<const char*>(v.data()), sizeof(v));
  }
  POLARGS_CHECK(out.good(), ErrorKind::kData, "write failed: " + path.string());
}

GaussianCloud ReadCloudPly(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  POLARGS_CHECK(in.good(), ErrorKind::kData, "cannot open " + path.string());
  std::string line;
  POLARGS_CHECK(std::getline(in, line) && line == "ply", ErrorKind::kFormat,
                "not a PLY file: " + path.string());
  GaussianCloud cloud;
  size_t count = 0;
  size_t prop = 0;
  bool binary = false;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      binary = fmt == "binary_little_endian";
    } else if (word == "comment") {
      std::string key;
      if (ss >> key && key == "scene_scale") ss >> cloud.scene_scale;
    } else if (word == "element") {
      std::string name;
      ss >> name >> count;
      POLARGS_CHECK(name == "vertex", ErrorKind::kFormat, "unexpected PLY element " + name);
    } else if (word == "property") {
      std::string type, name;
      ss >> type >> name;
      POLARGS_CHECK(prop < kProps.size() && type == "double" && name == kProps[prop],
                    ErrorKind::kFormat, "unexpected PLY property " + name);
      ++prop;
    }
  }
  POLARGS_CHECK(binary && prop == kProps.size() && line == "end_header", ErrorKind::kFormat,
                "unsupported Gaussian PLY layout: " + path.string());
  cloud.gaussians.resize(count);
  for (Gaussian& g : cloud.gaussians) {
    std::array<double, 15> v;
    in.read(reinterpret_cast<char*>(v.data()), sizeof(v));
    POLARGS_CHECK(in.good(), ErrorKind::kFormat, "truncated PLY: " + path.string());
    g.mu = {v[0], v[1], v[2]};
    g.quat = Eigen::Quaterniond(v[3], v[4], v[5], v[6]);
    g.log_scale = {v[7], v[8], v[9]};
    g.opacity_logit = v[10];
    g.color = {v[11], v[12], v[13]};
    g.reflective = v[14] != 0.0;
  }
  return cloud;
}

}  // namespace polargs
