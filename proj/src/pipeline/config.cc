#include "polargs/pipeline/config.h"

#include <cstdlib>

#include <json.hpp>

#include "polargs/core/error.h"
#include "polargs/core/io.h"

namespace polargs::pipeline {
namespace {

using nlohmann::json;

json::json_pointer Pointer(const std::string& dotted) {
  std::string p;
  for (char c : dotted) p += c == '.' ? '/' : c;
  return json::json_pointer("/" + p);
}

// Writes every field into a JSON document.
struct Writer {
  json doc = json::object();
  bool echo = false;

  template <typename T>
  void operator()(const std::string& key, const T& value) {
    doc[Pointer(key)] = value;
  }
  void operator()(const std::string& key, const Eigen::Vector3d& v) {
    doc[Pointer(key)] = {v.x(), v.y(), v.z()};
  }
  void operator()(const std::string& key, const std::filesystem::path& p) {
    doc[Pointer(key)] = p.string();
  }
  void Shape(const std::string& key, const synth::ShapeKind& kind) {
    doc[Pointer(key)] = synth::ShapeName(kind);
  }
};

// Reads every field back; the document has already been checked against the
// defaults, so all keys exist with compatible types.
struct Reader {
  const json& doc;

  template <typename T>
  void operator()(const std::string& key, T& value) {
    value = doc.at(Pointer(key)).get<T>();
  }
  void operator()(const std::string& key, Eigen::Vector3d& v) {
    const json& a = doc.at(Pointer(key));
    v = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
  }
  void operator()(const std::string& key, std::filesystem::path& p) {
    p = doc.at(Pointer(key)).get<std::string>();
  }
  void Shape(const std::string& key, synth::ShapeKind& kind) {
    kind = synth::ShapeFromName(doc.at(Pointer(key)).get<std::string>());
  }
};

template <typename Cfg, typename V>
void Visit(V& v, Cfg& c, bool with_runtime) {
  v("seed", c.seed);
  if (with_runtime) {
    v("threads", c.threads);
    v("output_dir", c.output_dir);
  }
  v("input.dataset", c.dataset);

  auto& s = c.scene;
  v.Shape("scene.shape", s.shape);
  v("scene.radius", s.radius);
  v("scene.extent", s.extent);
  v("scene.supershape.a", s.supershape.a);
  v("scene.supershape.b", s.supershape.b);
  v("scene.supershape.c", s.supershape.c);
  v("scene.supershape.e1", s.supershape.e1);
  v("scene.supershape.e2", s.supershape.e2);
  v("scene.center", s.center);
  v("scene.albedo", s.albedo);
  v("scene.textured", s.textured);
  v("scene.texture_amplitude", s.texture_amplitude);
  v("scene.texture_frequency", s.texture_frequency);
  v("scene.ambient", s.ambient);
  v("scene.light_intensity", s.light_intensity);
  v("scene.light_dir", s.light_dir);
  v("scene.specular_strength", s.specular.strength);
  v("scene.shininess", s.specular.shininess);
  v("scene.diffuse_max", s.dolp_model.diffuse_max);
  v("scene.specular_max", s.dolp_model.specular_max);
  v("scene.overexposed_dolp", s.dolp_model.overexposed);

  auto& cam = c.cameras;
  v("cameras.count", cam.count);
  v("cameras.layout", cam.layout);
  v("cameras.distance", cam.distance);
  v("cameras.elevation", cam.elevation);
  v("cameras.width", cam.intrinsics.width);
  v("cameras.height", cam.intrinsics.height);
  v("cameras.fx", cam.intrinsics.fx);
  v("cameras.fy", cam.intrinsics.fy);

  v("init.depth_noise", c.init.depth_noise);
  v("init.hole_fraction", c.init.hole_fraction);
  v("init.normal_noise_deg", c.init.normal_noise_deg);
  v("init.voxel", c.init.voxel);

  auto& cc = c.correction;
  v("correction.dolp_spec_min", cc.dolp_spec_min);
  v("correction.dolp_over_max", cc.dolp_over_max);
  v("correction.intensity_min", cc.intensity_min);
  v("correction.mahalanobis_max", cc.mahalanobis_max);
  v("correction.rho_d", cc.rho_d);
  v("correction.search_radius", cc.search_radius);
  v("correction.lambda_dssim", cc.lambda_dssim);
  v("correction.reflective_pixel_threshold", cc.reflective_pixel_threshold);
  v("correction.steps", c.refine.steps);
  v("correction.lr", c.refine.lr);
  v("correction.lambda_ref", c.refine.lambda_ref);

  auto& pm = c.patchmatch;
  v("patchmatch.tau", pm.tau);
  v("patchmatch.sigma", pm.sigma);
  v("patchmatch.lambda1", pm.lambda1);
  v("patchmatch.lambda2", pm.lambda2);
  v("patchmatch.ncc_window", pm.ncc_window);
  v("patchmatch.nd_window", pm.nd_window);
  v("patchmatch.ncc_sigma_spatial", pm.ncc_sigma_spatial);
  v("patchmatch.ncc_sigma_color", pm.ncc_sigma_color);
  v("patchmatch.sweeps", pm.sweeps);
  v("patchmatch.perturb_rel", pm.perturb_rel);
  v("patchmatch.perturb_angle", pm.perturb_angle);
  v("patchmatch.geo_px_thresh", pm.geo_px_thresh);
  v("patchmatch.geo_depth_rel_thresh", pm.geo_depth_rel_thresh);
  v("patchmatch.polar_eps_thresh", pm.polar_eps_thresh);
  v("patchmatch.min_consistent_views", pm.min_consistent_views);
  v("patchmatch.multi_view_azimuth", pm.multi_view_azimuth);

  auto& sp = c.splat;
  v("splat.iterations", sp.iterations);
  v("splat.densify_interval", sp.densify_interval);
  v("splat.densify_start", sp.densify_start);
  v("splat.densify_end", sp.densify_end);
  v("splat.sources", sp.sources);
  v("splat.coverage_alpha", sp.coverage_alpha);
  v("splat.spawn_voxel", sp.spawn_voxel);

  auto& f = c.fusion;
  v("fusion.voxel_size", f.tsdf.voxel_size);
  v("fusion.truncation", f.tsdf.truncation);
  v("fusion.max_depth", f.tsdf.max_depth);
  v("fusion.alpha_min", f.alpha_min);
  v("fusion.min_normal_z", f.min_normal_z);
  v("fusion.margin", f.margin);

  v("eval.samples", c.eval.samples);
  v("eval.cd_max", c.eval.cd_max);
  v("eval.mae_max_deg", c.eval.mae_max_deg);
}

bool Compatible(const json& base, const json& value) {
  if (base.is_number_integer()) return value.is_number_integer();
  if (base.is_number()) return value.is_number();
  if (base.is_array()) {
    if (!value.is_array() || value.size() != base.size()) return false;
    for (const json& e : value) {
      if (!e.is_number()) return false;
    }
    return true;
  }
  return base.type() == value.type();
}

void MergeChecked(json& base, const json& overlay, const std::string& where) {
  POLARGS_CHECK(overlay.is_object(), ErrorKind::kConfig,
                "config: expected an object at '" + where + "'");
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    POLARGS_CHECK(base.contains(it.key()), ErrorKind::kConfig, "config: unknown key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      MergeChecked(slot, it.value(), key);
      continue;
    }
    POLARGS_CHECK(Compatible(slot, it.value()), ErrorKind::kConfig,
                  "config: wrong type for '" + key + "'");
    slot = it.value();
  }
}

json Override(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  POLARGS_CHECK(eq != std::string::npos && eq > 0, ErrorKind::kConfig,
                "config: override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;  // bare strings need no quotes
  json out = json::object();
  out[Pointer(key)] = value;
  return out;
}

json DefaultDocument() {
  PipelineConfig defaults;
  Writer w;
  Visit(w, defaults, true);
  return w.doc;
}

}  // namespace

std::filesystem::path PipelineConfig::DatasetDir() const {
  return dataset.empty() ? output_dir / "dataset" : dataset;
}

void PipelineConfig::Validate() const {
  scene.Validate();
  correction.Validate();
  patchmatch.Validate();
  fusion.tsdf.Validate();
  POLARGS_CHECK(threads >= 0, ErrorKind::kConfig, "config: threads must be >= 0");
  POLARGS_CHECK(!output_dir.empty(), ErrorKind::kConfig, "config: output_dir is not set");
  POLARGS_CHECK(dataset.empty() || std::filesystem::exists(dataset), ErrorKind::kConfig,
                "config: input.dataset '" + dataset.string() + "' does not exist");
  POLARGS_CHECK(cameras.count >= 2, ErrorKind::kConfig, "config: cameras.count must be >= 2");
  POLARGS_CHECK(cameras.layout == "sphere" || cameras.layout == "ring", ErrorKind::kConfig,
                "config: cameras.layout must be 'sphere' or 'ring'");
  POLARGS_CHECK(cameras.distance > 0 && cameras.intrinsics.width > 0 &&
                    cameras.intrinsics.height > 0 && cameras.intrinsics.fx > 0 &&
                    cameras.intrinsics.fy > 0,
                ErrorKind::kConfig, "config: camera distance and intrinsics must be positive");
  POLARGS_CHECK(init.depth_noise >= 0 && init.hole_fraction >= 0 && init.hole_fraction < 1 &&
                    init.normal_noise_deg >= 0 && init.voxel >= 0,
                ErrorKind::kConfig, "config: invalid init settings");
  POLARGS_CHECK(refine.steps >= 0 && refine.lr > 0 && refine.lambda_ref >= 0, ErrorKind::kConfig,
                "config: invalid correction optimizer settings");
  POLARGS_CHECK(splat.iterations >= 0 && splat.densify_interval > 0 && splat.sources >= 1 &&
                    splat.coverage_alpha > 0 && splat.coverage_alpha <= 1 &&
                    splat.spawn_voxel >= 0,
                ErrorKind::kConfig, "config: invalid splat settings");
  POLARGS_CHECK(fusion.alpha_min > 0 && fusion.alpha_min <= 1 && fusion.min_normal_z >= 0 &&
                    fusion.min_normal_z < 1 && fusion.margin >= 0,
                ErrorKind::kConfig, "config: invalid fusion settings");
  POLARGS_CHECK(eval.samples > 0 && eval.cd_max > 0 && eval.mae_max_deg > 0, ErrorKind::kConfig,
                "config: invalid eval settings");
}

namespace {

PipelineConfig Resolve(const json* user, const std::vector<std::string>& overrides) {
  json doc = DefaultDocument();
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) {
    doc["output_dir"] = (std::filesystem::path(root) / "run").string();
  } else {
    doc["output_dir"] = "polargs_out";
  }
  if (user) MergeChecked(doc, *user, "");
  for (const std::string& o : overrides) MergeChecked(doc, Override(o), "");

  PipelineConfig cfg;
  Reader r{doc};
  Visit(r, cfg, true);
  cfg.scene.rng_seed = cfg.seed;
  cfg.patchmatch.seed = cfg.seed;
  cfg.patchmatch.reflective_pixel_threshold = cfg.correction.reflective_pixel_threshold;
  cfg.refine.lambda_dssim = cfg.correction.lambda_dssim;
  cfg.Validate();
  return cfg;
}

}  // namespace

PipelineConfig ParseConfig(const std::string& json_text,
                           const std::vector<std::string>& overrides) {
  const json user = json::parse(json_text, nullptr, false);
  POLARGS_CHECK(!user.is_discarded(), ErrorKind::kConfig, "config: not valid JSON");
  return Resolve(&user, overrides);
}

PipelineConfig LoadConfig(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
  if (path.empty()) return Resolve(nullptr, overrides);
  POLARGS_CHECK(std::filesystem::exists(path), ErrorKind::kConfig,
                "config: file '" + path.string() + "' does not exist");
  const json user = json::parse(ReadTextFile(path), nullptr, false);
  POLARGS_CHECK(!user.is_discarded(), ErrorKind::kConfig,
                "config: '" + path.string() + "' is not valid JSON");
  return Resolve(&user, overrides);
}

std::string ConfigToJson(const PipelineConfig& cfg) {
  Writer w;
  Visit(w, cfg, false);
  return w.doc.dump(2);
}

std::string DefaultConfigJson() { return DefaultDocument().dump(2) + "\n"; }

}  // namespace polargs::pipeline
