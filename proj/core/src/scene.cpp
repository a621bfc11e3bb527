#include "kanbev/scene.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "json.hpp"
#include "kanbev/error.hpp"
#include "kanbev/metrics.hpp"
#include "kanbev/rng.hpp"

namespace kanbev {

using nlohmann::json;

namespace {

enum Stream : std::uint64_t { kObjects = 1, kLidar = 2, kRadar = 3, kClutter = 4, kFeatures = 100 };

Mat3 rot_z(double yaw) {
  Mat3 r;
  r << std::cos(yaw), -std::sin(yaw), 0.0, std::sin(yaw), std::cos(yaw), 0.0, 0.0, 0.0, 1.0;
  return r;
}

// Uniform point on the four sides and the top of a box.
Vec3 sample_box_surface(const DetectionBox& b, SplitMix64& rng) {
  const double w = b.size.x(), l = b.size.y(), h = b.size.z();
  const double side_x = l * h, side_y = w * h, top = w * l;
  const double pick = rng.uniform() * (2 * side_x + 2 * side_y + top);
  Vec3 local;
  if (pick < 2 * side_x) {
    local = Vec3(pick < side_x ? -w / 2 : w / 2, rng.uniform(-l / 2, l / 2), rng.uniform(-h / 2, h / 2));
  } else if (pick < 2 * side_x + 2 * side_y) {
    local = Vec3(rng.uniform(-w / 2, w / 2), pick < 2 * side_x + side_y ? -l / 2 : l / 2, rng.uniform(-h / 2, h / 2));
  } else {
    local = Vec3(rng.uniform(-w / 2, w / 2), rng.uniform(-l / 2, l / 2), h / 2);
  }
  return b.center + rot_z(b.yaw) * local;
}

double box_surface_area(const DetectionBox& b) {
  return 2 * b.size.y() * b.size.z() + 2 * b.size.x() * b.size.z() + b.size.x() * b.size.y();
}

double bev_range(const Vec3& p) { return std::hypot(p.x(), p.y()); }

std::vector<DetectionBox> generate_objects(const SceneSpec& spec) {
  static constexpr std::array<double, 10> kClassWeights{0.40, 0.08, 0.04, 0.04, 0.03, 0.15, 0.05, 0.05, 0.08, 0.08};
  SplitMix64 rng(mix_seed(spec.seed, kObjects));
  const auto& classes = metrics::detection_classes();
  std::vector<DetectionBox> out;
  for (int i = 0; i < spec.num_objects; ++i) {
    double pick = rng.uniform(), acc = 0.0;
    std::size_t cls = 0;
    for (; cls + 1 < kClassWeights.size(); ++cls) {
      acc += kClassWeights[cls];
      if (pick < acc) break;
    }
    const auto& info = classes[cls];
    DetectionBox b;
    b.class_id = static_cast<int>(cls);
    b.size = info.typical_size * rng.uniform(0.9, 1.1);
    double x, y;
    do {
      x = rng.uniform(-spec.object_range, spec.object_range);
      y = rng.uniform(-spec.object_range, spec.object_range);
    } while (std::hypot(x, y) < 6.0);
    b.center = Vec3(x, y, b.size.z() / 2);
    b.yaw = info.traits.orientation ? rng.uniform(-std::numbers::pi, std::numbers::pi) : 0.0;

    double speed = 0.0;
    const bool vehicle = cls <= 4, person = cls == 5, cycle = cls == 6 || cls == 7;
    if (info.traits.velocity && rng.uniform() < 0.5) {
      speed = person ? rng.uniform(0.5, 1.5) : cycle ? rng.uniform(2.0, 6.0) : rng.uniform(2.0, 10.0);
    }
    // Heading is the box's local +y (its length axis).
    b.velocity = {-std::sin(b.yaw) * speed, std::cos(b.yaw) * speed};
    if (info.traits.attribute) {
      const bool moving = speed > 0.5;
      if (vehicle) b.attribute_id = moving ? 0 : (rng.uniform() < 0.5 ? 1 : 2);
      if (person) b.attribute_id = moving ? 0 : 1;
      if (cycle) b.attribute_id = moving ? 0 : 1;
    }
    b.score = 1.0;
    out.push_back(b);
  }
  return out;
}

DetectionBox at_time(const DetectionBox& b, double t) {
  DetectionBox out = b;
  out.center.x() += b.velocity[0] * t;
  out.center.y() += b.velocity[1] * t;
  return out;
}

json mat_json(const Mat3& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  }
  return a;
}

Mat3 mat_from(const json& a, const std::string& where) {
  if (!a.is_array() || a.size() != 9) throw ValidationError(where + ": expected 9 row-major numbers");
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = a[static_cast<std::size_t>(3 * r + c)].get<double>();
  }
  return m;
}

Vec3 vec_from(const json& a, const std::string& where) {
  if (!a.is_array() || a.size() != 3) throw ValidationError(where + ": expected 3 numbers");
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

void SceneSpec::validate() const {
  if (num_cameras < 1 || num_cameras > 6) throw ValidationError("scene spec: 1 to 6 cameras required");
  if (image.height <= 0 || image.width <= 0) throw ValidationError("scene spec: image size must be positive");
  if (feature_stride < 1 || image.height % feature_stride != 0 || image.width % feature_stride != 0) {
    throw ValidationError("scene spec: feature_stride must divide the image size");
  }
  if (feature_channels == 0) throw ValidationError("scene spec: feature_channels must be positive");
  if (num_frames < 1) throw ValidationError("scene spec: at least one frame");
  if (!(frame_dt > 0.0)) throw ValidationError("scene spec: frame_dt must be positive");
  if (num_objects < 0) throw ValidationError("scene spec: num_objects must be >= 0");
  for (double v : {focal, camera_height, object_range, lidar_range, radar_range, radar_clutter_height}) {
    if (!(v > 0.0)) throw ValidationError("scene spec: focal, heights and ranges must be positive");
  }
  for (double v : {lidar_object_density, lidar_ground_points, radar_object_density, radar_clutter_points}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("scene spec: densities must be finite and >= 0");
  }
}

ImageSize Scene::feature_size() const {
  return {spec.image.height / spec.feature_stride, spec.image.width / spec.feature_stride};
}

std::vector<CameraRig> surround_rigs(int count, ImageSize image, double focal, double height) {
  std::vector<CameraRig> rigs;
  for (int k = 0; k < count; ++k) {
    const double yaw = 2.0 * std::numbers::pi * k / count;
    const double c = std::cos(yaw), s = std::sin(yaw);
    CameraRig rig;
    rig.intrinsics << focal, 0.0, image.width / 2.0, 0.0, focal, image.height / 2.0, 0.0, 0.0, 1.0;
    // Rows: camera x (right), y (down), z (optical axis) in ego coordinates.
    rig.rotation << s, -c, 0.0, 0.0, 0.0, -1.0, c, s, 0.0;
    const Vec3 center(c, s, height);
    rig.translation = -rig.rotation * center;
    rig.image_size = image;
    rigs.push_back(rig);
  }
  return rigs;
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Scene scene;
  scene.spec = spec;
  scene.token = "scene-" + std::to_string(spec.seed);
  scene.rigs = surround_rigs(spec.num_cameras, spec.image, spec.focal, spec.camera_height);

  // The current ego frame doubles as the world frame.
  for (int k = 0; k < spec.num_frames; ++k) {
    const double t = (k - (spec.num_frames - 1)) * spec.frame_dt;
    EgoPose pose;
    pose.rotation = rot_z(spec.ego_yaw_rate * t);
    pose.translation = Vec3(spec.ego_speed * t, 0.0, 0.0);
    pose.timestamp = t;
    scene.poses.push_back(pose);
  }
  scene.objects = generate_objects(spec);

  SplitMix64 lidar_rng(mix_seed(spec.seed, kLidar));
  for (const auto& b : scene.objects) {
    const auto n = lidar_rng.poisson(spec.lidar_object_density * box_surface_area(b));
    for (std::uint64_t i = 0; i < n; ++i) {
      const Vec3 p = sample_box_surface(b, lidar_rng);
      const double r = lidar_rng.uniform();
      if (bev_range(p) <= spec.lidar_range) scene.lidar.points.push_back({p.x(), p.y(), p.z(), r});
    }
  }
  const auto ground = lidar_rng.poisson(spec.lidar_ground_points);
  const double r0 = 2.0;
  for (std::uint64_t i = 0; i < ground; ++i) {
    const double rad = std::sqrt(lidar_rng.uniform(r0 * r0, spec.lidar_range * spec.lidar_range));
    const double ang = lidar_rng.uniform(-std::numbers::pi, std::numbers::pi);
    scene.lidar.points.push_back({rad * std::cos(ang), rad * std::sin(ang), 0.0, lidar_rng.uniform()});
  }

  // Static clutter (poles, walls, parked structure) lives in the world frame
  // and is re-observed with jitter in every sweep.
  SplitMix64 clutter_rng(mix_seed(spec.seed, kClutter));
  std::vector<Vec3> clutter;
  const auto n_clutter = clutter_rng.poisson(spec.radar_clutter_points);
  for (std::uint64_t i = 0; i < n_clutter; ++i) {
    const double rad = std::sqrt(clutter_rng.uniform(25.0, spec.radar_range * spec.radar_range));
    const double ang = clutter_rng.uniform(-std::numbers::pi, std::numbers::pi);
    clutter.emplace_back(rad * std::cos(ang), rad * std::sin(ang), clutter_rng.uniform(0.0, spec.radar_clutter_height));
  }

  SplitMix64 radar_rng(mix_seed(spec.seed, kRadar));
  for (const auto& pose : scene.poses) {
    pillars::RadarPointCloud sweep;
    const Mat3 rt = pose.rotation.transpose();
    auto emit = [&](const Vec3& world, double rcs) {
      const Vec3 ego = rt * (world - pose.translation);
      if (bev_range(ego) <= spec.radar_range) sweep.points.push_back({ego.x(), ego.y(), ego.z(), rcs});
    };
    for (const auto& obj : scene.objects) {
      const DetectionBox b = at_time(obj, pose.timestamp);
      const auto n = radar_rng.poisson(spec.radar_object_density * box_surface_area(b));
      for (std::uint64_t i = 0; i < n; ++i) emit(sample_box_surface(b, radar_rng), radar_rng.uniform(5.0, 20.0));
    }
    for (const auto& c : clutter) {
      const Vec3 jitter(radar_rng.normal() * 0.05, radar_rng.normal() * 0.05, radar_rng.normal() * 0.05);
      emit(c + jitter, radar_rng.uniform(0.0, 5.0));
    }
    scene.radar.push_back(std::move(sweep));
  }

  const ImageSize fs = scene.feature_size();
  for (int k = 0; k < spec.num_cameras; ++k) {
    SplitMix64 rng(mix_seed(spec.seed, kFeatures + static_cast<std::uint64_t>(k)));
    Tensor f({spec.feature_channels, static_cast<std::size_t>(fs.height), static_cast<std::size_t>(fs.width)});
    for (double& v : f.data()) v = rng.normal();
    scene.features.push_back(std::move(f));
  }
  return scene;
}

io::BoxesByToken scene_ground_truth(const Scene& scene) {
  io::BoxesByToken gt;
  gt[scene.token] = scene.objects;
  return gt;
}

void write_scene(const Scene& scene, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create scene directory " + dir + ": " + ec.message());

  const auto& s = scene.spec;
  json root;
  root["token"] = scene.token;
  root["spec"] = {{"seed", s.seed},
                  {"num_cameras", s.num_cameras},
                  {"image", {s.image.height, s.image.width}},
                  {"focal", s.focal},
                  {"camera_height", s.camera_height},
                  {"feature_stride", s.feature_stride},
                  {"feature_channels", s.feature_channels},
                  {"num_frames", s.num_frames},
                  {"frame_dt", s.frame_dt},
                  {"ego_speed", s.ego_speed},
                  {"ego_yaw_rate", s.ego_yaw_rate},
                  {"num_objects", s.num_objects},
                  {"object_range", s.object_range},
                  {"lidar_range", s.lidar_range},
                  {"lidar_object_density", s.lidar_object_density},
                  {"lidar_ground_points", s.lidar_ground_points},
                  {"radar_range", s.radar_range},
                  {"radar_object_density", s.radar_object_density},
                  {"radar_clutter_points", s.radar_clutter_points},
                  {"radar_clutter_height", s.radar_clutter_height}};
  json poses = json::array();
  for (const auto& p : scene.poses) {
    poses.push_back({{"rotation", mat_json(p.rotation)},
                     {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}},
                     {"timestamp", p.timestamp}});
  }
  root["poses"] = poses;
  json cams = json::array();
  for (const auto& r : scene.rigs) {
    cams.push_back({{"intrinsics", mat_json(r.intrinsics)},
                    {"rotation", mat_json(r.rotation)},
                    {"translation", {r.translation.x(), r.translation.y(), r.translation.z()}},
                    {"image", {r.image_size.height, r.image_size.width}}});
  }
  root["cameras"] = cams;
  io::write_text(path_in(dir, "scene.json"), root.dump(1) + "\n");
  io::save_boxes(path_in(dir, "gt.json"), scene_ground_truth(scene), false);
  io::save_pc4d(path_in(dir, "lidar.pc4d"), scene.lidar);
  for (std::size_t k = 0; k < scene.radar.size(); ++k) {
    io::save_pc4d(path_in(dir, "radar_" + std::to_string(k) + ".pc4d"), scene.radar[k]);
  }
  for (std::size_t k = 0; k < scene.features.size(); ++k) {
    save_tensor(path_in(dir, "features_cam" + std::to_string(k) + ".tnsr"), scene.features[k]);
  }
}

Scene read_scene(const std::string& dir) {
  json root;
  try {
    root = json::parse(io::read_text(path_in(dir, "scene.json")));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("scene.json: ") + e.what());
  }
  Scene scene;
  try {
    scene.token = root.at("token").get<std::string>();
    const auto& js = root.at("spec");
    auto& s = scene.spec;
    s.seed = js.at("seed").get<std::uint64_t>();
    s.num_cameras = js.at("num_cameras").get<int>();
    s.image = {js.at("image").at(0).get<int>(), js.at("image").at(1).get<int>()};
    s.focal = js.at("focal").get<double>();
    s.camera_height = js.at("camera_height").get<double>();
    s.feature_stride = js.at("feature_stride").get<int>();
    s.feature_channels = js.at("feature_channels").get<std::size_t>();
    s.num_frames = js.at("num_frames").get<int>();
    s.frame_dt = js.at("frame_dt").get<double>();
    s.ego_speed = js.at("ego_speed").get<double>();
    s.ego_yaw_rate = js.at("ego_yaw_rate").get<double>();
    s.num_objects = js.at("num_objects").get<int>();
    s.object_range = js.at("object_range").get<double>();
    s.lidar_range = js.at("lidar_range").get<double>();
    s.lidar_object_density = js.at("lidar_object_density").get<double>();
    s.lidar_ground_points = js.at("lidar_ground_points").get<double>();
    s.radar_range = js.at("radar_range").get<double>();
    s.radar_object_density = js.at("radar_object_density").get<double>();
    s.radar_clutter_points = js.at("radar_clutter_points").get<double>();
    s.radar_clutter_height = js.at("radar_clutter_height").get<double>();
    for (const auto& jp : root.at("poses")) {
      EgoPose p;
      p.rotation = mat_from(jp.at("rotation"), "scene.json pose rotation");
      p.translation = vec_from(jp.at("translation"), "scene.json pose translation");
      p.timestamp = jp.at("timestamp").get<double>();
      p.validate();
      scene.poses.push_back(p);
    }
    for (const auto& jc : root.at("cameras")) {
      CameraRig r;
      r.intrinsics = mat_from(jc.at("intrinsics"), "scene.json camera intrinsics");
      r.rotation = mat_from(jc.at("rotation"), "scene.json camera rotation");
      r.translation = vec_from(jc.at("translation"), "scene.json camera translation");
      r.image_size = {jc.at("image").at(0).get<int>(), jc.at("image").at(1).get<int>()};
      r.validate();
      scene.rigs.push_back(r);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scene.json: ") + e.what());
  }
  scene.spec.validate();
  if (scene.rigs.size() != static_cast<std::size_t>(scene.spec.num_cameras)) {
    throw ValidationError("scene.json: camera count differs from spec");
  }
  if (scene.poses.size() != static_cast<std::size_t>(scene.spec.num_frames)) {
    throw ValidationError("scene.json: pose count differs from spec");
  }

  const auto gt = io::load_boxes(path_in(dir, "gt.json"), false);
  if (auto it = gt.find(scene.token); it != gt.end()) scene.objects = it->second;
  scene.lidar = io::load_pc4d(path_in(dir, "lidar.pc4d"));
  for (int k = 0; k < scene.spec.num_frames; ++k) {
    scene.radar.push_back(io::load_pc4d(path_in(dir, "radar_" + std::to_string(k) + ".pc4d")));
  }
  const ImageSize fs = scene.feature_size();
  for (int k = 0; k < scene.spec.num_cameras; ++k) {
    Tensor f = load_tensor(path_in(dir, "features_cam" + std::to_string(k) + ".tnsr"));
    const Shape want{scene.spec.feature_channels, static_cast<std::size_t>(fs.height),
                             static_cast<std::size_t>(fs.width)};
    if (f.shape() != want) {
      throw ValidationError("features_cam" + std::to_string(k) + ".tnsr: shape " + shape_string(f.shape()) +
                            ", expected " + shape_string(want));
    }
    scene.features.push_back(std::move(f));
  }
  return scene;
}

}  // namespace kanbev
