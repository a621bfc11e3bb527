#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kanbev/fusion.hpp"
#include "kanbev/geometry.hpp"
#include "kanbev/io.hpp"
#include "kanbev/pillars.hpp"
#include "kanbev/tensor.hpp"

// Seeded synthetic driving scenes standing in for a real dataset reader.
namespace kanbev {

struct SceneSpec {
  std::uint64_t seed = 0;
  int num_cameras = 6;
  ImageSize image{256, 704};
  double focal = 560.0;
  double camera_height = 1.6;
  int feature_stride = 16;
  std::size_t feature_channels = 512;

  int num_frames = 2;  // radar sweeps; the last one is the current frame
  double frame_dt = 0.5;
  double ego_speed = 5.0;
  double ego_yaw_rate = 0.05;

  int num_objects = 16;
  double object_range = 55.0;

  // Emission densities: object returns per square meter of box surface,
  // clutter as the expected number of points per sweep.
  double lidar_range = 30.0;
  double lidar_object_density = 6.0;
  double lidar_ground_points = 20000.0;
  double radar_range = 70.0;
  double radar_object_density = 0.4;
  double radar_clutter_points = 800.0;
  double radar_clutter_height = 4.0;

  void validate() const;
};

struct Scene {
  SceneSpec spec;
  std::string token;
  std::vector<EgoPose> poses;                   // one per frame
  std::vector<CameraRig> rigs;                  // full image resolution
  std::vector<DetectionBox> objects;            // current ego frame
  pillars::RadarPointCloud lidar;               // current frame only
  std::vector<pillars::RadarPointCloud> radar;  // per frame, each in its own ego frame
  std::vector<Tensor> features;                 // per camera, C_F x H x W

  const EgoPose& current_pose() const { return poses.back(); }
  const pillars::RadarPointCloud& current_radar() const { return radar.back(); }
  ImageSize feature_size() const;
};

// Cameras evenly spaced in yaw around the vehicle, camera 0 facing +x.
std::vector<CameraRig> surround_rigs(int count, ImageSize image, double focal, double height);

Scene generate_scene(const SceneSpec& spec);

io::BoxesByToken scene_ground_truth(const Scene& scene);

// Bundle layout: scene.json, gt.json, lidar.pc4d, radar_<k>.pc4d,
// features_cam<k>.tnsr.
void write_scene(const Scene& scene, const std::string& dir);
Scene read_scene(const std::string& dir);

}  // namespace kanbev
