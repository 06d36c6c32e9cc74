#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

#include "airguard/rng.hpp"

namespace airguard::geometry {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct CameraIntrinsics {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int image_w = 640;
  int image_h = 480;

  /// Throws InvalidConfig when focal lengths or principal point are out of range.
  void validate() const;
};

struct MarkerSpec {
  double side_len = 0.05;  // meters
  int id = 0;

  void validate() const;
};

/// Detector output: four tag corners in pixels, counter-clockwise starting
/// at the bottom-left corner of the tag frame.
struct TagObservation {
  std::array<Vec2, 4> corners;
  int id = 0;
  double timestamp_ms = 0.0;
};

struct MarkerPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

struct TcpPoint {
  Vec3 position = Vec3::Zero();
  double timestamp_ms = 0.0;
};

/// Corner coordinates in the tag frame (z = 0 plane), in observation order.
std::array<Vec3, 4> tag_corners(const MarkerSpec& spec);

/// Pinhole projection of the tag corners. Throws CornerBehindCamera when any
/// corner ends up at z <= 0.
TagObservation project(const MarkerPose& pose, const MarkerSpec& spec, const CameraIntrinsics& k);

/// Same as project() with i.i.d. Gaussian pixel noise added to every corner.
TagObservation observe(const MarkerPose& pose, const MarkerSpec& spec, const CameraIntrinsics& k,
                       double noise_px, Rng& rng);

/// True when the corners form a strictly convex quadrilateral.
bool is_strictly_convex(const TagObservation& obs);

/// True when every corner lies inside the image.
bool in_image(const TagObservation& obs, const CameraIntrinsics& k);

/// Planar pose from four corners: DLT homography in normalized camera
/// coordinates, decomposition with the marker placed in front of the camera,
/// nearest-rotation projection, then Gauss-Newton refinement of the pixel
/// reprojection error. Throws DegenerateObservation on collinear or
/// non-convex corners.
MarkerPose estimate_pose(const TagObservation& obs, const MarkerSpec& spec, const CameraIntrinsics& k);

/// Root-mean-square pixel reprojection error of a pose against an observation.
double reprojection_rms(const MarkerPose& pose, const TagObservation& obs, const MarkerSpec& spec,
                        const CameraIntrinsics& k);

double marker_to_tcp_distance(const MarkerPose& pose, const TcpPoint& tcp);

/// Geodesic angle (rad) between two rotations.
double rotation_angle_between(const Mat3& a, const Mat3& b);

/// Rotation from an axis-angle vector (Rodrigues).
Mat3 rotation_from_vector(const Vec3& omega);

/// Nearest rotation matrix in the Frobenius sense (SVD projection, det = +1).
Mat3 nearest_rotation(const Mat3& m);

}  // namespace airguard::geometry
