#include "airguard/geometry.hpp"

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "airguard/error.hpp"

namespace airguard::geometry {

namespace {

using Mat3x3 = Eigen::Matrix3d;
using Mat8x9 = Eigen::Matrix<double, 8, 9>;
using Mat8x6 = Eigen::Matrix<double, 8, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Signed turn at each corner; all negative for the counter-clockwise (image
// y-down) winding the detector reports.
std::array<double, 4> turns(const TagObservation& obs) {
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) {
    const Vec2& a = obs.corners[i];
    const Vec2& b = obs.corners[(i + 1) % 4];
    const Vec2& c = obs.corners[(i + 2) % 4];
    out[i] = cross2(b - a, c - b);
  }
  return out;
}

// Similarity transform taking points to zero centroid and mean norm sqrt(2).
Mat3x3 hartley(const std::array<Vec2, 4>& pts) {
  Vec2 c = Vec2::Zero();
  for (const auto& p : pts) c += p;
  c /= 4.0;
  double mean_norm = 0.0;
  for (const auto& p : pts) mean_norm += (p - c).norm();
  mean_norm /= 4.0;
  const double s = std::sqrt(2.0) / mean_norm;
  Mat3x3 t;
  t << s, 0.0, -s * c.x(), 0.0, s, -s * c.y(), 0.0, 0.0, 1.0;
  return t;
}

Vec8 residuals(const MarkerPose& pose, const TagObservation& obs, const std::array<Vec3, 4>& object,
               const CameraIntrinsics& k) {
  Vec8 r;
  for (int i = 0; i < 4; ++i) {
    const Vec3 pc = pose.rotation * object[i] + pose.translation;
    r(2 * i) = k.fx * pc.x() / pc.z() + k.cx - obs.corners[i].x();
    r(2 * i + 1) = k.fy * pc.y() / pc.z() + k.cy - obs.corners[i].y();
  }
  return r;
}

// Levenberg-Marquardt on the 8 pixel residuals; rotation updated by a left
// multiplicative increment so it stays on SO(3).
MarkerPose refine(MarkerPose pose, const TagObservation& obs, const std::array<Vec3, 4>& object,
                  const CameraIntrinsics& k) {
  Vec8 r = residuals(pose, obs, object, k);
  double cost = r.squaredNorm();
  double lambda = 1e-6;
  for (int iter = 0; iter < 50; ++iter) {
    Mat8x6 jac;
    for (int i = 0; i < 4; ++i) {
      const Vec3 rx = pose.rotation * object[i];
      const Vec3 pc = rx + pose.translation;
      const double iz = 1.0 / pc.z();
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << k.fx * iz, 0.0, -k.fx * pc.x() * iz * iz, 0.0, k.fy * iz, -k.fy * pc.y() * iz * iz;
      jac.block<2, 3>(2 * i, 0) = dproj * (-skew(rx));
      jac.block<2, 3>(2 * i, 3) = dproj;
    }
    const Eigen::Matrix<double, 6, 6> jtj = jac.transpose().lazyProduct(jac);
    const Vec6 jtr = jac.transpose().lazyProduct(r);
    bool improved = false;
    for (int attempt = 0; attempt < 10; ++attempt) {
      Eigen::Matrix<double, 6, 6> a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Vec6 step = a.ldlt().solve(-jtr);
      MarkerPose trial;
      trial.rotation = rotation_from_vector(step.head<3>()) * pose.rotation;
      trial.translation = pose.translation + step.tail<3>();
      if (trial.translation.z() <= 0.0) {
        lambda *= 10.0;
        continue;
      }
      const Vec8 tr = residuals(trial, obs, object, k);
      const double tcost = tr.squaredNorm();
      if (tcost <= cost) {
        // Converged once the update no longer changes the cost meaningfully.
        improved = (cost - tcost) > 1e-10 * cost && step.norm() > 1e-12;
        pose = trial;
        r = tr;
        cost = tcost;
        lambda = std::max(lambda * 0.1, 1e-12);
        break;
      }
      lambda *= 10.0;
    }
    if (!improved || cost < 1e-24) break;
  }
  pose.rotation = nearest_rotation(pose.rotation);
  return pose;
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::InvalidConfig, "focal lengths must be positive");
  if (image_w <= 0 || image_h <= 0) throw Error(ErrorCode::InvalidConfig, "image size must be positive");
  if (!(cx > 0.0 && cx < image_w) || !(cy > 0.0 && cy < image_h))
    throw Error(ErrorCode::InvalidConfig, "principal point must lie inside the image");
}

void MarkerSpec::validate() const {
  if (!(side_len > 0.0)) throw Error(ErrorCode::InvalidConfig, "marker side length must be positive");
}

std::array<Vec3, 4> tag_corners(const MarkerSpec& spec) {
  const double h = 0.5 * spec.side_len;
  return {Vec3(-h, h, 0.0), Vec3(h, h, 0.0), Vec3(h, -h, 0.0), Vec3(-h, -h, 0.0)};
}

TagObservation project(const MarkerPose& pose, const MarkerSpec& spec, const CameraIntrinsics& k) {
  TagObservation obs;
  obs.id = spec.id;
  const auto object = tag_corners(spec);
  for (int i = 0; i < 4; ++i) {
    const Vec3 pc = pose.rotation * object[i] + pose.translation;
    if (!(pc.z() > 0.0))
      throw Error(ErrorCode::CornerBehindCamera, "corner " + std::to_string(i) + " has depth " +
                                                     std::to_string(pc.z()));
    obs.corners[i] = Vec2(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
  }
  return obs;
}

TagObservation observe(const MarkerPose& pose, const MarkerSpec& spec, const CameraIntrinsics& k,
                       double noise_px, Rng& rng) {
  TagObservation obs = project(pose, spec, k);
  if (noise_px > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_px);
    for (auto& c : obs.corners) {
      c.x() += noise(rng);
      c.y() += noise(rng);
    }
  }
  return obs;
}

bool is_strictly_convex(const TagObservation& obs) {
  const auto t = turns(obs);
  // Scale-aware tolerance so that near-collinear corners count as degenerate.
  double scale = 0.0;
  for (int i = 0; i < 4; ++i) scale = std::max(scale, (obs.corners[(i + 1) % 4] - obs.corners[i]).squaredNorm());
  const double eps = 1e-12 * std::max(scale, 1.0);
  bool all_neg = true;
  bool all_pos = true;
  for (double v : t) {
    all_neg = all_neg && v < -eps;
    all_pos = all_pos && v > eps;
  }
  return all_neg || all_pos;
}

bool in_image(const TagObservation& obs, const CameraIntrinsics& k) {
  for (const auto& c : obs.corners) {
    if (!(c.x() >= 0.0 && c.x() <= k.image_w && c.y() >= 0.0 && c.y() <= k.image_h)) return false;
  }
  return true;
}

MarkerPose estimate_pose(const TagObservation& obs, const MarkerSpec& spec, const CameraIntrinsics& k) {
  for (const auto& c : obs.corners) {
    if (!c.allFinite()) throw Error(ErrorCode::DegenerateObservation, "non-finite corner");
  }
  if (!is_strictly_convex(obs))
    throw Error(ErrorCode::DegenerateObservation, "corners are collinear or not strictly convex");
  if (turns(obs)[0] > 0.0)
    throw Error(ErrorCode::DegenerateObservation, "corners wound clockwise (tag seen from behind)");

  const auto object = tag_corners(spec);
  const double half = 0.5 * spec.side_len;

  std::array<Vec2, 4> img;
  for (int i = 0; i < 4; ++i) {
    img[i] = Vec2((obs.corners[i].x() - k.cx) / k.fx, (obs.corners[i].y() - k.cy) / k.fy);
  }
  const Mat3x3 t_img = hartley(img);

  Mat8x9 a = Mat8x9::Zero();
  for (int i = 0; i < 4; ++i) {
    const double x = object[i].x() / half;
    const double y = object[i].y() / half;
    const Eigen::Vector3d p = t_img * Eigen::Vector3d(img[i].x(), img[i].y(), 1.0);
    const double u = p.x() / p.z();
    const double v = p.y() / p.z();
    a.row(2 * i) << -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
  }
  // The 8x9 system has a one-dimensional null space unless the corners are
  // degenerate.
  Eigen::FullPivLU<Mat8x9> lu(a);
  lu.setThreshold(1e-10);
  if (lu.rank() < 8) throw Error(ErrorCode::DegenerateObservation, "homography system is rank-deficient");
  const Eigen::Matrix<double, 9, 1> h = lu.kernel().col(0).normalized();
  Mat3x3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  // Undo both normalizations: object scaled by 1/half, image by t_img.
  const Mat3x3 s_obj = Eigen::Vector3d(1.0 / half, 1.0 / half, 1.0).asDiagonal();
  const Mat3x3 hm = t_img.inverse() * hn * s_obj;

  const Vec3 h1 = hm.col(0);
  const Vec3 h2 = hm.col(1);
  const Vec3 h3 = hm.col(2);
  double scale = 2.0 / (h1.norm() + h2.norm());
  // Of the two sign choices only one puts the marker in front of the camera.
  if (scale * h3.z() < 0.0) scale = -scale;

  Mat3 r0;
  r0.col(0) = scale * h1;
  r0.col(1) = scale * h2;
  r0.col(2) = r0.col(0).cross(r0.col(1));

  MarkerPose pose;
  pose.rotation = nearest_rotation(r0);
  pose.translation = scale * h3;
  if (!(pose.translation.z() > 0.0) || !pose.translation.allFinite())
    throw Error(ErrorCode::DegenerateObservation, "homography decomposition failed");

  return refine(pose, obs, object, k);
}

double reprojection_rms(const MarkerPose& pose, const TagObservation& obs, const MarkerSpec& spec,
                        const CameraIntrinsics& k) {
  return std::sqrt(residuals(pose, obs, tag_corners(spec), k).squaredNorm() / 4.0);
}

double marker_to_tcp_distance(const MarkerPose& pose, const TcpPoint& tcp) {
  return (pose.translation - tcp.position).norm();
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 d = a.transpose() * b;
  const Vec3 v(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  return std::atan2(0.5 * v.norm(), 0.5 * (d.trace() - 1.0));
}

Mat3 rotation_from_vector(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 w = skew(omega);
  if (theta < 1e-8) return Mat3::Identity() + w + 0.5 * w * w;
  return Mat3::Identity() + (std::sin(theta) / theta) * w +
         ((1.0 - std::cos(theta)) / (theta * theta)) * w * w;
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

}  // namespace airguard::geometry
