#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "monorec/branch_trace.hpp"
#include "monorec/dual.hpp"
#include "monorec/grid.hpp"
#include "monorec/parallel.hpp"

namespace monorec {

/// Pinhole intrinsics. Pixel centers sit at integer coordinates.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;
  int width = 1;
  int height = 1;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx > 0.0 && cy > 0.0 && cx < width && cy < height;
  }

  void validate() const {
    if (!valid()) {
      throw std::invalid_argument("intrinsics: require fx, fy > 0 and 0 < cx < width, 0 < cy < height");
    }
  }

  /// Intrinsics of a 2x2 area-downsampled image.
  CameraIntrinsics halved() const {
    return {fx * 0.5, fy * 0.5, (cx - 0.5) * 0.5, (cy - 0.5) * 0.5, width / 2, height / 2};
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Rigid transform x -> R x + t.
class PoseSE3 {
 public:
  PoseSE3() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {}

  static PoseSE3 identity() { return {}; }

  static PoseSE3 from_axis_angle(const Eigen::Vector3d& axis_angle, const Eigen::Vector3d& t) {
    const double angle = axis_angle.norm();
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    if (angle > 0.0) r = Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
    return {r, t};
  }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

  /// Applies the transform to a point with an arbitrary scalar type.
  template <typename T>
  std::array<T, 3> apply(const std::array<T, 3>& p) const {
    std::array<T, 3> out;
    for (int i = 0; i < 3; ++i) {
      out[i] = rotation_(i, 0) * p[0] + rotation_(i, 1) * p[1] + rotation_(i, 2) * p[2] +
               translation_(i);
    }
    return out;
  }

  /// this ∘ other: applies `other` first.
  PoseSE3 compose(const PoseSE3& other) const {
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
  }
  PoseSE3 operator*(const PoseSE3& other) const { return compose(other); }

  PoseSE3 inverse() const {
    const Eigen::Matrix3d rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
  }

  /// Orthonormality and orientation check on the rotation block.
  bool is_valid(double tol = 1e-9) const {
    const double ortho = (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(rotation_.determinant() - 1.0) <= tol;
  }

  bool is_approx(const PoseSE3& other, double tol) const {
    return (rotation_ - other.rotation_).cwiseAbs().maxCoeff() <= tol &&
           (translation_ - other.translation_).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

enum class FrameRole { keyframe, temporal, static_stereo };

/// Image with calibration and world-to-camera pose.
struct Frame {
  Image image;
  CameraIntrinsics intrinsics;
  PoseSE3 pose;
  FrameRole role = FrameRole::temporal;

  void validate() const {
    intrinsics.validate();
    if (image.width() != intrinsics.width || image.height() != intrinsics.height) {
      throw DimensionError("frame: image " + std::to_string(image.width()) + "x" +
                           std::to_string(image.height()) + " does not match intrinsics " +
                           std::to_string(intrinsics.width) + "x" + std::to_string(intrinsics.height));
    }
  }

  /// 2x2 area-averaged copy with matching intrinsics.
  Frame halved() const {
    return {downsample_area(image), intrinsics.halved(), pose, role};
  }
};

/// Maps key-camera coordinates into `src` camera coordinates.
inline PoseSE3 relative_pose(const Frame& src, const Frame& key) {
  return src.pose.compose(key.pose.inverse());
}

struct Projection {
  Eigen::Vector2d pixel;
  double depth;
};

inline Projection project(const CameraIntrinsics& intr, const Eigen::Vector3d& p) {
  if (!(p.z() > 0.0)) throw std::domain_error("project: point behind camera (z <= 0)");
  return {{intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy}, p.z()};
}

inline Eigen::Vector3d backproject(const CameraIntrinsics& intr, const Eigen::Vector2d& pixel,
                                   double inv_depth) {
  if (!(inv_depth > 0.0)) throw std::domain_error("backproject: inverse depth must be positive");
  return Eigen::Vector3d((pixel.x() - intr.cx) / intr.fx, (pixel.y() - intr.cy) / intr.fy, 1.0) /
         inv_depth;
}

inline constexpr double kMinWarpDepth = 1e-6;

namespace detail {

inline constexpr double kBorderSlack = 1e-9;

/// Bilinear sample of every channel into `out`. Returns false when a neighbor
/// with non-zero weight would fall outside the image.
template <typename T>
bool sample_into(const Image& image, T x, T y, T* out) {
  const double xv = value_of(x);
  const double yv = value_of(y);
  const double xmax = image.width() - 1;
  const double ymax = image.height() - 1;
  if (!(xv >= -kBorderSlack && yv >= -kBorderSlack && xv <= xmax + kBorderSlack &&
        yv <= ymax + kBorderSlack)) {
    note_branch(-1);
    return false;
  }
  const int x0 = std::clamp(static_cast<int>(std::floor(xv)), 0, image.width() - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(yv)), 0, image.height() - 1);
  const int x1 = std::min(x0 + 1, image.width() - 1);
  const int y1 = std::min(y0 + 1, image.height() - 1);
  note_branch(x0);
  note_branch(y0);
  const T ax = x - static_cast<double>(x0);
  const T ay = y - static_cast<double>(y0);
  const T bx = 1.0 - ax;
  const T by = 1.0 - ay;
  for (int c = 0; c < image.channels(); ++c) {
    out[c] = by * (bx * image(x0, y0, c) + ax * image(x1, y0, c)) +
             ay * (bx * image(x0, y1, c) + ax * image(x1, y1, c));
  }
  return true;
}

}  // namespace detail

struct BilinearSample {
  std::vector<double> value;  // one entry per channel
  bool valid = false;
};

inline BilinearSample bilinear_sample(const Image& image, const Eigen::Vector2d& coords) {
  BilinearSample s;
  s.value.assign(image.channels(), 0.0);
  s.valid = detail::sample_into(image, coords.x(), coords.y(), s.value.data());
  return s;
}

template <typename T>
struct WarpResult {
  Grid<T> image;  // invalid pixels hold 0
  Mask valid;
};

namespace detail {

template <typename T, typename DepthAt>
WarpResult<T> warp_impl(const Frame& src, const Frame& key, DepthAt&& depth_at) {
  src.validate();
  key.validate();
  const PoseSE3 rel = relative_pose(src, key);
  const CameraIntrinsics& ki = key.intrinsics;
  const CameraIntrinsics& si = src.intrinsics;
  const int w = ki.width;
  const int h = ki.height;
  WarpResult<T> out{Grid<T>(w, h, src.image.channels(), T(0.0)), Mask(w, h, 1, 0)};
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const T d = depth_at(x, y);
      if (!(value_of(d) > 0.0)) continue;
      const std::array<T, 3> pk{T((x - ki.cx) / ki.fx) / d, T((y - ki.cy) / ki.fy) / d, T(1.0) / d};
      const std::array<T, 3> ps = rel.apply(pk);
      if (!(value_of(ps[2]) > kMinWarpDepth)) {
        note_branch(-2);
        continue;
      }
      const T u = si.fx * ps[0] / ps[2] + si.cx;
      const T v = si.fy * ps[1] / ps[2] + si.cy;
      T* dst = &out.image(x, y, 0);
      if (sample_into(src.image, u, v, dst)) {
        out.valid(x, y) = 1;
      } else {
        for (int c = 0; c < src.image.channels(); ++c) dst[c] = T(0.0);
      }
    }
  });
  return out;
}

}  // namespace detail

/// Samples `src` at the reprojection of every keyframe pixel, using a
/// per-pixel inverse depth map on the keyframe grid.
template <typename T>
WarpResult<T> warp_to_keyframe(const Frame& src, const Frame& key, const Grid<T>& inv_depth) {
  if (inv_depth.width() != key.intrinsics.width || inv_depth.height() != key.intrinsics.height) {
    throw DimensionError("warp_to_keyframe: inverse depth map does not match keyframe size");
  }
  return detail::warp_impl<T>(src, key, [&](int x, int y) { return inv_depth(x, y); });
}

/// Plane-sweep form: every keyframe pixel shares one inverse depth.
inline WarpResult<double> warp_to_keyframe(const Frame& src, const Frame& key, double inv_depth) {
  return detail::warp_impl<double>(src, key, [inv_depth](int, int) { return inv_depth; });
}

}  // namespace monorec
