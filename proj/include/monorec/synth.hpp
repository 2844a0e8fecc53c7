#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "monorec/geometry.hpp"
#include "monorec/grid.hpp"
#include "monorec/losses.hpp"
#include "monorec/maskgen.hpp"
#include "monorec/parallel.hpp"

namespace monorec::synth {

/// splitmix64 finalizer; derives independent RNG streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index = 0) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (purpose * 0x100000001B3ull + index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

enum StreamPurpose : std::uint64_t { kTextureStream = 1, kSparseStream = 2, kNoiseStream = 3, kGradStream = 4 };

/// Smooth procedural texture: random-phase sinusoids in one octave around
/// the base wavelength plus a sinusoidal checker at twice that wavelength.
struct TextureSpec {
  std::uint64_t id = 0;
  Eigen::Vector2d wavelength{2.0, 2.0};  // meters along the face u / v axes
  Eigen::Vector3d albedo{1.0, 1.0, 1.0};
  double contrast = 0.45;
  double checker = 0.1;
  // When > 0, (u, v) is remapped to (u L / (v + L), -L^2 / (v + L)): a
  // projective mapping that keeps the image-space frequency of a receding
  // ground plane roughly constant.
  double v_perspective = 0.0;
};

class ProceduralTexture {
 public:
  static constexpr int kComponents = 6;

  ProceduralTexture(const TextureSpec& spec, std::uint64_t scene_seed, std::uint64_t variant)
      : spec_(spec) {
    std::mt19937_64 rng(mix_seed(scene_seed, kTextureStream, spec.id * 64 + variant));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& c : components_) {
      const double angle = unit(rng) * std::numbers::pi;
      const double nu = 0.5 + 0.5 * unit(rng);
      c.freq = {nu * std::cos(angle) / spec.wavelength.x(), nu * std::sin(angle) / spec.wavelength.y()};
      c.phase = unit(rng) * 2.0 * std::numbers::pi;
      c.amplitude = spec.contrast / kComponents * (0.6 + 0.4 * unit(rng));
    }
    checker_phase_ = {unit(rng) * 2.0 * std::numbers::pi, unit(rng) * 2.0 * std::numbers::pi};
  }

  double value(double s, double t) const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (const double l = spec_.v_perspective; l > 0.0) {
      const double z = std::max(t + l, 1e-3 * l);
      s = s * l / z;
      t = -l * l / z;
    }
    double v = 0.5;
    for (const auto& c : components_) v += c.amplitude * std::sin(two_pi * (c.freq.x() * s + c.freq.y() * t) + c.phase);
    v += spec_.checker * std::sin(std::numbers::pi * s / spec_.wavelength.x() + checker_phase_.x()) *
         std::sin(std::numbers::pi * t / spec_.wavelength.y() + checker_phase_.y());
    return std::clamp(v, 0.0, 1.0);
  }

  const TextureSpec& spec() const { return spec_; }

 private:
  struct Component {
    Eigen::Vector2d freq;
    double phase = 0.0;
    double amplitude = 0.0;
  };
  TextureSpec spec_;
  std::array<Component, kComponents> components_{};
  Eigen::Vector2d checker_phase_{0.0, 0.0};
};

enum class ShapeKind { rect, box };

/// A textured rectangle or an axis-aligned (up to yaw) box. Positions are
/// given at the keyframe; movers translate by `velocity` per frame.
struct SceneObject {
  std::string name;
  std::string label;
  ShapeKind kind = ShapeKind::rect;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis_u = Eigen::Vector3d::UnitX();  // rect only
  Eigen::Vector3d axis_v = Eigen::Vector3d::UnitY();  // rect only
  Eigen::Vector3d half_extents{1.0, 1.0, 1.0};        // rect uses x, y
  double yaw = 0.0;                                   // box only, about +y
  TextureSpec texture;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();

  bool moving() const { return velocity.squaredNorm() > 0.0; }
};

struct SceneSpec {
  std::uint64_t seed = 7;
  CameraIntrinsics intrinsics{100.0, 100.0, 64.0, 16.0, 128, 64};
  std::vector<PoseSE3> camera_path;  // world-to-camera per frame
  int keyframe = 2;
  double stereo_baseline = 0.5;
  std::vector<SceneObject> objects;
  std::vector<std::string> movable_classes{"car"};
  bool color = true;
  int sparse_count = 200;
  double sparse_noise = 0.0;
  double image_noise = 0.0;
  bool freeze_movers = false;

  int frame_count() const { return static_cast<int>(camera_path.size()); }

  void validate() const {
    intrinsics.validate();
    if (objects.empty()) throw std::invalid_argument("scene: empty layout");
    if (frame_count() < 3) throw std::invalid_argument("scene: need at least 3 frames");
    if (keyframe <= 0 || keyframe >= frame_count() - 1) {
      throw std::invalid_argument("scene: keyframe index must be interior");
    }
    if (!std::any_of(objects.begin(), objects.end(),
                     [](const SceneObject& o) { return !o.moving() && o.texture.contrast > 0.0; })) {
      throw std::invalid_argument("scene: need at least one textured static surface");
    }
    if (sparse_count < 0 || sparse_noise < 0.0 || image_noise < 0.0) {
      throw std::invalid_argument("scene: negative sparse count or noise");
    }
  }
};

/// Camera at `center` looking down +z with +y pointing down.
inline PoseSE3 camera_at(const Eigen::Vector3d& center) {
  return {Eigen::Matrix3d::Identity(), -center};
}

/// Ground plane, a back wall, a side wall and one moving car.
/// The camera moves sideways with uneven steps so that the moving car's
/// per-pair depths disagree.
inline SceneSpec standard_scene(std::uint64_t seed = 7) {
  SceneSpec s;
  s.seed = seed;
  for (double x : {-0.7, -0.2, 0.0, 0.5, 0.7}) s.camera_path.push_back(camera_at({x, 0.0, 0.0}));
  s.keyframe = 2;

  SceneObject ground;
  ground.name = "ground";
  ground.label = "ground";
  ground.center = {0.0, 3.0, 15.0};
  ground.axis_u = Eigen::Vector3d::UnitX();
  ground.axis_v = Eigen::Vector3d::UnitZ();
  ground.half_extents = {25.0, 15.0, 0.0};
  ground.texture = {1, {2.7, 40}, {0.85, 0.8, 0.7}};
  ground.texture.v_perspective = 15.0;
  s.objects.push_back(ground);

  SceneObject back;
  back.name = "back_wall";
  back.label = "wall";
  back.center = {0.0, -0.5, 14.0};
  back.axis_u = Eigen::Vector3d::UnitX();
  back.axis_v = Eigen::Vector3d::UnitY();
  back.half_extents = {25.0, 3.5, 0.0};
  back.texture = {2, {3.0, 3.0}, {0.75, 0.85, 0.9}};
  s.objects.push_back(back);

  SceneObject side;
  side.name = "side_wall";
  side.label = "wall";
  side.center = {5.0, -0.5, 9.0};
  side.axis_u = Eigen::Vector3d::UnitZ();
  side.axis_v = Eigen::Vector3d::UnitY();
  side.half_extents = {5.0, 3.5, 0.0};
  side.texture = {3, {4.0, 2.0}, {0.9, 0.75, 0.7}};
  s.objects.push_back(side);

  SceneObject mover;
  mover.name = "moving_car";
  mover.label = "car";
  mover.kind = ShapeKind::box;
  mover.center = {0.6, 2.35, 8.0};
  mover.half_extents = {1.0, 0.65, 0.8};
  mover.texture = {5, {0.7, 0.7}, {0.95, 0.7, 0.6}};
  mover.velocity = {-0.4, 0.0, 0.0};
  s.objects.push_back(mover);
  return s;
}

/// Rendered multi-frame scene with every ground-truth product.
struct GroundTruthBundle {
  SceneSpec spec;
  std::vector<Frame> frames;
  std::vector<Frame> stereo;
  std::vector<Grid<double>> inv_depth;
  std::vector<Grid<double>> stereo_inv_depth;
  std::vector<Grid<int>> surface_ids;  // face index, -1 where nothing was hit
  std::vector<Grid<int>> object_ids;   // object index, -1 where nothing was hit
  std::vector<std::vector<InstanceMask>> instances;
  std::vector<Mask> moving;
  std::vector<SparseDepth> sparse;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int keyframe() const { return spec.keyframe; }

  /// Neighbors k-1 and k+1 that exist in the sequence.
  std::vector<int> temporal_neighbors(int k) const {
    std::vector<int> out;
    if (k - 1 >= 0) out.push_back(k - 1);
    if (k + 1 < frame_count()) out.push_back(k + 1);
    return out;
  }

  Frame key_frame(int k) const {
    Frame f = frames.at(k);
    f.role = FrameRole::keyframe;
    return f;
  }

  std::vector<Frame> temporal_frames(int k) const {
    std::vector<Frame> out;
    for (int n : temporal_neighbors(k)) out.push_back(frames[n]);
    return out;
  }

  LossLevel loss_level(int k) const { return {key_frame(k), temporal_frames(k), stereo.at(k), sparse.at(k)}; }

  MaskGenFrames maskgen_frames(int k) const { return {key_frame(k), temporal_frames(k), stereo.at(k)}; }
};

namespace detail {

struct Face {
  Eigen::Vector3d center;
  Eigen::Vector3d u;
  Eigen::Vector3d v;
  Eigen::Vector3d normal;
  double half_u = 0.0;
  double half_v = 0.0;
  int object = 0;
  int texture = 0;  // index into the texture table
};

struct SceneGeometry {
  std::vector<Face> faces;
  std::vector<ProceduralTexture> textures;
};

inline SceneGeometry build_geometry(const SceneSpec& spec, int frame) {
  SceneGeometry g;
  const double dt = frame - spec.keyframe;
  for (std::size_t o = 0; o < spec.objects.size(); ++o) {
    const SceneObject& obj = spec.objects[o];
    const Eigen::Vector3d c = obj.center + (spec.freeze_movers ? Eigen::Vector3d::Zero() : Eigen::Vector3d(obj.velocity * dt));
    auto add = [&](const Eigen::Vector3d& center, const Eigen::Vector3d& u, const Eigen::Vector3d& v, double hu,
                   double hv, std::uint64_t variant) {
      g.textures.emplace_back(obj.texture, spec.seed, variant);
      g.faces.push_back({center, u.normalized(), v.normalized(), u.cross(v).normalized(), hu, hv,
                         static_cast<int>(o), static_cast<int>(g.textures.size() - 1)});
    };
    if (obj.kind == ShapeKind::rect) {
      add(c, obj.axis_u, obj.axis_v, obj.half_extents.x(), obj.half_extents.y(), 0);
      continue;
    }
    const double cy = std::cos(obj.yaw);
    const double sy = std::sin(obj.yaw);
    const Eigen::Vector3d ex(cy, 0.0, -sy);
    const Eigen::Vector3d ey(0.0, 1.0, 0.0);
    const Eigen::Vector3d ez(sy, 0.0, cy);
    const Eigen::Vector3d& h = obj.half_extents;
    add(c - h.z() * ez, ex, ey, h.x(), h.y(), 1);  // front
    add(c + h.z() * ez, ex, ey, h.x(), h.y(), 2);  // back
    add(c - h.x() * ex, ez, ey, h.z(), h.y(), 3);  // left
    add(c + h.x() * ex, ez, ey, h.z(), h.y(), 4);  // right
    add(c - h.y() * ey, ex, ez, h.x(), h.z(), 5);  // top
    add(c + h.y() * ey, ex, ez, h.x(), h.z(), 6);  // bottom
  }
  return g;
}

struct RenderOutput {
  Image image;
  Grid<double> inv_depth;
  Grid<int> surface;
  Grid<int> object;
};

inline RenderOutput render_view(const SceneSpec& spec, const SceneGeometry& geometry, const PoseSE3& pose) {
  const CameraIntrinsics& k = spec.intrinsics;
  const int channels = spec.color ? 3 : 1;
  RenderOutput out{Image(k.width, k.height, channels, 0.0), Grid<double>(k.width, k.height, 1, 0.0),
                   Grid<int>(k.width, k.height, 1, -1), Grid<int>(k.width, k.height, 1, -1)};
  const PoseSE3 cam_to_world = pose.inverse();
  const Eigen::Vector3d origin = cam_to_world.translation();
  parallel_for(k.height, [&](int y) {
    for (int x = 0; x < k.width; ++x) {
      // Ray parameter equals camera-space depth since the bearing has z = 1.
      const Eigen::Vector3d dir = cam_to_world.rotation() * Eigen::Vector3d((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      double best = std::numeric_limits<double>::infinity();
      int best_face = -1;
      double best_s = 0.0;
      double best_t = 0.0;
      for (std::size_t f = 0; f < geometry.faces.size(); ++f) {
        const Face& face = geometry.faces[f];
        const double denom = face.normal.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double lambda = face.normal.dot(face.center - origin) / denom;
        if (!(lambda > 1e-6) || lambda >= best) continue;
        const Eigen::Vector3d local = origin + lambda * dir - face.center;
        const double s = local.dot(face.u);
        const double t = local.dot(face.v);
        if (std::abs(s) > face.half_u || std::abs(t) > face.half_v) continue;
        best = lambda;
        best_face = static_cast<int>(f);
        best_s = s;
        best_t = t;
      }
      if (best_face < 0) continue;
      const Face& face = geometry.faces[best_face];
      const ProceduralTexture& tex = geometry.textures[face.texture];
      const double v = tex.value(best_s, best_t);
      for (int c = 0; c < channels; ++c) {
        out.image(x, y, c) = channels == 3 ? tex.spec().albedo[c] * v : tex.spec().albedo.mean() * v;
      }
      out.inv_depth(x, y) = 1.0 / best;
      out.surface(x, y) = best_face;
      out.object(x, y) = face.object;
    }
  });
  return out;
}

inline void add_noise(Image& image, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : image.data()) v = std::clamp(v + noise(rng), 0.0, 1.0);
}

}  // namespace detail

/// Uniform random subset of non-moving pixels with optional Gaussian noise
/// on the inverse depth. Only pixels with a surface hit are eligible.
inline SparseDepth sparse_samples(const Grid<double>& inv_depth, const Mask& moving, int count, double noise,
                                  std::uint64_t seed) {
  require_same_size(inv_depth, moving, "sparse_samples");
  if (count < 0) throw std::invalid_argument("sparse_samples: negative count");
  if (static_cast<std::size_t>(count) > inv_depth.pixel_count()) {
    throw std::invalid_argument("sparse_samples: count exceeds pixel count");
  }
  std::vector<std::pair<int, int>> eligible;
  for (int y = 0; y < inv_depth.height(); ++y) {
    for (int x = 0; x < inv_depth.width(); ++x) {
      if (!moving(x, y) && inv_depth(x, y) > 0.0) eligible.emplace_back(x, y);
    }
  }
  std::mt19937_64 rng(seed);
  const std::size_t n = std::min<std::size_t>(count, eligible.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
    std::swap(eligible[i], eligible[pick(rng)]);
  }
  std::normal_distribution<double> gauss(0.0, noise > 0.0 ? noise : 1.0);
  SparseDepth out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [x, y] = eligible[i];
    double d = inv_depth(x, y);
    if (noise > 0.0) d = std::max(d + gauss(rng), 1e-9);
    out.samples.push_back({x, y, d});
  }
  return out;
}

inline PoseSE3 stereo_pose(const PoseSE3& pose, double baseline) {
  return {pose.rotation(), pose.translation() - Eigen::Vector3d(baseline, 0.0, 0.0)};
}

/// Deterministic ray-cast render of every frame and its stereo partner.
inline GroundTruthBundle render(const SceneSpec& spec) {
  spec.validate();
  GroundTruthBundle b;
  b.spec = spec;
  const int n = spec.frame_count();
  for (int k = 0; k < n; ++k) {
    const detail::SceneGeometry geometry = detail::build_geometry(spec, k);
    auto left = detail::render_view(spec, geometry, spec.camera_path[k]);
    const PoseSE3 right_pose = stereo_pose(spec.camera_path[k], spec.stereo_baseline);
    auto right = detail::render_view(spec, geometry, right_pose);
    detail::add_noise(left.image, spec.image_noise, mix_seed(spec.seed, kNoiseStream, 2 * k));
    detail::add_noise(right.image, spec.image_noise, mix_seed(spec.seed, kNoiseStream, 2 * k + 1));

    Mask moving(spec.intrinsics.width, spec.intrinsics.height, 1, 0);
    std::vector<InstanceMask> instances;
    for (std::size_t o = 0; o < spec.objects.size(); ++o) {
      const SceneObject& obj = spec.objects[o];
      const bool movable = std::find(spec.movable_classes.begin(), spec.movable_classes.end(), obj.label) !=
                           spec.movable_classes.end();
      const bool moves = obj.moving() && !spec.freeze_movers;
      InstanceMask inst{k, static_cast<int>(o) + 1, obj.label, Mask(spec.intrinsics.width, spec.intrinsics.height, 1, 0)};
      for (std::size_t p = 0; p < left.object.data().size(); ++p) {
        if (left.object.data()[p] != static_cast<int>(o)) continue;
        inst.pixels.data()[p] = 1;
        if (moves) moving.data()[p] = 1;
      }
      if (movable && inst.area() > 0) instances.push_back(std::move(inst));
    }

    b.sparse.push_back(sparse_samples(left.inv_depth, moving, spec.sparse_count, spec.sparse_noise,
                                      mix_seed(spec.seed, kSparseStream, k)));
    b.frames.push_back({std::move(left.image), spec.intrinsics, spec.camera_path[k], FrameRole::temporal});
    b.stereo.push_back({std::move(right.image), spec.intrinsics, right_pose, FrameRole::static_stereo});
    b.inv_depth.push_back(std::move(left.inv_depth));
    b.stereo_inv_depth.push_back(std::move(right.inv_depth));
    b.surface_ids.push_back(std::move(left.surface));
    b.object_ids.push_back(std::move(left.object));
    b.instances.push_back(std::move(instances));
    b.moving.push_back(std::move(moving));
  }
  return b;
}

/// Pixels of frame `key` whose GT reprojection into `src` lands inside the
/// same surface on all four bilinear neighbors (not occluded, not on an edge).
inline Mask visible_in(const GroundTruthBundle& b, int key, int src) {
  const Frame& kf = b.frames[key];
  const Frame& sf = b.frames[src];
  const PoseSE3 rel = relative_pose(sf, kf);
  const auto& surf_k = b.surface_ids[key];
  const auto& surf_s = b.surface_ids[src];
  Mask out(kf.image.width(), kf.image.height(), 1, 0);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const double d = b.inv_depth[key](x, y);
      if (!(d > 0.0)) continue;
      const Eigen::Vector3d p = rel * backproject(kf.intrinsics, {x, y}, d);
      if (!(p.z() > kMinWarpDepth)) continue;
      const auto proj = project(sf.intrinsics, p);
      const double u = proj.pixel.x();
      const double v = proj.pixel.y();
      if (u < 0.0 || v < 0.0 || u > sf.intrinsics.width - 1 || v > sf.intrinsics.height - 1) continue;
      const int x0 = static_cast<int>(std::floor(u));
      const int y0 = static_cast<int>(std::floor(v));
      bool same = true;
      for (int dy = 0; dy <= 1 && same; ++dy) {
        for (int dx = 0; dx <= 1 && same; ++dx) {
          const int xx = std::min(x0 + dx, sf.intrinsics.width - 1);
          const int yy = std::min(y0 + dy, sf.intrinsics.height - 1);
          same = surf_s(xx, yy) == surf_k(x, y);
        }
      }
      out(x, y) = same ? 1 : 0;
    }
  }
  return out;
}

/// Random smooth configuration for gradient checks: small images, nearby
/// poses, smooth depth fields and mask in (0, 1).
struct GradCheckScene {
  LossLevel level;
  Grid<double> inv_depth;
  Grid<double> stereo_inv_depth;
  MovingMask mask;
};

inline GradCheckScene make_gradcheck_scene(std::uint64_t seed, int width = 32, int height = 24) {
  std::mt19937_64 rng(mix_seed(seed, kGradStream));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto smooth_field = [&](double lo, double hi, double wavelength) {
    Grid<double> g(width, height);
    std::array<std::array<double, 4>, 4> c{};
    for (auto& comp : c) comp = {unit(rng) * 6.283, unit(rng) * 6.283, 0.5 + unit(rng), unit(rng) * 6.283};
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double v = 0.0;
        for (const auto& comp : c) {
          v += std::sin((std::cos(comp[0]) * x + std::sin(comp[0]) * y) * comp[2] * 6.283 / wavelength + comp[3]);
        }
        g(x, y) = lo + (hi - lo) * (0.5 + v / 8.0);
      }
    }
    return g;
  };
  auto smooth_image = [&] {
    Image img(width, height, 1);
    const Grid<double> f = smooth_field(0.1, 0.9, 7.0);
    for (std::size_t k = 0; k < f.data().size(); ++k) img.data()[k] = f.data()[k];
    return img;
  };
  const CameraIntrinsics intr{30.0, 30.0, width / 2.0, height / 2.0, width, height};
  auto random_pose = [&](double tx) {
    const Eigen::Vector3d aa(0.02 * (unit(rng) - 0.5), 0.02 * (unit(rng) - 0.5), 0.02 * (unit(rng) - 0.5));
    const Eigen::Vector3d t(tx, 0.05 * (unit(rng) - 0.5), 0.05 * (unit(rng) - 0.5));
    return PoseSE3::from_axis_angle(aa, t);
  };
  GradCheckScene s;
  s.level.key = {smooth_image(), intr, PoseSE3::identity(), FrameRole::keyframe};
  s.level.temporal.push_back({smooth_image(), intr, random_pose(-0.15 - 0.1 * unit(rng)), FrameRole::temporal});
  s.level.temporal.push_back({smooth_image(), intr, random_pose(0.15 + 0.1 * unit(rng)), FrameRole::temporal});
  s.level.stereo = Frame{smooth_image(), intr, random_pose(-0.3), FrameRole::static_stereo};
  s.inv_depth = smooth_field(0.2, 0.5, 9.0);
  s.stereo_inv_depth = smooth_field(0.2, 0.5, 11.0);
  s.mask = smooth_field(0.05, 0.95, 8.0);
  std::uniform_int_distribution<int> px(0, width - 1);
  std::uniform_int_distribution<int> py(0, height - 1);
  for (int i = 0; i < 40; ++i) {
    const int x = px(rng);
    const int y = py(rng);
    const double offset = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.02 + 0.05 * unit(rng));
    s.level.sparse.samples.push_back({x, y, std::max(0.05, s.inv_depth(x, y) + offset)});
  }
  return s;
}

}  // namespace monorec::synth
