#include "udgs/rasterizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <thread>

namespace udgs {

namespace {

int resolve_threads(const RenderConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("UDGS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

// Dynamic partition of [0, count) across threads; fn(slot, item) with slot
// in [0, threads). Work items must be independent; reductions happen after
// join, in item order (or with order-insensitive merges).
void parallel_for(int count, int threads,
                  const std::function<void(int, int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(0, i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&](int slot) {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
      fn(slot, i);
  };
  std::vector<std::thread> pool;
  const int n = std::min(threads, count);
  pool.reserve(static_cast<size_t>(n) - 1);
  for (int t = 1; t < n; ++t) pool.emplace_back(worker, t);
  worker(0);
  for (auto& th : pool) th.join();
}

// Image-space splat enriched with the cached quantities both passes need.
struct Projected {
  size_t map_index = 0;
  std::int64_t id = -1;
  Vec2 mu_i = Vec2::Zero();
  Mat2 cov_i = Mat2::Identity();
  Mat2 inv_cov = Mat2::Identity();
  double depth_c = 0.0;
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;
  double radius = 0.0;  // cutoff_sigma * sqrt(max eigenvalue)
};

struct TileGrid {
  int tiles_x = 0;
  int tiles_y = 0;
  // Per tile: indices into the depth-sorted projected list, in that order.
  std::vector<std::vector<int>> lists;
};

double max_eigenvalue_2x2(const Mat2& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = std::sqrt(std::max(tr * tr * 0.25 - det, 0.0));
  return tr * 0.5 + disc;
}

std::optional<Projected> project_one(const GaussianSplat& g, size_t map_index,
                                     const SE3Pose& pose,
                                     const CameraIntrinsics& K,
                                     const RenderConfig& cfg) {
  const Vec3 mu_c = pose * g.mu_w;
  if (!(mu_c.z() > cfg.z_min)) return std::nullopt;
  const auto mu_i = project(mu_c, K, cfg.z_min);
  const auto jac = projection_jacobian(mu_c, K, cfg.z_min);
  if (!mu_i || !jac) return std::nullopt;

  const Mat23 m = (*jac) * pose.rotation;
  Mat2 cov = m * g.covariance() * m.transpose();
  cov(0, 0) += cfg.cov_floor;
  cov(1, 1) += cfg.cov_floor;

  Projected p;
  p.map_index = map_index;
  p.id = g.id;
  p.mu_i = *mu_i;
  p.cov_i = cov;
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  if (!(det > 0.0)) return std::nullopt;
  p.inv_cov << cov(1, 1) / det, -cov(0, 1) / det,
               -cov(1, 0) / det, cov(0, 0) / det;
  p.depth_c = mu_c.z();
  p.color = g.color;
  p.opacity = g.opacity();
  p.radius = cfg.cutoff_sigma * std::sqrt(max_eigenvalue_2x2(cov));

  // Cull splats whose center is more than 3 sigma outside the image.
  const double margin = 3.0 * std::sqrt(max_eigenvalue_2x2(cov));
  if (p.mu_i.x() < -margin || p.mu_i.x() > K.width - 1 + margin ||
      p.mu_i.y() < -margin || p.mu_i.y() > K.height - 1 + margin)
    return std::nullopt;
  return p;
}

std::vector<Projected> project_sorted(const GaussianMap& map,
                                      const SE3Pose& pose,
                                      const CameraIntrinsics& K,
                                      const RenderConfig& cfg) {
  std::vector<Projected> out;
  out.reserve(map.size());
  for (size_t i = 0; i < map.size(); ++i)
    if (auto p = project_one(map.splat(i), i, pose, K, cfg))
      out.push_back(std::move(*p));
  std::sort(out.begin(), out.end(), [](const Projected& a, const Projected& b) {
    if (a.depth_c != b.depth_c) return a.depth_c < b.depth_c;
    return a.id < b.id;  // canonical tie-break
  });
  return out;
}

TileGrid build_tiles(const std::vector<Projected>& splats,
                     const CameraIntrinsics& K, const RenderConfig& cfg) {
  TileGrid grid;
  grid.tiles_x = (K.width + cfg.tile_size - 1) / cfg.tile_size;
  grid.tiles_y = (K.height + cfg.tile_size - 1) / cfg.tile_size;
  grid.lists.resize(static_cast<size_t>(grid.tiles_x) * grid.tiles_y);
  for (int s = 0; s < static_cast<int>(splats.size()); ++s) {
    const Projected& p = splats[static_cast<size_t>(s)];
    const int x0 = std::clamp(
        static_cast<int>(std::floor((p.mu_i.x() - p.radius) / cfg.tile_size)), 0,
        grid.tiles_x - 1);
    const int x1 = std::clamp(
        static_cast<int>(std::floor((p.mu_i.x() + p.radius) / cfg.tile_size)), 0,
        grid.tiles_x - 1);
    const int y0 = std::clamp(
        static_cast<int>(std::floor((p.mu_i.y() - p.radius) / cfg.tile_size)), 0,
        grid.tiles_y - 1);
    const int y1 = std::clamp(
        static_cast<int>(std::floor((p.mu_i.y() + p.radius) / cfg.tile_size)), 0,
        grid.tiles_y - 1);
    for (int ty = y0; ty <= y1; ++ty)
      for (int tx = x0; tx <= x1; ++tx)
        grid.lists[static_cast<size_t>(ty) * grid.tiles_x + tx].push_back(s);
  }
  return grid;
}

}  // namespace

std::optional<Splat2D> splat_project(const GaussianSplat& g, const SE3Pose& pose,
                                     const CameraIntrinsics& K,
                                     const RenderConfig& cfg) {
  const auto p = project_one(g, 0, pose, K, cfg);
  if (!p) return std::nullopt;
  Splat2D s;
  s.mu_i = p->mu_i;
  s.cov_i = p->cov_i;
  s.depth_c = p->depth_c;
  s.color = p->color;
  s.opacity = p->opacity;
  s.source_id = g.id;
  return s;
}

RenderOutput render(const GaussianMap& map, const SE3Pose& pose,
                    const CameraIntrinsics& K, const RenderConfig& cfg) {
  K.validate();
  RenderOutput out;
  out.color_image = Image(K.height, K.width, 3);
  out.depth_image = Image(K.height, K.width, 1);
  out.alpha_image = Image(K.height, K.width, 1);
  out.visibility.assign(map.size(), 0.0);
  out.map_generation = map.generation();
  if (map.empty()) return out;

  const std::vector<Projected> splats = project_sorted(map, pose, K, cfg);
  const TileGrid grid = build_tiles(splats, K, cfg);
  const int n_threads = resolve_threads(cfg);
  const int n_tiles = grid.tiles_x * grid.tiles_y;
  const double cutoff_q = cfg.cutoff_sigma * cfg.cutoff_sigma;

  // Visibility is a max-reduction, so per-thread partials merge exactly
  // regardless of scheduling.
  std::vector<std::vector<double>> vis_partial(
      static_cast<size_t>(n_threads), std::vector<double>(map.size(), 0.0));

  auto render_tile = [&](int slot, int tile) {
    std::vector<double>& vis = vis_partial[static_cast<size_t>(slot)];
    const auto& list = grid.lists[static_cast<size_t>(tile)];
    if (list.empty()) return;
    const int ty = tile / grid.tiles_x;
    const int tx = tile % grid.tiles_x;
    const int y_end = std::min((ty + 1) * cfg.tile_size, K.height);
    const int x_end = std::min((tx + 1) * cfg.tile_size, K.width);
    for (int y = ty * cfg.tile_size; y < y_end; ++y) {
      for (int x = tx * cfg.tile_size; x < x_end; ++x) {
        double transmittance = 1.0;
        Vec3 color = Vec3::Zero();
        double depth = 0.0;
        for (int s : list) {
          const Projected& p = splats[static_cast<size_t>(s)];
          const double dx = x - p.mu_i.x();
          const double dy = y - p.mu_i.y();
          const double q = p.inv_cov(0, 0) * dx * dx +
                           2.0 * p.inv_cov(0, 1) * dx * dy +
                           p.inv_cov(1, 1) * dy * dy;
          if (q > cutoff_q) continue;
          const double alpha =
              std::min(p.opacity * std::exp(-0.5 * q), cfg.alpha_max);
          const double weight = alpha * transmittance;
          color += weight * p.color;
          depth += weight * p.depth_c;
          vis[p.map_index] = std::max(vis[p.map_index], weight);
          transmittance *= 1.0 - alpha;
          if (transmittance < cfg.t_stop) break;
        }
        for (int c = 0; c < 3; ++c) out.color_image.at(y, x, c) = color[c];
        out.depth_image.at(y, x) = depth;
        out.alpha_image.at(y, x) = 1.0 - transmittance;
      }
    }
  };
  parallel_for(n_tiles, n_threads, render_tile);

  for (const auto& vis : vis_partial)
    for (size_t i = 0; i < vis.size(); ++i)
      out.visibility[i] = std::max(out.visibility[i], vis[i]);
  return out;
}

GradientBundle GradientBundle::zeros(size_t n) {
  GradientBundle b;
  b.d_mu_w = VecX::Zero(static_cast<Eigen::Index>(n) * 3);
  b.d_log_scale = VecX::Zero(static_cast<Eigen::Index>(n) * 3);
  b.d_rot_q = VecX::Zero(static_cast<Eigen::Index>(n) * 4);
  b.d_color = VecX::Zero(static_cast<Eigen::Index>(n) * 3);
  b.d_logit_opacity = VecX::Zero(static_cast<Eigen::Index>(n));
  b.d_pose = Tangent6::zero();
  return b;
}

bool GradientBundle::all_finite() const {
  return d_mu_w.allFinite() && d_log_scale.allFinite() && d_rot_q.allFinite() &&
         d_color.allFinite() && d_logit_opacity.allFinite() &&
         d_pose.vec().allFinite();
}

namespace {

// Per-splat accumulators of the image-space gradients, gathered over pixels.
struct SplatAccum {
  Vec2 d_mu_i = Vec2::Zero();
  Mat2 d_cov_i = Mat2::Zero();
  Vec3 d_color = Vec3::Zero();
  double d_opacity = 0.0;
  double d_depth_c = 0.0;

  SplatAccum& operator+=(const SplatAccum& o) {
    d_mu_i += o.d_mu_i;
    d_cov_i += o.d_cov_i;
    d_color += o.d_color;
    d_opacity += o.d_opacity;
    d_depth_c += o.d_depth_c;
    return *this;
  }
};

struct Contribution {
  int list_pos;     // position in the tile's splat list
  double alpha;
  double transmittance;
  double gauss;     // exp(-q/2)
  double dx, dy;
  bool clamped;
};

}  // namespace

GradientBundle render_backward(const GaussianMap& map, const SE3Pose& pose,
                               const CameraIntrinsics& K,
                               const Image& grad_color, const Image& grad_depth,
                               const RenderConfig& cfg) {
  K.validate();
  if (grad_color.height() != K.height || grad_color.width() != K.width ||
      grad_color.channels() != 3)
    throw Error(ErrorCode::InvalidArgument, "render_backward: bad grad_color shape");
  if (grad_depth.height() != K.height || grad_depth.width() != K.width ||
      grad_depth.channels() != 1)
    throw Error(ErrorCode::InvalidArgument, "render_backward: bad grad_depth shape");

  GradientBundle bundle = GradientBundle::zeros(map.size());
  if (map.empty()) return bundle;

  const std::vector<Projected> splats = project_sorted(map, pose, K, cfg);
  if (splats.empty()) return bundle;
  const TileGrid grid = build_tiles(splats, K, cfg);
  const int n_threads = resolve_threads(cfg);
  const int n_tiles = grid.tiles_x * grid.tiles_y;
  const double cutoff_q = cfg.cutoff_sigma * cfg.cutoff_sigma;

  // Each tile accumulates into a buffer aligned with its own splat list;
  // tiles are then reduced in index order so the result is independent of
  // scheduling.
  std::vector<std::vector<SplatAccum>> tile_acc(static_cast<size_t>(n_tiles));

  auto backward_tile = [&](int /*slot*/, int tile) {
    const auto& list = grid.lists[static_cast<size_t>(tile)];
    if (list.empty()) return;
    auto& acc = tile_acc[static_cast<size_t>(tile)];
    acc.assign(list.size(), SplatAccum{});
    const int ty = tile / grid.tiles_x;
    const int tx = tile % grid.tiles_x;
    const int y_end = std::min((ty + 1) * cfg.tile_size, K.height);
    const int x_end = std::min((tx + 1) * cfg.tile_size, K.width);
    std::vector<Contribution> stack;
    stack.reserve(list.size());

    for (int y = ty * cfg.tile_size; y < y_end; ++y) {
      for (int x = tx * cfg.tile_size; x < x_end; ++x) {
        // Replay the forward walk for this pixel.
        stack.clear();
        double transmittance = 1.0;
        for (int pos = 0; pos < static_cast<int>(list.size()); ++pos) {
          const Projected& p = splats[static_cast<size_t>(list[static_cast<size_t>(pos)])];
          const double dx = x - p.mu_i.x();
          const double dy = y - p.mu_i.y();
          const double q = p.inv_cov(0, 0) * dx * dx +
                           2.0 * p.inv_cov(0, 1) * dx * dy +
                           p.inv_cov(1, 1) * dy * dy;
          if (q > cutoff_q) continue;
          const double gauss = std::exp(-0.5 * q);
          const double raw = p.opacity * gauss;
          const bool clamped = raw > cfg.alpha_max;
          const double alpha = clamped ? cfg.alpha_max : raw;
          stack.push_back({pos, alpha, transmittance, gauss, dx, dy, clamped});
          transmittance *= 1.0 - alpha;
          if (transmittance < cfg.t_stop) break;
        }
        if (stack.empty()) continue;

        Vec3 gc(grad_color.at(y, x, 0), grad_color.at(y, x, 1),
                grad_color.at(y, x, 2));
        const double gd = grad_depth.at(y, x);
        if (gc.isZero(0.0) && gd == 0.0) continue;

        // Suffix sums of downstream contributions, walked back to front.
        Vec3 suffix_color = Vec3::Zero();
        double suffix_depth = 0.0;
        for (int k = static_cast<int>(stack.size()) - 1; k >= 0; --k) {
          const Contribution& c = stack[static_cast<size_t>(k)];
          const Projected& p =
              splats[static_cast<size_t>(list[static_cast<size_t>(c.list_pos)])];
          SplatAccum& a = acc[static_cast<size_t>(c.list_pos)];
          const double weight = c.alpha * c.transmittance;

          a.d_color += weight * gc;
          a.d_depth_c += weight * gd;

          const double one_minus = 1.0 - c.alpha;
          const double d_alpha =
              gc.dot(c.transmittance * p.color - suffix_color / one_minus) +
              gd * (c.transmittance * p.depth_c - suffix_depth / one_minus);

          if (!c.clamped) {
            a.d_opacity += d_alpha * c.gauss;
            // alpha = o*exp(-q/2): d alpha/d mu_i = alpha * Sigma^-1 d,
            // d alpha/d Sigma = alpha/2 * (Sigma^-1 d)(Sigma^-1 d)^T.
            const Vec2 d(c.dx, c.dy);
            const Vec2 md = p.inv_cov * d;
            const double scale = d_alpha * c.alpha;
            a.d_mu_i += scale * md;
            a.d_cov_i += (0.5 * scale) * (md * md.transpose());
          }

          suffix_color += weight * p.color;
          suffix_depth += weight * p.depth_c;
        }
      }
    }
  };
  parallel_for(n_tiles, n_threads, backward_tile);

  // Ordered reduction into per-projected-splat accumulators.
  std::vector<SplatAccum> acc(splats.size());
  for (int tile = 0; tile < n_tiles; ++tile) {
    const auto& list = grid.lists[static_cast<size_t>(tile)];
    const auto& part = tile_acc[static_cast<size_t>(tile)];
    if (part.empty()) continue;
    for (size_t pos = 0; pos < list.size(); ++pos)
      acc[static_cast<size_t>(list[pos])] += part[pos];
  }

  // Chain image-space gradients through projection, covariance, and pose.
  Vec6 d_pose = Vec6::Zero();
  const Mat3& R = pose.rotation;
  for (size_t s = 0; s < splats.size(); ++s) {
    const Projected& p = splats[s];
    const SplatAccum& a = acc[s];
    const GaussianSplat& g = map.splat(p.map_index);
    const Eigen::Index gi = static_cast<Eigen::Index>(p.map_index);

    bundle.d_color.segment<3>(gi * 3) += a.d_color;
    const double o = p.opacity;
    bundle.d_logit_opacity[gi] += a.d_opacity * o * (1.0 - o);

    const Vec3 mu_c = pose * g.mu_w;
    const Mat23 jac = *projection_jacobian(mu_c, K, cfg.z_min);
    const Mat23 m = jac * R;
    const Mat3 cov_w = g.covariance();

    // Sigma^I = M Sigma^W M^T + floor: gradients through M and Sigma^W.
    const Mat2 g_cov = a.d_cov_i;
    const Mat23 d_m = (g_cov + g_cov.transpose()) * m * cov_w;
    const Mat3 d_cov_w = m.transpose() * g_cov * m;

    // Sigma^W = A D A^T with A from the unit quaternion, D = diag(exp(2s)).
    const Vec4 q_hat = g.rot_q.normalized();
    const Mat3 A = quat_to_rotation(q_hat);
    const Vec3 d_diag = (2.0 * g.log_scale).array().exp();
    const Mat3 sym = d_cov_w + d_cov_w.transpose();
    const Mat3 d_A = sym * A * d_diag.asDiagonal();
    for (int k = 0; k < 3; ++k)
      bundle.d_log_scale[gi * 3 + k] +=
          2.0 * d_diag[k] * A.col(k).dot(d_cov_w * A.col(k));
    const auto dA_dq = quat_rotation_derivatives(q_hat);
    Vec4 d_q_hat;
    for (int k = 0; k < 4; ++k)
      d_q_hat[k] = (d_A.array() * dA_dq[static_cast<size_t>(k)].array()).sum();
    // Through the normalization q_hat = q/|q|.
    const double qn = g.rot_q.norm();
    bundle.d_rot_q.segment<4>(gi * 4) +=
        (d_q_hat - q_hat * q_hat.dot(d_q_hat)) / qn;

    // mu_c receives: the projection path, the J(mu_c) path, and the depth.
    Vec3 d_mu_c = jac.transpose() * a.d_mu_i;
    const Mat23 d_jac = d_m * R.transpose();
    const double ix = mu_c.x(), iy = mu_c.y(), iz = mu_c.z();
    const double inv_z2 = 1.0 / (iz * iz);
    const double inv_z3 = inv_z2 / iz;
    d_mu_c.x() += d_jac(0, 2) * (-K.fx * inv_z2);
    d_mu_c.y() += d_jac(1, 2) * (-K.fy * inv_z2);
    d_mu_c.z() += d_jac(0, 0) * (-K.fx * inv_z2) +
                  d_jac(0, 2) * (2.0 * K.fx * ix * inv_z3) +
                  d_jac(1, 1) * (-K.fy * inv_z2) +
                  d_jac(1, 2) * (2.0 * K.fy * iy * inv_z3);
    d_mu_c.z() += a.d_depth_c;

    bundle.d_mu_w.segment<3>(gi * 3) += R.transpose() * d_mu_c;

    // Pose tangent: the point path [I | -skew(mu_c)] plus the rotation path
    // through M = J R (column-wise skew form).
    d_pose += point_pose_jacobian(mu_c).transpose() * d_mu_c;
    const Mat3 d_R = jac.transpose() * d_m;
    Vec3 d_w = Vec3::Zero();
    for (int c = 0; c < 3; ++c) d_w += R.col(c).cross(d_R.col(c));
    d_pose.tail<3>() += d_w;
  }
  bundle.d_pose = Tangent6::from_vec(d_pose);
  return bundle;
}

double covisibility(const GaussianMap& map, const SE3Pose& pose_a,
                    const SE3Pose& pose_b, const CameraIntrinsics& K,
                    const RenderConfig& cfg) {
  const RenderOutput ra = render(map, pose_a, K, cfg);
  const RenderOutput rb = render(map, pose_b, K, cfg);
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < map.size(); ++i) {
    const bool va = ra.visibility[i] > cfg.visibility_eps;
    const bool vb = rb.visibility[i] > cfg.visibility_eps;
    inter += (va && vb);
    uni += (va || vb);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace udgs
