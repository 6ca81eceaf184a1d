#include "ugs/raster/rasterizer.hpp"

#include <algorithm>
#include <cmath>

#include "ugs/core/error.hpp"
#include "ugs/core/mathutil.hpp"
#include "ugs/core/parallel.hpp"
#include "ugs/kernels/kernels.hpp"

namespace ugs {

namespace {

struct TileRect {
  int x0, x1, y0, y1;  // pixel bounds of the tile
};

TileRect tile_rect(int tile, int tiles_x, int tile_size, int width,
                   int height) {
  const int tx = tile % tiles_x;
  const int ty = tile / tiles_x;
  TileRect r;
  r.x0 = tx * tile_size;
  r.y0 = ty * tile_size;
  r.x1 = std::min(r.x0 + tile_size, width);
  r.y1 = std::min(r.y0 + tile_size, height);
  return r;
}

// Per-(projected gaussian, tile) gradient slot.
struct TileGrad {
  double d_mx = 0, d_my = 0;
  double d_ia = 0, d_ib = 0, d_ic = 0;
  double d_alpha = 0;
  double d_r = 0, d_g = 0, d_b = 0;
};

}  // namespace

RenderOutput render(const GaussianSet& gaussians, const Camera& camera,
                    std::span<const double> effective_opacities,
                    const RenderConfig& config) {
  gaussians.validate();
  camera.validate();
  const std::size_t n = gaussians.count();
  if (effective_opacities.size() != n)
    throw Error(ErrorCode::kDimension,
                "effective opacity count does not match the Gaussian count");

  const int w = camera.width;
  const int h = camera.height;
  const std::size_t n_pix = static_cast<std::size_t>(w) * h;

  RenderOutput out;
  out.gaussian_weight_sums.assign(n, 0.0);

  auto& state = out.state;
  state.retained = true;
  state.transmittance_min = config.transmittance_min;
  state.projected.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ProjectedGaussian pg;
    pg.index = i;
    const ProjectionOutcome outcome = project_gaussian(
        gaussians.position(i), gaussians.rotation(i), gaussians.log_scale(i),
        gaussians.colour(i), gaussians.sh_degree, effective_opacities[i],
        camera, config.projection, &pg);
    switch (outcome) {
      case ProjectionOutcome::kVisible:
        state.projected.push_back(pg);
        break;
      case ProjectionOutcome::kCulled:
        ++out.n_culled;
        break;
      case ProjectionOutcome::kSingular:
        ++out.n_singular;
        break;
    }
  }
  out.n_visible = state.projected.size();

  const int ts = config.tile_size;
  state.tiles_x = (w + ts - 1) / ts;
  state.tiles_y = (h + ts - 1) / ts;
  const std::size_t n_tiles =
      static_cast<std::size_t>(state.tiles_x) * state.tiles_y;
  state.tile_lists.assign(n_tiles, {});

  for (std::uint32_t p = 0; p < state.projected.size(); ++p) {
    const ProjectedGaussian& pg = state.projected[p];
    int x0, x1, y0, y1;
    support_range(pg.mean2d.x(), pg.radius, w, &x0, &x1);
    support_range(pg.mean2d.y(), pg.radius, h, &y0, &y1);
    for (int ty = y0 / ts; ty <= (y1 - 1) / ts; ++ty)
      for (int tx = x0 / ts; tx <= (x1 - 1) / ts; ++tx)
        state.tile_lists[static_cast<std::size_t>(ty) * state.tiles_x + tx]
            .push_back(p);
  }
  for (auto& list : state.tile_lists) {
    std::sort(list.begin(), list.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                const auto& ga = state.projected[a];
                const auto& gb = state.projected[b];
                if (ga.depth != gb.depth) return ga.depth < gb.depth;
                return ga.index < gb.index;
              });
  }

  std::vector<double> transmittance(n_pix, 1.0);
  std::vector<double> acc_r(n_pix, 0.0), acc_g(n_pix, 0.0), acc_b(n_pix, 0.0);
  std::vector<double> acc_w(n_pix, 0.0);
  std::vector<std::vector<double>> tile_weight_sums(n_tiles);

  const auto& kern = kernels::active();
  parallel_for_index(n_tiles, config.threads, [&](std::size_t tile) {
    const auto& list = state.tile_lists[tile];
    auto& local_ws = tile_weight_sums[tile];
    local_ws.assign(list.size(), 0.0);
    if (list.empty()) return;
    const TileRect rect = tile_rect(static_cast<int>(tile), state.tiles_x, ts,
                                    w, h);
    for (std::size_t k = 0; k < list.size(); ++k) {
      const ProjectedGaussian& pg = state.projected[list[k]];
      int gx0, gx1, gy0, gy1;
      support_range(pg.mean2d.x(), pg.radius, w, &gx0, &gx1);
      support_range(pg.mean2d.y(), pg.radius, h, &gy0, &gy1);
      const int x0 = std::max(gx0, rect.x0);
      const int x1 = std::min(gx1, rect.x1);
      const int y0 = std::max(gy0, rect.y0);
      const int y1 = std::min(gy1, rect.y1);
      if (x0 >= x1 || y0 >= y1) continue;

      kernels::RowBlend rb;
      rb.mean_x = pg.mean2d.x();
      rb.mean_y = pg.mean2d.y();
      rb.inv_a = pg.inv_a;
      rb.inv_b = pg.inv_b;
      rb.inv_c = pg.inv_c;
      rb.opacity = pg.alpha;
      rb.colour[0] = pg.colour[0];
      rb.colour[1] = pg.colour[1];
      rb.colour[2] = pg.colour[2];
      rb.t_min = config.transmittance_min;

      for (int y = y0; y < y1; ++y) {
        const std::size_t at = static_cast<std::size_t>(y) * w + x0;
        kern.blend_row(rb, x0, x1, y + 0.5, &transmittance[at], &acc_r[at],
                       &acc_g[at], &acc_b[at], &acc_w[at], &local_ws[k]);
      }

      if (config.transmittance_min > 0.0) {
        bool any_alive = false;
        for (int y = rect.y0; y < rect.y1 && !any_alive; ++y)
          for (int x = rect.x0; x < rect.x1; ++x)
            if (transmittance[static_cast<std::size_t>(y) * w + x] >=
                config.transmittance_min) {
              any_alive = true;
              break;
            }
        if (!any_alive) break;
      }
    }
  });

  // Merge per-tile weight statistics in tile order (thread-count invariant).
  for (std::size_t tile = 0; tile < n_tiles; ++tile) {
    const auto& list = state.tile_lists[tile];
    for (std::size_t k = 0; k < list.size(); ++k)
      out.gaussian_weight_sums[state.projected[list[k]].index] +=
          tile_weight_sums[tile][k];
  }

  out.image = ImageBuffer(w, h);
  out.raw.resize(3 * n_pix);
  for (std::size_t p = 0; p < n_pix; ++p) {
    const double t = transmittance[p];
    const double rgb[3] = {acc_r[p] + t * config.background[0],
                           acc_g[p] + t * config.background[1],
                           acc_b[p] + t * config.background[2]};
    for (int c = 0; c < 3; ++c) {
      out.raw[3 * p + c] = rgb[c];
      out.image.pixels[3 * p + c] = clamp01(rgb[c]);
    }
  }
  out.transmittance = std::move(transmittance);
  out.weight_image = std::move(acc_w);
  return out;
}

RenderGrads render_backward(const GaussianSet& gaussians, const Camera& camera,
                            const RenderOutput& output,
                            std::span<const double> upstream,
                            const RenderConfig& config) {
  const auto& state = output.state;
  if (!state.retained)
    throw Error(ErrorCode::kContract,
                "render_backward requires the forward state of render()");
  if (state.transmittance_min != 0.0)
    throw Error(ErrorCode::kContract,
                "render_backward requires a forward pass with "
                "transmittance_min == 0");
  const int w = camera.width;
  const int h = camera.height;
  const std::size_t n_pix = static_cast<std::size_t>(w) * h;
  if (upstream.size() != 3 * n_pix)
    throw Error(ErrorCode::kDimension, "upstream image gradient size mismatch");

  // Clip subgradient: zero where the raw blend left [0,1].
  std::vector<double> up(3 * n_pix);
  for (std::size_t i = 0; i < up.size(); ++i) {
    const double raw = output.raw[i];
    up[i] = (raw > 0.0 && raw < 1.0) ? upstream[i] : 0.0;
  }

  const std::size_t n_tiles = state.tile_lists.size();
  const int ts = config.tile_size;
  std::vector<std::vector<TileGrad>> tile_grads(n_tiles);

  parallel_for_index(n_tiles, config.threads, [&](std::size_t tile) {
    const auto& list = state.tile_lists[tile];
    auto& grads = tile_grads[tile];
    grads.assign(list.size(), {});
    if (list.empty()) return;
    const TileRect rect = tile_rect(static_cast<int>(tile), state.tiles_x, ts,
                                    w, h);
    const int tw = rect.x1 - rect.x0;
    const int th = rect.y1 - rect.y0;

    // Running back-to-front state: transmittance in front of the current
    // Gaussian, and the composited colour behind it (background included).
    std::vector<double> t_back(static_cast<std::size_t>(tw) * th);
    std::vector<double> s_r(t_back.size()), s_g(t_back.size()),
        s_b(t_back.size());
    for (int y = rect.y0; y < rect.y1; ++y)
      for (int x = rect.x0; x < rect.x1; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const std::size_t q =
            static_cast<std::size_t>(y - rect.y0) * tw + (x - rect.x0);
        const double t_final = output.transmittance[p];
        t_back[q] = t_final;
        s_r[q] = t_final * config.background[0];
        s_g[q] = t_final * config.background[1];
        s_b[q] = t_final * config.background[2];
      }

    for (std::size_t k = list.size(); k-- > 0;) {
      const ProjectedGaussian& pg = state.projected[list[k]];
      TileGrad& gr = grads[k];
      int gx0, gx1, gy0, gy1;
      support_range(pg.mean2d.x(), pg.radius, w, &gx0, &gx1);
      support_range(pg.mean2d.y(), pg.radius, h, &gy0, &gy1);
      const int x0 = std::max(gx0, rect.x0);
      const int x1 = std::min(gx1, rect.x1);
      const int y0 = std::max(gy0, rect.y0);
      const int y1 = std::min(gy1, rect.y1);

      for (int y = y0; y < y1; ++y) {
        const double dy = (y + 0.5) - pg.mean2d.y();
        for (int x = x0; x < x1; ++x) {
          const double dx = (x + 0.5) - pg.mean2d.x();
          const double power =
              -0.5 * (pg.inv_a * dx * dx + pg.inv_c * dy * dy) -
              pg.inv_b * dx * dy;
          if (power < kernels::kMinLogWeight) continue;
          const double gaussian_w = std::exp(power);
          const double alpha = pg.alpha * gaussian_w;
          const double om = 1.0 - alpha;

          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          const std::size_t q =
              static_cast<std::size_t>(y - rect.y0) * tw + (x - rect.x0);
          const double t_before = t_back[q] / om;
          const double blend_w = t_before * alpha;

          const double upr = up[3 * p + 0];
          const double upg = up[3 * p + 1];
          const double upb = up[3 * p + 2];

          const double d_alpha_pix =
              upr * (pg.colour[0] * t_before - s_r[q] / om) +
              upg * (pg.colour[1] * t_before - s_g[q] / om) +
              upb * (pg.colour[2] * t_before - s_b[q] / om);

          gr.d_r += upr * blend_w;
          gr.d_g += upg * blend_w;
          gr.d_b += upb * blend_w;
          gr.d_alpha += d_alpha_pix * gaussian_w;

          const double d_power = d_alpha_pix * pg.alpha * gaussian_w;
          gr.d_mx += d_power * (pg.inv_a * dx + pg.inv_b * dy);
          gr.d_my += d_power * (pg.inv_c * dy + pg.inv_b * dx);
          gr.d_ia += d_power * (-0.5 * dx * dx);
          gr.d_ib += d_power * (-dx * dy);
          gr.d_ic += d_power * (-0.5 * dy * dy);

          s_r[q] += pg.colour[0] * blend_w;
          s_g[q] += pg.colour[1] * blend_w;
          s_b[q] += pg.colour[2] * blend_w;
          t_back[q] = t_before;
        }
      }
    }
  });

  // Merge tile contributions in tile order.
  std::vector<TileGrad> merged(state.projected.size());
  for (std::size_t tile = 0; tile < n_tiles; ++tile) {
    const auto& list = state.tile_lists[tile];
    for (std::size_t k = 0; k < list.size(); ++k) {
      const TileGrad& src = tile_grads[tile][k];
      TileGrad& dst = merged[list[k]];
      dst.d_mx += src.d_mx;
      dst.d_my += src.d_my;
      dst.d_ia += src.d_ia;
      dst.d_ib += src.d_ib;
      dst.d_ic += src.d_ic;
      dst.d_alpha += src.d_alpha;
      dst.d_r += src.d_r;
      dst.d_g += src.d_g;
      dst.d_b += src.d_b;
    }
  }

  const std::size_t n = gaussians.count();
  RenderGrads grads;
  grads.d_positions.assign(3 * n, 0.0);
  grads.d_rotations.assign(4 * n, 0.0);
  grads.d_log_scales.assign(3 * n, 0.0);
  grads.d_colours.assign(static_cast<std::size_t>(gaussians.colour_dim()) * n,
                         0.0);
  grads.d_effective_opacities.assign(n, 0.0);

  for (std::size_t pidx = 0; pidx < state.projected.size(); ++pidx) {
    const ProjectedGaussian& pg = state.projected[pidx];
    const TileGrad& g = merged[pidx];
    const std::size_t i = pg.index;

    // Inverse-covariance gradient back to the (floored) covariance.
    Eigen::Matrix2d inv;
    inv << pg.inv_a, pg.inv_b, pg.inv_b, pg.inv_c;
    Eigen::Matrix2d gi;
    gi << g.d_ia, 0.5 * g.d_ib, 0.5 * g.d_ib, g.d_ic;
    const Eigen::Matrix2d dc = -inv * gi * inv;

    ProjectionGrads pgrads;
    project_gaussian_backward(
        gaussians.position(i), gaussians.rotation(i), gaussians.log_scale(i),
        gaussians.colour(i), gaussians.sh_degree, camera, pg,
        Eigen::Vector2d(g.d_mx, g.d_my), dc(0, 0), 2.0 * dc(0, 1), dc(1, 1),
        Eigen::Vector3d(g.d_r, g.d_g, g.d_b), &pgrads,
        &grads.d_colours[static_cast<std::size_t>(gaussians.colour_dim()) * i]);

    for (int k = 0; k < 3; ++k) {
      grads.d_positions[3 * i + k] += pgrads.d_position[k];
      grads.d_log_scales[3 * i + k] += pgrads.d_log_scale[k];
    }
    for (int k = 0; k < 4; ++k)
      grads.d_rotations[4 * i + k] += pgrads.d_quaternion[k];
    grads.d_effective_opacities[i] += g.d_alpha;
  }
  return grads;
}

}  // namespace ugs
