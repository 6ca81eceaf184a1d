#include "ugs/raster/reference_renderer.hpp"

#include <algorithm>
#include <cmath>

#include "ugs/core/error.hpp"
#include "ugs/core/mathutil.hpp"

namespace ugs {

ReferenceRender reference_render(const GaussianSet& gaussians,
                                 const Camera& camera,
                                 std::span<const double> effective_opacities,
                                 const RenderConfig& config) {
  gaussians.validate();
  camera.validate();
  if (effective_opacities.size() != gaussians.count())
    throw Error(ErrorCode::kDimension,
                "effective opacity count does not match the Gaussian count");

  const int w = camera.width;
  const int h = camera.height;

  struct Splat {
    ProjectedGaussian pg;
    int x0, x1, y0, y1;
  };
  std::vector<Splat> splats;
  for (std::size_t i = 0; i < gaussians.count(); ++i) {
    Splat s;
    s.pg.index = i;
    if (project_gaussian(gaussians.position(i), gaussians.rotation(i),
                         gaussians.log_scale(i), gaussians.colour(i),
                         gaussians.sh_degree, effective_opacities[i], camera,
                         config.projection,
                         &s.pg) != ProjectionOutcome::kVisible)
      continue;
    support_range(s.pg.mean2d.x(), s.pg.radius, w, &s.x0, &s.x1);
    support_range(s.pg.mean2d.y(), s.pg.radius, h, &s.y0, &s.y1);
    splats.push_back(s);
  }
  std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
    if (a.pg.depth != b.pg.depth) return a.pg.depth < b.pg.depth;
    return a.pg.index < b.pg.index;
  });

  ReferenceRender out;
  out.image = ImageBuffer(w, h);
  out.raw.resize(3 * static_cast<std::size_t>(w) * h);
  out.transmittance.assign(static_cast<std::size_t>(w) * h, 1.0);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double t = 1.0;
      double rgb[3] = {0.0, 0.0, 0.0};
      for (const Splat& s : splats) {
        if (x < s.x0 || x >= s.x1 || y < s.y0 || y >= s.y1) continue;
        const double dx = (x + 0.5) - s.pg.mean2d.x();
        const double dy = (y + 0.5) - s.pg.mean2d.y();
        // Density straight from the covariance entries (own inverse).
        const double det = s.pg.cov_a * s.pg.cov_c - s.pg.cov_b * s.pg.cov_b;
        const double quad = (s.pg.cov_c * dx * dx -
                             2.0 * s.pg.cov_b * dx * dy +
                             s.pg.cov_a * dy * dy) /
                            det;
        const double alpha = s.pg.alpha * std::exp(-0.5 * quad);
        for (int c = 0; c < 3; ++c) rgb[c] += s.pg.colour[c] * alpha * t;
        t *= 1.0 - alpha;
      }
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      out.transmittance[p] = t;
      for (int c = 0; c < 3; ++c) {
        const double v = rgb[c] + t * config.background[c];
        out.raw[3 * p + c] = v;
        out.image.pixels[3 * p + c] = clamp01(v);
      }
    }
  }
  return out;
}

}  // namespace ugs
