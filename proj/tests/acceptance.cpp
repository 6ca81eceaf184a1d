// Acceptance suite: every criterion runs at its stated tolerance and prints
// one PASS/FAIL line. The process exits with the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "ugs/fixture/fixture.hpp"
#include "ugs/metrics/metrics.hpp"
#include "ugs/raster/rasterizer.hpp"
#include "ugs/raster/reference_renderer.hpp"
#include "ugs/softdrop/softdrop.hpp"
#include "ugs/train/checkpoint.hpp"
#include "ugs/train/loss.hpp"
#include "ugs/train/trainer.hpp"
#include "ugs/uncertainty/mlp.hpp"

using namespace ugs;

namespace {

struct Check {
  int failures = 0;
  int total = 0;
  std::string first_failure;

  void expect(bool ok, const std::string& what) {
    ++total;
    if (!ok) {
      ++failures;
      if (first_failure.empty()) first_failure = what;
    }
  }
};

std::string fmt(const char* pattern, double a, double b = 0.0,
                double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

// --------------------------------------------------------------------------
// 1. Gradient suite: hash encoder, MLP, softdrop chain, rasterizer, loss.
// --------------------------------------------------------------------------
void gradients_hash_encoder(Check& ck) {
  HashGridEncoder::Config cfg;
  cfg.dims = 3;
  cfg.levels = 4;
  cfg.features_per_level = 2;
  cfg.base_resolution = 16;
  cfg.growth = 2.0;
  cfg.log2_table_size = 12;
  cfg.box_lo = Eigen::Vector3d::Zero();
  cfg.box_hi = Eigen::Vector3d::Ones();
  HashGridEncoder enc(cfg);
  const CounterRng rng(101);
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    enc.randomize_tables(trial + 1, 0.5);
    Eigen::Vector3d p(0.02 + 0.96 * rng.uniform(1, trial, 0),
                      0.02 + 0.96 * rng.uniform(1, trial, 1),
                      0.02 + 0.96 * rng.uniform(1, trial, 2));
    std::vector<double> upstream(enc.output_dim());
    for (int k = 0; k < enc.output_dim(); ++k)
      upstream[k] = rng.normal(2, trial, k);
    std::vector<double> tgrad(enc.parameter_count(), 0.0);
    Eigen::Vector3d pgrad;
    enc.encode_backward({p.data(), 3}, upstream, tgrad, {pgrad.data(), 3});

    auto objective = [&]() {
      std::vector<double> out(enc.output_dim());
      enc.encode({p.data(), 3}, out);
      double s = 0.0;
      for (int k = 0; k < enc.output_dim(); ++k) s += upstream[k] * out[k];
      return s;
    };
    for (int axis = 0; axis < 3; ++axis)
      ck.expect(test::grad_close(pgrad[axis],
                                 test::central_diff(&p[axis], objective, 1e-6),
                                 1e-4, 1e-6),
                "hash encoder position gradient");
    int tested = 0;
    for (std::size_t e = 0; e < tgrad.size() && tested < 3; ++e) {
      if (tgrad[e] == 0.0) continue;
      ck.expect(
          test::grad_close(tgrad[e],
                           test::central_diff(&enc.tables()[e], objective, 1e-6),
                           1e-4, 1e-8),
          "hash encoder table gradient");
      ++tested;
    }
  }
}

void gradients_mlp(Check& ck) {
  UncertaintyNet net({34, 8, 1});
  const CounterRng rng(102);
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    for (std::size_t i = 0; i < net.parameter_count(); ++i)
      net.parameters()[i] = 0.7 * rng.normal(1, trial, i);
    std::vector<double> x(34);
    for (int k = 0; k < 34; ++k) x[k] = rng.normal(2, trial, k);
    const double upstream = rng.normal(3, trial);

    UncertaintyNet::Workspace ws;
    (void)net.predict_one(x, &ws);
    std::vector<double> pgrad(net.parameter_count(), 0.0), xgrad(34, 0.0);
    net.backward_one(ws, upstream, pgrad, xgrad);
    auto objective = [&]() { return upstream * net.predict_one(x, nullptr); };

    for (std::size_t i = 0; i < net.parameter_count(); i += 13)
      ck.expect(test::grad_close(pgrad[i],
                                 test::central_diff(&net.parameters()[i],
                                                    objective),
                                 1e-4, 1e-7),
                "mlp parameter gradient");
    for (int k = 0; k < 34; k += 5)
      ck.expect(
          test::grad_close(xgrad[k], test::central_diff(&x[k], objective),
                           1e-4, 1e-7),
          "mlp input gradient");
  }
}

void gradients_softdrop(Check& ck) {
  SoftDropConfig cfg;
  const CounterRng rng(103);
  int tested = 0;
  for (std::uint64_t trial = 0; tested < 50 && trial < 500; ++trial) {
    double alpha = 0.05 + 0.9 * rng.uniform(1, trial);
    double u = 0.02 + 0.96 * rng.uniform(2, trial);
    const double q = 0.02 + 0.96 * rng.uniform(3, trial);
    const SoftDropChain chain = soft_drop_forward(alpha, u, q, cfg);
    if (std::fabs(chain.omega - cfg.clamp_min) < 1e-3 ||
        std::fabs(chain.omega - cfg.clamp_max) < 1e-3)
      continue;
    const double upstream = rng.normal(4, trial);
    const SoftDropGrads g = soft_drop_backward(chain, cfg, upstream);
    auto objective = [&]() {
      return upstream * soft_drop_forward(alpha, u, q, cfg).effective;
    };
    ck.expect(test::grad_close(g.d_alpha, test::central_diff(&alpha, objective),
                               1e-4, 1e-8),
              "softdrop d/dalpha");
    ck.expect(test::grad_close(g.d_u, test::central_diff(&u, objective, 1e-7),
                               1e-4, 1e-8),
              "softdrop d/du");
    ++tested;
  }
  ck.expect(tested == 50, "softdrop sample count");
}

// Finite differences are meaningless across the integer support boundary of
// a splat (the footprint rectangle jumps by one pixel column/row). Skip
// Gaussians whose boundary sits within `margin` pixels of an integer.
bool support_boundary_safe(const GaussianSet& g, double alpha,
                           const Camera& cam, double margin) {
  for (std::size_t i = 0; i < g.count(); ++i) {
    ProjectedGaussian pg;
    if (project_gaussian(g.position(i), g.rotation(i), g.log_scale(i),
                         g.colour(i), g.sh_degree, alpha, cam, {},
                         &pg) != ProjectionOutcome::kVisible)
      continue;
    for (const double v :
         {pg.mean2d.x() - pg.radius - 0.5, pg.mean2d.x() + pg.radius - 0.5,
          pg.mean2d.y() - pg.radius - 0.5, pg.mean2d.y() + pg.radius - 0.5}) {
      if (std::fabs(v - std::round(v)) < margin) return false;
    }
  }
  return true;
}

void gradients_rasterizer(Check& ck) {
  const CounterRng rng(104);
  RenderConfig rc;
  rc.transmittance_min = 0.0;
  rc.background = {0.1, 0.2, 0.05};
  const Camera cam = test::front_camera(16);
  int instance_count = 0;
  for (int instance = 0; instance_count < 50 && instance < 200; ++instance) {
    GaussianSet g = test::random_gaussians(rng, 4, instance);
    std::vector<double> eff = test::raw_opacities(g);
    if (!support_boundary_safe(g, 0.5, cam, 2e-3)) continue;
    ++instance_count;
    std::vector<double> upstream(3 * 16 * 16);
    for (std::size_t i = 0; i < upstream.size(); ++i)
      upstream[i] = rng.normal(90 + instance, i);

    auto objective = [&]() {
      const RenderOutput out = render(g, cam, eff, rc);
      double s = 0.0;
      for (std::size_t i = 0; i < upstream.size(); ++i)
        s += upstream[i] * out.image.pixels[i];
      return s;
    };
    const RenderOutput out = render(g, cam, eff, rc);
    const RenderGrads grads = render_backward(g, cam, out, upstream, rc);

    // One Gaussian per instance, every parameter of it.
    const int i = instance % 4;
    for (int k = 0; k < 3; ++k) {
      ck.expect(test::grad_close(
                    grads.d_positions[3 * i + k],
                    test::central_diff(&g.positions[3 * i + k], objective),
                    1e-3, 1e-6),
                "rasterizer position gradient");
      ck.expect(test::grad_close(
                    grads.d_log_scales[3 * i + k],
                    test::central_diff(&g.log_scales[3 * i + k], objective),
                    1e-3, 1e-6),
                "rasterizer scale gradient");
      ck.expect(test::grad_close(
                    grads.d_colours[3 * i + k],
                    test::central_diff(&g.colours[3 * i + k], objective),
                    1e-3, 1e-6),
                "rasterizer colour gradient");
    }
    for (int k = 0; k < 4; ++k)
      ck.expect(test::grad_close(
                    grads.d_rotations[4 * i + k],
                    test::central_diff(&g.rotations[4 * i + k], objective),
                    1e-3, 1e-6),
                "rasterizer rotation gradient");
    ck.expect(test::grad_close(grads.d_effective_opacities[i],
                               test::central_diff(&eff[i], objective), 1e-3,
                               1e-6),
              "rasterizer opacity gradient");
  }
}

void gradients_loss(Check& ck) {
  const CounterRng rng(105);
  for (int instance = 0; instance < 50; ++instance) {
    ImageBuffer rendered(8, 8), reference(8, 8);
    for (std::size_t i = 0; i < rendered.pixels.size(); ++i) {
      rendered.pixels[i] = 0.1 + 0.8 * rng.uniform(1, instance * 1000 + i);
      reference.pixels[i] = 0.1 + 0.8 * rng.uniform(2, instance * 1000 + i);
    }
    const ColourLoss loss = colour_loss(rendered, reference, 0.2, true);
    for (std::size_t i = instance % 9; i < rendered.pixels.size(); i += 37) {
      const double numeric = test::central_diff(&rendered.pixels[i], [&]() {
        return colour_loss(rendered, reference, 0.2, false).loss;
      });
      ck.expect(test::grad_close(loss.d_rendered[i], numeric, 1e-4, 1e-7),
                "loss image gradient");
    }
  }
}

bool criterion_gradient_suite(std::string* detail) {
  const auto start = std::chrono::steady_clock::now();
  Check ck;
  gradients_hash_encoder(ck);
  gradients_mlp(ck);
  gradients_softdrop(ck);
  gradients_rasterizer(ck);
  gradients_loss(ck);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  ck.expect(secs < 120.0, "runtime under 2 minutes");
  *detail = fmt("%.0f/%.0f gradient checks passed, %.1f s",
                static_cast<double>(ck.total - ck.failures),
                static_cast<double>(ck.total), secs);
  if (ck.failures) *detail += " first failure: " + ck.first_failure;
  return ck.failures == 0;
}

// --------------------------------------------------------------------------
// 2. Drop-weight point checks and the clamp-band boundary.
// --------------------------------------------------------------------------
bool criterion_point_checks(std::string* detail) {
  Check ck;
  SoftDropConfig cfg;  // tau 0.1, clamp [0.2, 0.8]

  for (double tau : {0.05, 0.1, 0.2, 1.0, 7.0})
    ck.expect(soft_drop_weight(0.5, 0.5, tau) == 0.5,
              "omega(0.5,0.5,tau) == 0.5 exactly");

  const double w = soft_drop_weight(0.6, 0.5, 0.1);
  ck.expect(std::fabs(w - 0.01703) <= 1e-4, "omega(0.6,0.5,0.1) = 0.01703");
  ck.expect(clamp_weight(w, cfg) == 0.2, "post-clamp 0.2");

  // Crossing points of the q = 1/2 slice with the clamp bounds.
  auto crossing = [&](double target) {
    double lo = 0.01, hi = 0.99;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      // omega decreases in u
      if (soft_drop_weight(mid, 0.5, cfg.temperature) > target)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  };
  const double u_hi = crossing(cfg.clamp_max);  // omega = 0.8
  const double u_lo = crossing(cfg.clamp_min);  // omega = 0.2
  ck.expect(std::fabs(u_hi - 0.47) <= 0.005,
            fmt("omega=0.8 crossing at u=%.4f (want 0.47 +- 0.005)", u_hi));
  ck.expect(std::fabs(u_lo - 0.53) <= 0.005,
            fmt("omega=0.2 crossing at u=%.4f (want 0.53 +- 0.005)", u_lo));

  *detail = fmt("crossings at u=%.4f / %.4f, omega(0.6,0.5,0.1)=%.6f", u_hi,
                u_lo, w);
  if (ck.failures) *detail += " FAILED: " + ck.first_failure;
  return ck.failures == 0;
}

// --------------------------------------------------------------------------
// 3. Blending conservation and tiling equivalence on 100 random scenes.
// --------------------------------------------------------------------------
bool criterion_blending(std::string* detail) {
  Check ck;
  const CounterRng rng(303);
  double worst_conservation = 0.0, worst_equivalence = 0.0;
  for (int scene = 0; scene < 100; ++scene) {
    const int n = 3 + static_cast<int>(rng.word(1, scene) % 48);
    const GaussianSet g = test::random_gaussians(rng, n, 7000 + scene);
    const std::vector<double> eff = test::raw_opacities(g);
    const Camera cam = test::front_camera(32);
    RenderConfig rc;
    rc.transmittance_min = 0.0;  // early termination disabled for the check
    rc.background = {0.3, 0.2, 0.1};
    rc.threads = 2;
    const RenderOutput tiled = render(g, cam, eff, rc);
    const ReferenceRender ref = reference_render(g, cam, eff, rc);

    for (std::size_t p = 0; p < tiled.transmittance.size(); ++p) {
      const double c =
          std::fabs(tiled.weight_image[p] + tiled.transmittance[p] - 1.0);
      worst_conservation = std::max(worst_conservation, c);
    }
    for (std::size_t i = 0; i < ref.raw.size(); ++i)
      worst_equivalence = std::max(
          worst_equivalence, std::fabs(tiled.raw[i] - ref.raw[i]));
  }
  ck.expect(worst_conservation < 1e-5, "sum(w) + T == 1 within 1e-5");
  ck.expect(worst_equivalence < 1e-6, "tiled == brute force within 1e-6");
  *detail = fmt("max |sum w + T - 1| = %.2e, max |tiled - oracle| = %.2e",
                worst_conservation, worst_equivalence);
  if (ck.failures) *detail += " FAILED: " + ck.first_failure;
  return ck.failures == 0;
}

// --------------------------------------------------------------------------
// 4. Toy convergence: 20 Gaussians, 8 views, >= 35 dB within 2000 iters.
// --------------------------------------------------------------------------
bool criterion_toy_convergence(std::string* detail) {
  const auto start = std::chrono::steady_clock::now();
  Fixture fx = make_fixture(fixture_preset("convergence", 2024));
  TrainConfig cfg;
  cfg.iterations = 2000;
  cfg.seed = 2024;
  cfg.threads = 2;
  Session session = make_session(std::move(fx.scene), {}, {}, cfg);
  Trainer trainer(std::move(session));
  trainer.train();
  const double train_psnr = trainer.eval_psnr(false);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  *detail = fmt("train PSNR %.2f dB after 2000 iterations, %.1f s",
                train_psnr, secs);
  return train_psnr >= 35.0 && secs < 300.0;
}

// --------------------------------------------------------------------------
// 5 & 6. Overfitting-gap direction and uncertainty dynamics over 5 seeds.
// --------------------------------------------------------------------------
struct OverfitOutcome {
  double gap_mech = 0.0, gap_ablated = 0.0;
  double test_mech = 0.0, test_ablated = 0.0;
  int median_down = 0, band_down = 0;
  int seeds = 0;
};

OverfitOutcome run_overfit_study() {
  OverfitOutcome out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FixtureSpec spec = fixture_preset("overfit", 500 + seed);
    for (const bool mechanism : {true, false}) {
      Fixture fx = make_fixture(spec);
      TrainConfig cfg;
      cfg.iterations = 3000;
      cfg.seed = seed;
      cfg.threads = 2;
      cfg.enable_uncertainty = mechanism;
      Session session = make_session(std::move(fx.scene), {}, {}, cfg);
      Trainer trainer(std::move(session));

      double median0 = 0.5, band0 = 1.0;
      if (mechanism) {
        const UncertaintyHistogram h0 = trainer.uncertainty_histogram(
            trainer.session().scene.train_views[0].camera);
        median0 = h0.median;
        band0 = h0.ambiguous_fraction;
      }
      trainer.train();
      const double train_psnr = trainer.eval_psnr(false);
      const double test_psnr = trainer.eval_psnr(true);
      if (mechanism) {
        out.gap_mech += train_psnr - test_psnr;
        out.test_mech += test_psnr;
        const UncertaintyHistogram h1 = trainer.uncertainty_histogram(
            trainer.session().scene.train_views[0].camera);
        if (h1.median < median0) ++out.median_down;
        if (h1.ambiguous_fraction < band0) ++out.band_down;
      } else {
        out.gap_ablated += train_psnr - test_psnr;
        out.test_ablated += test_psnr;
      }
    }
    ++out.seeds;
  }
  out.gap_mech /= out.seeds;
  out.gap_ablated /= out.seeds;
  out.test_mech /= out.seeds;
  out.test_ablated /= out.seeds;
  return out;
}

bool criterion_overfit_gap(const OverfitOutcome& o, std::string* detail) {
  *detail = fmt("gap %.3f dB (mechanism) vs %.3f dB (ablated); ", o.gap_mech,
                o.gap_ablated) +
            fmt("test %.2f vs %.2f dB", o.test_mech, o.test_ablated);
  return o.gap_mech < o.gap_ablated &&
         o.test_mech >= o.test_ablated - 0.1;
}

bool criterion_uncertainty_dynamics(const OverfitOutcome& o,
                                    std::string* detail) {
  *detail = fmt("median down in %.0f/5 seeds, band mass down in %.0f/5",
                static_cast<double>(o.median_down),
                static_cast<double>(o.band_down));
  return o.median_down >= 4 && o.band_down >= 4;
}

// --------------------------------------------------------------------------
// 7. Freeze rule on the hand-traced PSNR sequence.
// --------------------------------------------------------------------------
bool criterion_freeze(std::string* detail) {
  Check ck;
  Fixture fx = make_fixture(fixture_preset("basic", 7));
  TrainConfig cfg;
  cfg.freeze_epsilon = 0.2;
  cfg.seed = 7;
  Session session = make_session(std::move(fx.scene), {}, {}, cfg);
  Trainer trainer(std::move(session));

  trainer.check_freeze(20.0);
  ck.expect(!trainer.session().net->frozen(), "no freeze at first check");
  trainer.check_freeze(20.5);
  ck.expect(!trainer.session().net->frozen(), "no freeze at delta 0.5");
  trainer.check_freeze(20.6);
  ck.expect(trainer.session().net->frozen(), "freeze at delta 0.1 < 0.2");

  // Theta is bit-constant afterwards, even through optimizer steps.
  const std::vector<double> theta = trainer.session().net->parameters();
  const std::vector<double> tables =
      trainer.session().encoder->grids()[0]->tables();
  for (int i = 0; i < 25; ++i) trainer.step();
  ck.expect(trainer.session().net->parameters() == theta,
            "theta bit-constant after freeze");
  ck.expect(trainer.session().encoder->grids()[0]->tables() == tables,
            "hash tables bit-constant after freeze");
  trainer.check_freeze(25.0);
  ck.expect(trainer.session().net->frozen(), "freezing is one-way");

  *detail = ck.failures ? "FAILED: " + ck.first_failure
                        : "traced sequence freezes exactly at the third check";
  return ck.failures == 0;
}

// --------------------------------------------------------------------------
// 8. Determinism and checkpoint-resume equality.
// --------------------------------------------------------------------------
bool criterion_determinism(std::string* detail) {
  Check ck;
  const FixtureSpec spec = fixture_preset("basic", 88);
  TrainConfig cfg;
  cfg.iterations = 100;
  cfg.seed = 88;
  cfg.freeze_check_interval = 25;

  auto fresh = [&]() {
    Fixture fx = make_fixture(spec);
    return Trainer(make_session(std::move(fx.scene), {}, {}, cfg));
  };
  auto run_to = [&](Trainer& t, int until) {
    while (t.session().state.iteration < until) t.step();
  };

  Trainer a = fresh();
  run_to(a, 100);
  Trainer b = fresh();
  run_to(b, 100);
  const std::string csv_a = metric_log_to_csv(a.session().state.metric_log);
  ck.expect(csv_a == metric_log_to_csv(b.session().state.metric_log),
            "seed-fixed runs reproduce the metric CSV bit-exactly");

  Trainer c = fresh();
  run_to(c, 50);
  const auto path =
      std::filesystem::temp_directory_path() / "ugs_acceptance_resume.ugs";
  save_checkpoint(c.session(), path);
  Trainer resumed(load_checkpoint(path));
  run_to(resumed, 100);
  ck.expect(metric_log_to_csv(resumed.session().state.metric_log) == csv_a,
            "50+50 resumed run equals the 100-step run");
  ck.expect(resumed.session().scene.gaussians.positions ==
                a.session().scene.gaussians.positions,
            "resumed parameters equal the straight run");

  *detail = ck.failures ? "FAILED: " + ck.first_failure
                        : "CSV bit-equal; resume matches step-for-step";
  return ck.failures == 0;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    std::function<bool(std::string*)> run;
  };

  OverfitOutcome overfit;
  bool overfit_ready = false;
  auto ensure_overfit = [&]() {
    if (!overfit_ready) {
      overfit = run_overfit_study();
      overfit_ready = true;
    }
  };

  const std::vector<Entry> criteria = {
      {"1 gradient-suite", criterion_gradient_suite},
      {"2 eq9-eq10-point-checks", criterion_point_checks},
      {"3 blending-conservation", criterion_blending},
      {"4 toy-convergence", criterion_toy_convergence},
      {"5 overfitting-gap",
       [&](std::string* d) {
         ensure_overfit();
         return criterion_overfit_gap(overfit, d);
       }},
      {"6 uncertainty-dynamics",
       [&](std::string* d) {
         ensure_overfit();
         return criterion_uncertainty_dynamics(overfit, d);
       }},
      {"7 freeze-rule", criterion_freeze},
      {"8 determinism-checkpoint", criterion_determinism},
  };

  int failures = 0;
  for (const Entry& entry : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = entry.run(&detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] %s (%s) [%.1fs]\n", ok ? "PASS" : "FAIL", entry.name,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
