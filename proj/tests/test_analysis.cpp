#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "topodyn/analysis.hpp"

using namespace topodyn;

namespace {

// deterministic synthetic map from a displacement function G: F = R + G(R; eps)
CoarseMap from_g(double (*g)(double, double)) {
  return [g](double R, double eps, double) { return R + g(R, eps); };
}

// stable-unstable-stable cubic family with a saddle-node at eps = 0.24:
// roots 0.0015 and 0.012 +- sqrt(s), s = (0.24 - eps) * 8e-4
double fold_g(double R, double eps) {
  const double s = (0.24 - eps) * 8e-4;
  return -1e4 * (R - 0.0015) * ((R - 0.012) * (R - 0.012) - s);
}

double reversed_fold_g(double R, double eps) { return fold_g(R, 0.49 - eps); }

NewtonOpts tight_opts() {
  NewtonOpts o;
  o.tol = 1e-7;
  o.h_floor = 1e-7;
  o.h_rel = 1e-4;
  o.max_iter = 60;
  o.max_halvings = 12;
  o.domain_lo = 1e-4;
  o.domain_hi = 0.06;
  return o;
}

}  // namespace

TEST_CASE("quantize_micro rounds to the nearest micro unit") {
  REQUIRE(quantize_micro(0.1234567) == 123457);
  REQUIRE(quantize_micro(0.0) == 0);
  REQUIRE(quantize_micro(-0.25) == -250000);
  REQUIRE(quantize_micro(0.1) == quantize_micro(0.1 + 4e-7));
}

TEST_CASE("g_function is the displacement of the map") {
  const CoarseMap F = [](double R, double, double) { return 2.0 * R + 0.01; };
  REQUIRE(g_function(F, 0.05, 0.2) == Catch::Approx(0.06).margin(1e-15));
}

TEST_CASE("newton converges on a linear contraction") {
  static constexpr double c = 0.0123;
  const CoarseMap F = [](double R, double, double) { return c + 0.7 * (R - c); };
  NewtonOpts o = tight_opts();
  o.tol = 1e-6;
  const FixedPoint fp = newton_fixed_point(F, 0.05, 0.2, o);
  REQUIRE(fp.converged);
  REQUIRE(std::fabs(fp.R_star - c) < 1e-4);
  REQUIRE(fp.stable);
  REQUIRE(fp.slope == Catch::Approx(-0.3).margin(1e-6));
  REQUIRE(fp.residual <= o.tol);
  REQUIRE(fp.epsilon == 0.2);
}

TEST_CASE("newton flags an expanding fixed point as unstable") {
  static constexpr double c = 0.0123;
  const CoarseMap F = [](double R, double, double) { return c + 1.5 * (R - c); };
  NewtonOpts o = tight_opts();
  o.tol = 1e-6;
  const FixedPoint fp = newton_fixed_point(F, 0.016, 0.2, o);
  REQUIRE(fp.converged);
  REQUIRE(std::fabs(fp.R_star - c) < 1e-4);
  REQUIRE_FALSE(fp.stable);
  REQUIRE(fp.slope == Catch::Approx(0.5).margin(1e-6));
}

TEST_CASE("newton refuses a start outside the lift domain") {
  const CoarseMap F = [](double R, double, double) { return R; };
  NewtonOpts o;
  o.domain_lo = 0.01;
  REQUIRE_THROWS_AS(newton_fixed_point(F, 0.005, 0.2, o), DomainExitError);
}

TEST_CASE("newton reports a domain exit when the root lies outside") {
  const CoarseMap F = [](double, double, double) { return 0.2; };  // root at 0.2
  NewtonOpts o;
  o.domain_lo = 0.0;
  o.domain_hi = 0.05;
  try {
    newton_fixed_point(F, 0.04, 0.2, o);
    FAIL("expected DomainExitError");
  } catch (const DomainExitError& e) {
    REQUIRE(e.last_valid_R >= 0.04 - 1e-12);
    REQUIRE(e.last_valid_R <= 0.05);
  }
}

TEST_CASE("newton without a reachable root ends unconverged") {
  const CoarseMap F = [](double R, double, double) { return R + 0.005 + std::fabs(R - 0.01); };
  NewtonOpts o = tight_opts();
  o.tol = 1e-4;
  const FixedPoint fp = newton_fixed_point(F, 0.0105, 0.2, o);
  REQUIRE_FALSE(fp.converged);
  REQUIRE(fp.residual >= 0.004);
}

TEST_CASE("root scan recovers a cubic's three fixed points") {
  const CoarseMap F = [](double R, double, double) {
    return R + -1e4 * (R - 0.002) * (R - 0.008) * (R - 0.0234);
  };
  const auto grid = default_root_grid(0.0006, 0.05, 40);
  const auto roots = find_all_roots(F, 0.2, grid, tight_opts());
  REQUIRE(roots.size() == 3);
  REQUIRE(std::fabs(roots[0].R_star - 0.002) < 1e-5);
  REQUIRE(std::fabs(roots[1].R_star - 0.008) < 1e-5);
  REQUIRE(std::fabs(roots[2].R_star - 0.0234) < 1e-5);
  REQUIRE(roots[0].stable);
  REQUIRE_FALSE(roots[1].stable);
  REQUIRE(roots[2].stable);
  for (const auto& r : roots) {
    REQUIRE(r.converged);
    REQUIRE(r.residual <= 1e-7);
  }
}

TEST_CASE("roots closer than the dedup window collapse to one") {
  const CoarseMap F = [](double R, double, double) {
    return R + -100.0 * (R - 0.01) * (R - 0.0105);
  };
  std::vector<double> grid;
  for (double R = 0.002; R <= 0.03; R += 2e-4) grid.push_back(R);
  const auto roots = find_all_roots(F, 0.2, grid, tight_opts());
  REQUIRE(roots.size() == 1);
  REQUIRE(roots[0].R_star > 0.0095);
  REQUIRE(roots[0].R_star < 0.011);
}

TEST_CASE("a root sitting exactly on a grid point is counted once") {
  const CoarseMap F = [](double, double, double) { return 0.01; };
  const std::vector<double> grid = {0.005, 0.0075, 0.01, 0.0125, 0.015};
  const auto roots = find_all_roots(F, 0.2, grid, tight_opts());
  REQUIRE(roots.size() == 1);
  REQUIRE(std::fabs(roots[0].R_star - 0.01) < 1e-4);
  REQUIRE_THROWS_AS(find_all_roots(F, 0.2, {0.01}, tight_opts()), AnalysisError);
}

TEST_CASE("bifurcation sweep maps the fold family") {
  const CoarseMap F = from_g(&fold_g);
  const auto grid = default_root_grid(0.001, 0.04, 40);
  const std::vector<double> eps_grid = {0.16, 0.19, 0.22, 0.26};
  const auto diag = bifurcation_sweep(F, eps_grid, grid, tight_opts());

  REQUIRE(diag.roots.size() == 4);
  for (int k = 0; k < 3; ++k) {
    const auto& r = diag.roots[static_cast<std::size_t>(k)];
    REQUIRE(r.size() == 3);
    REQUIRE(r[0].stable);
    REQUIRE_FALSE(r[1].stable);
    REQUIRE(r[2].stable);
    for (const auto& fp : r) REQUIRE(fp.epsilon == eps_grid[static_cast<std::size_t>(k)]);
  }
  REQUIRE(diag.roots[3].size() == 1);
  REQUIRE(diag.roots[3][0].stable);

  // analytic roots at eps = 0.16: s = 6.4e-5, sqrt(s) = 0.008
  REQUIRE(std::fabs(diag.roots[0][0].R_star - 0.0015) < 1e-4);
  REQUIRE(std::fabs(diag.roots[0][1].R_star - 0.004) < 1e-4);
  REQUIRE(std::fabs(diag.roots[0][2].R_star - 0.020) < 1e-4);

  REQUIRE(diag.fold.eps_hi - diag.fold.eps_lo <= 0.005 + 1e-12);
  REQUIRE(diag.fold.eps_lo >= 0.22);
  REQUIRE(diag.fold.eps_hi >= 0.24 - 1e-9);
  REQUIRE(diag.fold.eps_hi <= 0.245);
  REQUIRE(diag.fold.bisection_steps >= 1);
  REQUIRE(diag.warnings.empty());
}

TEST_CASE("bifurcation sweep rejects malformed epsilon grids") {
  const CoarseMap F = from_g(&fold_g);
  const auto grid = default_root_grid(0.001, 0.04, 30);
  REQUIRE_THROWS_AS(bifurcation_sweep(F, {}, grid), AnalysisError);
  REQUIRE_THROWS_AS(bifurcation_sweep(F, {0.2, 0.18}, grid), AnalysisError);
  REQUIRE_THROWS_AS(bifurcation_sweep(F, {0.2, 0.5}, grid), AnalysisError);
}

TEST_CASE("bifurcation sweep rejects a return to three roots") {
  const CoarseMap F = from_g(&reversed_fold_g);  // 1 root low, 3 roots high
  const auto grid = default_root_grid(0.001, 0.04, 40);
  REQUIRE_THROWS_AS(bifurcation_sweep(F, {0.2, 0.3}, grid, tight_opts()), AnalysisError);
}

TEST_CASE("bifurcation sweep rejects a lone unstable root") {
  const CoarseMap F = [](double R, double, double) { return R + 0.5 * (R - 0.01); };
  const auto grid = default_root_grid(0.001, 0.04, 30);
  REQUIRE_THROWS_AS(bifurcation_sweep(F, {0.2}, grid, tight_opts()), AnalysisError);
}

TEST_CASE("a persistent two-root scan asks for a bigger ensemble") {
  const CoarseMap F = [](double R, double, double) {
    return R + 4.0 * (R - 0.005) * (R - 0.015);
  };
  const auto grid = default_root_grid(0.001, 0.04, 40);
  try {
    bifurcation_sweep(F, {0.2}, grid, tight_opts());
    FAIL("expected AnalysisError");
  } catch (const AnalysisError& e) {
    REQUIRE(std::string(e.what()).find("increase the ensemble size") != std::string::npos);
  }
}

TEST_CASE("default_root_grid spans the domain geometrically") {
  const auto g = default_root_grid(0.001, 0.02, 28);
  REQUIRE(g.size() == 28);
  REQUIRE(g.front() == Catch::Approx(0.00102).margin(1e-9));
  REQUIRE(g.back() == Catch::Approx(0.0196).margin(1e-9));
  const double ratio = g[1] / g[0];
  for (std::size_t i = 1; i + 1 < g.size(); ++i)
    REQUIRE(g[i + 1] / g[i] == Catch::Approx(ratio).margin(1e-9));
}

TEST_CASE("the production map memoizes and quantizes its seed key") {
  LiftCalibration cal;
  cal.spacing = {0.02, 0.04, 0.08, 0.12};
  cal.rbar = {0.06, 0.12, 0.25, 0.38};
  EnsembleSpec spec;
  spec.N = 4;
  spec.master_seed = 99;
  spec.K = 300;
  spec.p = 0.02;
  spec.n_landmarks = 12;
  spec.params.epsilon = 0.2;
  spec.params.T = 2;
  const CoarseMap F = make_coarse_map(spec, LiftMode::geometric, &cal);

  const double v1 = F(0.1, 0.2, 0.1);
  const double v2 = F(0.1, 0.2, 0.1);
  REQUIRE(v1 == v2);
  REQUIRE(std::isfinite(v1));
  REQUIRE(v1 > 0.0);

  // seed keys quantize at 1e-6, so a sub-micro nudge reuses the entry
  const double v3 = F(0.1, 0.2, 0.1 + 4e-7);
  REQUIRE(v3 == v1);

  // a fresh map with the same spec replays the same value
  const CoarseMap F2 = make_coarse_map(spec, LiftMode::geometric, &cal);
  REQUIRE(F2(0.1, 0.2, 0.1) == v1);
}
