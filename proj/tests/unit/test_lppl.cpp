#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>

#include "econokit/lppl.hpp"
#include "oracles.hpp"

using namespace econokit;
using lppl::Form;
using lppl::Oscillation;

namespace {

lppl::Params log_params(double C, double t_c) {
  lppl::Params p;
  p.form = Form::log;
  p.oscillation = Oscillation::cosine;
  p.A = 1.0;
  p.B = -0.3;
  p.C = C;
  p.omega = 10.0;
  p.phi = 1.0;
  p.t_c = t_c;
  return p;
}

lppl::Observations sample(const lppl::Params& p, std::size_t n, double noise = 0.0, std::uint64_t seed = 0,
                          double t0 = 0.0) {
  lppl::Observations obs;
  obs.t = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n), t0, t0 + static_cast<double>(n - 1));
  obs.y.resize(obs.t.size());
  const Eigen::VectorXd z = oracle::gaussian(n, seed);
  for (Eigen::Index i = 0; i < obs.t.size(); ++i) obs.y[i] = lppl::evaluate(p, obs.t[i]) * (1.0 + noise * z[i]);
  return obs;
}

double split_rss(const lppl::SplitFitResult& r, const lppl::Observations& obs) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < obs.t.size(); ++i) s += std::pow(obs.y[i] - lppl::evaluate(r, obs.t[i]), 2);
  return s;
}

}  // namespace

TEST_CASE("evaluation examples") {
  lppl::Params p;
  p.form = Form::power;
  p.A = 2.5;
  p.m_prime = 0.4;
  p.t_c = 50;
  CHECK(lppl::lppl_eval(p, 10.0) == 2.5);
  p.A = 0;
  p.B = 1;
  p.m_prime = 0.5;
  p.t_c = 100;
  CHECK(lppl::lppl_eval(p, 96.0) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK_THROWS_AS(lppl::lppl_eval(p, 100.0), Error);

  lppl::Params q;
  q.form = Form::log;
  q.B = 1;
  q.t_c = 80;
  CHECK(lppl::log_lppl_eval(q, 80.0 * (1.0 - std::exp(-1.0))) == doctest::Approx(-1.0).epsilon(1e-14));
  q.A = 0.7;
  q.B = -2;
  CHECK(lppl::log_lppl_eval(q, 30.0) == doctest::Approx(0.7 - 2.0 * std::log(50.0 / 80.0)).epsilon(1e-15));
  CHECK_THROWS_AS(lppl::lppl_eval(q, 1.0), Error);
}

TEST_CASE("double evaluation agrees with extended precision") {
  using Big = boost::multiprecision::cpp_bin_float_50;
  for (auto osc : {Oscillation::linear, Oscillation::cosine}) {
    lppl::BasicParams<Big> big;
    big.form = Form::power;
    big.oscillation = osc;
    big.A = Big("1.3");
    big.B = Big("-0.45");
    big.C = Big("0.12");
    big.m_prime = Big("0.37");
    big.omega = Big("7.5");
    big.phi = Big("0.8");
    big.t_c = Big("260");
    lppl::Params p{1.3, -0.45, 0.12, 0.37, 7.5, 0.8, 260.0, Form::power, osc};
    for (double t : {0.0, 57.0, 199.5, 255.0, 259.9}) {
      const double ref = static_cast<double>(lppl::lppl_eval(big, Big(t)));
      CHECK(std::abs(lppl::lppl_eval(p, t) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST_CASE("divergence fit recovers a noiseless logarithmic law") {
  const auto truth = log_params(0.0, 120.0);
  const auto fit = lppl::fit_divergence(sample(truth, 111));
  CHECK(std::abs(fit.t_c - 120.0) <= fit.t_c_step);
  CHECK(fit.A == doctest::Approx(truth.A).epsilon(1e-6));
  CHECK(fit.B == doctest::Approx(truth.B).epsilon(1e-6));
  CHECK(fit.r_squared > 0.999999);
}

TEST_CASE("divergence fit errors") {
  lppl::Observations flat;
  flat.t = Eigen::VectorXd::LinSpaced(40, 0, 39);
  flat.y = Eigen::VectorXd::Constant(40, 3.0);
  CHECK_THROWS_WITH_AS(lppl::fit_divergence(flat), doctest::Contains("singular"), Error);
  const auto obs = sample(log_params(0.0, 120.0), 111);
  lppl::FitConfig cfg;
  cfg.t_c_grid = lppl::Grid{50.0, 100.0, 20};
  CHECK_THROWS_AS(lppl::fit_divergence(obs, cfg), Error);
  cfg.t_c_grid = lppl::Grid{150.0, 200.0, 0};
  CHECK_THROWS_AS(lppl::fit_divergence(obs, cfg), Error);
  CHECK_THROWS_AS(lppl::fit_divergence(sample(log_params(0.0, 120.0), 15)), Error);
}

TEST_CASE("power form with tiny exponent reproduces a log-form critical time") {
  const auto obs = sample(log_params(0.0, 120.0), 111);
  lppl::FitConfig cfg;
  cfg.form = Form::power;
  cfg.m_prime_grid = lppl::Grid{1e-3, 1e-3, 1};
  const auto fit = lppl::fit_divergence(obs, cfg);
  CHECK(std::abs(fit.t_c - 120.0) <= fit.t_c_step);
}

TEST_CASE("oscillation fit against the true divergence") {
  const auto truth = log_params(0.1, 200.0);
  const auto obs = sample(truth, 181);
  lppl::DivergenceFit div;
  div.A = truth.A;
  div.B = truth.B;
  div.t_c = truth.t_c;
  div.r_squared = 1.0;
  const auto osc = lppl::fit_oscillation(obs, div);
  CHECK(std::abs(osc.omega - 10.0) < 1e-3);
  CHECK(std::abs(std::remainder(osc.phi - 1.0, 2.0 * M_PI)) < 1e-3);
  CHECK(std::abs(osc.C - 0.1) < 1e-3);
  CHECK(std::abs(osc.t_c - 200.0) < 1e-2);

  lppl::FitConfig narrow;
  narrow.omega_grid = lppl::Grid{12.0, 25.0, 60};
  narrow.refine_points = 0;
  narrow.polish = false;
  lppl::FitConfig wide = narrow;
  wide.omega_grid = lppl::Grid{4.0, 25.0, 100};
  CHECK(lppl::fit_oscillation(obs, div, narrow).rss > lppl::fit_oscillation(obs, div, wide).rss);
}

TEST_CASE("null oscillation is statistically zero") {
  // At fixed (t_c, omega) the amplitude error is a plain regression error, so
  // |C| < 3 stderr should hold for nearly every noise draw.
  lppl::FitConfig fixed;
  fixed.t_c_grid = lppl::Grid{120.0, 120.0, 1};
  fixed.omega_grid = lppl::Grid{10.0, 10.0, 1};
  std::size_t inside = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto obs = sample(log_params(0.0, 120.0), 111, 0.01, seed);
    const auto div = lppl::fit_divergence(obs);
    const auto osc = lppl::fit_oscillation(obs, div, fixed);
    if (std::abs(osc.C) < 3.0 * osc.C_stderr) ++inside;
    // Searching the grid picks the largest spurious amplitude, which stays small.
    worst = std::max(worst, std::abs(lppl::fit_oscillation(obs, div).C));
  }
  CHECK(inside >= 95);
  CHECK(worst < 0.05);
}

TEST_CASE("oscillation fit needs a real divergence") {
  const auto obs = sample(log_params(0.0, 120.0), 111);
  lppl::DivergenceFit div;
  div.A = 1.0;
  div.B = 0.0;
  div.t_c = 120.0;
  CHECK_THROWS_AS(lppl::fit_oscillation(obs, div), Error);
}

TEST_CASE("split fit on a consistent and a displaced synthetic") {
  const auto truth = log_params(0.02, 200.0);
  const auto same = lppl::split_fit(sample(truth, 191));
  CHECK(std::abs(same.gap) < same.divergence.t_c_step);

  // Divergence critical at 200, oscillation critical at 210.
  lppl::Observations obs = sample(log_params(0.0, 200.0), 191);
  for (Eigen::Index i = 0; i < obs.t.size(); ++i) {
    const double g = std::log((200.0 - obs.t[i]) / 200.0);
    obs.y[i] = 1.0 - 0.3 * g * (1.0 + 0.05 * std::cos(10.0 * std::log((210.0 - obs.t[i]) / 210.0) + 1.0));
  }
  const auto shifted = lppl::split_fit(obs);
  INFO("gap " << shifted.gap);
  // Few log-periodic cycles fit in the window, so t_c_osc is identified to a few units.
  CHECK(std::abs(shifted.gap + 10.0) < 3.0);
}

TEST_CASE("pure noise is low confidence") {
  std::size_t low = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    lppl::Observations obs;
    obs.t = Eigen::VectorXd::LinSpaced(120, 0, 119);
    obs.y = (1.0 + 0.01 * oracle::gaussian(120, seed).array()).matrix();
    const auto r = lppl::split_fit(obs);
    CHECK(std::isfinite(r.gap));
    if (r.low_confidence) ++low;
  }
  CHECK(low == 10);
}

TEST_CASE("full fit nests the split fit") {
  const auto obs = sample(log_params(0.05, 200.0), 191);
  const auto full = lppl::full_fit(obs);
  CHECK(full.rss <= split_rss(lppl::split_fit(obs), obs) + 1e-12);
  CHECK(std::abs(full.params.t_c - 200.0) <= full.t_c_cell);
  CHECK(std::abs(full.params.omega - 10.0) <= full.omega_cell);
}

TEST_CASE("power-form exponent stays in the admissible range") {
  lppl::Params p{1.0, -0.2, 0.05, 0.4, 9.0, 0.5, 180.0, Form::power, Oscillation::cosine};
  lppl::FitConfig cfg;
  cfg.form = Form::power;
  cfg.m_prime_grid = lppl::Grid{0.05, 0.95, 19};
  cfg.omega_grid = lppl::Grid{4.0, 25.0, 43};
  cfg.t_c_points = 60;
  const auto fit = lppl::full_fit(sample(p, 160), cfg);
  CHECK(fit.params.m_prime > 0.0);
  CHECK(fit.params.m_prime < 1.0);
  CHECK(std::abs(fit.params.m_prime - 0.4) < 0.05);
}

TEST_CASE("affine and time-translation covariance") {
  lppl::Params p{1.0, -0.2, 0.05, 0.4, 9.0, 0.5, 180.0, Form::power, Oscillation::cosine};
  lppl::FitConfig cfg;
  cfg.form = Form::power;
  cfg.m_prime_grid = lppl::Grid{0.05, 0.95, 19};
  cfg.omega_grid = lppl::Grid{4.0, 25.0, 43};
  cfg.t_c_points = 60;
  const auto obs = sample(p, 160);
  const auto base = lppl::full_fit(obs, cfg);

  auto scaled = obs;
  scaled.y = (2.5 * obs.y.array() + 4.0).matrix();
  const auto s = lppl::full_fit(scaled, cfg);
  CHECK(s.params.A == doctest::Approx(2.5 * base.params.A + 4.0).epsilon(1e-6));
  CHECK(s.params.B == doctest::Approx(2.5 * base.params.B).epsilon(1e-6));
  CHECK(s.params.C == doctest::Approx(base.params.C).epsilon(1e-6));
  CHECK(s.params.omega == doctest::Approx(base.params.omega).epsilon(1e-6));
  CHECK(s.params.m_prime == doctest::Approx(base.params.m_prime).epsilon(1e-6));
  CHECK(s.params.t_c == doctest::Approx(base.params.t_c).epsilon(1e-8));

  auto later = p;
  later.t_c += 40.0;
  const auto moved = lppl::full_fit(sample(later, 160, 0.0, 0, 40.0), cfg);
  CHECK(std::abs(moved.params.t_c - base.params.t_c - 40.0) < 1e-3);
  CHECK(std::abs(moved.params.omega - base.params.omega) < 1e-4);
}

TEST_CASE("enlarging the grid never raises the optimum") {
  const auto obs = sample(log_params(0.05, 200.0), 191, 0.005, 3);
  lppl::FitConfig small;
  small.refine_points = 0;
  small.polish = false;
  small.t_c_grid = lppl::Grid{195.0, 215.0, 41};
  small.omega_grid = lppl::Grid{6.0, 14.0, 33};
  lppl::FitConfig big = small;
  big.t_c_grid = lppl::Grid{191.0, 235.0, 89};
  big.omega_grid = lppl::Grid{4.0, 25.0, 85};
  CHECK(lppl::full_fit(obs, big).rss <= lppl::full_fit(obs, small).rss);
  CHECK(lppl::fit_divergence(obs, big).rss <= lppl::fit_divergence(obs, small).rss);
}

TEST_CASE("gap rules") {
  lppl::TrackConfig cfg;
  auto a = lppl::assess_gaps({9, 6, 4, 6, 9}, {}, cfg);
  CHECK(!a.converged);
  CHECK(a.near_to_crash == std::vector<std::size_t>{2});

  a = lppl::assess_gaps({20, 15, 10, 7, 4}, {}, cfg);
  CHECK(a.converged);
  CHECK(*a.flagged_at == 4);
  CHECK(!lppl::assess_gaps({20, 15, 10, 7, 6}, {}, cfg).converged);
  CHECK(!lppl::assess_gaps({20, 15, 10, 7, 4}, {true, true, false, true, true}, cfg).converged);
  CHECK(lppl::assess_gaps({-20, 15, -10, 7, -4}, {}, cfg).converged);

  // A single upward wobble breaks the strict rule but not the trend rule.
  const std::vector<double> wobbly{12, 8, 3, 4.5, 2};
  CHECK(lppl::assess_gaps(wobbly, {}, cfg).converged);
  cfg.rule = lppl::ConvergenceRule::strict;
  CHECK(!lppl::assess_gaps(wobbly, {}, cfg).converged);
  CHECK(lppl::assess_gaps({12, 8, 3, 3.5, 2}, {}, cfg).converged);
  CHECK_THROWS_AS(lppl::assess_gaps({1, 2}, {true}, cfg), Error);
}

TEST_CASE("track needs enough windows") {
  const auto obs = sample(log_params(0.05, 200.0), 120);
  lppl::TrackConfig cfg;
  cfg.window_length = 110;
  cfg.step = 5;
  CHECK_THROWS_WITH_AS(lppl::crash_risk_track(TimeSeries::from_values(obs.y), cfg), doctest::Contains("insufficient"),
                       Error);
}
