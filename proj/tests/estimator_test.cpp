#include <doctest.h>

#include <cmath>

#include "oracles.h"
#include "peerfx/error.h"
#include "peerfx/estimator.h"
#include "peerfx/parallel.h"

using namespace peerfx;

namespace {

struct SmallPanel {
  Frame frame;
  std::vector<int> player, week;  // dense codes for the dummy oracle
};

// Unbalanced panel with random gaps; every player and week keeps a row.
SmallPanel small_panel(Rng& rng, int players, int weeks, double keep) {
  std::vector<PlayerId> ids;
  std::vector<WeekIndex> ws;
  SmallPanel out;
  for (int p = 0; p < players; ++p) {
    for (int w = 0; w < weeks; ++w) {
      if (w != p % weeks && p != w % players && !rng.bernoulli(keep)) continue;
      ids.push_back(PlayerId{static_cast<std::uint64_t>(100 + 3 * p)});
      ws.push_back(static_cast<WeekIndex>(40 + w));
      out.player.push_back(p);
      out.week.push_back(w);
    }
  }
  const std::size_t n = ids.size();
  std::vector<double> alpha(static_cast<std::size_t>(players)), delta(static_cast<std::size_t>(weeks));
  for (auto& a : alpha) a = rng.normal();
  for (auto& d : delta) d = rng.normal();
  std::vector<double> y(n), x(n), z(n), w(n), x2(n), z2(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double fe = alpha[static_cast<std::size_t>(out.player[r])] + delta[static_cast<std::size_t>(out.week[r])];
    const double u = rng.normal();
    z[r] = rng.normal() + 0.3 * fe;
    z2[r] = rng.normal();
    w[r] = rng.normal();
    x[r] = 0.8 * z[r] + 0.5 * u + fe + 0.2 * w[r];
    x2[r] = 0.6 * z2[r] - 0.3 * z[r] + 0.4 * u;
    y[r] = 0.3 * x[r] - 0.2 * x2[r] + 0.5 * w[r] + fe + u + 0.5 * rng.normal();
  }
  out.frame = Frame(ids, ws);
  out.frame.set_column("y", y);
  out.frame.set_column("x", x);
  out.frame.set_column("x2", x2);
  out.frame.set_column("z", z);
  out.frame.set_column("z2", z2);
  out.frame.set_column("w", w);
  return out;
}

Eigen::MatrixXd columns(const Frame& f, std::initializer_list<const char*> names) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(f.rows()), static_cast<Eigen::Index>(names.size()));
  Eigen::Index c = 0;
  for (const char* name : names) {
    const auto col = f.column(name);
    for (std::size_t r = 0; r < f.rows(); ++r) m(static_cast<Eigen::Index>(r), c) = col[r];
    ++c;
  }
  return m;
}

Eigen::VectorXd column(const Frame& f, const char* name) { return columns(f, {name}).col(0); }

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Exact-fraction sandwich for the fixture below, rounded once to double.
constexpr double kFixtureCoef[2] = {0.6368630462096887, 1.2871701800921402};
constexpr double kFixtureVcov[4] = {0.00760644738658435, 0.006518602100607771, 0.006518602100607771,
                                    0.005923193106577063};
constexpr double kFixtureResid[8] = {0.01955186374424124, -0.14582577132486388, -0.07148541114058356,
                                     0.088796593606031,   0.13441993578109732,  0.09389222392852158,
                                     -0.6665991902834008, 0.5472497556889572};

Frame fixture_frame() {
  const std::vector<double> x1{0.5, 1.25, -0.75, 2, 0.1, -1.5, 0.8, 1.1};
  const std::vector<double> y{1.3, 2.1, -0.4, 3.3, 0.9, -1.2, 1.0, 2.6};
  const std::vector<std::uint64_t> g{0, 0, 1, 1, 1, 2, 2, 0};
  std::vector<PlayerId> players;
  for (auto v : g) players.push_back(PlayerId{v + 7});
  std::vector<WeekIndex> weeks{1, 2, 3, 4, 5, 6, 7, 8};
  Frame f(players, weeks);
  f.set_column("y", y);
  f.set_column("x1", x1);
  return f;
}

}  // namespace

TEST_CASE("three-cluster sandwich matches the hand computation") {
  Eigen::MatrixXd x(8, 2);
  const double x1[8] = {0.5, 1.25, -0.75, 2, 0.1, -1.5, 0.8, 1.1};
  for (int r = 0; r < 8; ++r) x.row(r) << 1.0, x1[r];
  const std::vector<std::uint32_t> ids{0, 0, 1, 1, 1, 2, 2, 0};
  const auto v = clustered_vcov(std::span<const double>(kFixtureResid, 8), x, ids);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(v(k / 2, k % 2) - kFixtureVcov[k]) < 1e-12);

  DesignSpec spec;
  spec.endogenous = {"x1"};
  spec.fixed_effects = FixedEffects::None;
  spec.intercept = true;
  const auto fit = ols_fit(spec, fixture_frame());
  const auto i1 = fit.index("x1");
  const auto i0 = fit.index("(intercept)");
  CHECK(std::abs(fit.coef[i0] - kFixtureCoef[0]) < 1e-12);
  CHECK(std::abs(fit.coef[i1] - kFixtureCoef[1]) < 1e-12);
  CHECK(std::abs(fit.vcov(i0, i0) - kFixtureVcov[0]) < 1e-12);
  CHECK(std::abs(fit.vcov(i1, i1) - kFixtureVcov[3]) < 1e-12);
  CHECK(std::abs(fit.vcov(i0, i1) - kFixtureVcov[1]) < 1e-12);
  CHECK(fit.n_clusters == 3);
}

TEST_CASE("one cluster is rejected") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 1);
  const std::vector<double> e{1, -1, 2, -2};
  const std::vector<std::uint32_t> ids{5, 5, 5, 5};
  CHECK_THROWS_AS(clustered_vcov(e, x, ids), InsufficientClusters);
}

TEST_CASE("singleton clusters reduce to HC1") {
  Rng rng(2);
  const int n = 40;
  Eigen::MatrixXd x(n, 2);
  std::vector<double> e(n);
  std::vector<std::uint32_t> ids(n);
  for (int r = 0; r < n; ++r) {
    x.row(r) << 1.0, rng.normal();
    e[static_cast<std::size_t>(r)] = rng.normal() * (1 + std::abs(x(r, 1)));
    ids[static_cast<std::size_t>(r)] = static_cast<std::uint32_t>(r);
  }
  const Eigen::MatrixXd bread = (x.transpose() * x).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
  for (int r = 0; r < n; ++r) meat += x.row(r).transpose() * x.row(r) * e[static_cast<std::size_t>(r)] * e[static_cast<std::size_t>(r)];
  const Eigen::MatrixXd hc1 = bread * meat * bread * (double(n) / (n - 2));
  const Eigen::MatrixXd cr1 = clustered_vcov(e, x, ids);
  // CR1 carries G/(G-1) * (N-1)/(N-K); HC1 carries N/(N-K).
  const double ratio = (double(n) / (n - 1)) * (double(n - 1) / (n - 2)) / (double(n) / (n - 2));
  CHECK(max_abs(cr1 - hc1 * ratio) < 1e-12);
}

TEST_CASE("homoskedastic errors give nearly classical standard errors") {
  Rng rng(12);
  const int n = 10000;
  std::vector<PlayerId> players(n);
  std::vector<WeekIndex> weeks(n, 0);
  std::vector<double> x(n), y(n);
  for (int r = 0; r < n; ++r) {
    players[static_cast<std::size_t>(r)] = PlayerId{static_cast<std::uint64_t>(r)};
    x[static_cast<std::size_t>(r)] = rng.normal();
    y[static_cast<std::size_t>(r)] = 0.4 * x[static_cast<std::size_t>(r)] + rng.normal();
  }
  Frame f(players, weeks);
  f.set_column("x", x);
  f.set_column("y", y);
  DesignSpec spec;
  spec.endogenous = {"x"};
  spec.fixed_effects = FixedEffects::None;
  spec.intercept = true;
  const auto fit = ols_fit(spec, f);
  double ssr = 0, sxx = 0, mx = 0;
  for (double v : x) mx += v / n;
  for (int r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    const double e = y[i] - fit.estimate("x") * x[i] - fit.estimate("(intercept)");
    ssr += e * e;
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double classical = std::sqrt(ssr / (n - 2) / sxx);
  CHECK(std::abs(fit.se("x") / classical - 1.0) < 0.1);
}

TEST_CASE("within OLS equals the dummy-variable regression") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sp = small_panel(rng, 3 + static_cast<int>(rng.below(12)), 3 + static_cast<int>(rng.below(8)), 0.7);
    const Eigen::MatrixXd x = columns(sp.frame, {"x", "w"});
    const Eigen::VectorXd y = column(sp.frame, "y");
    for (auto fe : {FixedEffects::Both, FixedEffects::Player, FixedEffects::Week}) {
      DesignSpec spec;
      spec.endogenous = {"x", "w"};
      spec.fixed_effects = fe;
      const auto fit = ols_fit(spec, sp.frame);
      const bool players = fe != FixedEffects::Week, weeks = fe != FixedEffects::Player;
      const auto b = oracle::lsdv(x, y, sp.player, sp.week, players, weeks);
      CHECK(std::abs(fit.estimate("x") - b[0]) < 1e-8);
      CHECK(std::abs(fit.estimate("w") - b[1]) < 1e-8);
    }
  }
}

TEST_CASE("just-identified 2SLS equals the closed form") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sp = small_panel(rng, 4 + static_cast<int>(rng.below(10)), 3 + static_cast<int>(rng.below(8)), 0.8);
    DesignSpec spec;
    spec.endogenous = {"x"};
    spec.instruments = {"z"};
    spec.exogenous = {"w"};
    spec.fixed_effects = FixedEffects::None;
    spec.intercept = true;
    const auto fit = tsls_fit(spec, sp.frame);
    const auto n = static_cast<Eigen::Index>(sp.frame.rows());
    Eigen::MatrixXd x(n, 3), z(n, 3);
    x << columns(sp.frame, {"x", "w"}), Eigen::VectorXd::Ones(n);
    z << columns(sp.frame, {"z", "w"}), Eigen::VectorXd::Ones(n);
    const auto b = oracle::iv_closed_form(z, x, column(sp.frame, "y"));
    CHECK(std::abs(fit.estimate("x") - b[0]) < 1e-10);
    CHECK(std::abs(fit.estimate("w") - b[1]) < 1e-10);
    CHECK(std::abs(fit.estimate("(intercept)") - b[2]) < 1e-10);
  }
}

TEST_CASE("2SLS with two-way effects equals the partialled-out closed form") {
  Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const auto sp = small_panel(rng, 4 + static_cast<int>(rng.below(10)), 3 + static_cast<int>(rng.below(8)), 0.8);
    DesignSpec spec;
    spec.endogenous = {"x"};
    spec.instruments = {"z"};
    spec.exogenous = {"w"};
    const auto fit = tsls_fit(spec, sp.frame);
    const auto x = oracle::partial_out(columns(sp.frame, {"x", "w"}), sp.player, sp.week);
    const auto z = oracle::partial_out(columns(sp.frame, {"z", "w"}), sp.player, sp.week);
    const auto y = oracle::partial_out(columns(sp.frame, {"y"}), sp.player, sp.week);
    const auto b = oracle::iv_closed_form(z, x, y.col(0));
    CHECK(std::abs(fit.estimate("x") - b[0]) < 1e-8);
    CHECK(std::abs(fit.estimate("w") - b[1]) < 1e-8);

    // The IV sandwich uses the instruments as scores.
    const Eigen::VectorXd e = y.col(0) - x * b;
    std::vector<std::uint32_t> ids(sp.player.begin(), sp.player.end());
    const Eigen::MatrixXd bread = (z.transpose() * x).inverse();
    const std::vector<double> res(e.data(), e.data() + e.size());
    const auto v = clustered_vcov(res, z, ids, bread);
    CHECK(std::abs(fit.se("x") - std::sqrt(v(0, 0))) < 1e-8);
  }
}

TEST_CASE("two-instrument 2SLS equals the closed form") {
  Rng rng(47);
  const auto sp = small_panel(rng, 12, 8, 0.9);
  DesignSpec spec;
  spec.endogenous = {"x", "x2"};
  spec.instruments = {"z", "z2"};
  spec.fixed_effects = FixedEffects::None;
  spec.intercept = true;
  const auto fit = tsls_fit(spec, sp.frame);
  const auto n = static_cast<Eigen::Index>(sp.frame.rows());
  Eigen::MatrixXd x(n, 3), z(n, 3);
  x << columns(sp.frame, {"x", "x2"}), Eigen::VectorXd::Ones(n);
  z << columns(sp.frame, {"z", "z2"}), Eigen::VectorXd::Ones(n);
  const auto b = oracle::iv_closed_form(z, x, column(sp.frame, "y"));
  CHECK(std::abs(fit.estimate("x") - b[0]) < 1e-10);
  CHECK(std::abs(fit.estimate("x2") - b[1]) < 1e-10);
  CHECK(fit.first_stages.size() == 2);
}

TEST_CASE("collinear regressors are named") {
  Rng rng(5);
  auto sp = small_panel(rng, 6, 5, 1.0);
  const auto x = sp.frame.column("x");
  std::vector<double> twice(x.begin(), x.end());
  for (auto& v : twice) v *= 2;
  sp.frame.set_column("x_twice", twice);
  DesignSpec spec;
  spec.endogenous = {"x", "x_twice"};
  try {
    ols_fit(spec, sp.frame);
    FAIL("expected RankDeficient");
  } catch (const RankDeficient& e) {
    CHECK(e.columns() == std::vector<std::string>{"x_twice"});
  }
  // A player-constant column vanishes under player effects.
  std::vector<double> constant(sp.frame.rows());
  for (std::size_t r = 0; r < constant.size(); ++r) constant[r] = static_cast<double>(raw(sp.frame.players()[r]));
  sp.frame.set_column("c", constant);
  spec.endogenous = {"x", "c"};
  CHECK_THROWS_AS(ols_fit(spec, sp.frame), RankDeficient);
}

TEST_CASE("an orthogonal instrument is weak") {
  const std::size_t n = 40;
  std::vector<PlayerId> players(n);
  std::vector<WeekIndex> weeks(n, 0);
  std::vector<double> x(n), z(n), y(n);
  for (std::size_t r = 0; r < n; ++r) {
    players[r] = PlayerId{r % 5};
    x[r] = (r % 2 == 0) ? 1.0 : -1.0;
    z[r] = (r % 4 < 2) ? 1.0 : -1.0;
    y[r] = 0.1 * static_cast<double>(r % 7);
  }
  Frame f(players, weeks);
  f.set_column("x", x);
  f.set_column("z", z);
  f.set_column("y", y);
  DesignSpec spec;
  spec.endogenous = {"x"};
  spec.instruments = {"z"};
  spec.fixed_effects = FixedEffects::None;
  CHECK_THROWS_AS(tsls_fit(spec, f), WeakIdentification);
}

TEST_CASE("Anderson-Rubin is the reduced-form Wald and scale invariant") {
  Rng rng(8);
  auto sp = small_panel(rng, 30, 10, 0.9);
  DesignSpec spec;
  spec.endogenous = {"x"};
  spec.instruments = {"z"};
  const auto ar = anderson_rubin(spec, sp.frame);
  DesignSpec rf;
  rf.endogenous = {"z"};
  const auto reduced = ols_fit(rf, sp.frame);
  const double t = reduced.estimate("z") / reduced.se("z");
  CHECK(ar.statistic == doctest::Approx(t * t).epsilon(1e-12));
  CHECK(tsls_fit(spec, sp.frame).ar_stat.value() == doctest::Approx(ar.statistic).epsilon(1e-12));

  const auto z = sp.frame.column("z");
  std::vector<double> scaled(z.begin(), z.end());
  for (auto& v : scaled) v *= 10;
  sp.frame.set_column("z", scaled);
  const auto ar10 = anderson_rubin(spec, sp.frame);
  CHECK(ar10.statistic == doctest::Approx(ar.statistic).epsilon(1e-10));
  CHECK(ar10.reduced_form_coef == doctest::Approx(ar.reduced_form_coef / 10).epsilon(1e-10));
}

TEST_CASE("heterogeneity fit matches the two-equation oracle and drops dead columns") {
  Rng rng(13);
  auto sp = small_panel(rng, 14, 8, 0.9);
  auto& f = sp.frame;
  f.set_column("x_kp", std::vector<double>(f.column("x").begin(), f.column("x").end()));
  f.set_column("x_of", std::vector<double>(f.column("x2").begin(), f.column("x2").end()));
  f.set_column("z_kp_lag", std::vector<double>(f.column("z").begin(), f.column("z").end()));
  f.set_column("z_of_lag", std::vector<double>(f.column("z2").begin(), f.column("z2").end()));
  const auto fit = heterogeneity_fit(f);
  const auto x = oracle::partial_out(columns(f, {"x_kp", "x_of"}), sp.player, sp.week);
  const auto z = oracle::partial_out(columns(f, {"z_kp_lag", "z_of_lag"}), sp.player, sp.week);
  const auto y = oracle::partial_out(columns(f, {"y"}), sp.player, sp.week);
  const auto b = oracle::iv_closed_form(z, x, y.col(0));
  CHECK(std::abs(fit.estimate("x_kp") - b[0]) < 1e-8);
  CHECK(std::abs(fit.estimate("x_of") - b[1]) < 1e-8);

  const auto ols = heterogeneity_fit(f, HeterogeneityEstimator::Ols);
  const auto bo = oracle::lsdv(columns(f, {"x_kp", "x_of"}), column(f, "y"), sp.player, sp.week);
  CHECK(std::abs(ols.estimate("x_kp") - bo[0]) < 1e-8);

  f.set_column("x_of", std::vector<double>(f.rows(), 0.0));
  const auto dropped = heterogeneity_fit(f);
  CHECK(dropped.dropped_terms == std::vector<std::string>{"x_of"});
  CHECK(dropped.terms == std::vector<std::string>{"x_kp"});
  CHECK_THROWS_AS(dropped.index("x_of"), NotFound);
}

TEST_CASE("playtime fit is OLS with HC1 errors and drops constants") {
  Rng rng(19);
  const std::size_t n = 300;
  std::vector<PlayerId> players(n);
  std::vector<WeekIndex> weeks(n, 0);
  std::map<std::string, std::vector<double>> cols;
  for (const auto& name : playtime_covariates()) cols[name].resize(n);
  for (const char* name : {"log_playtime", "kp_purchase", "of_purchase", "no_friend_purchase"}) cols[name].resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    players[r] = PlayerId{r + 1};
    const auto kind = rng.below(3);
    cols["kp_purchase"][r] = kind == 0;
    cols["of_purchase"][r] = kind == 1 && rng.bernoulli(0.5);
    cols["no_friend_purchase"][r] = kind == 2;
    cols["num_games"][r] = static_cast<double>(rng.poisson(20));
    cols["num_groups"][r] = static_cast<double>(rng.poisson(4));
    cols["start_week"][r] = static_cast<double>(rng.below(100));
    cols["num_friends"][r] = static_cast<double>(rng.poisson(3));
    cols["owns_smb"][r] = 1.0;
    cols["owns_nv"][r] = rng.bernoulli(0.3);
    cols["log_playtime"][r] = 2.0 + 0.5 * cols["no_friend_purchase"][r] + 0.01 * cols["num_games"][r] +
                             rng.normal() * (1 + cols["kp_purchase"][r]);
  }
  Frame f(players, weeks);
  for (auto& [name, values] : cols) f.set_column(name, values);

  const auto fit = playtime_fit(f, 4);
  CHECK(fit.dropped_terms == std::vector<std::string>{"owns_smb"});
  const std::vector<const char*> names{"kp_purchase", "of_purchase", "no_friend_purchase", "num_games", "num_groups",
                                       "start_week",  "num_friends", "owns_nv"};
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size() + 1));
  for (std::size_t c = 0; c < names.size(); ++c) {
    for (std::size_t r = 0; r < n; ++r) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cols[names[c]][r];
  }
  x.col(x.cols() - 1).setOnes();
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) y[static_cast<Eigen::Index>(r)] = cols["log_playtime"][r];
  const Eigen::MatrixXd bread = (x.transpose() * x).inverse();
  const Eigen::VectorXd b = bread * x.transpose() * y;
  const Eigen::VectorXd e = y - x * b;
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) meat += x.row(r).transpose() * x.row(r) * e[r] * e[r];
  const double k = static_cast<double>(x.cols());
  const Eigen::MatrixXd hc1 = bread * meat * bread * (double(n) / (double(n) - k));
  for (std::size_t c = 0; c < names.size(); ++c) {
    CHECK(std::abs(fit.estimate(names[c]) - b[static_cast<Eigen::Index>(c)]) < 1e-10);
    CHECK(std::abs(fit.se(names[c]) - std::sqrt(hc1(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)))) < 1e-10);
  }
  CHECK(playtime_fit(f, 1).terms.front() == "kp_purchase");
  CHECK(playtime_fit(f, 3).terms.front() == "no_friend_purchase");
}

TEST_CASE("fits are identical across thread counts") {
  Rng rng(77);
  const auto sp = small_panel(rng, 3000, 20, 0.8);
  DesignSpec spec;
  spec.endogenous = {"x"};
  spec.instruments = {"z"};
  spec.exogenous = {"w"};
  set_thread_count(1);
  const auto one = tsls_fit(spec, sp.frame);
  set_thread_count(4);
  const auto four = tsls_fit(spec, sp.frame);
  set_thread_count(0);
  CHECK(one.coef == four.coef);
  CHECK(one.vcov == four.vcov);
  CHECK(*one.ar_stat == *four.ar_stat);
}

TEST_CASE("single-instrument 2SLS is the reduced form over the first stage") {
  Rng rng(23);
  const auto sp = small_panel(rng, 40, 12, 0.8);
  DesignSpec iv;
  iv.endogenous = {"x"};
  iv.instruments = {"z"};
  const auto fit = tsls_fit(iv, sp.frame);
  DesignSpec rf;
  rf.endogenous = {"z"};
  DesignSpec fs = rf;
  fs.outcome = "x";
  const double ratio = ols_fit(rf, sp.frame).estimate("z") / ols_fit(fs, sp.frame).estimate("z");
  CHECK(std::abs(fit.estimate("x") - ratio) < 1e-10);
  REQUIRE(fit.first_stages.size() == 1);
  CHECK(fit.first_stages[0].estimate("z") == doctest::Approx(ols_fit(fs, sp.frame).estimate("z")).epsilon(1e-12));
}

TEST_CASE("scaling the outcome scales coefficients and standard errors") {
  Rng rng(29);
  auto sp = small_panel(rng, 30, 10, 0.8);
  DesignSpec spec;
  spec.endogenous = {"x"};
  spec.instruments = {"z"};
  spec.exogenous = {"w"};
  const auto base = tsls_fit(spec, sp.frame);
  const auto y = sp.frame.column("y");
  std::vector<double> scaled(y.begin(), y.end());
  for (auto& v : scaled) v *= -3.5;
  sp.frame.set_column("y", scaled);
  const auto fit = tsls_fit(spec, sp.frame);
  for (std::size_t k = 0; k < base.terms.size(); ++k) {
    CHECK(fit.coef[static_cast<Eigen::Index>(k)] == doctest::Approx(-3.5 * base.coef[static_cast<Eigen::Index>(k)]).epsilon(1e-10));
    CHECK(fit.se(k) == doctest::Approx(3.5 * base.se(k)).epsilon(1e-10));
  }
}

TEST_CASE("reported covariances are positive semidefinite") {
  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sp = small_panel(rng, 20, 8, 0.8);
    DesignSpec spec;
    spec.endogenous = {"x", "x2"};
    spec.instruments = {"z", "z2"};
    spec.exogenous = {"w"};
    const auto fit = tsls_fit(spec, sp.frame);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.vcov);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
  }
}
