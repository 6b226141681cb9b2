#include "doctest.h"

#include "ddnet/error.hpp"
#include "ddnet/synthlab.hpp"

#include <cmath>

using namespace ddnet;

namespace {

// E|corr(x_i, x_d)| for x_i = b u_d + u_i, |b| = scale * U(0.5, 1), by Simpson's rule.
double expected_abs_corr(double scale) {
  const int n = 2000;
  const double a = 0.5, b = 1.0, h = (b - a) / n;
  auto f = [&](double u) { return scale * u / std::sqrt(1.0 + scale * scale * u * u); };
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0 / (b - a);
}

double corr(const VectorXd& x, const VectorXd& y) {
  const VectorXd a = x.array() - x.mean(), b = y.array() - y.mean();
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

TEST_SUITE("synthlab") {

TEST_CASE("same seed gives identical panels") {
  SynthSpec s;
  s.seed = 99;
  auto a = generate_panel(s), b = generate_panel(s);
  for (std::size_t u = 0; u < a.panel.n_units(); ++u) CHECK(a.panel.series(u, 0) == b.panel.series(u, 0));
  CHECK(a.truth == b.truth);
  s.seed = 100;
  CHECK(generate_panel(s).panel.series(3, 0) != a.panel.series(3, 0));
}

TEST_CASE("average follower correlation with the driver") {
  const double target = expected_abs_corr(0.8);
  CHECK(target > 0.5);
  SynthSpec s;
  s.n_periods = 200;
  double avg = 0.0;
  const int panels = 40;
  for (int k = 0; k < panels; ++k) {
    s.seed = 1000 + k;
    auto sp = generate_panel(s);
    const VectorXd d = sp.panel.series(0, 0);
    double acc = 0.0;
    for (std::size_t i = 1; i < sp.panel.n_units(); ++i) acc += std::abs(corr(sp.panel.series(i, 0), d));
    avg += acc / double(sp.panel.n_units() - 1) / panels;
  }
  CHECK(avg > 0.5);
  CHECK(std::abs(avg - target) < 0.02);
}

TEST_CASE("no drivers gives vanishing cross-correlation") {
  SynthSpec s;
  s.n_dominant = 0;
  s.n_periods = 4000;
  auto sp = generate_panel(s);
  CHECK(sp.truth.empty());
  double worst = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j)
      worst = std::max(worst, std::abs(corr(sp.panel.series(i, 0), sp.panel.series(j, 0))));
  CHECK(worst < 0.06);
}

TEST_CASE("loadings are bounded away from zero on a sparsity share of rows") {
  SynthSpec s;
  s.n_units = 41;
  s.n_dominant = 2;
  s.loading_sparsity = 0.5;
  auto sp = generate_panel(s);
  for (int d = 0; d < 2; ++d) {
    int nonzero = 0;
    for (int i = 2; i < 41; ++i) {
      const double b = std::abs(sp.loadings(i, d));
      if (b != 0.0) {
        ++nonzero;
        CHECK(b >= 0.4);
        CHECK(b <= 0.8);
      }
    }
    CHECK(nonzero == 20);
  }
  s.n_dominant = 41;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("selection accuracy conventions") {
  std::set<SeriesId> truth{{"A", "x"}};
  auto exact = selection_accuracy(truth, {{"A", "x"}});
  CHECK(exact.exact);
  CHECK(exact.precision == 1.0);
  CHECK(exact.recall == 1.0);
  CHECK(exact.n_hat_error == 0);
  auto none = selection_accuracy(truth, {});
  CHECK_FALSE(none.exact);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.n_hat_error == 1);
  auto extra = selection_accuracy(truth, {{"A", "x"}, {"B", "x"}});
  CHECK(extra.precision == doctest::Approx(0.5));
  CHECK(extra.recall == 1.0);
}

TEST_CASE("simulation report") {
  SynthSpec s;
  DetectionConfig cfg;
  cfg.selection.method = SelectMethod::OCMT;
  auto one = simulate_detection(s, 1, cfg);
  CHECK(one.trials.size() == 1);

  auto par = simulate_detection(s, 12, cfg, Exec::Parallel);
  auto ser = simulate_detection(s, 12, cfg, Exec::Serial);
  for (int k = 0; k < 12; ++k) CHECK(par.trials[k].detected == ser.trials[k].detected);
  CHECK(par.exact_rate == ser.exact_rate);

  s.n_dominant = 0;
  auto null = simulate_detection(s, 10, cfg);
  CHECK(null.exact_rate >= 0.0);
  CHECK(null.false_positive_rate >= 0.0);
  CHECK(null.false_positive_rate <= 1.0);
}

}  // TEST_SUITE
