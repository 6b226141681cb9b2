#include "doctest.h"

#include "ddnet/error.hpp"
#include "ddnet/panel.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace ddnet;

namespace {

Panel parse(const std::string& text) {
  std::istringstream in(text);
  return read_panel_csv(in);
}

Panel one_series(std::vector<double> values) {
  std::vector<int> years;
  for (std::size_t t = 0; t < values.size(); ++t) years.push_back(2000 + static_cast<int>(t));
  Panel p({"A"}, {"OC"}, years);
  for (std::size_t t = 0; t < values.size(); ++t) p.at(0, 0, t) = values[t];
  return p;
}

}  // namespace

TEST_SUITE("paneldata") {

TEST_CASE("minimal long csv fills a 2x1x2 panel") {
  auto p = parse("country,year,variable,value\nA,2000,OC,1\nA,2001,OC,2\nB,2000,OC,3\nB,2001,OC,4\n");
  CHECK(p.n_units() == 2);
  CHECK(p.n_variables() == 1);
  CHECK(p.n_periods() == 2);
  CHECK(p.at(1, 0, 1) == 4.0);
}

TEST_CASE("absent observation is NaN") {
  auto p = parse("country,year,variable,value\nUSA,1999,OC,1\nUSA,1999,GasC,2\nFRA,1999,OC,3\n");
  CHECK(std::isnan(p.at(p.unit_index("FRA"), p.variable_index("GasC"), 0)));
}

TEST_CASE("duplicate observation names both lines") {
  try {
    parse("country,year,variable,value\nUSA,2000,OC,1\nUSA,2001,OC,2\nUSA,2000,OC,5\n");
    FAIL("expected a conflict");
  } catch (const ConflictError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("lines 2 and 4") != std::string::npos);
  }
}

TEST_CASE("gaps, bad headers and bad numbers are rejected") {
  CHECK_THROWS_AS(parse("country,year,variable,value\nA,2000,OC,1\nA,2002,OC,1\n"), GapError);
  CHECK_THROWS_AS(parse("country,yr,variable,value\nA,2000,OC,1\n"), ParseError);
  CHECK_THROWS_AS(parse("country,year,variable,value\nA,2000,OC,abc\n"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("custom schema and quoted fields") {
  std::istringstream in("iso,yr,var,val\n\"A\",2000,\"OC\",\"1.5\"\n");
  auto p = read_panel_csv(in, CsvSchema{"iso", "yr", "var", "val"});
  CHECK(p.at(0, 0, 0) == 1.5);
}

TEST_CASE("delta log of (100, 110)") {
  auto d = delta_log_transform(one_series({100, 110}));
  REQUIRE(d.n_periods() == 1);
  CHECK(d.at(0, 0, 0) == doctest::Approx(0.0953101798).epsilon(1e-9));
  CHECK(d.years().front() == 2001);
}

TEST_CASE("series with a zero is shifted before logging") {
  // ln(5 + 1e-8) - ln(1e-8), evaluated by hand: 1.6094379 + 18.4206807
  auto d = delta_log_transform(one_series({0, 5}), 1e-8);
  CHECK(d.at(0, 0, 0) == doctest::Approx(20.0301187).epsilon(1e-8));
}

TEST_CASE("missing level zero-fills both affected differences") {
  auto d = delta_log_transform(one_series({100, NAN, 121}));
  CHECK(d.at(0, 0, 0) == 0.0);
  CHECK(d.at(0, 0, 1) == 0.0);
  CHECK(d.imputed(0, 0, 0));
  CHECK(d.imputed(0, 0, 1));
}

TEST_CASE("negative level is a domain error naming series and year") {
  try {
    delta_log_transform(one_series({1, -2, 3}));
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("A:OC") != std::string::npos);
    CHECK(msg.find("2001") != std::string::npos);
  }
  CHECK_THROWS_AS(delta_log_transform(one_series({1, 2}), 0.0), ArgumentError);
}

TEST_CASE("split boundary") {
  CHECK(make_split(10, 0.7).boundary_index == 7);
  CHECK_THROWS_AS(make_split(3, 0.7), SampleSizeError);
  CHECK_THROWS_AS(make_split(10, 1.0), ArgumentError);
}

TEST_CASE("standardize divides by the training SD") {
  auto p = one_series({-1, 1, -1, 1, 4, 4});
  SplitSpec split{0.7, 4};
  const double sd = std::sqrt(4.0 / 3.0);
  auto s = standardize(p, split);
  CHECK(s.scale.divisor.at({"A", "OC"}) == doctest::Approx(sd));
  CHECK(s.panel.at(0, 0, 4) == doctest::Approx(4.0 / sd));

  auto q = one_series({0, 4, 0, 4, 4, 4});
  // sample SD of (0, 4, 0, 4) is sqrt(16/3); rescale so that it is exactly 2
  for (std::size_t t = 0; t < 6; ++t) q.at(0, 0, t) *= 2.0 / std::sqrt(16.0 / 3.0);
  auto sq = standardize(q, split);
  CHECK(sq.scale.divisor.at({"A", "OC"}) == doctest::Approx(2.0).epsilon(1e-12));
  const double value = q.at(0, 0, 1);
  CHECK(sq.panel.at(0, 0, 1) == doctest::Approx(value / 2.0));
}

TEST_CASE("constant training series is flagged degenerate") {
  auto s = standardize(one_series({3, 3, 3, 3, 1, 2}), SplitSpec{0.7, 4});
  CHECK(s.scale.is_degenerate({"A", "OC"}));
  CHECK(s.panel.at(0, 0, 4) == 1.0);
}

TEST_CASE("standardize round trip") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.05);
  Panel p({"A", "B", "C"}, {"OC", "GDP"}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  for (std::size_t u = 0; u < 3; ++u)
    for (std::size_t v = 0; v < 2; ++v)
      for (std::size_t t = 0; t < 10; ++t) p.at(u, v, t) = n(rng);
  auto s = standardize(p, make_split(10, 0.7));
  auto back = unstandardize(s.panel, s.scale);
  for (std::size_t u = 0; u < 3; ++u)
    for (std::size_t v = 0; v < 2; ++v)
      for (std::size_t t = 0; t < 10; ++t) CHECK(std::abs(back.at(u, v, t) - p.at(u, v, t)) < 1e-12);
}

TEST_CASE("cross-section averages") {
  Panel p({"A", "B"}, {"OC"}, {1});
  p.at(0, 0, 0) = 0.1;
  p.at(1, 0, 0) = 0.3;
  auto f = cross_section_averages(p);
  REQUIRE(f.size() == 1);
  CHECK(f.values(0, 0) == doctest::Approx(0.2));

  std::vector<VariableId> vars;
  for (int i = 0; i < 10; ++i) vars.push_back("v" + std::to_string(i));
  Panel wide({"A", "B"}, vars, {1, 2});
  auto g = cross_section_averages(wide, {"v3"});
  int cce = 0, observed = 0;
  for (auto k : g.kinds) (k == FactorKind::OBSERVED ? observed : cce)++;
  CHECK(cce == 9);
  CHECK(observed == 1);

  Panel single({"A"}, {"OC"}, {1, 2, 3});
  for (std::size_t t = 0; t < 3; ++t) single.at(0, 0, t) = double(t) * 0.5;
  auto h = cross_section_averages(single);
  CHECK(h.values.col(0).isApprox(single.series(0, 0)));
}

TEST_CASE("pca factor of a one-factor panel tracks the factor") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  const int T = 60;
  VectorXd f(T);
  for (int t = 0; t < T; ++t) f(t) = n(rng);
  std::vector<int> years(T);
  for (int t = 0; t < T; ++t) years[t] = t;
  Panel p({"A", "B", "C", "D"}, {"OC"}, years);
  for (std::size_t u = 0; u < 4; ++u)
    for (int t = 0; t < T; ++t) p.at(u, 0, t) = (1.0 + 0.5 * double(u)) * f(t) + 0.05 * n(rng);
  auto fs = pca_factors(p, 1, make_split(T, 0.7));
  REQUIRE(fs.size() == 1);
  VectorXd a = fs.values.col(0).array() - fs.values.col(0).mean();
  VectorXd b = f.array() - f.mean();
  CHECK(std::abs(a.dot(b)) / (a.norm() * b.norm()) > 0.99);
}

TEST_CASE("aggregate sums levels over the group") {
  Panel p({"A", "B", "C"}, {"OC"}, {1});
  p.at(0, 0, 0) = 10;
  p.at(1, 0, 0) = 20;
  p.at(2, 0, 0) = 5;
  CHECK(aggregate_series(p, {"A", "B"}, "OC")(0) == 30.0);
  CHECK(aggregate_series(p, {"A", "B", "C"}, "OC")(0) == 35.0);
  // dropping a member gives the total without it
  CHECK(aggregate_series(p, {"B", "C"}, "OC")(0) == 25.0);
  CHECK_THROWS_AS(aggregate_series(p, {"Z"}, "OC"), ArgumentError);
  CHECK_THROWS_AS(aggregate_series(p, {}, "OC"), ArgumentError);
}

TEST_CASE("subset keeps the requested order") {
  Panel p({"A", "B", "C"}, {"OC"}, {1});
  p.at(2, 0, 0) = 7;
  auto s = p.subset_units({"C", "A"});
  CHECK(s.units() == std::vector<CountryId>{"C", "A"});
  CHECK(s.at(0, 0, 0) == 7.0);
}

}  // TEST_SUITE
