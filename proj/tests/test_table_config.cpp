#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "aipw/config.hpp"

using namespace aipw;

namespace {

template <class F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an aipw::Error");
  return Error(ErrorCode::InvalidArgument, "");
}

}  // namespace

TEST_CASE("doubles survive a text round trip") {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(g) * std::pow(10.0, static_cast<double>(i % 40 - 20));
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "NA");
  CHECK(std::isnan(parse_double("NA")));
  CHECK(std::isnan(parse_double("")));
  CHECK(parse_double(format_double(INFINITY)) == INFINITY);
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
}

TEST_CASE("csv quoting and comments") {
  Table t;
  t.comments = {"made by a test"};
  t.header = {"name", "value"};
  t.rows = {{"plain", "1"}, {"with, comma", "2"}, {"with \"quote\"", "3"}};
  std::ostringstream os;
  write_table(os, t);
  CHECK(os.str() == "# made by a test\nname,value\nplain,1\n\"with, comma\",2\n\"with \"\"quote\"\"\",3\n");
  std::istringstream is(os.str());
  const Table back = read_csv(is);
  CHECK(back.comments == t.comments);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column_index("value") == 1);
  CHECK(error_of([&] { back.column_index("nope"); }).code() == ErrorCode::MissingColumn);

  std::ostringstream md;
  write_table(md, t, TableFormat::Markdown);
  CHECK(md.str().find("| name | value |") != std::string::npos);
  CHECK(md.str().find("| --- | --- |") != std::string::npos);
}

TEST_CASE("csv errors carry line numbers") {
  std::istringstream ragged("a,b\n1,2\n3\n");
  const Error e = error_of([&] { read_csv(ragged); });
  CHECK(e.code() == ErrorCode::DataError);
  CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  std::istringstream dup("a,a\n1,2\n");
  CHECK(error_of([&] { read_csv(dup); }).code() == ErrorCode::DataError);
}

TEST_CASE("dataset from table") {
  std::istringstream is("t,y,x\n1,2.5,0.1\n0,,0.2\n1,3,NA\n");
  const Table t = read_csv(is);
  const Error e = error_of([&] { dataset_from_table(t, {}); });
  CHECK(std::string(e.what()).find("row") != std::string::npos);
  std::istringstream good("t,y,x\n1,2.5,0.1\n0,NA,0.2\n1,3,0.3\n");
  const Dataset d = dataset_from_table(read_csv(good), {});
  CHECK(d.size() == 3);
  CHECK(d.complete_cases() == 2);
  CHECK(d.column("x")[2] == 0.3);
}

TEST_CASE("transform syntax round trips") {
  for (const char* text : {"exp 1 0.15", "affine 2 1.5 -3", "ratio 2 1 1", "power 1,0,1,0 0.02 5 3"}) {
    CHECK(format_transform(parse_transform(text)) == text);
  }
  CHECK_THROWS_AS(parse_transform("cube 1"), Error);
  CHECK_THROWS_AS(parse_transform("exp 0 1"), Error);
}

TEST_CASE("committed default config reproduces the built-in design") {
  const RunConfig cfg = load_config(std::string(AIPW_SOURCE_DIR) + "/configs/default.ini");
  REQUIRE(cfg.simulate.has_value());
  const DgpSpec& a = cfg.simulate->spec;
  const DgpSpec b = DgpSpec::default_spec();
  CHECK(a.q == b.q);
  CHECK(a.beta0 == b.beta0);
  CHECK(a.beta == b.beta);
  CHECK(a.sigma == b.sigma);
  CHECK(a.alpha0 == b.alpha0);
  CHECK(a.alpha == b.alpha);
  REQUIRE(a.transforms.size() == b.transforms.size());
  for (std::size_t j = 0; j < a.transforms.size(); ++j) {
    CHECK(format_transform(a.transforms[j]) == format_transform(b.transforms[j]));
  }
  CHECK(cfg.simulate->seed == 20070101);
  CHECK(cfg.simulate->quadrant == Quadrant::CC);
  CHECK(cfg.estimators.ids.size() == 11);
  CHECK(load_config(std::string(AIPW_SOURCE_DIR) + "/configs/mirror.ini").simulate->spec.outcome_terms.size() == 1);
}

TEST_CASE("config validation") {
  CHECK(error_of([] { parse_config("[simulate]\nbogus = 1\n"); }).code() == ErrorCode::ConfigError);
  CHECK(error_of([] { parse_config("[nowhere]\nn = 1\n"); }).code() == ErrorCode::ConfigError);
  CHECK(error_of([] { parse_config("[estimators]\nnames = reg, nope\n"); }).code() == ErrorCode::ConfigError);
  CHECK(error_of([] { parse_config("[simulate]\nquadrant = XX\n"); }).code() == ErrorCode::ConfigError);
  CHECK(error_of([] { parse_config("[estimators]\nlambda = 2\n"); }).code() == ErrorCode::ConfigError);

  const RunConfig c = parse_config("# comment\n[estimators]\nnames = bc\ngamma = opt\n[output]\nformat = md\n");
  REQUIRE(c.estimators.ids.size() == 1);
  CHECK(c.estimators.ids[0] == EstimatorId::BcOpt);
  CHECK(c.output.format == TableFormat::Markdown);
  CHECK(c.hash == fnv1a("# comment\n[estimators]\nnames = bc\ngamma = opt\n[output]\nformat = md\n"));

  const RunConfig d = parse_config("[data]\npath = a.csv\npi = p\n[outcome]\ncolumns = x1, x2\nmode = wls\n", "/base");
  CHECK(d.data->path == std::filesystem::path("/base/a.csv"));
  CHECK(d.data->pi == "p");
  CHECK(d.outcome->basis.columns == std::vector<std::string>{"x1", "x2"});
  CHECK(d.outcome->mode == FitMode::WLS);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("trailing comments and line numbers") {
  const RunConfig c = parse_config("[estimators]\nnames = reg, imp   # two of them\nlevel = 0.9 ; ini style\n");
  CHECK(c.estimators.ids.size() == 2);
  CHECK(c.estimators.level == 0.9);
  const Error e = error_of([] { parse_config("# header\n\n[simulate]\nn = 1000\nbogus = 1\n"); });
  CHECK(std::string(e.what()).find("bogus") != std::string::npos);
}
