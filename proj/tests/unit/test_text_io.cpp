#include "helpers.hpp"

#include "ik/error.hpp"
#include "ik/text_io.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace ik;
using ik::test::random_points;

TEST_CASE("numbers round-trip exactly") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.123456789,
                   std::numeric_limits<double>::min(), std::nextafter(1.0, 2.0)}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(parse_double(" +1.5 ") == 1.5);
  CHECK_THROWS_AS(parse_double("1.5x"), InvalidArgument);
  CHECK_THROWS_AS(parse_double(""), InvalidArgument);
}

TEST_CASE("model file round-trip is bit-exact") {
  const auto data = random_points(40, 6, 17, 1e-3);
  const IKModel m = fit(data, 8, 25, 99);
  std::stringstream ss;
  write_model(ss, m);
  const std::string text = ss.str();
  CHECK(text.rfind("IKM1 psi=8 t=25 dim=6 seed=99\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 8 * 25);

  const IKModel back = read_model(ss);
  CHECK(back == m);
  for (const auto& x : data) CHECK(encode(back, x) == encode(m, x));

  std::stringstream again;
  write_model(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("malformed model files report the line") {
  auto fails_at = [](const std::string& text, std::size_t line) {
    std::istringstream in(text);
    try {
      read_model(in);
    } catch (const ParseError& e) {
      return e.line() == line;
    }
    return false;
  };
  CHECK(fails_at("", 1));
  CHECK(fails_at("IKM2 psi=2 t=1 dim=1 seed=0\n0\n1\n", 1));
  CHECK(fails_at("IKM1 psi=2 t=1 dim=1\n0\n1\n", 1));
  CHECK(fails_at("IKM1 psi=2 t=1 dim=1 seed=0\n0\nabc\n", 3));
  CHECK(fails_at("IKM1 psi=2 t=1 dim=2 seed=0\n0,1\n2\n", 3));
  CHECK(fails_at("IKM1 psi=2 t=2 dim=1 seed=0\n0\n1\n", 3));
}

TEST_CASE("code file round-trip") {
  std::vector<IKCode> codes{{4, {0, 3, 2}}, {4, {1, 1, 1}}};
  std::stringstream ss;
  write_codes(ss, codes);
  CHECK(ss.str() == "IKC1 psi=4 t=3 n=2\n0 3 2\n1 1 1\n");
  CHECK(read_codes(ss) == codes);

  std::istringstream bad("IKC1 psi=4 t=3 n=1\n0 4 2\n");
  CHECK_THROWS_AS(read_codes(bad), ParseError);
  std::istringstream short_row("IKC1 psi=4 t=3 n=1\n0 1\n");
  CHECK_THROWS_AS(read_codes(short_row), ParseError);
}
