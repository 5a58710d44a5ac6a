#include "doctest.h"

#include <cmath>

#include "gcl/io.hpp"

TEST_CASE("format_double emits shortest round-tripping decimals") {
  CHECK(gcl::format_double(0.5) == "0.5");
  CHECK(gcl::format_double(-0.0) == "-0");
  CHECK(gcl::format_double(1.0) == "1");
  CHECK(gcl::format_double(0.1) == "0.1");
  for (double v : {3.141592653589793, 1e-300, -2.2250738585072014e-308, 12345.6789,
                   0.30000000000000004}) {
    CHECK(gcl::parse_double(gcl::format_double(v)) == v);
  }
}

TEST_CASE("parse_double / parse_int reject trailing garbage") {
  CHECK(gcl::parse_double("2.5e-3") == doctest::Approx(0.0025));
  CHECK(gcl::parse_int("-42") == -42);
  CHECK_THROWS(gcl::parse_double("1.5x"));
  CHECK_THROWS(gcl::parse_double(""));
  CHECK_THROWS(gcl::parse_double("nanx"));
  CHECK_THROWS(gcl::parse_int("3.5"));
  CHECK_THROWS(gcl::parse_int("12 "));
}

TEST_CASE("fnv1a64 frozen vectors") {
  // Standard FNV-1a 64-bit test vectors.
  CHECK(gcl::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(gcl::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(gcl::fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(gcl::fnv1a64("abc") != gcl::fnv1a64("acb"));
}

TEST_CASE("hex64 formats fixed-width lowercase") {
  CHECK(gcl::hex64(0) == "0000000000000000");
  CHECK(gcl::hex64(0xdeadbeefULL) == "00000000deadbeef");
  CHECK(gcl::hex64(0xffffffffffffffffULL) == "ffffffffffffffff");
}
