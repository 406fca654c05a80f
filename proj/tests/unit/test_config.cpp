#include "doctest.h"

#include "distgeom/config.hpp"
#include "distgeom/errors.hpp"

#include <string>

using namespace distgeom;

namespace {

const char* kBase = R"(schema = 1
experiment = "cone"
name = "t"

[cone]
A = 0.5
radius = 1_000

[net]
eps0 = 0.05
levels = 8
list = [1, 2.5,
        -3e-2]

[[psi]]
kind = "bump"
center = [0.0, 0.0]

[[psi]]
kind = "plateau"
)";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parse the supported subset") {
  const Config c = parse_config(kBase);
  CHECK(c.string("experiment") == "cone");
  CHECK(c.number("cone.A") == 0.5);
  CHECK(c.integer("cone.radius") == 1000);
  CHECK(c.numbers("net.list") == std::vector<double>{1.0, 2.5, -0.03});
  CHECK(c.tables("psi").size() == 2);
  CHECK(c.number_or("net.ratio", 0.5) == 0.5);
  CHECK(c.hash.size() == 64);
}

TEST_CASE("hash ignores layout and key order but not values") {
  const std::string reordered = R"(name = "t"   # comment
experiment = "cone"
schema = 1
[net]
levels = 8
list = [1, 2.5, -3e-2]
eps0 = 0.05
[cone]
radius = 1_000
A = 0.5
[[psi]]
center = [0.0, 0.0]
kind = "bump"
[[psi]]
kind = "plateau"
)";
  const std::string h = parse_config(kBase).hash;
  CHECK(parse_config(reordered).hash == h);
  std::string changed = kBase;
  changed.replace(changed.find("A = 0.5"), 7, "A = 0.50");
  CHECK(parse_config(changed).hash != h);
}

TEST_CASE("errors name the field or the line") {
  const Config c = parse_config(kBase);
  try {
    c.number("cone.B");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cone.B") != std::string::npos);
  }
  CHECK_THROWS_AS(c.number("experiment"), ConfigError);
  CHECK(error_of("schema = 1\nx = \n").find("config:2:") != std::string::npos);
  CHECK(error_of("schema = 1\n[a]\nb = {c = 1}\n").find("config:3:") != std::string::npos);
  CHECK_FALSE(error_of("schema = 1\nx = 1\nx = 2\n").empty());
  CHECK_FALSE(error_of("x = 1\n").empty());
  CHECK_FALSE(error_of("schema = 2\n").empty());
}

TEST_CASE("sha256 of a known string") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
