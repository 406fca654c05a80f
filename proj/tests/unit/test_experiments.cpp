#include "doctest.h"

#include "distgeom/errors.hpp"
#include "distgeom/experiments.hpp"

using namespace distgeom;

namespace {

const char* kEmbed = R"(schema = 1
experiment = "embed"
name = "embed_small"

[net]
eps0 = 0.2
ratio = 0.5
levels = 4

[checks]
grid_half_width = 0.5

[[cases]]
field = "sin_sum"
kernel_q = 2
)";

}  // namespace

TEST_CASE("a small run passes and is deterministic") {
  const Config cfg = parse_config(kEmbed);
  const RunRecord a = run_experiment(cfg);
  const RunRecord b = run_experiment(cfg);
  CHECK(a.passed());
  CHECK(a.config_hash == cfg.hash);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("net overrides apply") {
  NetOverride ov;
  ov.levels = 3;
  const RunRecord r = run_experiment(parse_config(kEmbed), ov);
  CHECK(r.to_json().dump().find("\"levels\":3") != std::string::npos);
  ov.levels = 1;
  CHECK_THROWS_AS(run_experiment(parse_config(kEmbed), ov), ConfigError);
}

TEST_CASE("unknown experiments are config errors") {
  std::string text = kEmbed;
  text.replace(text.find("\"embed\""), 7, "\"nope\"");
  CHECK_THROWS_AS(run_experiment(parse_config(text)), ConfigError);
}

TEST_CASE("cone weight") {
  CHECK(cone_weight(0.5) == doctest::Approx(2.0 * 3.14159265358979));
  CHECK(cone_weight(1.0) == 0.0);
}
