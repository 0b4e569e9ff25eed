#include "tubelab/gen.hpp"

#include "tubelab/raster.hpp"
#include "tubelab/structure.hpp"

#include <doctest.h>

#include <cmath>

using namespace tubelab;

namespace {

Vecd vec2(double a, double b) {
  Vecd v(2);
  v << a, b;
  return v;
}

Vecd vec3(double a, double b, double c) {
  Vecd v(3);
  v << a, b, c;
  return v;
}

bool same_family(const TubeFamily& a, const TubeFamily& b) {
  if (a.size() != b.size()) return false;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if ((a.lines[k].x - b.lines[k].x).norm() != 0) return false;
    if ((a.lines[k].v - b.lines[k].v).norm() != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("gen_single") {
  const TubeFamily vertical = gen_single(3, 1.0 / 32, vec2(0, 0));
  CHECK(vertical.size() == 1);
  CHECK(vertical.m == 1);
  CHECK(vertical.lines[0].length() == 1.0);

  const TubeFamily slanted = gen_single(3, 1.0 / 32, vec2(0.5, 0));
  CHECK(slanted.lines[0].length() == doctest::Approx(std::sqrt(1.25)));

  CHECK_THROWS_AS(gen_single(3, 1.0 / 32, vec2(1.0, 0)), std::domain_error);
}

TEST_CASE("gen_bush: common point, separation, capacity") {
  const double delta = 1.0 / 32;
  const Vecd center = vec3(0, 0, 0.5);
  const TubeFamily bush = gen_bush(3, delta, center, 32, 0);
  REQUIRE(bush.size() == 32);
  CHECK(validate_family(bush).valid());

  // Every tube passes through the center.
  for (std::int64_t i = 0; i < bush.size(); ++i)
    CHECK(point_segment_distance(center, bush.lines[static_cast<std::size_t>(i)]) < 1e-12);

  // Pairwise angles at least delta.
  for (std::size_t i = 0; i < bush.lines.size(); ++i)
    for (std::size_t j = i + 1; j < bush.lines.size(); ++j)
      CHECK(angle(bush.lines[i], bush.lines[j]) >= delta - 1e-12);

  // The multiplicity field peaks at the bush size.
  const ScalarField field = multiplicity_field(bush, GridSpec::for_delta(3, delta));
  double peak = 0;
  for (double v : field.values()) peak = std::max(peak, v);
  CHECK(peak == static_cast<double>(bush.size()));

  CHECK(gen_bush(3, delta, center, 1, 0).size() == 1);
  CHECK_THROWS_AS(gen_bush(3, 0.25, center, 100000, 0), std::runtime_error);
}

TEST_CASE("gen_hairbrush: recovery, feet spacing, guards") {
  const double delta = 1.0 / 64;
  const double sigma = 0.25;
  const LineSegd stem(vec2(0, 0), vec2(0, 0));
  const TubeFamily brush = gen_hairbrush(3, delta, stem, sigma, 32, 3);
  REQUIRE(brush.size() == 32);
  CHECK(validate_family(brush).valid());

  // hairbrush() with the generator's window recovers the whole family.
  const TubeFamily recovered = hairbrush(brush, stem, sigma, 1);
  CHECK(recovered.size() == brush.size());

  // Every bristle meets the stem tube.
  for (const LineSegd& l : brush.lines) CHECK(segment_distance(stem, l) <= 2 * delta);

  // Feet spacing along the stem: project each bristle's crossing parameter;
  // at this count/delta each bristle has its own foot.
  std::vector<double> feet;
  for (const LineSegd& l : brush.lines) {
    // Foot solves x_l + v_l t = v_stem t + x_stem, i.e. x_l = -(v_l - v_stem) t.
    const Vecd w = l.v - stem.v;
    feet.push_back(-w.dot(l.x - stem.x) / w.squaredNorm());
  }
  std::sort(feet.begin(), feet.end());
  for (std::size_t i = 0; i + 1 < feet.size(); ++i)
    CHECK((feet[i + 1] - feet[i]) * stem.length() >= delta - 1e-9);

  CHECK_THROWS_AS(gen_hairbrush(3, delta, stem, sigma, 0, 0), std::domain_error);
  CHECK_THROWS_AS(gen_hairbrush(3, delta, stem, delta / 2, 4, 0), std::domain_error);
}

TEST_CASE("gen_slab_family: direction box width") {
  const double delta = 1.0 / 32;
  const double rho = 0.25;
  const TubeFamily fam = gen_slab_family(3, delta, rho, 11);
  CHECK(fam.size() >= 10);
  CHECK(validate_family(fam).valid());
  double w0 = 0, w1 = 0;
  for (const LineSegd& l : fam.lines) {
    w0 = std::max(w0, std::abs(l.v(0)));
    w1 = std::max(w1, std::abs(l.v(1)));
  }
  CHECK(w0 <= 0.5);        // first box dimension ~ 1
  CHECK(w1 * 2 <= 4 * rho);  // second width at most C rho with C = 4
  CHECK(w1 * 2 >= rho / 2);  // and genuinely spread at the rho scale

  // Near-parallel at rho = delta.
  const TubeFamily parallel = gen_slab_family(3, delta, delta, 11);
  double spread = 0;
  for (const LineSegd& l : parallel.lines) spread = std::max(spread, std::abs(l.v(1)));
  CHECK(spread <= delta);

  CHECK_THROWS_AS(gen_slab_family(3, delta, delta / 2, 0), std::domain_error);
}

TEST_CASE("gen_sticky: valid, deterministic, lower union volume than random") {
  const double delta = 1.0 / 32;
  const TubeFamily sticky = gen_sticky(3, delta, 1, 1);
  CHECK(validate_family(sticky).valid());
  CHECK(same_family(sticky, gen_sticky(3, delta, 1, 1)));
  CHECK_FALSE(same_family(sticky, gen_sticky(3, delta, 1, 2)));

  const TubeFamily random = gen_random(3, delta, 1, 1);
  CHECK(sticky.size() == random.size());  // same direction net, m = 1

  const GridSpec spec = GridSpec::for_delta(3, delta);
  const double vol_sticky = indicator_field(sticky, spec).support_measure();
  const double vol_random = indicator_field(random, spec).support_measure();
  CHECK(vol_sticky < 0.8 * vol_random);
}

TEST_CASE("gen_random: valid, deterministic, m positions per direction") {
  const double delta = 1.0 / 16;
  const TubeFamily fam = gen_random(3, delta, 3, 9);
  CHECK(validate_family(fam).valid());
  CHECK(validate_family(fam).max_multiplicity == 3);
  CHECK(same_family(fam, gen_random(3, delta, 3, 9)));
  CHECK_FALSE(same_family(fam, gen_random(3, delta, 3, 10)));
  CHECK_THROWS_AS(gen_random(3, delta, 0, 0), std::domain_error);
}

TEST_CASE("generator spec grammar") {
  const GenSpec spec = GenSpec::parse("bush count=5 c2=0.25");
  CHECK(spec.name == "bush");
  CHECK(spec.get("count", 0) == 5);
  CHECK(spec.get("c2", 0) == 0.25);
  CHECK(spec.canonical() == "bush c2=0.25 count=5");

  CHECK_THROWS_AS(GenSpec::parse(""), std::invalid_argument);
  CHECK_THROWS_AS(GenSpec::parse("bush count"), std::invalid_argument);
  CHECK_THROWS_AS(GenSpec::parse("bush count=abc"), std::invalid_argument);

  CHECK_THROWS_AS(make_family(GenSpec::parse("warp"), 3, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_family(GenSpec::parse("bush sigma=1"), 3, 0.1, 0), std::invalid_argument);

  const TubeFamily bush = make_family(GenSpec::parse("bush count=5 c2=0.25"), 3, 1.0 / 16, 3);
  CHECK(bush.size() == 5);
  const Vecd center = vec3(0, 0, 0.25);
  for (const LineSegd& l : bush.lines) CHECK(point_segment_distance(center, l) < 1e-12);
}

TEST_CASE("every generator passes validation with its declared m") {
  const double delta = 1.0 / 32;
  for (const char* text : {"single v0=0.25", "bush count=16", "hairbrush sigma=0.25 count=16",
                           "slab_family rho=0.25", "sticky m=2", "random m=2"}) {
    const TubeFamily fam = make_family(GenSpec::parse(text), 3, delta, 5);
    INFO(text);
    CHECK(validate_family(fam).valid());
  }
}

TEST_CASE("generators work in n = 4") {
  const double delta = 1.0 / 8;
  for (const char* text : {"single", "bush count=8", "hairbrush sigma=0.25 count=8",
                           "slab_family rho=0.25", "sticky m=1", "random m=1"}) {
    const TubeFamily fam = make_family(GenSpec::parse(text), 4, delta, 5);
    INFO(text);
    CHECK(fam.n == 4);
    CHECK(validate_family(fam).valid());
  }
}
