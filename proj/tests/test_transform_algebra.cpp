#include <doctest.h>

#include <random>

#include "cskin/transform_algebra.hpp"

using namespace cskin;

namespace {

Params6 random_params(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Params6 p;
  for (std::size_t d = 0; d < kParamsPerBlock; ++d) p[d] = g(rng);
  return p;
}

}  // namespace

TEST_CASE("hat of zero parameters is the zero matrix") {
  const Affine34 a = hat(Params6{});
  for (double x : a.m) CHECK(x == 0.0);
}

TEST_CASE("hat with r = (0,0,1) rotates (1,0,0) to (0,1,0)") {
  Params6 p;
  p.r = {0.0, 0.0, 1.0};
  const Vec3 out = hat(p).apply({1.0, 0.0, 0.0});
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 1.0);
  CHECK(out[2] == 0.0);
}

TEST_CASE("hat acts as r x v + t") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Params6 p = random_params(rng);
    const Params6 q = random_params(rng);
    const Vec3 v = q.r;
    const Vec3 expected = cross(p.r, v);
    const Vec3 out = hat(p).apply(v);
    for (int d = 0; d < 3; ++d) CHECK(out[d] == doctest::Approx(expected[d] + p.t[d]).epsilon(1e-14));
  }
}

TEST_CASE("hat is linear and its 3x3 block is skew-symmetric") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Params6 p = random_params(rng);
    const Params6 q = random_params(rng);
    const double a = u(rng);
    const double b = u(rng);
    Params6 mix;
    for (std::size_t d = 0; d < kParamsPerBlock; ++d) mix[d] = a * p[d] + b * q[d];
    const Affine34 lhs = hat(mix);
    const Affine34 hp = hat(p);
    const Affine34 hq = hat(q);
    for (std::size_t e = 0; e < 12; ++e) CHECK(lhs.m[e] == doctest::Approx(a * hp.m[e] + b * hq.m[e]).epsilon(1e-12));
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(hp(r, c) == -hp(c, r));
    }
  }
}

TEST_CASE("blend_to_transform") {
  std::mt19937_64 rng(5);
  const Params6 p = random_params(rng);

  SUBCASE("zero blendweights give the identity") {
    const std::vector<Params6> theta{p, random_params(rng)};
    const std::vector<double> c{0.0, 0.0};
    CHECK(blend_to_transform(c, theta).m == Affine34::identity().m);
  }
  SUBCASE("single unit blendweight gives I + hat(p)") {
    const std::vector<Params6> theta{p, Params6{}};
    const std::vector<double> c{1.0, 0.0};
    const Affine34 m = blend_to_transform(c, theta);
    Affine34 expected = hat(p);
    for (int d = 0; d < 3; ++d) expected(d, d) += 1.0;
    CHECK(m.m == expected.m);
  }
  SUBCASE("halves of equal transforms equal one full transform") {
    const std::vector<Params6> theta{p, p};
    const std::vector<double> half{0.5, 0.5};
    const std::vector<double> one{1.0, 0.0};
    const Affine34 a = blend_to_transform(half, theta);
    const Affine34 b = blend_to_transform(one, theta);
    for (std::size_t e = 0; e < 12; ++e) CHECK(a.m[e] == doctest::Approx(b.m[e]).epsilon(1e-15));
  }
  SUBCASE("length mismatch") {
    const std::vector<Params6> theta{p};
    const std::vector<double> c{1.0, 2.0};
    CHECK_THROWS_AS(blend_to_transform(c, theta), Error);
  }
}
