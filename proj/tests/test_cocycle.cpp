#include <catch2/catch_amalgamated.hpp>

#include "burnside/cocycle.hpp"

using namespace burnside;

namespace {

GeneratorSet rotations() {
  double ang = std::acos(1.0 / 3.0);
  return GeneratorSet({Rotation({1, 0, 0}, ang), Rotation({0, 0, 1}, ang)}, {"ra", "rb"}, true);
}

GeneratorSet linked(double sz, double sx) {
  return GeneratorSet({Twist({0, 0, 1}, sz), Twist({1, 0, 0}, sx)}, {"tz", "tx"}, true);
}

SpherePoint random_point(std::uint64_t& state) {
  double z = 2 * uniform01(state) - 1;
  double phi = 2 * M_PI * uniform01(state);
  double r = std::sqrt(std::max(0.0, 1 - z * z));
  return SpherePoint::project({r * std::cos(phi), r * std::sin(phi), z});
}

TangentVector random_tangent(const SpherePoint& p, std::uint64_t& state) {
  Frame f = frame_at(p);
  double a = 2 * M_PI * uniform01(state);
  double scale = 0.5 + 2 * uniform01(state);
  return TangentVector(p, f.e1 * (scale * std::cos(a)) + f.e2 * (scale * std::sin(a)));
}

}  // namespace

TEST_CASE("psi vanishes for isometries") {
  GeneratorSet s = rotations();
  std::uint64_t state = 5;
  for (int i = 0; i < 100; ++i) {
    SpherePoint x = random_point(state);
    TangentVector v = random_tangent(x, state);
    for (const Letter& l : s.letters()) CHECK(std::fabs(psi(s, l, x, v)) < 1e-12);
  }
}

TEST_CASE("psi of the shear along its fixed direction") {
  GeneratorSet s = linked(2.0, 2.0);
  // at an equator point of the z-twist, e1 maps to e1: zero stretch
  SpherePoint x(1, 0, 0);
  Frame f = frame_at(x);
  CHECK(std::fabs(psi(s, {0, +1}, x, TangentVector(x, f.e1))) < 1e-12);
}

TEST_CASE("psi scale invariance") {
  GeneratorSet s = linked(2.0, -2.0);
  std::uint64_t state = 9;
  for (int i = 0; i < 50; ++i) {
    SpherePoint x = random_point(state);
    TangentVector v = random_tangent(x, state);
    Letter l = s.letters()[uniform_index(state, 4)];
    double base = psi(s, l, x, v);
    // power-of-two rescalings are bit-exact
    CHECK(psi(s, l, x, TangentVector(x, v.dir * 4.0)) == base);
    CHECK(psi(s, l, x, TangentVector(x, v.dir * 0.25)) == base);
    CHECK(psi(s, l, x, TangentVector(x, v.dir * 1024.0)) == base);
    // arbitrary positive factors agree to rounding
    CHECK(std::fabs(psi(s, l, x, TangentVector(x, v.dir * 3.0)) - base) < 1e-13);
  }
  SpherePoint x(0, 1, 0);
  CHECK_THROWS_AS(psi(s, {0, +1}, x, TangentVector(x, Vec3{0, 0, 0})), std::invalid_argument);
}

TEST_CASE("birkhoff identity for rotation words") {
  GeneratorSet s = rotations();
  std::uint64_t state = 13;
  SymbolicWord w = SymbolicWord::random(s, 77);
  SpherePoint x = random_point(state);
  TangentVector v = random_tangent(x, state);
  BirkhoffResult r = birkhoff_derivative_sum(w, x, v, 40);
  CHECK(std::fabs(r.stepwise_mean) < 1e-12);
  CHECK(r.discrepancy < 1e-12);
}

TEST_CASE("birkhoff identity on 500 random tuples") {
  std::vector<GeneratorSet> sets = {rotations(), linked(2.0, -2.0), linked(2.0, 2.0)};
  std::uint64_t state = 21;
  for (int trial = 0; trial < 500; ++trial) {
    const GeneratorSet& s = sets[trial % sets.size()];
    SymbolicWord w = SymbolicWord::random(s, splitmix64(state));
    SpherePoint x = random_point(state);
    TangentVector v = random_tangent(x, state);
    int n = 1 + static_cast<int>(uniform_index(state, 50));
    BirkhoffResult r = birkhoff_derivative_sum(w, x, v, n);
    CHECK(r.discrepancy < 1e-9);
  }
}

TEST_CASE("lyapunov pair of rotation words vanishes") {
  GeneratorSet s = rotations();
  LyapunovReport rep = lyapunov_pair(SymbolicWord::random(s, 3), SpherePoint(0, 1, 0), 500, 3);
  CHECK(std::fabs(rep.lambda1) < 1e-6);
  CHECK(std::fabs(rep.lambda2) < 1e-6);
}

TEST_CASE("area preservation forces a zero lambda sum") {
  GeneratorSet s = linked(2.0, -2.0);
  std::uint64_t state = 31;
  for (int i = 0; i < 10; ++i) {
    LyapunovReport rep = lyapunov_pair(SymbolicWord::random(s, splitmix64(state)),
                                       random_point(state), 400, splitmix64(state));
    CHECK(std::fabs(rep.lambda1 + rep.lambda2) < 1e-8);
    CHECK(rep.lambda1 >= -1e-6);
  }
}

TEST_CASE("periodic linked-twist word at the common fixed point") {
  GeneratorSet s = linked(2.0, -2.0);
  SpherePoint fix(0, 1, 0);
  std::vector<Letter> core{{0, +1}, {1, +1}};
  // the period Jacobian is the product of the two shears
  Word cw = s.word(core);
  Mat2 j = jacobian(cw, fix);
  auto eig = eigenvalues(j);
  double rho = std::max(std::abs(eig.first), std::abs(eig.second));
  double expect = std::log(rho) / 2;
  CHECK(rho == Catch::Approx(3 + 2 * std::sqrt(2.0)).epsilon(1e-10));

  LyapunovReport rep = lyapunov_pair(SymbolicWord::periodic(s, core), fix, 2000, 5);
  CHECK(std::fabs(rep.lambda1 - expect) < 0.02 * expect);
}

TEST_CASE("lyapunov requires enough steps") {
  GeneratorSet s = rotations();
  CHECK_THROWS_AS(lyapunov_pair(SymbolicWord::random(s, 1), SpherePoint(0, 0, 1), 50, 1),
                  std::invalid_argument);
}

TEST_CASE("empirical invariance defect obeys the telescoping bound") {
  GeneratorSet s = linked(2.0, 2.0);
  auto tests = default_test_functions();
  std::uint64_t state = 41;
  SymbolicWord w = SymbolicWord::random(s, 17);
  SECTION("n = 1") {
    CHECK(empirical_invariance_defect(w, random_point(state), 1, tests) <= 2.0 + 1e-12);
  }
  SECTION("n = 1000") {
    CHECK(empirical_invariance_defect(w, random_point(state), 1000, tests) <= 0.002 + 1e-12);
  }
  SECTION("constant test function") {
    std::vector<std::function<double(const SpherePoint&)>> constant{
        [](const SpherePoint&) { return 0.7; }};
    CHECK(empirical_invariance_defect(w, random_point(state), 100, constant) == 0.0);
  }
}

TEST_CASE("empirical measure weights") {
  GeneratorSet s = rotations();
  EmpiricalMeasure mu = empirical_measure(SymbolicWord::random(s, 2), SpherePoint(1, 0, 0), 250);
  REQUIRE(mu.atoms.size() == 250);
  CHECK(std::fabs(mu.weight * 250 - 1.0) < 1e-12);
}

TEST_CASE("classification of closed-form fixed points") {
  SECTION("rotation by pi/3 at its pole is elliptic") {
    auto t = std::make_shared<PrimitiveTable>();
    t->push_back(Rotation({0, 0, 1}, M_PI / 3));
    FixedPointRecord rec = classify_periodic_point({t, {{0, +1}}}, SpherePoint(0, 0, 1));
    CHECK(rec.classification == StabilityClass::elliptic);
    CHECK(std::abs(rec.eigs.first - std::polar(1.0, M_PI / 3)) < 1e-9);
    CHECK(std::abs(rec.eigs.second - std::polar(1.0, -M_PI / 3)) < 1e-9);
  }
  SECTION("twist at its equator is parabolic") {
    auto t = std::make_shared<PrimitiveTable>();
    t->push_back(Twist({0, 0, 1}, 2.0));
    FixedPointRecord rec = classify_periodic_point({t, {{0, +1}}}, SpherePoint(1, 0, 0));
    CHECK(rec.classification == StabilityClass::parabolic);
    CHECK(std::fabs(rec.eigs.first.real() - 1.0) < 1e-9);
  }
  SECTION("linked twists at the common fixed point follow the trace") {
    // co-twisting signs: trace 6, hyperbolic
    GeneratorSet a = linked(2.0, -2.0);
    FixedPointRecord ra = classify_periodic_point(a.word({{0, +1}, {1, +1}}), SpherePoint(0, 1, 0));
    CHECK(ra.classification == StabilityClass::hyperbolic);
    CHECK(std::fabs(std::abs(ra.eigs.first) * std::abs(ra.eigs.second) - 1.0) < 1e-8);
    // counter-twisting signs land on the parabolic boundary: trace -2
    GeneratorSet b = linked(2.0, 2.0);
    Mat2 j = jacobian(b.word({{0, +1}, {1, +1}}), SpherePoint(0, 1, 0));
    CHECK(std::fabs(j.trace() + 2.0) < 1e-10);
    FixedPointRecord rb = classify_periodic_point(b.word({{0, +1}, {1, +1}}), SpherePoint(0, 1, 0));
    CHECK(rb.classification != StabilityClass::hyperbolic);
  }
  SECTION("non-fixed point is rejected with its residual") {
    auto t = std::make_shared<PrimitiveTable>();
    t->push_back(Rotation({0, 0, 1}, M_PI / 3));
    try {
      classify_periodic_point({t, {{0, +1}}}, SpherePoint(1, 0, 0));
      FAIL("expected precondition error");
    } catch (const FixedPointPreconditionError& e) {
      CHECK(e.residual > 0.5);
    }
  }
}

TEST_CASE("rotation-only systems never classify as hyperbolic") {
  GeneratorSet s = rotations();
  std::uint64_t state = 61;
  auto letters = s.letters();
  for (int i = 0; i < 40; ++i) {
    // random words, classified at a numerically found fixed point of the
    // rotation they compose to (every rotation fixes its axis)
    std::vector<Letter> ls;
    int len = 1 + static_cast<int>(uniform_index(state, 6));
    for (int k = 0; k < len; ++k) ls.push_back(letters[uniform_index(state, letters.size())]);
    Word w = s.word(ls);
    // the axis of the composed rotation, from its matrix action
    Vec3 ex = evaluate(w, SpherePoint(1, 0, 0)).v;
    Vec3 ey = evaluate(w, SpherePoint(0, 1, 0)).v;
    Vec3 ez = evaluate(w, SpherePoint(0, 0, 1)).v;
    Vec3 axis{ey.z - ez.y, ez.x - ex.z, ex.y - ey.x};  // R - R^T off-diagonal
    if (norm(axis) < 1e-8) continue;                   // identity or half turn
    SpherePoint p = SpherePoint::project(axis);
    if (geodesic_distance(evaluate(w, p), p) > kFixedPointPre) p = SpherePoint::project(axis * -1.0);
    FixedPointRecord rec = classify_periodic_point(w, p);
    CHECK(rec.classification != StabilityClass::hyperbolic);
  }
}
