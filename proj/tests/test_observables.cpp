#include <doctest.h>

#include "kic/errors.hpp"
#include "kic/observables.hpp"
#include "kic/random.hpp"

using namespace kic;

TEST_CASE("identity spec lifts to the raw state") {
    Matrix x(2, 1);
    x << 5, 2;
    CHECK(lift(ObservableSpec::identity(2, 0), x, std::nullopt) == x);
}

TEST_CASE("slow-manifold dictionary at (5, 2), u = 0") {
    const ObservableSpec spec = ObservableSpec::parse("x1,x2,x1^2,u1", 2, 1);
    Matrix x(2, 1), u(1, 1);
    x << 5, 2;
    u << 0;
    const Matrix z = lift(spec, x, u);
    CHECK(z(0, 0) == 5.0);
    CHECK(z(1, 0) == 2.0);
    CHECK(z(2, 0) == 25.0);
    CHECK(z(3, 0) == 0.0);
}

TEST_CASE("SIR dictionary") {
    const ObservableSpec spec({ObservableTerm::state(0, "S"), ObservableTerm::state(1, "I"),
                               ObservableTerm::state(2, "R"), ObservableTerm::monomial({1, 1, 0}, {0}, "SI"),
                               ObservableTerm::input(0, "Vacc")},
                              3, 1);
    Matrix x(3, 1), u(1, 1);
    x << 0.99, 0.01, 0.0;
    u << 0.003;
    const Matrix z = lift(spec, x, u);
    CHECK(z(0, 0) == 0.99);
    CHECK(z(1, 0) == 0.01);
    CHECK(z(2, 0) == 0.0);
    CHECK(z(3, 0) == 0.99 * 0.01);
    CHECK(z(4, 0) == 0.003);

    const ObservableSpec out({ObservableTerm::state(0, "S"), ObservableTerm::state(1, "I"),
                              ObservableTerm::state(2, "R")},
                             3, 1);
    CHECK(restriction_indices(spec, out) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("restriction indices") {
    const ObservableSpec a = ObservableSpec::parse("x1,x2,x1*x2", 2, 0);
    CHECK(restriction_indices(a, a) == std::vector<std::size_t>{0, 1, 2});
    CHECK(restriction_indices(a, ObservableSpec::parse("x1*x2,x1", 2, 0)) == std::vector<std::size_t>{2, 0});
    CHECK_THROWS_AS(restriction_indices(a, ObservableSpec::parse("x2^2", 2, 0)), SpecError);
}

TEST_CASE("lift needs inputs when a term uses them") {
    Matrix x(1, 2);
    x << 1, 2;
    CHECK_THROWS_AS(lift(ObservableSpec::parse("x1,u1", 1, 1), x, std::nullopt), MissingInputError);
    CHECK_NOTHROW(lift(ObservableSpec::parse("x1^3", 1, 1), x, std::nullopt));
}

TEST_CASE("parser grammar") {
    const ObservableSpec spec = ObservableSpec::parse(" x1 , x1^2*u1 ,x2*x1", 2, 1);
    REQUIRE(spec.size() == 3);
    CHECK(spec.terms()[0].kind() == ObservableTerm::Kind::StateIdentity);
    CHECK(spec.terms()[1].label() == "x1^2*u1");
    CHECK(spec.terms()[1].state_powers() == std::vector<int>{2, 0});
    CHECK(spec.terms()[1].input_powers() == std::vector<int>{1});
    CHECK(spec.terms()[2].state_powers() == std::vector<int>{1, 1});
    CHECK(spec.terms()[2].degree() == 2);
    CHECK(spec.uses_inputs());
    CHECK(spec.find("x2*x1") == 2u);
    CHECK_FALSE(spec.find("nope"));
    CHECK(ObservableSpec::parse(spec.to_string(), 2, 1).terms()[1].same_function(spec.terms()[1]));

    CHECK_THROWS_AS(ObservableSpec::parse("x1,SI", 2, 0), SpecError);
    CHECK_THROWS_AS(ObservableSpec::parse("x3", 2, 0), SpecError);
    CHECK_THROWS_AS(ObservableSpec::parse("u1", 2, 0), SpecError);
    CHECK_THROWS_AS(ObservableSpec::parse("x1^0", 2, 0), SpecError);
    CHECK_THROWS_AS(ObservableSpec::parse("x1,x1", 2, 0), SpecError);
    CHECK_THROWS_AS(ObservableSpec::parse("", 2, 0), SpecError);
}

TEST_CASE("term invariants") {
    CHECK_THROWS_AS(ObservableSpec({ObservableTerm::state(2)}, 2, 0), SpecError);
    CHECK_THROWS_AS(ObservableSpec({ObservableTerm::input(0)}, 2, 0), SpecError);
    CHECK_THROWS_AS(ObservableSpec({ObservableTerm::monomial({0, 0}, {})}, 2, 0), SpecError);
}

TEST_CASE("monomials match repeated multiplication exactly") {
    Rng rng(2);
    const ObservableSpec spec = ObservableSpec::parse("x1^4,x1*x2^3,x1^2*x2*u1,x2^2*u1^2", 2, 1);
    Matrix x(2, 20), u(1, 20);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = rng.normal();
    const Matrix z = lift(spec, x, u);
    for (Eigen::Index k = 0; k < 20; ++k) {
        const double a = x(0, k), b = x(1, k), c = u(0, k);
        CHECK(z(0, k) == a * a * a * a);
        CHECK(z(1, k) == a * b * b * b);
        CHECK(z(2, k) == a * a * b * c);
        CHECK(z(3, k) == b * b * c * c);
    }
}

TEST_CASE("lift is columnwise") {
    Rng rng(3);
    const ObservableSpec spec = ObservableSpec::parse("x1*x2,x2,x1^2", 2, 0);
    Matrix x(2, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
    perm.indices() << 3, 0, 5, 1, 4, 2;
    CHECK(lift(spec, x * perm, std::nullopt) == lift(spec, x, std::nullopt) * perm);
}

TEST_CASE("lift_derivative uses the product rule") {
    const ObservableSpec spec = ObservableSpec::parse("x1,x2,x1^2,x1*x2", 2, 0);
    Matrix x(2, 1), dx(2, 1);
    x << 5, 2;
    dx << 10, -3;
    const Matrix d = lift_derivative(spec, x, dx);
    CHECK(d(0, 0) == 10.0);
    CHECK(d(1, 0) == -3.0);
    CHECK(d(2, 0) == doctest::Approx(2 * 5 * 10));
    CHECK(d(3, 0) == doctest::Approx(10 * 2 + 5 * -3));
}
