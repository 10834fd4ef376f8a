#include "drutil/error.hpp"
#include "drutil/formula.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace drutil;

namespace {

Dataset parse(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

}  // namespace

TEST_SUITE("formula") {

TEST_CASE("parsing") {
    const Formula f = Formula::parse("y ~ a + pow(b, 2) + log1p(c)");
    CHECK(f.response.column == "y");
    REQUIRE(f.predictors.size() == 3);
    CHECK(f.predictors[0].label() == "a");
    CHECK(f.predictors[1].kind == Term::Kind::power);
    CHECK(f.predictors[1].exponent == 2.0);
    CHECK(f.predictors[1].label() == "pow(b,2)");
    CHECK(f.predictors[2].label() == "log1p(c)");

    CHECK_THROWS_AS(Formula::parse("y a + b"), UsageError);
    CHECK_THROWS_AS(Formula::parse("y ~ "), UsageError);
    CHECK_THROWS_AS(Formula::parse("y ~ a ~ b"), UsageError);
    CHECK_THROWS_AS(Formula::parse("y ~ exp(a)"), UsageError);
    CHECK_THROWS_AS(Formula::parse("y ~ pow(a)"), UsageError);
    CHECK_THROWS_AS(Formula::parse("y ~ pow(a, two)"), UsageError);
    CHECK_THROWS_AS(Formula::parse("y ~ a + "), UsageError);
}

TEST_CASE("numeric design with transforms") {
    const Dataset d = parse("y,a,b\n1,2,3\n4,5,0.5\n");
    const Design x = build_design(Formula::parse("y ~ a + pow(b,2) + log1p(a)"), d, d);
    CHECK(x.names == std::vector<std::string>{"(Intercept)", "a", "pow(b,2)", "log1p(a)"});
    Matrix want(2, 4);
    want << 1, 2, 9, std::log1p(2.0), 1, 5, 0.25, std::log1p(5.0);
    CHECK((x.x - want).cwiseAbs().maxCoeff() <= 1e-15 * want.cwiseAbs().maxCoeff());
    CHECK(x.y == Vector::LinSpaced(2, 1, 4));
}

TEST_CASE("categorical predictors expand to non-reference dummies") {
    const Dataset obs = parse("y,g\n1,b\n2,a\n3,c\n4,a\n");
    const Dataset syn = parse("y,g\n1,c\n2,c\n");
    const Design x = build_design(Formula::parse("y ~ g"), syn, obs);
    CHECK(x.names == std::vector<std::string>{"(Intercept)", "g=b", "g=c"});
    Matrix want(2, 3);
    want << 1, 0, 1, 1, 0, 1;
    CHECK(x.x == want);

    CHECK_THROWS_AS(build_design(Formula::parse("y ~ g"), parse("y,g\n1,z\n"), obs), InputError);
    CHECK_THROWS_AS(build_design(Formula::parse("y ~ log1p(g)"), obs, obs), InputError);
}

TEST_CASE("unknown columns and bad responses") {
    const Dataset d = parse("y,a,g\n1,2,u\n3,4,v\n");
    try {
        build_design(Formula::parse("y ~ X"), d, d);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("'X'") != std::string::npos);
    }
    CHECK_THROWS_AS(build_design(Formula::parse("g ~ a"), d, d), InputError);
}

}  // TEST_SUITE
