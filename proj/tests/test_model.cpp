#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qdesim/model.hpp"

#include "helpers.hpp"

#include <random>
#include <string>
#include <vector>

using namespace qdesim;
using testutil::loadFixture;
using testutil::readFile;

namespace {

const char* kTinyModel = R"((model tiny
  (vars
    (x (0 a b))
    (dx (lo 0 hi)))
  (constraints
    ((d/dt x dx)))
  (relevant x)
  (init (x (0 a)))))";

}  // namespace

TEST_CASE("parses the naive fishery fixture") {
    QdeModel m = loadFixture("naive.qde");
    CHECK(m.name == "naive-fishery");
    REQUIRE(m.varCount() == 4);
    CHECK(m.varNames == std::vector<std::string>{"x", "h", "R", "dx"});
    CHECK(m.spaces[0].landmarks == std::vector<std::string>{"0", "x_MSY", "Q", "x_max"});
    CHECK(m.spaces[3].landmarks == std::vector<std::string>{"dx_min", "0", "dx_max"});

    REQUIRE(m.constraints.size() == 5);
    CHECK(m.constraints[0].kind == ConstraintKind::Ddt);
    CHECK(m.constraints[0].vars == std::vector<int>{0, 3});
    CHECK(m.constraints[1].kind == ConstraintKind::Add);
    CHECK(m.constraints[1].vars == std::vector<int>{3, 1, 2});
    CHECK(m.constraints[1].cvTuples ==
          std::vector<std::vector<int>>{{1, 0, 0}, {1, 1, 1}});
    CHECK(m.constraints[2].kind == ConstraintKind::UMinus);
    CHECK(m.constraints[2].cvTuples.size() == 3);
    CHECK(m.constraints[3].kind == ConstraintKind::Mono);
    CHECK(m.constraints[3].signature == std::vector<Sign>{Sign::Pos});
    CHECK(m.constraints[4].kind == ConstraintKind::Exclude);

    CHECK(m.relevant == std::vector<int>{0, 1});
    REQUIRE(m.init.size() == 3);
    CHECK(m.init[0].var == 0);
    CHECK(m.init[0].mag == QMag::interval(1));
    CHECK(m.init[0].dir == QDir::Dec);
    CHECK(m.derivativeOf(0) == 3);
    CHECK(m.derivativeOf(1) == -1);
}

TEST_CASE("parses the capital fishery fixture") {
    QdeModel m = loadFixture("fishery.qde");
    CHECK(m.name == "fishery");
    CHECK(m.varCount() == 9);
    CHECK(m.constraints.size() == 10);
    // two-place signature on the mvk constraint folds all three drivers
    int mvkCons = -1;
    for (std::size_t i = 0; i < m.constraints.size(); ++i)
        if (m.constraints[i].kind == ConstraintKind::Mono &&
            m.constraints[i].vars.size() == 4)
            mvkCons = static_cast<int>(i);
    REQUIRE(mvkCons >= 0);
    CHECK(m.constraints[static_cast<std::size_t>(mvkCons)].signature ==
          std::vector<Sign>{Sign::Pos, Sign::Neg, Sign::Neg});
    CHECK(m.relevant == std::vector<int>{m.requireVar("x"), m.requireVar("h"),
                                         m.requireVar("k")});
    // init may omit the direction
    CHECK_FALSE(m.init[0].dir.has_value());
    CHECK(m.init[1].dir == QDir::Inc);
}

TEST_CASE("serialization round-trips both fixtures exactly") {
    for (const char* name : {"naive.qde", "fishery.qde"}) {
        QdeModel m = loadFixture(name);
        std::string text = serializeModel(m);
        QdeModel again = parseModel(text);
        CHECK(again == m);
        // canonical: serializing the reparse is byte-identical
        CHECK(serializeModel(again) == text);
    }
}

TEST_CASE("parse errors carry one-based positions") {
    try {
        parseModel("(model m\n  (vars (x (0 a)))\n  (oops))");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.col >= 1);
    }

    CHECK_THROWS_AS(parseModel(""), ParseError);
    CHECK_THROWS_AS(parseModel("(model"), ParseError);          // unbalanced
    CHECK_THROWS_AS(parseModel("(model m (vars))"), ParseError);  // no variables
    // unknown landmark in a cv tuple
    CHECK_THROWS_AS(parseModel("(model m (vars (x (0 a)) (dx (lo 0 hi)))"
                               " (constraints ((d/dt x dx))"
                               " ((cornot x dx) (zz 0))))"),
                    ParseError);
    // duplicate variable
    CHECK_THROWS_AS(parseModel("(model m (vars (x (0 a)) (x (0 b))))"), ParseError);
    // arity mismatch: d/dt takes exactly two variables
    CHECK_THROWS_AS(parseModel("(model m (vars (x (0 a)) (dx (lo 0 hi)))"
                               " (constraints ((d/dt x))))"),
                    ParseError);
    // unknown variable reference
    CHECK_THROWS_AS(parseModel("(model m (vars (x (0 a)))"
                               " (constraints ((M+ x y))))"),
                    ParseError);
    // init magnitude must name landmarks of the declared space
    CHECK_THROWS_AS(parseModel("(model m (vars (x (0 a))) (init (x (a b))))"),
                    ParseError);
}

TEST_CASE("trailing garbage after the model form is rejected") {
    QdeModel m = parseModel(kTinyModel);
    CHECK(m.name == "tiny");
    CHECK_THROWS_AS(parseModel(std::string(kTinyModel) + " extra"), ParseError);
}

TEST_CASE("validation accepts the fixtures") {
    for (const char* name : {"naive.qde", "fishery.qde"}) {
        QdeModel m = parseModel(readFile(testutil::fixturePath(name)));
        for (const auto& d : validateModel(m)) CHECK(d.severity != Severity::Error);
    }
}

TEST_CASE("validation flags semantic problems the grammar cannot") {
    // d/dt whose derivative space has no 0 landmark
    QdeModel m = parseModel(
        "(model m (vars (x (0 a b)) (dx (lo hi)))"
        " (constraints ((d/dt x dx))))");
    bool flagged = false;
    for (const auto& d : validateModel(m))
        flagged = flagged || d.severity == Severity::Error;
    CHECK(flagged);
    CHECK_THROWS_AS(loadModel("(model m (vars (x (0 a b)) (dx (lo hi)))"
                              " (constraints ((d/dt x dx))))"),
                    ModelError);
}

TEST_CASE("fuzzed inputs never crash the parser") {
    std::mt19937_64 rng(20240817);
    const std::string alphabet = "()(model vars x 0 a;\n\t\"\\ +-Md/t";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(0, 120);
    for (int i = 0; i < 5000; ++i) {
        std::string doc;
        int n = len(rng);
        for (int j = 0; j < n; ++j) doc.push_back(alphabet[pick(rng)]);
        try {
            QdeModel m = parseModel(doc);
            // on the off chance it parses, it must round-trip
            CHECK(parseModel(serializeModel(m)) == m);
        } catch (const ParseError&) {
            // expected for almost every input
        }
    }
}
