#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qdesim/constraint.hpp"
#include "qdesim/model.hpp"
#include "qdesim/sim.hpp"

#include "helpers.hpp"

#include <algorithm>
#include <set>
#include <vector>

using namespace qdesim;
using testutil::StateBuilder;
using testutil::loadFixture;

namespace {

QualitativeState eq13(const QdeModel& m) {
    return StateBuilder(m, TimeLabel::Interval)
        .in("x", "x_MSY", QDir::Dec)
        .in("h", "MSY", QDir::Dec)
        .in("R", "0", QDir::Inc)
        .in("dx", "dx_min", QDir::Inc)
        .build();
}

bool sameValueSet(std::vector<QualitativeValue> got,
                  std::vector<QualitativeValue> want) {
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    return got == want;
}

}  // namespace

TEST_CASE("equilibrium states are all-steady point states") {
    QdeModel m = loadFixture("naive.qde");
    QualitativeState ext = StateBuilder(m, TimeLabel::Point)
                               .at("x", "0", QDir::Std)
                               .at("h", "0", QDir::Std)
                               .at("R", "0", QDir::Std)
                               .at("dx", "0", QDir::Std)
                               .build();
    CHECK(isEquilibriumState(ext));
    ext.label = TimeLabel::Interval;
    CHECK_FALSE(isEquilibriumState(ext));
    CHECK_FALSE(isEquilibriumState(eq13(m)));
}

TEST_CASE("point-to-interval transition table") {
    QuantitySpace sp{{"0", "a", "b", "top"}};
    // steady on an inner landmark: stay, or leave either way
    CHECK(sameValueSet(candidateTransitions({QMag::at(1), QDir::Std}, TimeLabel::Point, sp),
                       {{QMag::at(1), QDir::Std},
                        {QMag::interval(1), QDir::Inc},
                        {QMag::interval(0), QDir::Dec}}));
    // the space bottom prunes the downward exit
    CHECK(sameValueSet(candidateTransitions({QMag::at(0), QDir::Std}, TimeLabel::Point, sp),
                       {{QMag::at(0), QDir::Std}, {QMag::interval(0), QDir::Inc}}));
    // moving across a landmark continues into the neighbouring region
    CHECK(sameValueSet(candidateTransitions({QMag::at(2), QDir::Inc}, TimeLabel::Point, sp),
                       {{QMag::interval(2), QDir::Inc}}));
    CHECK(sameValueSet(candidateTransitions({QMag::at(2), QDir::Dec}, TimeLabel::Point, sp),
                       {{QMag::interval(1), QDir::Dec}}));
    // moving past the top is pruned entirely
    CHECK(candidateTransitions({QMag::at(3), QDir::Inc}, TimeLabel::Point, sp).empty());
    // mid-interval trends persist
    CHECK(sameValueSet(candidateTransitions({QMag::interval(1), QDir::Inc}, TimeLabel::Point, sp),
                       {{QMag::interval(1), QDir::Inc}}));
    // a mid-interval pause must resolve into a trend over the next span
    CHECK(sameValueSet(candidateTransitions({QMag::interval(1), QDir::Std}, TimeLabel::Point, sp),
                       {{QMag::interval(1), QDir::Inc}, {QMag::interval(1), QDir::Dec}}));
}

TEST_CASE("interval-to-point transition table") {
    QuantitySpace sp{{"0", "a", "b", "top"}};
    // resting on a landmark persists; moving on one cannot span an interval
    CHECK(sameValueSet(candidateTransitions({QMag::at(1), QDir::Std}, TimeLabel::Interval, sp),
                       {{QMag::at(1), QDir::Std}}));
    CHECK(candidateTransitions({QMag::at(1), QDir::Inc}, TimeLabel::Interval, sp).empty());
    // rising region: reach the upper landmark (still rising or pausing),
    // or stay inside (still rising or pausing)
    CHECK(sameValueSet(candidateTransitions({QMag::interval(1), QDir::Inc}, TimeLabel::Interval, sp),
                       {{QMag::at(2), QDir::Inc},
                        {QMag::at(2), QDir::Std},
                        {QMag::interval(1), QDir::Inc},
                        {QMag::interval(1), QDir::Std}}));
    CHECK(sameValueSet(candidateTransitions({QMag::interval(1), QDir::Dec}, TimeLabel::Interval, sp),
                       {{QMag::at(1), QDir::Dec},
                        {QMag::at(1), QDir::Std},
                        {QMag::interval(1), QDir::Dec},
                        {QMag::interval(1), QDir::Std}}));
    CHECK(sameValueSet(candidateTransitions({QMag::interval(1), QDir::Std}, TimeLabel::Interval, sp),
                       {{QMag::interval(1), QDir::Std},
                        {QMag::interval(1), QDir::Inc},
                        {QMag::interval(1), QDir::Dec}}));
}

TEST_CASE("the crisis state branches into exactly the two regular successors") {
    QdeModel m = loadFixture("naive.qde");
    std::vector<QualitativeState> succ = generateSuccessors(m, eq13(m));

    QualitativeState caseCollapse = StateBuilder(m, TimeLabel::Interval)
                                        .in("x", "0", QDir::Dec)
                                        .in("h", "MSY", QDir::Dec)
                                        .in("R", "0", QDir::Dec)
                                        .in("dx", "dx_min", QDir::Inc)
                                        .build();
    QualitativeState caseRecover = StateBuilder(m, TimeLabel::Interval)
                                       .in("x", "x_MSY", QDir::Dec)
                                       .in("h", "0", QDir::Dec)
                                       .in("R", "0", QDir::Inc)
                                       .in("dx", "dx_min", QDir::Inc)
                                       .build();
    REQUIRE(succ.size() == 2);
    CHECK(std::count(succ.begin(), succ.end(), caseCollapse) == 1);
    CHECK(std::count(succ.begin(), succ.end(), caseRecover) == 1);
}

TEST_CASE("without the marginal filter the coincidence branch appears") {
    QdeModel m = loadFixture("naive.qde");
    SimConfig cfg;
    cfg.excludeMarginalSimultaneity = false;
    std::vector<QualitativeState> succ = generateSuccessors(m, eq13(m), cfg);
    REQUIRE(succ.size() == 3);
    QualitativeState marginal = StateBuilder(m, TimeLabel::Point)
                                    .at("x", "x_MSY", QDir::Std)
                                    .at("h", "MSY", QDir::Std)
                                    .at("R", "R_MSY", QDir::Std)
                                    .at("dx", "0", QDir::Std)
                                    .build();
    CHECK(std::count(succ.begin(), succ.end(), marginal) == 1);
    // the two regular successors are still present
    std::vector<QualitativeState> filtered = generateSuccessors(m, eq13(m));
    for (const auto& s : filtered)
        CHECK(std::count(succ.begin(), succ.end(), s) == 1);
}

TEST_CASE("equilibria have no successors") {
    QdeModel m = loadFixture("naive.qde");
    QualitativeState ext = StateBuilder(m, TimeLabel::Point)
                               .at("x", "0", QDir::Std)
                               .at("h", "0", QDir::Std)
                               .at("R", "0", QDir::Std)
                               .at("dx", "0", QDir::Std)
                               .build();
    CHECK(generateSuccessors(m, ext).empty());
}

TEST_CASE("initial states of the fixtures") {
    QdeModel naive = loadFixture("naive.qde");
    std::vector<QualitativeState> seeds = initialStates(naive);
    REQUIRE(seeds.size() == 1);
    CHECK(seeds[0] == eq13(naive));

    QdeModel fishery = loadFixture("fishery.qde");
    std::vector<QualitativeState> fseeds = initialStates(fishery);
    CHECK(fseeds.size() == 92);
    // no seed opens with a flow variable frozen mid-interval
    for (const auto& s : fseeds)
        for (int v = 0; v < fishery.varCount(); ++v)
            if (fishery.derivativeOf(v) >= 0)
                CHECK((s.values[static_cast<std::size_t>(v)].mag.isLandmark() ||
                       s.values[static_cast<std::size_t>(v)].dir != QDir::Std));
}

TEST_CASE("naive graph matches the published structure") {
    QdeModel m = loadFixture("naive.qde");
    StateTransitionGraph g = buildStg(m);
    CHECK(g.size() == 9);
    CHECK(g.edgeCount() == 11);
    REQUIRE(g.initials.size() == 1);
    CHECK(g.vertices[static_cast<std::size_t>(g.initials[0])] == eq13(m));

    std::vector<int> eq;
    for (int i = 0; i < g.size(); ++i)
        if (g.terminal[static_cast<std::size_t>(i)] == TerminalKind::Equilibrium)
            eq.push_back(i);
    REQUIRE(eq.size() == 3);
    // one equilibrium per stock region: extinction, depleted, healthy
    std::multiset<QMag> stockMags;
    for (int i : eq) {
        const QualitativeState& s = g.vertices[static_cast<std::size_t>(i)];
        CHECK(isEquilibriumState(s));
        stockMags.insert(s.values[0].mag);
    }
    CHECK(stockMags == std::multiset<QMag>{QMag::at(0), QMag::interval(0), QMag::interval(1)});
    // the extinction equilibrium is the all-zero state
    for (int i : eq) {
        const QualitativeState& s = g.vertices[static_cast<std::size_t>(i)];
        if (s.values[0].mag != QMag::at(0)) continue;
        for (const auto& v : s.values) CHECK(v.mag.lo == v.mag.hi);
        CHECK(s.values[1].mag == QMag::at(0));
    }

    // episodes run over intervals; the run only stops at point states
    for (int i = 0; i < g.size(); ++i) {
        const auto& out = g.succ[static_cast<std::size_t>(i)];
        if (!out.empty())
            CHECK(g.vertices[static_cast<std::size_t>(i)].label == TimeLabel::Interval);
        if (g.terminal[static_cast<std::size_t>(i)] != TerminalKind::None)
            CHECK(out.empty());
        else
            CHECK_FALSE(out.empty());
    }
}

TEST_CASE("graph construction is deterministic") {
    QdeModel m = loadFixture("naive.qde");
    StateTransitionGraph a = buildStg(m);
    StateTransitionGraph b = buildStg(m);
    CHECK(a.vertices == b.vertices);
    CHECK(a.succ == b.succ);
    CHECK(a.initials == b.initials);
    CHECK(a.terminal == b.terminal);
}

TEST_CASE("capital fishery graph: frozen structural counts") {
    QdeModel m = loadFixture("fishery.qde");
    StateTransitionGraph g = buildStg(m);
    CHECK(g.size() == 404);
    CHECK(g.edgeCount() == 2268);

    int equilibria = 0;
    int saturated = 0;
    int xZeroEquilibria = 0;
    int iVar = m.requireVar("I");
    for (int i = 0; i < g.size(); ++i) {
        const QualitativeState& s = g.vertices[static_cast<std::size_t>(i)];
        switch (g.terminal[static_cast<std::size_t>(i)]) {
            case TerminalKind::Equilibrium:
                ++equilibria;
                if (s.values[0].mag == QMag::at(0)) ++xZeroEquilibria;
                break;
            case TerminalKind::BoundSaturation:
                ++saturated;
                // only the rate-driven investment can run into its bound
                CHECK(s.values[static_cast<std::size_t>(iVar)] ==
                      QualitativeValue{QMag::at(0), QDir::Dec});
                break;
            default:
                break;
        }
    }
    CHECK(equilibria == 4);
    CHECK(xZeroEquilibria == 1);
    CHECK(saturated == 72);
}

TEST_CASE("gateway instants sit between an episode and its successors") {
    QdeModel m = loadFixture("naive.qde");
    std::vector<QualitativeState> gates = gatewayStates(m, eq13(m));
    CHECK_FALSE(gates.empty());
    for (const auto& g : gates) {
        CHECK(g.label == TimeLabel::Point);
        CHECK(checkState(m, g).ok);
        CHECK(g.values != eq13(m).values);
    }
    // points and equilibria end no episode
    QualitativeState ext = StateBuilder(m, TimeLabel::Point)
                               .at("x", "0", QDir::Std)
                               .at("h", "0", QDir::Std)
                               .at("R", "0", QDir::Std)
                               .at("dx", "0", QDir::Std)
                               .build();
    CHECK(gatewayStates(m, ext).empty());
}

TEST_CASE("exploration stops at the state bound with the partial graph") {
    QdeModel m = loadFixture("naive.qde");
    SimConfig cfg;
    cfg.maxStates = 3;
    try {
        buildStg(m, cfg);
        FAIL("expected BoundedExplorationError");
    } catch (const BoundedExplorationError& e) {
        CHECK(e.partial.size() >= 1);
        CHECK(e.partial.size() <= 4);
    }
}

TEST_CASE("a fully pinned steady init collapses to one equilibrium vertex") {
    QdeModel m = loadModel(
        "(model still (vars (x (0 xmax)) (dx (dxmin 0 dxmax)))"
        " (constraints ((d/dt x dx)))"
        " (init (x (0 xmax)) (dx 0 std)))");
    StateTransitionGraph g = buildStg(m);
    REQUIRE(g.size() == 1);
    CHECK(g.edgeCount() == 0);
    CHECK(g.terminal[0] == TerminalKind::Equilibrium);
    CHECK(g.vertices[0].label == TimeLabel::Point);
    CHECK(g.vertices[0].values[0].dir == QDir::Std);
}
