#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qdesim/analysis.hpp"
#include "qdesim/model.hpp"
#include "qdesim/sim.hpp"

#include "helpers.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace qdesim;
using testutil::loadFixture;

namespace {

std::vector<QualitativeValue> projection(const QualitativeState& s,
                                         const std::vector<int>& relevant) {
    std::vector<QualitativeValue> out;
    for (int v : relevant) out.push_back(s.values[static_cast<std::size_t>(v)]);
    return out;
}

/// Minimal quotient graph for the gate/reachability tests; only the
/// successor lists matter to them.
GeneralizedStg diamond() {
    GeneralizedStg g;
    g.signatures.resize(4);
    g.members = {{0}, {1}, {2}, {3}};
    g.clusterOf = {0, 1, 2, 3};
    g.succ = {{1, 2}, {3}, {3}, {}};
    g.selfLoop = {false, false, false, false};
    g.equilibrium = {false, false, false, true};
    g.initials = {0};
    return g;
}

std::vector<std::vector<bool>> reachability(const std::vector<std::vector<int>>& adj) {
    std::size_t n = adj.size();
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        r[i][i] = true;
        for (int j : adj[i]) r[i][static_cast<std::size_t>(j)] = true;
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (r[i][k] && r[k][j]) r[i][j] = true;
    return r;
}

}  // namespace

TEST_CASE("clustering is the quotient by the relevant projection") {
    QdeModel m = loadFixture("naive.qde");
    StateTransitionGraph g = buildStg(m);
    GeneralizedStg gs = clusterGstg(m, g, m.relevant);
    CHECK(gs.relevant == m.relevant);
    REQUIRE(gs.size() == 7);

    // brute-force partition oracle
    std::set<std::string> distinct;
    for (const auto& s : g.vertices) {
        std::string key;
        for (const auto& v : projection(s, m.relevant))
            key += std::to_string(v.mag.lo) + ":" + std::to_string(v.mag.hi) + ":" +
                   std::to_string(static_cast<int>(v.dir)) + ";";
        distinct.insert(key);
    }
    CHECK(static_cast<int>(distinct.size()) == gs.size());

    int covered = 0;
    for (int c = 0; c < gs.size(); ++c) {
        for (int v : gs.members[static_cast<std::size_t>(c)]) {
            CHECK(gs.clusterOf[static_cast<std::size_t>(v)] == c);
            CHECK(projection(g.vertices[static_cast<std::size_t>(v)], m.relevant) ==
                  gs.signatures[static_cast<std::size_t>(c)]);
            ++covered;
        }
        CHECK(std::is_sorted(gs.members[static_cast<std::size_t>(c)].begin(),
                             gs.members[static_cast<std::size_t>(c)].end()));
    }
    CHECK(covered == g.size());

    // cluster edges are exactly the projected STG edges, no self-loops
    std::set<std::pair<int, int>> expect;
    std::set<int> loops;
    for (int i = 0; i < g.size(); ++i)
        for (int j : g.succ[static_cast<std::size_t>(i)]) {
            int a = gs.clusterOf[static_cast<std::size_t>(i)];
            int b = gs.clusterOf[static_cast<std::size_t>(j)];
            if (a == b)
                loops.insert(a);
            else
                expect.insert({a, b});
        }
    std::set<std::pair<int, int>> got;
    for (int c = 0; c < gs.size(); ++c) {
        for (int d : gs.succ[static_cast<std::size_t>(c)]) got.insert({c, d});
        CHECK(gs.selfLoop[static_cast<std::size_t>(c)] == (loops.count(c) != 0));
    }
    CHECK(got == expect);

    // initial clusters and equilibrium flags
    for (int i : g.initials)
        CHECK(std::count(gs.initials.begin(), gs.initials.end(),
                         gs.clusterOf[static_cast<std::size_t>(i)]) == 1);
    std::vector<int> eq = findEquilibria(gs);
    CHECK(eq == std::vector<int>{4, 5, 6});
    CHECK(gs.initials == std::vector<int>{0});
}

TEST_CASE("equilibrium detection agrees between graph levels") {
    QdeModel m = loadFixture("naive.qde");
    StateTransitionGraph g = buildStg(m);
    std::vector<int> eq = findEquilibria(g);
    REQUIRE(eq.size() == 3);
    for (int i : eq) {
        CHECK(g.terminal[static_cast<std::size_t>(i)] == TerminalKind::Equilibrium);
        CHECK(isEquilibriumState(g.vertices[static_cast<std::size_t>(i)]));
    }
    GeneralizedStg gs = clusterGstg(m, g, m.relevant);
    std::set<int> clusters;
    for (int i : eq) clusters.insert(gs.clusterOf[static_cast<std::size_t>(i)]);
    std::vector<int> ceq = findEquilibria(gs);
    CHECK(std::set<int>(ceq.begin(), ceq.end()) == clusters);
}

TEST_CASE("strongly connected components match the reachability oracle") {
    std::mt19937 rng(41);
    for (int iter = 0; iter < 50; ++iter) {
        std::uniform_int_distribution<int> sz(1, 8);
        int n = sz(rng);
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
        std::uniform_int_distribution<int> coin(0, 3);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && coin(rng) == 0) adj[static_cast<std::size_t>(i)].push_back(j);
        std::vector<int> scc = stronglyConnectedComponents(adj);
        REQUIRE(scc.size() == static_cast<std::size_t>(n));
        auto reach = reachability(adj);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                CHECK((scc[static_cast<std::size_t>(i)] == scc[static_cast<std::size_t>(j)]) ==
                      (reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] &&
                       reach[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]));
        CHECK(scc == stronglyConnectedComponents(adj));  // deterministic
    }
}

TEST_CASE("irreversible edges are exactly the inter-component ones") {
    QdeModel m = loadFixture("naive.qde");
    GeneralizedStg gs = clusterGstg(m, buildStg(m), m.relevant);
    std::vector<std::pair<int, int>> irr = findIrreversible(gs);
    CHECK(irr.size() == 6);
    auto reach = reachability(gs.succ);
    for (int c = 0; c < gs.size(); ++c)
        for (int d : gs.succ[static_cast<std::size_t>(c)]) {
            bool comeback = reach[static_cast<std::size_t>(d)][static_cast<std::size_t>(c)];
            bool flagged = std::count(irr.begin(), irr.end(), std::make_pair(c, d)) == 1;
            CHECK(flagged == !comeback);
        }
}

TEST_CASE("critical branchings on the naive quotient") {
    QdeModel m = loadFixture("naive.qde");
    GeneralizedStg gs = clusterGstg(m, buildStg(m), m.relevant);
    std::vector<int> crit = findCriticalBranchings(gs);
    CHECK(crit == std::vector<int>{0, 3});
    std::vector<std::pair<int, int>> irr = findIrreversible(gs);
    for (int c : crit) {
        CHECK(gs.succ[static_cast<std::size_t>(c)].size() >= 2);
        bool hasIrr = false;
        for (int d : gs.succ[static_cast<std::size_t>(c)])
            hasIrr = hasIrr ||
                     std::count(irr.begin(), irr.end(), std::make_pair(c, d)) == 1;
        CHECK(hasIrr);
    }
}

TEST_CASE("over-capitalization marks harvest-down capital-up clusters") {
    QdeModel m = loadFixture("fishery.qde");
    GeneralizedStg gs = clusterGstg(m, buildStg(m), m.relevant);
    int h = m.requireVar("h");
    int k = m.requireVar("k");
    std::vector<int> over = markOvercapitalization(gs, h, k);
    CHECK(over == std::vector<int>{3, 6, 10, 13});
    std::size_t hSlot = 0, kSlot = 0;
    for (std::size_t i = 0; i < gs.relevant.size(); ++i) {
        if (gs.relevant[i] == h) hSlot = i;
        if (gs.relevant[i] == k) kSlot = i;
    }
    for (int c = 0; c < gs.size(); ++c) {
        bool marked = std::count(over.begin(), over.end(), c) == 1;
        const auto& sig = gs.signatures[static_cast<std::size_t>(c)];
        CHECK(marked == (sig[hSlot].dir == QDir::Dec && sig[kSlot].dir == QDir::Inc));
    }
}

TEST_CASE("unavoidability via gate deletion") {
    GeneralizedStg g = diamond();
    // both middle vertices gate the target
    UnavoidabilityResult both = checkUnavoidable(g, 0, {1, 2}, {3});
    CHECK(both.unavoidable);
    CHECK(both.witness.empty());
    // one of them leaves the other branch open
    UnavoidabilityResult one = checkUnavoidable(g, 0, {1}, {3});
    CHECK_FALSE(one.unavoidable);
    REQUIRE(one.witness.size() >= 2);
    CHECK(one.witness.front() == 0);
    CHECK(one.witness.back() == 3);
    for (int c : one.witness) CHECK(c != 1);
    for (std::size_t i = 0; i + 1 < one.witness.size(); ++i) {
        const auto& out = g.succ[static_cast<std::size_t>(one.witness[i])];
        CHECK(std::count(out.begin(), out.end(), one.witness[i + 1]) == 1);
    }
    // an unreachable target is trivially gated
    UnavoidabilityResult none = checkUnavoidable(g, 3, {1}, {0});
    CHECK(none.unavoidable);
}

TEST_CASE("behavior extraction walks to terminals") {
    QdeModel m = loadFixture("naive.qde");
    StateTransitionGraph g = buildStg(m);
    std::vector<Behavior> runs = extractBehaviors(g, g.initials[0]);
    CHECK_FALSE(runs.empty());
    for (const Behavior& b : runs) {
        REQUIRE_FALSE(b.vertices.empty());
        CHECK(b.vertices.front() == g.initials[0]);
        for (std::size_t i = 0; i + 1 < b.vertices.size(); ++i) {
            const auto& out = g.succ[static_cast<std::size_t>(b.vertices[i])];
            CHECK(std::count(out.begin(), out.end(), b.vertices[i + 1]) == 1);
        }
        if (b.cycle) {
            CHECK(b.terminal == TerminalKind::None);
        } else {
            CHECK(b.terminal ==
                  g.terminal[static_cast<std::size_t>(b.vertices.back())]);
            CHECK(b.terminal != TerminalKind::None);
        }
    }
    // the direct route to the healthy equilibrium is among them
    bool foundDirect = false;
    for (const Behavior& b : runs)
        foundDirect = foundDirect || b.vertices == std::vector<int>{0, 2, 5};
    CHECK(foundDirect);
    // lexicographic order by vertex sequence
    for (std::size_t i = 0; i + 1 < runs.size(); ++i)
        CHECK(runs[i].vertices < runs[i + 1].vertices);
    // allowing revisits only adds runs
    BehaviorOptions loose;
    loose.maxRevisits = 1;
    CHECK(extractBehaviors(g, g.initials[0], loose).size() >= runs.size());
    // targeted extraction stops at the target
    BehaviorOptions to5;
    to5.to = 5;
    std::vector<Behavior> targeted = extractBehaviors(g, g.initials[0], to5);
    bool reached = false;
    for (const Behavior& b : targeted)
        if (!b.cycle) {
            CHECK(b.vertices.back() == 5);
            reached = true;
        }
    CHECK(reached);
}

TEST_CASE("containment accepts real paths and implied passing instants") {
    QdeModel m = loadFixture("naive.qde");
    StateTransitionGraph g = buildStg(m);

    std::vector<QualitativeState> path = {g.vertices[0], g.vertices[2], g.vertices[5]};
    CHECK(checkContainment(g, path) == std::nullopt);

    // a pass-through instant between two episodes is not a vertex but is
    // tolerated, since the edge implies it
    std::vector<QualitativeState> gates = gatewayStates(m, g.vertices[0]);
    REQUIRE_FALSE(gates.empty());
    std::vector<QualitativeState> withGate = {g.vertices[0], gates[0], g.vertices[2],
                                              g.vertices[5]};
    // keep only a gate that actually lies towards vertex 2
    bool accepted = false;
    for (const auto& gate : gates) {
        withGate[1] = gate;
        accepted = accepted || checkContainment(g, withGate) == std::nullopt;
    }
    CHECK(accepted);

    // an equilibrium reading must be a vertex
    QualitativeState fakeEq = g.vertices[5];
    fakeEq.values[0].mag = QMag::interval(0);  // no such equilibrium in the graph
    CHECK(checkContainment(g, {g.vertices[0], fakeEq}).has_value());

    // a missing edge is reported
    CHECK(checkContainment(g, {g.vertices[0], g.vertices[5]}).has_value());
    // an unknown interval state is reported
    QualitativeState bogus = g.vertices[0];
    bogus.values[0].dir = QDir::Inc;
    CHECK(checkContainment(g, {bogus}).has_value());
}

TEST_CASE("numeric traces abstract into alternating state sequences") {
    QdeModel m = loadFixture("naive.qde");
    // landmark reals: x {0,1,2,3}, h {0,1,2}, R {0,1,2}, dx {-1,0,1}
    std::vector<std::vector<double>> lm = {
        {0.0, 1.0, 2.0, 3.0}, {0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}, {-1.0, 0.0, 1.0}};
    NumericTrace t;
    int n = 400;
    for (int i = 0; i <= n; ++i) t.times.push_back(static_cast<double>(i) / n);
    t.samples.resize(4);
    for (double tt : t.times) {
        t.samples[0].push_back(1.5 - 0.8 * tt);   // x crosses x_MSY=1
        t.samples[1].push_back(1.4 - 0.8 * tt);   // h crosses MSY=1
        t.samples[2].push_back(0.5 + 0.3 * tt);   // R stays inside (0,R_MSY)
        t.samples[3].push_back(-0.5 + 0.2 * tt);  // dx stays inside (dx_min,0)
    }
    std::vector<QualitativeState> path = abstractNumericTrace(t, m, lm);
    REQUIRE(path.size() >= 3);
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        CHECK(path[i].label != path[i + 1].label);
    // the opening instant bridges into the first episode: x and h
    // falling from their upper regions
    CHECK(path.front().label == TimeLabel::Point);
    const QualitativeState& first = path[1];
    CHECK(first.label == TimeLabel::Interval);
    CHECK(first.values[0] == QualitativeValue{QMag::interval(1), QDir::Dec});
    CHECK(first.values[1] == QualitativeValue{QMag::interval(1), QDir::Dec});
    CHECK(first.values[2].dir == QDir::Inc);
    // the crossings show up as landmark readings at instants
    bool sawX = false, sawH = false;
    for (const auto& s : path) {
        sawX = sawX || (s.label == TimeLabel::Point && s.values[0].mag == QMag::at(1));
        sawH = sawH || (s.label == TimeLabel::Point && s.values[1].mag == QMag::at(1));
    }
    CHECK(sawX);
    CHECK(sawH);
    // closing episode: both below their landmarks
    CHECK(path.back().values[0].mag == QMag::interval(0));
    CHECK(path.back().values[1].mag == QMag::interval(0));

    // a trace that skips a whole region between samples cannot be resolved
    NumericTrace coarse;
    coarse.times = {0.0, 1.0};
    coarse.samples = {{2.5, 0.5}, {1.4, 0.6}, {0.5, 0.8}, {-0.5, -0.3}};
    CHECK_THROWS_AS(abstractNumericTrace(coarse, m, lm), TraceResolutionError);
}
