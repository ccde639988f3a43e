#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdesim/model.hpp"
#include "qdesim/qcore.hpp"
#include "qdesim/sim.hpp"

namespace qdesim {

/// Quotient of an STG by equality of the relevant variables' values
/// (time label ignored). Cluster ids are deterministic BFS indices from
/// the initial clusters.
struct GeneralizedStg {
    std::vector<int> relevant;  // variable ids, model declaration order
    std::vector<std::vector<QualitativeValue>> signatures;  // per cluster
    std::vector<std::vector<int>> members;   // STG vertex ids, ascending
    std::vector<int> clusterOf;              // STG vertex -> cluster
    std::vector<std::vector<int>> succ;      // ascending, no self-loops
    std::vector<bool> selfLoop;
    std::vector<bool> equilibrium;           // has >= 1 equilibrium member
    std::vector<int> initials;               // clusters of STG initials

    int size() const { return static_cast<int>(signatures.size()); }
};

GeneralizedStg clusterGstg(const QdeModel& m, const StateTransitionGraph& g,
                           const std::vector<int>& relevant);

/// Terminal-equilibrium vertices of an STG.
std::vector<int> findEquilibria(const StateTransitionGraph& g);

/// Clusters containing at least one equilibrium vertex.
std::vector<int> findEquilibria(const GeneralizedStg& g);

/// Edges whose endpoints lie in different strongly-connected
/// components; following one can never be undone.
std::vector<std::pair<int, int>> findIrreversible(const GeneralizedStg& g);

/// Strongly-connected component id per cluster (Tarjan order,
/// renumbered so ids are deterministic).
std::vector<int> stronglyConnectedComponents(const std::vector<std::vector<int>>& adj);

/// Clusters with out-degree >= 2 and at least one outgoing irreversible
/// edge.
std::vector<int> findCriticalBranchings(const GeneralizedStg& g);

/// Clusters where the harvest variable decreases while the capital
/// variable still increases. Both variables must be relevant.
std::vector<int> markOvercapitalization(const GeneralizedStg& g, int harvestVar,
                                        int capitalVar);

struct UnavoidabilityResult {
    bool unavoidable = false;
    std::vector<int> witness;  // gate-avoiding path on failure
};

/// True iff every path from start to any target passes through the
/// gate set. Computed by deleting the gate and testing reachability.
UnavoidabilityResult checkUnavoidable(const GeneralizedStg& g, int start,
                                      const std::vector<int>& gate,
                                      const std::vector<int>& targets);

struct Behavior {
    std::vector<int> vertices;
    TerminalKind terminal = TerminalKind::None;  // None when cut by a cycle
    bool cycle = false;
};

struct BehaviorOptions {
    std::optional<int> to;
    int maxRevisits = 0;
};

/// Paths from a vertex to the terminals (or the given target), visiting
/// each vertex at most maxRevisits+1 times. Lexicographic by vertex
/// indices.
std::vector<Behavior> extractBehaviors(const StateTransitionGraph& g, int from,
                                       const BehaviorOptions& options = {});

/// Reason the state sequence is not a path of the graph, or nullopt.
std::optional<std::string> checkContainment(const StateTransitionGraph& g,
                                            const std::vector<QualitativeState>& path);

/// Time-ordered numeric samples of every model variable.
struct NumericTrace {
    std::vector<double> times;
    std::vector<std::vector<double>> samples;  // samples[var][i]
};

struct AbstractionOptions {
    /// Magnitude and direction tolerances as fractions of each
    /// variable's numeric range.
    double magTolScale = 1e-6;
    double dirTolScale = 1e-6;
};

struct TraceResolutionError : ModelError {
    using ModelError::ModelError;
};

/// Abstract a sampled trajectory into the alternating qualitative state
/// sequence it witnesses. landmarkValues[var] maps landmark indices to
/// reals, strictly increasing per space. The trace must be sampled
/// densely enough that consecutive samples differ by at most one
/// qualitative step per variable.
std::vector<QualitativeState> abstractNumericTrace(
    const NumericTrace& t, const QdeModel& m,
    const std::vector<std::vector<double>>& landmarkValues,
    const AbstractionOptions& options = {});

}  // namespace qdesim
