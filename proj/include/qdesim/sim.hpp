#pragma once

#include <map>
#include <string>
#include <vector>

#include "qdesim/constraint.hpp"
#include "qdesim/model.hpp"
#include "qdesim/qcore.hpp"

namespace qdesim {

struct SimConfig {
    int maxStates = 100000;
    /// Drops interval-to-point successors where two or more unrelated
    /// variables land on landmarks at the same instant, and enforces
    /// cornot constraints. Turning it off exposes the marginal cases.
    bool excludeMarginalSimultaneity = true;
};

enum class TerminalKind : std::uint8_t { None, Equilibrium, DeadEnd, BoundSaturation };

std::string_view terminalKindName(TerminalKind k);

/// Vertices carry deterministic BFS indices; edges alternate the time
/// label. Terminal vertices have no outgoing edges.
struct StateTransitionGraph {
    std::vector<QualitativeState> vertices;
    std::vector<std::vector<int>> succ;  // parallel to vertices
    std::vector<int> initials;
    std::vector<TerminalKind> terminal;

    int size() const { return static_cast<int>(vertices.size()); }
    int edgeCount() const;
};

/// Raised when exploration hits SimConfig::maxStates. Carries the graph
/// built so far.
struct BoundedExplorationError : ModelError {
    StateTransitionGraph partial;
    BoundedExplorationError(std::string msg, StateTransitionGraph g)
        : ModelError(std::move(msg)), partial(std::move(g)) {}
};

/// True for a point state with every direction std; such states persist
/// indefinitely and get no successors.
bool isEquilibriumState(const QualitativeState& s);

/// Per-variable continuity table. `label` is the label of the current
/// state; successors carry the flipped label. Candidates that would
/// move past a space bound are omitted.
std::vector<QualitativeValue> candidateTransitions(const QualitativeValue& v,
                                                   TimeLabel label,
                                                   const QuantitySpace& space);

/// The event instants that can end the episode s: consistent,
/// filter-surviving time-point states. The run passes through them on
/// its way into the next episode; they become graph vertices only when
/// it stops there. Empty for point and equilibrium states.
std::vector<QualitativeState> gatewayStates(const QdeModel& m,
                                            const QualitativeState& s,
                                            const SimConfig& cfg = {});

/// All constraint-consistent successor states of s, canonically
/// ordered. Precondition: s itself is consistent.
std::vector<QualitativeState> generateSuccessors(const QdeModel& m,
                                                 const QualitativeState& s,
                                                 const SimConfig& cfg = {});

/// Point states consistent with the model's init section. An empty init
/// section yields the full envisionment seed (every consistent point
/// state).
std::vector<QualitativeState> initialStates(const QdeModel& m,
                                            const SimConfig& cfg = {});

/// Breadth-first closure of generateSuccessors from the initial states,
/// deduplicating by stateKey. Deterministic: two runs yield identical
/// vertex numbering and edge lists.
StateTransitionGraph buildStg(const QdeModel& m, const SimConfig& cfg = {});

}  // namespace qdesim
