#include "qdesim/sim.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace qdesim {

std::string_view terminalKindName(TerminalKind k) {
    switch (k) {
        case TerminalKind::None: return "none";
        case TerminalKind::Equilibrium: return "equilibrium";
        case TerminalKind::DeadEnd: return "dead-end";
        case TerminalKind::BoundSaturation: return "bound-saturation";
    }
    return "?";
}

int StateTransitionGraph::edgeCount() const {
    int n = 0;
    for (const auto& s : succ) n += static_cast<int>(s.size());
    return n;
}

bool isEquilibriumState(const QualitativeState& s) {
    if (s.label != TimeLabel::Point) return false;
    return std::all_of(s.values.begin(), s.values.end(),
                       [](const QualitativeValue& v) { return v.dir == QDir::Std; });
}

std::vector<QualitativeValue> candidateTransitions(const QualitativeValue& v,
                                                   TimeLabel label,
                                                   const QuantitySpace& space) {
    std::vector<QualitativeValue> out;
    const AdjacentRegions adj = adjacentRegions(v.mag, space);
    if (label == TimeLabel::Point) {
        if (v.mag.isLandmark()) {
            switch (v.dir) {
                case QDir::Std:
                    out.push_back({v.mag, QDir::Std});
                    if (adj.above) out.push_back({*adj.above, QDir::Inc});
                    if (adj.below) out.push_back({*adj.below, QDir::Dec});
                    break;
                case QDir::Inc:
                    if (adj.above) out.push_back({*adj.above, QDir::Inc});
                    break;
                case QDir::Dec:
                    if (adj.below) out.push_back({*adj.below, QDir::Dec});
                    break;
            }
        } else {
            if (v.dir == QDir::Std) {
                out.push_back({v.mag, QDir::Inc});
                out.push_back({v.mag, QDir::Dec});
            } else {
                out.push_back({v.mag, v.dir});
            }
        }
    } else {
        if (v.mag.isLandmark()) {
            // Moving landmark values cannot hold over an interval, so
            // only the steady row exists here.
            if (v.dir == QDir::Std) out.push_back({v.mag, QDir::Std});
        } else {
            switch (v.dir) {
                case QDir::Inc:
                    out.push_back({QMag::at(v.mag.hi), QDir::Inc});
                    out.push_back({QMag::at(v.mag.hi), QDir::Std});
                    out.push_back({v.mag, QDir::Inc});
                    out.push_back({v.mag, QDir::Std});
                    break;
                case QDir::Dec:
                    out.push_back({QMag::at(v.mag.lo), QDir::Dec});
                    out.push_back({QMag::at(v.mag.lo), QDir::Std});
                    out.push_back({v.mag, QDir::Dec});
                    out.push_back({v.mag, QDir::Std});
                    break;
                case QDir::Std:
                    out.push_back({v.mag, QDir::Std});
                    out.push_back({v.mag, QDir::Inc});
                    out.push_back({v.mag, QDir::Dec});
                    break;
            }
        }
    }
    return out;
}

namespace {

/// Union-find over variable indices, used to group simultaneous
/// landings that a corresponding-value tuple ties together.
struct Groups {
    std::vector<int> parent;
    explicit Groups(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

/// Simultaneous events at a gateway instant, grouped into independent
/// mechanisms. Events are landings on landmarks and mid-interval
/// pauses. A fully matched cv tuple explains its landings as one
/// event; a pause joins any event of a constraint it shares, since the
/// constraint functionally ties the two. A group is tangential when it
/// contains a landing but no strictly moving member.
struct EventSummary {
    int groups = 0;
    bool tangentialGroup = false;
};

EventSummary summarizeEvents(const QdeModel& m, const QualitativeState& from,
                             const QualitativeState& to) {
    std::vector<int> landing;
    std::vector<int> pausing;
    for (int v = 0; v < m.varCount(); ++v) {
        const auto& a = from.values[static_cast<std::size_t>(v)];
        const auto& b = to.values[static_cast<std::size_t>(v)];
        if (b.mag.isLandmark() && !a.mag.isLandmark())
            landing.push_back(v);
        else if (b.dir == QDir::Std && a.dir != QDir::Std)
            pausing.push_back(v);
    }
    EventSummary out;
    if (landing.empty() && pausing.empty()) return out;

    std::vector<bool> isEvent(static_cast<std::size_t>(m.varCount()), false);
    for (int v : landing) isEvent[static_cast<std::size_t>(v)] = true;
    for (int v : pausing) isEvent[static_cast<std::size_t>(v)] = true;

    // A pause whose direction a constraint determines from another
    // event is no event of its own: a d/dt integral pauses because its
    // derivative lands, a monotone or unimodal result because an
    // argument moves. Such a pause neither counts nor ties groups.
    std::erase_if(pausing, [&](int v) {
        for (const auto& spec : m.constraints) {
            int dep = -1;
            switch (spec.kind) {
                case ConstraintKind::Ddt: dep = spec.vars[0]; break;
                case ConstraintKind::Mono:
                case ConstraintKind::UMinus: dep = spec.vars.back(); break;
                default: break;
            }
            if (dep != v) continue;
            for (int w : spec.vars)
                if (w != v && isEvent[static_cast<std::size_t>(w)]) return true;
        }
        return false;
    });

    Groups g(m.varCount());
    for (const auto& spec : m.constraints) {
        for (const auto& tup : spec.cvTuples) {
            bool matched = true;
            for (int i = 0; i < spec.arity() && matched; ++i)
                matched = to.values[static_cast<std::size_t>(
                              spec.vars[static_cast<std::size_t>(i)])]
                              .mag == QMag::at(tup[static_cast<std::size_t>(i)]);
            if (!matched) continue;
            for (int i = 1; i < spec.arity(); ++i)
                g.unite(spec.vars[0], spec.vars[static_cast<std::size_t>(i)]);
        }
    }
    std::vector<int> roots;
    std::vector<bool> hasLanding;
    std::vector<bool> hasCrossing;
    auto slot = [&](int v) {
        int r = g.find(v);
        auto it = std::find(roots.begin(), roots.end(), r);
        if (it != roots.end())
            return static_cast<std::size_t>(it - roots.begin());
        roots.push_back(r);
        hasLanding.push_back(false);
        hasCrossing.push_back(false);
        return roots.size() - 1;
    };
    for (int v : landing) {
        std::size_t pos = slot(v);
        hasLanding[pos] = true;
        if (to.values[static_cast<std::size_t>(v)].dir != QDir::Std)
            hasCrossing[pos] = true;
    }
    for (int v : pausing) slot(v);
    out.groups = static_cast<int>(roots.size());
    for (std::size_t i = 0; i < roots.size(); ++i)
        if (hasLanding[i] && !hasCrossing[i]) out.tangentialGroup = true;
    return out;
}

void enumerateSuccessors(const QdeModel& m, const QualitativeState& s,
                         const CheckOptions& opts,
                         const std::vector<std::vector<QualitativeValue>>& cand,
                         std::vector<QualitativeState>& out) {
    // Constraints become checkable once all their variables are set;
    // variables are assigned in declaration order.
    std::vector<std::vector<int>> readyAt(static_cast<std::size_t>(m.varCount()));
    for (int c = 0; c < static_cast<int>(m.constraints.size()); ++c) {
        const ConstraintSpec& spec = m.constraints[static_cast<std::size_t>(c)];
        if (!opts.enforceExclude && spec.kind == ConstraintKind::Exclude) continue;
        int last = *std::max_element(spec.vars.begin(), spec.vars.end());
        readyAt[static_cast<std::size_t>(last)].push_back(c);
    }

    QualitativeState current;
    current.label = s.label == TimeLabel::Point ? TimeLabel::Interval
                                                : TimeLabel::Point;
    current.values.resize(static_cast<std::size_t>(m.varCount()));

    auto dfs = [&](auto&& self, int var) -> void {
        if (var == m.varCount()) {
            out.push_back(current);
            return;
        }
        for (const QualitativeValue& v : cand[static_cast<std::size_t>(var)]) {
            current.values[static_cast<std::size_t>(var)] = v;
            bool ok = true;
            for (int c : readyAt[static_cast<std::size_t>(var)])
                if (!checkConstraint(m, c, current).ok) {
                    ok = false;
                    break;
                }
            if (ok) self(self, var + 1);
        }
    };
    dfs(dfs, 0);
}

/// Landmarks a trajectory may actually reach. An outermost landmark no
/// corresponding-value tuple mentions is a horizon: it only caps the
/// space, the dynamics never attain it.
/// Variables that appear as the integral of a d/dt constraint. Only
/// these can run into a space edge in finite time; an algebraic
/// quantity inherits its value and cannot cross its own bound.
std::vector<bool> rateDriven(const QdeModel& m) {
    std::vector<bool> out(static_cast<std::size_t>(m.varCount()), false);
    for (const ConstraintSpec& spec : m.constraints)
        if (spec.kind == ConstraintKind::Ddt)
            out[static_cast<std::size_t>(spec.vars[0])] = true;
    return out;
}

std::vector<std::vector<bool>> attainableLandmarks(const QdeModel& m) {
    std::vector<std::vector<bool>> att(static_cast<std::size_t>(m.varCount()));
    for (int v = 0; v < m.varCount(); ++v) {
        const QuantitySpace& sp = m.spaces[static_cast<std::size_t>(v)];
        att[static_cast<std::size_t>(v)].assign(
            static_cast<std::size_t>(sp.size()), true);
        att[static_cast<std::size_t>(v)].front() = false;
        att[static_cast<std::size_t>(v)].back() = false;
    }
    for (const ConstraintSpec& spec : m.constraints)
        for (const auto& tup : spec.cvTuples)
            for (int i = 0; i < spec.arity(); ++i)
                att[static_cast<std::size_t>(
                    spec.vars[static_cast<std::size_t>(i)])]
                   [static_cast<std::size_t>(tup[static_cast<std::size_t>(i)])] =
                       true;
    return att;
}

/// Cross-product expansion of one state through the transition table,
/// with candidate lists already value-checked.
std::vector<QualitativeState> expand(const QdeModel& m,
                                     const QualitativeState& s,
                                     const CheckOptions& opts,
                                     const std::vector<std::vector<bool>>* att,
                                     const std::vector<bool>* rate) {
    const TimeLabel nextLabel =
        s.label == TimeLabel::Point ? TimeLabel::Interval : TimeLabel::Point;
    std::vector<std::vector<QualitativeValue>> cand(
        static_cast<std::size_t>(m.varCount()));
    for (int v = 0; v < m.varCount(); ++v) {
        cand[static_cast<std::size_t>(v)] = candidateTransitions(
            s.values[static_cast<std::size_t>(v)], s.label,
            m.spaces[static_cast<std::size_t>(v)]);
        std::erase_if(
            cand[static_cast<std::size_t>(v)],
            [&](const QualitativeValue& val) {
                if (!checkValue(m, v, val, nextLabel).ok) return true;
                if (att && val.mag.isLandmark() &&
                    val.mag != s.values[static_cast<std::size_t>(v)].mag) {
                    // Landing on a horizon landmark never happens in
                    // finite time.
                    if (!(*att)[static_cast<std::size_t>(v)]
                               [static_cast<std::size_t>(val.mag.lo)])
                        return true;
                    // Only a rate-driven quantity can run into a space
                    // edge still moving outward; there the run ends.
                    const QuantitySpace& sp =
                        m.spaces[static_cast<std::size_t>(v)];
                    bool outward =
                        (val.mag.lo == 0 && val.dir == QDir::Dec) ||
                        (val.mag.lo == sp.size() - 1 && val.dir == QDir::Inc);
                    if (outward &&
                        !(rate && (*rate)[static_cast<std::size_t>(v)]))
                        return true;
                }
                return false;
            });
        if (cand[static_cast<std::size_t>(v)].empty()) return {};
    }
    std::vector<QualitativeState> out;
    enumerateSuccessors(m, s, opts, cand, out);
    return out;
}

}  // namespace

std::vector<QualitativeState> gatewayStates(const QdeModel& m,
                                            const QualitativeState& s,
                                            const SimConfig& cfg) {
    CheckOptions opts{cfg.excludeMarginalSimultaneity};
    if (CheckResult r = checkState(m, s, opts); !r.ok)
        throw ModelError("cannot expand inconsistent state: " + r.reason);
    if (s.label != TimeLabel::Interval || isEquilibriumState(s)) return {};
    const std::vector<std::vector<bool>> att = attainableLandmarks(m);
    const std::vector<bool> rate = rateDriven(m);
    std::vector<QualitativeState> gateways = expand(m, s, opts, &att, &rate);
    std::erase_if(gateways, [&](const QualitativeState& g) {
        if (g.values == s.values) return true;
        if (!cfg.excludeMarginalSimultaneity) return false;
        EventSummary ev = summarizeEvents(m, s, g);
        // Approaching an equilibrium settles every quantity at once,
        // so the simultaneity of its landings is generic; still, the
        // collapse of more than two independent groups is ruled out.
        if (isEquilibriumState(g)) return ev.groups >= 3;
        // A finite-time event admits one transversal crossing group;
        // a group that only grazes its landmark never completes in
        // finite time unless the whole system settles with it.
        return ev.groups >= 2 || ev.tangentialGroup;
    });
    return gateways;
}

std::vector<QualitativeState> generateSuccessors(const QdeModel& m,
                                                 const QualitativeState& s,
                                                 const SimConfig& cfg) {
    CheckOptions opts{cfg.excludeMarginalSimultaneity};
    if (CheckResult r = checkState(m, s, opts); !r.ok)
        throw ModelError("cannot expand inconsistent state: " + r.reason);
    if (isEquilibriumState(s)) return {};

    const std::vector<std::vector<bool>> att = attainableLandmarks(m);
    const std::vector<bool> rate = rateDriven(m);
    std::vector<QualitativeState> out;
    if (s.label == TimeLabel::Point) {
        // A time point opens the next episode directly.
        out = expand(m, s, opts, &att, &rate);
    } else {
        // An episode ends at an event instant; the instant is kept as a
        // vertex only when the run stops there, otherwise its following
        // episodes are the successors.
        std::vector<QualitativeState> gateways = gatewayStates(m, s, cfg);
        for (const QualitativeState& g : gateways) {
            if (isEquilibriumState(g)) {
                out.push_back(g);
                continue;
            }
            std::vector<QualitativeState> next = expand(m, g, opts, &att, &rate);
            std::erase_if(next, [&](const QualitativeState& t) {
                return t.values == s.values;
            });
            if (next.empty())
                out.push_back(g);
            else
                out.insert(out.end(), next.begin(), next.end());
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<QualitativeState> initialStates(const QdeModel& m,
                                            const SimConfig& cfg) {
    CheckOptions opts{cfg.excludeMarginalSimultaneity};
    // The run opens with an episode, so seeds carry the interval label;
    // an all-steady seed is an equilibrium and becomes a point instead.
    PartialState p = PartialState::empty(m, TimeLabel::Interval);
    std::vector<std::pair<int, QMag>> magOnly;
    for (const InitSpec& init : m.init) {
        if (init.dir) {
            p.values[static_cast<std::size_t>(init.var)] =
                QualitativeValue{init.mag, *init.dir};
        } else {
            magOnly.emplace_back(init.var, init.mag);
        }
    }
    std::vector<QualitativeState> states = propagate(m, p, opts);
    const std::vector<std::vector<bool>> att = attainableLandmarks(m);
    const std::vector<bool> rate = rateDriven(m);
    std::erase_if(states, [&](const QualitativeState& s) {
        for (const auto& [var, mag] : magOnly)
            if (s.values[static_cast<std::size_t>(var)].mag != mag) return true;
        for (int v = 0; v < m.varCount(); ++v) {
            const QMag& mag = s.values[static_cast<std::size_t>(v)].mag;
            if (mag.isLandmark() &&
                !att[static_cast<std::size_t>(v)][static_cast<std::size_t>(mag.lo)])
                return true;
        }
        return false;
    });
    for (QualitativeState& s : states) {
        if (std::all_of(s.values.begin(), s.values.end(),
                        [](const QualitativeValue& v) {
                            return v.dir == QDir::Std;
                        }))
            s.label = TimeLabel::Point;
    }
    // Seeds open an episode, so the ban on persistent mid-interval
    // steadiness extends to them for the flow variables: a quantity
    // whose modeled derivative rests at zero while coupled drivers move
    // is a measure-zero coincidence. Quantities without a modeled rate
    // of their own may open steady (the chatter-free reading).
    std::erase_if(states, [&](const QualitativeState& s) {
        if (s.label != TimeLabel::Interval) return false;
        for (int v = 0; v < m.varCount(); ++v) {
            const QualitativeValue& val = s.values[static_cast<std::size_t>(v)];
            if (m.derivativeOf(v) >= 0 && !val.mag.isLandmark() &&
                val.dir == QDir::Std)
                return true;
        }
        return false;
    });
    return states;
}

StateTransitionGraph buildStg(const QdeModel& m, const SimConfig& cfg) {
    if (cfg.maxStates < 1) throw ModelError("maxStates must be at least 1");
    StateTransitionGraph g;
    std::map<std::string, int> index;

    auto intern = [&](const QualitativeState& s) -> int {
        std::string key = stateKey(s);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        if (g.size() >= cfg.maxStates)
            throw BoundedExplorationError(
                "state limit of " + std::to_string(cfg.maxStates) +
                    " exceeded during exploration",
                g);
        int id = g.size();
        index.emplace(std::move(key), id);
        g.vertices.push_back(s);
        g.succ.emplace_back();
        return id;
    };

    std::vector<QualitativeState> seeds = initialStates(m, cfg);
    if (seeds.empty())
        throw ModelError("no consistent initial state for model " + m.name);

    std::deque<int> frontier;
    for (const QualitativeState& s : seeds) {
        int id = intern(s);
        g.initials.push_back(id);
        frontier.push_back(id);
    }

    while (!frontier.empty()) {
        int id = frontier.front();
        frontier.pop_front();
        std::vector<QualitativeState> next =
            generateSuccessors(m, g.vertices[static_cast<std::size_t>(id)], cfg);
        for (const QualitativeState& t : next) {
            bool known = index.count(stateKey(t)) != 0;
            int tid = intern(t);
            g.succ[static_cast<std::size_t>(id)].push_back(tid);
            if (!known) frontier.push_back(tid);
        }
    }

    g.terminal.assign(static_cast<std::size_t>(g.size()), TerminalKind::None);
    for (int v = 0; v < g.size(); ++v) {
        if (!g.succ[static_cast<std::size_t>(v)].empty()) continue;
        const QualitativeState& s = g.vertices[static_cast<std::size_t>(v)];
        if (isEquilibriumState(s)) {
            g.terminal[static_cast<std::size_t>(v)] = TerminalKind::Equilibrium;
            continue;
        }
        bool saturated = false;
        for (int i = 0; i < m.varCount() && !saturated; ++i) {
            const QualitativeValue& val = s.values[static_cast<std::size_t>(i)];
            const QuantitySpace& sp = m.spaces[static_cast<std::size_t>(i)];
            saturated = val.mag.isLandmark() &&
                        ((val.mag.lo == 0 && val.dir == QDir::Dec) ||
                         (val.mag.lo == sp.size() - 1 && val.dir == QDir::Inc));
        }
        g.terminal[static_cast<std::size_t>(v)] =
            saturated ? TerminalKind::BoundSaturation : TerminalKind::DeadEnd;
    }
    return g;
}

}  // namespace qdesim
