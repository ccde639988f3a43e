#include "qdesim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace qdesim {

namespace {

std::string signatureKey(const std::vector<QualitativeValue>& sig) {
    std::string key;
    for (const auto& v : sig) {
        key.push_back(static_cast<char>('0' + v.mag.lo));
        key.push_back(static_cast<char>('0' + v.mag.hi));
        key.push_back(static_cast<char>('0' + static_cast<int>(v.dir)));
    }
    return key;
}

}  // namespace

GeneralizedStg clusterGstg(const QdeModel& m, const StateTransitionGraph& g,
                           const std::vector<int>& relevant) {
    if (relevant.empty()) throw ModelError("relevant variable set is empty");
    for (int v : relevant)
        if (v < 0 || v >= m.varCount())
            throw ModelError("relevant variable index out of range");

    // Raw partition by signature, then renumber by BFS from the initial
    // clusters so ids are stable and figure-like.
    std::map<std::string, int> rawIndex;
    std::vector<std::vector<QualitativeValue>> rawSigs;
    std::vector<int> rawOf(static_cast<std::size_t>(g.size()));
    for (int v = 0; v < g.size(); ++v) {
        std::vector<QualitativeValue> sig;
        sig.reserve(relevant.size());
        for (int r : relevant)
            sig.push_back(g.vertices[static_cast<std::size_t>(v)]
                              .values[static_cast<std::size_t>(r)]);
        std::string key = signatureKey(sig);
        auto [it, inserted] = rawIndex.emplace(std::move(key),
                                               static_cast<int>(rawSigs.size()));
        if (inserted) rawSigs.push_back(std::move(sig));
        rawOf[static_cast<std::size_t>(v)] = it->second;
    }

    const int n = static_cast<int>(rawSigs.size());
    std::vector<std::set<int>> rawSucc(static_cast<std::size_t>(n));
    std::vector<bool> rawSelf(static_cast<std::size_t>(n), false);
    for (int v = 0; v < g.size(); ++v)
        for (int w : g.succ[static_cast<std::size_t>(v)]) {
            int a = rawOf[static_cast<std::size_t>(v)];
            int b = rawOf[static_cast<std::size_t>(w)];
            if (a == b)
                rawSelf[static_cast<std::size_t>(a)] = true;
            else
                rawSucc[static_cast<std::size_t>(a)].insert(b);
        }

    std::vector<int> order(static_cast<std::size_t>(n), -1);
    std::deque<int> queue;
    int next = 0;
    auto visit = [&](int raw) {
        if (order[static_cast<std::size_t>(raw)] >= 0) return;
        order[static_cast<std::size_t>(raw)] = next++;
        queue.push_back(raw);
    };
    for (int v : g.initials) visit(rawOf[static_cast<std::size_t>(v)]);
    while (!queue.empty()) {
        int raw = queue.front();
        queue.pop_front();
        for (int b : rawSucc[static_cast<std::size_t>(raw)]) visit(b);
    }
    // Isolated or unreachable clusters keep a stable tail position.
    for (int raw = 0; raw < n; ++raw) visit(raw);

    GeneralizedStg out;
    out.relevant = relevant;
    out.signatures.resize(static_cast<std::size_t>(n));
    out.members.resize(static_cast<std::size_t>(n));
    out.succ.resize(static_cast<std::size_t>(n));
    out.selfLoop.assign(static_cast<std::size_t>(n), false);
    out.equilibrium.assign(static_cast<std::size_t>(n), false);
    out.clusterOf.resize(static_cast<std::size_t>(g.size()));
    for (int raw = 0; raw < n; ++raw) {
        int id = order[static_cast<std::size_t>(raw)];
        out.signatures[static_cast<std::size_t>(id)] =
            rawSigs[static_cast<std::size_t>(raw)];
        out.selfLoop[static_cast<std::size_t>(id)] =
            rawSelf[static_cast<std::size_t>(raw)];
        for (int b : rawSucc[static_cast<std::size_t>(raw)])
            out.succ[static_cast<std::size_t>(id)].push_back(
                order[static_cast<std::size_t>(b)]);
        std::sort(out.succ[static_cast<std::size_t>(id)].begin(),
                  out.succ[static_cast<std::size_t>(id)].end());
    }
    for (int v = 0; v < g.size(); ++v) {
        int id = order[static_cast<std::size_t>(rawOf[static_cast<std::size_t>(v)])];
        out.clusterOf[static_cast<std::size_t>(v)] = id;
        out.members[static_cast<std::size_t>(id)].push_back(v);
        if (g.terminal[static_cast<std::size_t>(v)] == TerminalKind::Equilibrium)
            out.equilibrium[static_cast<std::size_t>(id)] = true;
    }
    for (int v : g.initials) {
        int id = out.clusterOf[static_cast<std::size_t>(v)];
        if (std::find(out.initials.begin(), out.initials.end(), id) ==
            out.initials.end())
            out.initials.push_back(id);
    }
    return out;
}

std::vector<int> findEquilibria(const StateTransitionGraph& g) {
    std::vector<int> out;
    for (int v = 0; v < g.size(); ++v)
        if (g.terminal[static_cast<std::size_t>(v)] == TerminalKind::Equilibrium)
            out.push_back(v);
    return out;
}

std::vector<int> findEquilibria(const GeneralizedStg& g) {
    std::vector<int> out;
    for (int c = 0; c < g.size(); ++c)
        if (g.equilibrium[static_cast<std::size_t>(c)]) out.push_back(c);
    return out;
}

std::vector<int> stronglyConnectedComponents(
    const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    std::vector<int> index(static_cast<std::size_t>(n), -1);
    std::vector<int> low(static_cast<std::size_t>(n), 0);
    std::vector<bool> onStack(static_cast<std::size_t>(n), false);
    std::vector<int> stack;
    int nextIndex = 0;
    int nextComp = 0;

    // Iterative Tarjan; frames hold (vertex, child cursor).
    struct Frame {
        int v;
        std::size_t child;
    };
    for (int root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] >= 0) continue;
        std::vector<Frame> frames{{root, 0}};
        index[static_cast<std::size_t>(root)] =
            low[static_cast<std::size_t>(root)] = nextIndex++;
        stack.push_back(root);
        onStack[static_cast<std::size_t>(root)] = true;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.child < adj[static_cast<std::size_t>(f.v)].size()) {
                int w = adj[static_cast<std::size_t>(f.v)][f.child++];
                if (index[static_cast<std::size_t>(w)] < 0) {
                    index[static_cast<std::size_t>(w)] =
                        low[static_cast<std::size_t>(w)] = nextIndex++;
                    stack.push_back(w);
                    onStack[static_cast<std::size_t>(w)] = true;
                    frames.push_back({w, 0});
                } else if (onStack[static_cast<std::size_t>(w)]) {
                    low[static_cast<std::size_t>(f.v)] =
                        std::min(low[static_cast<std::size_t>(f.v)],
                                 index[static_cast<std::size_t>(w)]);
                }
                continue;
            }
            if (low[static_cast<std::size_t>(f.v)] ==
                index[static_cast<std::size_t>(f.v)]) {
                while (true) {
                    int w = stack.back();
                    stack.pop_back();
                    onStack[static_cast<std::size_t>(w)] = false;
                    comp[static_cast<std::size_t>(w)] = nextComp;
                    if (w == f.v) break;
                }
                ++nextComp;
            }
            int v = f.v;
            frames.pop_back();
            if (!frames.empty())
                low[static_cast<std::size_t>(frames.back().v)] =
                    std::min(low[static_cast<std::size_t>(frames.back().v)],
                             low[static_cast<std::size_t>(v)]);
        }
    }
    return comp;
}

std::vector<std::pair<int, int>> findIrreversible(const GeneralizedStg& g) {
    std::vector<int> comp = stronglyConnectedComponents(g.succ);
    std::vector<std::pair<int, int>> out;
    for (int u = 0; u < g.size(); ++u)
        for (int w : g.succ[static_cast<std::size_t>(u)])
            if (comp[static_cast<std::size_t>(u)] != comp[static_cast<std::size_t>(w)])
                out.emplace_back(u, w);
    return out;
}

std::vector<int> findCriticalBranchings(const GeneralizedStg& g) {
    auto irreversible = findIrreversible(g);
    std::vector<int> out;
    for (int u = 0; u < g.size(); ++u) {
        if (g.succ[static_cast<std::size_t>(u)].size() < 2) continue;
        bool hasIrr = std::any_of(
            irreversible.begin(), irreversible.end(),
            [&](const std::pair<int, int>& e) { return e.first == u; });
        if (hasIrr) out.push_back(u);
    }
    return out;
}

std::vector<int> markOvercapitalization(const GeneralizedStg& g, int harvestVar,
                                        int capitalVar) {
    auto pos = [&](int var) {
        auto it = std::find(g.relevant.begin(), g.relevant.end(), var);
        if (it == g.relevant.end())
            throw ModelError("over-capitalization variable is not relevant");
        return static_cast<std::size_t>(it - g.relevant.begin());
    };
    std::size_t h = pos(harvestVar);
    std::size_t k = pos(capitalVar);
    std::vector<int> out;
    for (int c = 0; c < g.size(); ++c) {
        const auto& sig = g.signatures[static_cast<std::size_t>(c)];
        if (sig[h].dir == QDir::Dec && sig[k].dir == QDir::Inc) out.push_back(c);
    }
    return out;
}

UnavoidabilityResult checkUnavoidable(const GeneralizedStg& g, int start,
                                      const std::vector<int>& gate,
                                      const std::vector<int>& targets) {
    if (start < 0 || start >= g.size())
        throw ModelError("start cluster out of range");
    std::vector<bool> gated(static_cast<std::size_t>(g.size()), false);
    for (int c : gate) gated[static_cast<std::size_t>(c)] = true;
    std::vector<bool> isTarget(static_cast<std::size_t>(g.size()), false);
    for (int c : targets) isTarget[static_cast<std::size_t>(c)] = true;

    UnavoidabilityResult res;
    res.unavoidable = true;
    if (gated[static_cast<std::size_t>(start)]) return res;

    std::vector<int> parent(static_cast<std::size_t>(g.size()), -2);
    std::deque<int> queue{start};
    parent[static_cast<std::size_t>(start)] = -1;
    while (!queue.empty()) {
        int c = queue.front();
        queue.pop_front();
        if (isTarget[static_cast<std::size_t>(c)]) {
            res.unavoidable = false;
            for (int at = c; at >= 0; at = parent[static_cast<std::size_t>(at)])
                res.witness.push_back(at);
            std::reverse(res.witness.begin(), res.witness.end());
            return res;
        }
        for (int w : g.succ[static_cast<std::size_t>(c)]) {
            if (gated[static_cast<std::size_t>(w)] ||
                parent[static_cast<std::size_t>(w)] != -2)
                continue;
            parent[static_cast<std::size_t>(w)] = c;
            queue.push_back(w);
        }
    }
    return res;
}

std::vector<Behavior> extractBehaviors(const StateTransitionGraph& g, int from,
                                       const BehaviorOptions& options) {
    if (from < 0 || from >= g.size()) throw ModelError("vertex out of range");
    std::vector<Behavior> out;
    std::vector<int> visits(static_cast<std::size_t>(g.size()), 0);
    std::vector<int> path;

    auto dfs = [&](auto&& self, int v) -> void {
        path.push_back(v);
        ++visits[static_cast<std::size_t>(v)];
        bool stop = options.to ? v == *options.to
                               : g.succ[static_cast<std::size_t>(v)].empty();
        if (stop) {
            out.push_back({path, g.terminal[static_cast<std::size_t>(v)], false});
        } else {
            bool extended = false;
            for (int w : g.succ[static_cast<std::size_t>(v)]) {
                if (visits[static_cast<std::size_t>(w)] > options.maxRevisits)
                    continue;
                extended = true;
                self(self, w);
            }
            // Every continuation would exceed the revisit budget: the
            // path is cut inside a cycle.
            if (!extended) out.push_back({path, TerminalKind::None, true});
        }
        --visits[static_cast<std::size_t>(v)];
        path.pop_back();
    };
    dfs(dfs, from);
    return out;
}

std::optional<std::string> checkContainment(
    const StateTransitionGraph& g, const std::vector<QualitativeState>& path) {
    std::map<std::string, int> index;
    for (int v = 0; v < g.size(); ++v)
        index.emplace(stateKey(g.vertices[static_cast<std::size_t>(v)]), v);

    int prev = -1;
    for (std::size_t i = 0; i < path.size(); ++i) {
        auto it = index.find(stateKey(path[i]));
        if (it == index.end()) {
            // The graph keeps event instants only when the run stops
            // there; a passing point reading is implied by the episode
            // edge around it. An equilibrium reading must be a vertex.
            if (path[i].label == TimeLabel::Point &&
                !isEquilibriumState(path[i]))
                continue;
            return "state #" + std::to_string(i) + " is not a graph vertex";
        }
        if (prev >= 0) {
            const auto& succ = g.succ[static_cast<std::size_t>(prev)];
            if (std::find(succ.begin(), succ.end(), it->second) == succ.end())
                return "missing edge into state #" + std::to_string(i);
        }
        prev = it->second;
    }
    return std::nullopt;
}

namespace {

struct Run {
    std::vector<QualitativeValue> assignment;
    int count = 0;
};

/// One qualitative step at most between consecutive runs, per variable.
bool adjacentStep(const QualitativeValue& a, const QualitativeValue& b) {
    if (a == b) return true;
    if (a.mag == b.mag) return true;  // direction change only
    if (a.mag.isLandmark() && !b.mag.isLandmark())
        return b.mag.lo == a.mag.lo || b.mag.hi == a.mag.lo;
    if (!a.mag.isLandmark() && b.mag.isLandmark())
        return b.mag.lo == a.mag.lo || b.mag.lo == a.mag.hi;
    // Interval to adjacent interval: one landmark crossing the sampling
    // happened to straddle.
    return a.mag.hi == b.mag.lo || a.mag.lo == b.mag.hi;
}

/// Point value bridging two interval-state values per the continuity
/// tables.
QualitativeValue impliedPointValue(const QualitativeValue& a,
                                   const QualitativeValue& c) {
    if (a == c) return a;
    if (a.mag == c.mag) return {a.mag, a.dir == c.dir ? a.dir : QDir::Std};
    int landmark;
    if (!a.mag.isLandmark() && !c.mag.isLandmark()) {
        landmark = a.mag.hi == c.mag.lo ? a.mag.hi : a.mag.lo;
    } else if (a.mag.isLandmark()) {
        landmark = a.mag.lo;
    } else {
        landmark = c.mag.lo;
    }
    return {QMag::at(landmark), a.dir == c.dir ? a.dir : QDir::Std};
}

}  // namespace

std::vector<QualitativeState> abstractNumericTrace(
    const NumericTrace& t, const QdeModel& m,
    const std::vector<std::vector<double>>& landmarkValues,
    const AbstractionOptions& options) {
    const std::size_t samples = t.times.size();
    if (samples < 2) throw TraceResolutionError("trace needs at least 2 samples");
    if (t.samples.size() != static_cast<std::size_t>(m.varCount()))
        throw TraceResolutionError("trace does not cover the model's variables");
    for (const auto& row : t.samples)
        if (row.size() != samples)
            throw TraceResolutionError("ragged trace sample rows");
    for (std::size_t i = 1; i < samples; ++i)
        if (!(t.times[i] > t.times[i - 1]))
            throw TraceResolutionError("timestamps not strictly increasing");

    // Per-variable tolerances from the numeric range of its landmarks.
    std::vector<double> magTol(static_cast<std::size_t>(m.varCount()));
    std::vector<double> dirTol(static_cast<std::size_t>(m.varCount()));
    for (int v = 0; v < m.varCount(); ++v) {
        const auto& lm = landmarkValues[static_cast<std::size_t>(v)];
        if (static_cast<int>(lm.size()) !=
            m.spaces[static_cast<std::size_t>(v)].size())
            throw TraceResolutionError("landmark values do not match the space");
        for (std::size_t i = 1; i < lm.size(); ++i)
            if (!(lm[i] > lm[i - 1]))
                throw TraceResolutionError("landmark values not increasing");
        double range = lm.back() - lm.front();
        magTol[static_cast<std::size_t>(v)] = options.magTolScale * range;
        dirTol[static_cast<std::size_t>(v)] = options.dirTolScale * range;
    }

    auto magnitudeAt = [&](int v, double value) -> QMag {
        const auto& lm = landmarkValues[static_cast<std::size_t>(v)];
        const double tol = magTol[static_cast<std::size_t>(v)];
        int hit = -1;
        for (std::size_t i = 0; i < lm.size(); ++i) {
            if (std::abs(value - lm[i]) <= tol) {
                if (hit >= 0)
                    throw TraceResolutionError(
                        "ambiguous sample: two landmarks within tolerance");
                hit = static_cast<int>(i);
            }
        }
        if (hit >= 0) return QMag::at(hit);
        if (value < lm.front() || value > lm.back())
            throw TraceResolutionError(
                "sample outside the quantity space bounds of " +
                m.varNames[static_cast<std::size_t>(v)]);
        for (std::size_t i = 0; i + 1 < lm.size(); ++i)
            if (value > lm[i] && value < lm[i + 1])
                return QMag::interval(static_cast<int>(i));
        throw TraceResolutionError("sample could not be placed");
    };

    auto directionAt = [&](int v, std::size_t i) -> QDir {
        // The declared derivative variable is the authoritative sign
        // where one exists; a centered difference otherwise.
        int dv = m.derivativeOf(v);
        if (dv >= 0) {
            int zero = m.spaces[static_cast<std::size_t>(dv)].indexOf("0");
            double zeroVal =
                landmarkValues[static_cast<std::size_t>(dv)][static_cast<std::size_t>(
                    zero)];
            double d = t.samples[static_cast<std::size_t>(dv)][i] - zeroVal;
            if (std::abs(d) <= dirTol[static_cast<std::size_t>(dv)])
                return QDir::Std;
            return d > 0 ? QDir::Inc : QDir::Dec;
        }
        std::size_t lo = i > 0 ? i - 1 : i;
        std::size_t hi = i + 1 < samples ? i + 1 : i;
        double dv2 = t.samples[static_cast<std::size_t>(v)][hi] -
                     t.samples[static_cast<std::size_t>(v)][lo];
        double dt = t.times[hi] - t.times[lo];
        double slope = dv2 / dt;
        double tol = dirTol[static_cast<std::size_t>(v)] / (t.times.back() - t.times.front());
        if (std::abs(slope) <= tol) return QDir::Std;
        return slope > 0 ? QDir::Inc : QDir::Dec;
    };

    std::vector<Run> runs;
    for (std::size_t i = 0; i < samples; ++i) {
        std::vector<QualitativeValue> a(static_cast<std::size_t>(m.varCount()));
        for (int v = 0; v < m.varCount(); ++v)
            a[static_cast<std::size_t>(v)] = {
                magnitudeAt(v, t.samples[static_cast<std::size_t>(v)][i]),
                directionAt(v, i)};
        if (!runs.empty() && runs.back().assignment == a) {
            ++runs.back().count;
        } else {
            if (!runs.empty())
                for (int v = 0; v < m.varCount(); ++v)
                    if (!adjacentStep(
                            runs.back().assignment[static_cast<std::size_t>(v)],
                            a[static_cast<std::size_t>(v)]))
                        throw TraceResolutionError(
                            "multi-event jump between samples " +
                            std::to_string(i - 1) + " and " + std::to_string(i));
            runs.push_back({std::move(a), 1});
        }
    }

    auto pointOnly = [&](const Run& r) {
        for (const auto& v : r.assignment)
            if (v.mag.isLandmark() && v.dir != QDir::Std) return true;
        return false;
    };

    std::vector<QualitativeState> out;
    auto emit = [&](const std::vector<QualitativeValue>& a, TimeLabel label) {
        out.push_back({a, label});
    };

    bool allStd = std::all_of(
        runs.front().assignment.begin(), runs.front().assignment.end(),
        [](const QualitativeValue& v) { return v.dir == QDir::Std; });
    if (runs.size() == 1 && allStd) {
        emit(runs.front().assignment, TimeLabel::Point);
        return out;
    }

    for (std::size_t r = 0; r < runs.size(); ++r) {
        // Instantaneous readings are time points; anything that holds
        // across samples is an interval.
        bool isPoint = pointOnly(runs[r]) ||
                       (runs[r].count == 1 && r > 0 && r + 1 < runs.size());
        if (isPoint) {
            if (out.empty() || out.back().label != TimeLabel::Interval)
                throw TraceResolutionError(
                    "two point readings without an interval between them");
            emit(runs[r].assignment, TimeLabel::Point);
        } else {
            if (out.empty()) {
                emit(runs[r].assignment, TimeLabel::Point);
            } else if (out.back().label == TimeLabel::Interval) {
                std::vector<QualitativeValue> bridge(
                    static_cast<std::size_t>(m.varCount()));
                for (int v = 0; v < m.varCount(); ++v)
                    bridge[static_cast<std::size_t>(v)] = impliedPointValue(
                        out.back().values[static_cast<std::size_t>(v)],
                        runs[r].assignment[static_cast<std::size_t>(v)]);
                emit(bridge, TimeLabel::Point);
            }
            emit(runs[r].assignment, TimeLabel::Interval);
        }
    }
    return out;
}

}  // namespace qdesim
