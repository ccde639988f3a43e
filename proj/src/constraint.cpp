#include "qdesim/constraint.hpp"

#include <algorithm>
#include <cassert>

namespace qdesim {

namespace {

const QualitativeValue& valueOf(const QualitativeState& s, int var) {
    return s.values[static_cast<std::size_t>(var)];
}

/// Aggregation shared by the Mono direction and corresponding-value
/// rules: all contributions zero -> result must be zero; one definite
/// sign (rest zero) -> result must be that sign; mixed signs -> no
/// requirement.
std::optional<Sign> aggregate(const std::vector<Sign>& contributions) {
    bool hasNeg = false, hasPos = false;
    for (Sign s : contributions) {
        if (s == Sign::Neg) hasNeg = true;
        if (s == Sign::Pos) hasPos = true;
    }
    if (hasNeg && hasPos) return std::nullopt;
    if (hasPos) return Sign::Pos;
    if (hasNeg) return Sign::Neg;
    return Sign::Zero;
}

std::string describe(const QdeModel& m, const ConstraintSpec& spec,
                     const std::string& rule) {
    return rule + " violated by " + spec.source;
}

}  // namespace

PartialState PartialState::empty(const QdeModel& m, TimeLabel label) {
    PartialState p;
    p.values.resize(static_cast<std::size_t>(m.varCount()));
    p.label = label;
    return p;
}

int PartialState::assignedCount() const {
    int n = 0;
    for (const auto& v : values) n += v.has_value() ? 1 : 0;
    return n;
}

CheckResult checkMono(const QdeModel& m, const ConstraintSpec& spec,
                      const QualitativeState& s) {
    const int nArgs = spec.arity() - 1;
    const QualitativeValue& result = valueOf(s, spec.vars[static_cast<std::size_t>(nArgs)]);

    std::vector<Sign> contrib(static_cast<std::size_t>(nArgs));
    for (int i = 0; i < nArgs; ++i)
        contrib[static_cast<std::size_t>(i)] =
            signMul(spec.signature[static_cast<std::size_t>(i)],
                    dirSign(valueOf(s, spec.vars[static_cast<std::size_t>(i)]).dir));
    if (auto req = aggregate(contrib); req && dirSign(result.dir) != *req)
        return CheckResult::violated(-1, describe(m, spec, "monotone direction rule"));

    for (const auto& tup : spec.cvTuples) {
        for (int i = 0; i < nArgs; ++i)
            contrib[static_cast<std::size_t>(i)] = signMul(
                spec.signature[static_cast<std::size_t>(i)],
                signRelative(valueOf(s, spec.vars[static_cast<std::size_t>(i)]),
                             tup[static_cast<std::size_t>(i)]));
        if (auto req = aggregate(contrib);
            req && signRelative(result, tup[static_cast<std::size_t>(nArgs)]) != *req)
            return CheckResult::violated(
                -1, describe(m, spec, "monotone corresponding-value rule"));
    }
    return CheckResult::consistent();
}

CheckResult checkAdd(const QdeModel& m, const ConstraintSpec& spec,
                     const QualitativeState& s) {
    const QualitativeValue& a = valueOf(s, spec.vars[0]);
    const QualitativeValue& b = valueOf(s, spec.vars[1]);
    const QualitativeValue& c = valueOf(s, spec.vars[2]);

    if (!contains(signAdd(dirSign(a.dir), dirSign(b.dir)), dirSign(c.dir)))
        return CheckResult::violated(-1, describe(m, spec, "addition direction rule"));

    for (const auto& tup : spec.cvTuples) {
        SignSet sum = signAdd(signRelative(a, tup[0]), signRelative(b, tup[1]));
        if (!contains(sum, signRelative(c, tup[2])))
            return CheckResult::violated(
                -1, describe(m, spec, "addition corresponding-value rule"));
    }
    return CheckResult::consistent();
}

CheckResult checkDdt(const QdeModel& m, const ConstraintSpec& spec,
                     const QualitativeState& s) {
    const QualitativeValue& x = valueOf(s, spec.vars[0]);
    const QualitativeValue& dx = valueOf(s, spec.vars[1]);
    const QuantitySpace& dxSpace = m.spaces[static_cast<std::size_t>(spec.vars[1])];
    int zero = dxSpace.indexOf("0");
    if (zero < 0)
        return CheckResult::violated(
            -1, "derivative variable lacks landmark 0 in " + spec.source);
    if (dirSign(x.dir) != signRelative(dx, zero))
        return CheckResult::violated(-1, describe(m, spec, "derivative sign rule"));
    return CheckResult::consistent();
}

CheckResult checkUShape(const QdeModel& m, const ConstraintSpec& spec,
                        const QualitativeState& s) {
    const QualitativeValue& x = valueOf(s, spec.vars[0]);
    const QualitativeValue& y = valueOf(s, spec.vars[1]);
    assert(!spec.cvTuples.empty());
    const int critX = spec.cvTuples[0][0];
    const int critY = spec.cvTuples[0][1];

    const Sign side = signRelative(x, critX);
    if (side == Sign::Zero) {
        // At the peak the function value is pinned and momentarily flat.
        if (!(y.mag == QMag::at(critY)) || y.dir != QDir::Std)
            return CheckResult::violated(-1, describe(m, spec, "peak rule"));
    } else {
        const Sign branch = side == Sign::Neg ? Sign::Pos : Sign::Neg;
        if (dirSign(y.dir) != signMul(branch, dirSign(x.dir)))
            return CheckResult::violated(-1, describe(m, spec, "branch direction rule"));
        if (signRelative(y, critY) != Sign::Neg)
            return CheckResult::violated(-1, describe(m, spec, "below-peak rule"));
        // Further pairs act as monotone correspondences on their branch.
        for (std::size_t t = 1; t < spec.cvTuples.size(); ++t) {
            const int p = spec.cvTuples[t][0];
            const int q = spec.cvTuples[t][1];
            Sign pSide = p < critX ? Sign::Neg : p > critX ? Sign::Pos : Sign::Zero;
            if (pSide != side) continue;
            Sign req = signMul(branch, signRelative(x, p));
            if (signRelative(y, q) != req)
                return CheckResult::violated(
                    -1, describe(m, spec, "branch corresponding-value rule"));
        }
    }
    return CheckResult::consistent();
}

CheckResult checkExclude(const QdeModel& m, const ConstraintSpec& spec,
                         const QualitativeState& s) {
    for (const auto& tup : spec.cvTuples) {
        bool all = true;
        for (int i = 0; i < spec.arity() && all; ++i)
            all = valueOf(s, spec.vars[static_cast<std::size_t>(i)]).mag ==
                  QMag::at(tup[static_cast<std::size_t>(i)]);
        if (all)
            return CheckResult::violated(-1, describe(m, spec, "exclusion rule"));
    }
    return CheckResult::consistent();
}

CheckResult checkConstraint(const QdeModel& m, int constraintIndex,
                            const QualitativeState& s) {
    const ConstraintSpec& spec =
        m.constraints[static_cast<std::size_t>(constraintIndex)];
    CheckResult r;
    switch (spec.kind) {
        case ConstraintKind::Add: r = checkAdd(m, spec, s); break;
        case ConstraintKind::Ddt: r = checkDdt(m, spec, s); break;
        case ConstraintKind::Mono: r = checkMono(m, spec, s); break;
        case ConstraintKind::UMinus: r = checkUShape(m, spec, s); break;
        case ConstraintKind::Exclude: r = checkExclude(m, spec, s); break;
    }
    if (!r.ok) r.constraintIndex = constraintIndex;
    return r;
}

CheckResult checkValue(const QdeModel& m, int var, const QualitativeValue& v,
                       TimeLabel label) {
    const QuantitySpace& sp = m.spaces[static_cast<std::size_t>(var)];
    if (!v.mag.valid(sp))
        return CheckResult::violated(
            -1, "magnitude outside quantity space of " +
                    m.varNames[static_cast<std::size_t>(var)]);
    if (label == TimeLabel::Interval && v.mag.isLandmark() && v.dir != QDir::Std)
        return CheckResult::violated(
            -1, m.varNames[static_cast<std::size_t>(var)] +
                    " cannot rest on a landmark while moving over an interval");
    return CheckResult::consistent();
}

CheckResult checkState(const QdeModel& m, const QualitativeState& s,
                       const CheckOptions& opts) {
    if (static_cast<int>(s.values.size()) != m.varCount())
        return CheckResult::violated(-1, "state does not assign every variable");
    for (int v = 0; v < m.varCount(); ++v) {
        CheckResult r = checkValue(m, v, s.values[static_cast<std::size_t>(v)], s.label);
        if (!r.ok) return r;
    }
    for (int c = 0; c < static_cast<int>(m.constraints.size()); ++c) {
        if (!opts.enforceExclude &&
            m.constraints[static_cast<std::size_t>(c)].kind == ConstraintKind::Exclude)
            continue;
        CheckResult r = checkConstraint(m, c, s);
        if (!r.ok) return r;
    }
    return CheckResult::consistent();
}

std::vector<QualitativeValue> spaceValues(const QuantitySpace& space) {
    std::vector<QualitativeValue> out;
    for (int i = 0; i < space.size(); ++i) {
        for (QDir d : {QDir::Dec, QDir::Std, QDir::Inc})
            out.push_back({QMag::at(i), d});
        if (i + 1 < space.size())
            for (QDir d : {QDir::Dec, QDir::Std, QDir::Inc})
                out.push_back({QMag::interval(i), d});
    }
    return out;
}

namespace {

/// Search state shared by the narrowing and enumeration phases.
struct Search {
    const QdeModel& model;
    TimeLabel label;
    CheckOptions opts;
    std::vector<std::vector<QualitativeValue>> candidates;  // per variable
    std::vector<std::vector<int>> constraintsOf;            // var -> constraint ids

    Search(const QdeModel& m, const PartialState& p, const CheckOptions& o)
        : model(m), label(p.label), opts(o) {
        const int n = m.varCount();
        candidates.resize(static_cast<std::size_t>(n));
        constraintsOf.resize(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) {
            auto& cand = candidates[static_cast<std::size_t>(v)];
            if (p.values[static_cast<std::size_t>(v)]) {
                cand.push_back(*p.values[static_cast<std::size_t>(v)]);
            } else {
                cand = spaceValues(m.spaces[static_cast<std::size_t>(v)]);
            }
            std::erase_if(cand, [&](const QualitativeValue& val) {
                return !checkValue(m, v, val, label).ok;
            });
        }
        for (int c = 0; c < static_cast<int>(m.constraints.size()); ++c) {
            if (!opts.enforceExclude &&
                m.constraints[static_cast<std::size_t>(c)].kind ==
                    ConstraintKind::Exclude)
                continue;
            for (int v : m.constraints[static_cast<std::size_t>(c)].vars)
                constraintsOf[static_cast<std::size_t>(v)].push_back(c);
        }
    }

    /// True when some choice of candidate values for the constraint's
    /// other variables satisfies it with `fixedVar` pinned to `value`.
    bool supported(int constraint, int fixedVar, const QualitativeValue& value) {
        const ConstraintSpec& spec =
            model.constraints[static_cast<std::size_t>(constraint)];
        QualitativeState probe;
        probe.label = label;
        probe.values.resize(static_cast<std::size_t>(model.varCount()));
        probe.values[static_cast<std::size_t>(fixedVar)] = value;

        std::vector<int> others;
        for (int v : spec.vars)
            if (v != fixedVar &&
                std::find(others.begin(), others.end(), v) == others.end())
                others.push_back(v);

        std::vector<std::size_t> idx(others.size(), 0);
        while (true) {
            for (std::size_t i = 0; i < others.size(); ++i)
                probe.values[static_cast<std::size_t>(others[i])] =
                    candidates[static_cast<std::size_t>(others[i])][idx[i]];
            if (checkConstraint(model, constraint, probe).ok) return true;
            std::size_t i = 0;
            for (; i < others.size(); ++i) {
                if (++idx[i] < candidates[static_cast<std::size_t>(others[i])].size())
                    break;
                idx[i] = 0;
            }
            if (i == others.size()) return false;
        }
    }

    /// Arc-consistency style pruning to a fixpoint. Returns false when
    /// some domain empties.
    bool narrow() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (int c = 0; c < static_cast<int>(model.constraints.size()); ++c) {
                const ConstraintSpec& spec =
                    model.constraints[static_cast<std::size_t>(c)];
                if (!opts.enforceExclude && spec.kind == ConstraintKind::Exclude)
                    continue;
                for (int v : spec.vars) {
                    auto& cand = candidates[static_cast<std::size_t>(v)];
                    auto removed = std::erase_if(cand, [&](const QualitativeValue& val) {
                        return !supported(c, v, val);
                    });
                    if (cand.empty()) return false;
                    if (removed) changed = true;
                }
            }
        }
        return true;
    }

    void enumerate(std::vector<QualitativeState>& out) {
        QualitativeState current;
        current.label = label;
        current.values.resize(static_cast<std::size_t>(model.varCount()));

        // Fixed first-fail order: fewest candidates first, declaration
        // order as tiebreaker.
        std::vector<int> order(static_cast<std::size_t>(model.varCount()));
        for (int v = 0; v < model.varCount(); ++v)
            order[static_cast<std::size_t>(v)] = v;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return candidates[static_cast<std::size_t>(a)].size() <
                   candidates[static_cast<std::size_t>(b)].size();
        });

        std::vector<bool> assigned(static_cast<std::size_t>(model.varCount()), false);
        dfs(0, order, assigned, current, out);
    }

private:
    bool constraintReady(const ConstraintSpec& spec, const std::vector<bool>& assigned) {
        for (int v : spec.vars)
            if (!assigned[static_cast<std::size_t>(v)]) return false;
        return true;
    }

    void dfs(std::size_t depth, const std::vector<int>& order,
             std::vector<bool>& assigned, QualitativeState& current,
             std::vector<QualitativeState>& out) {
        if (depth == order.size()) {
            out.push_back(current);
            return;
        }
        const int var = order[depth];
        for (const QualitativeValue& val : candidates[static_cast<std::size_t>(var)]) {
            current.values[static_cast<std::size_t>(var)] = val;
            assigned[static_cast<std::size_t>(var)] = true;
            bool ok = true;
            for (int c : constraintsOf[static_cast<std::size_t>(var)]) {
                const ConstraintSpec& spec =
                    model.constraints[static_cast<std::size_t>(c)];
                if (constraintReady(spec, assigned) &&
                    !checkConstraint(model, c, current).ok) {
                    ok = false;
                    break;
                }
            }
            if (ok) dfs(depth + 1, order, assigned, current, out);
            assigned[static_cast<std::size_t>(var)] = false;
        }
    }
};

}  // namespace

std::vector<QualitativeState> propagate(const QdeModel& m, const PartialState& p,
                                        const CheckOptions& opts) {
    if (static_cast<int>(p.values.size()) != m.varCount())
        throw ModelError("partial state does not cover the model's variables");

    Search search(m, p, opts);
    std::vector<QualitativeState> out;
    if (!search.narrow()) return out;
    search.enumerate(out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace qdesim
