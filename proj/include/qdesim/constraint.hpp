#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdesim/model.hpp"
#include "qdesim/qcore.hpp"

namespace qdesim {

struct CheckResult {
    bool ok = true;
    int constraintIndex = -1;  // -1 when not tied to one constraint
    std::string reason;

    static CheckResult consistent() { return {}; }
    static CheckResult violated(int index, std::string reason) {
        return {false, index, std::move(reason)};
    }
    explicit operator bool() const { return ok; }
};

/// Partially assigned state; unassigned variables are completed by
/// propagate.
struct PartialState {
    std::vector<std::optional<QualitativeValue>> values;
    TimeLabel label = TimeLabel::Point;

    static PartialState empty(const QdeModel& m, TimeLabel label);
    int assignedCount() const;
};

/// Per-constraint local consistency checks. The state must assign every
/// variable the constraint mentions.
CheckResult checkMono(const QdeModel& m, const ConstraintSpec& spec,
                      const QualitativeState& s);
CheckResult checkAdd(const QdeModel& m, const ConstraintSpec& spec,
                     const QualitativeState& s);
CheckResult checkDdt(const QdeModel& m, const ConstraintSpec& spec,
                     const QualitativeState& s);
CheckResult checkUShape(const QdeModel& m, const ConstraintSpec& spec,
                        const QualitativeState& s);
CheckResult checkExclude(const QdeModel& m, const ConstraintSpec& spec,
                         const QualitativeState& s);

CheckResult checkConstraint(const QdeModel& m, int constraintIndex,
                            const QualitativeState& s);

struct CheckOptions {
    /// When false, Exclude (cornot) constraints are skipped. The
    /// simulation engine uses this to expose marginal cases on demand.
    bool enforceExclude = true;
};

/// Value-level well-formedness for one variable: the magnitude lies in
/// the space, and over a time interval a variable resting on a landmark
/// cannot be moving.
CheckResult checkValue(const QdeModel& m, int var, const QualitativeValue& v,
                       TimeLabel label);

/// Full-state consistency: every value well-formed, every constraint
/// satisfied.
CheckResult checkState(const QdeModel& m, const QualitativeState& s,
                       const CheckOptions& opts = {});

/// All qualitative values of one quantity space (magnitudes in order,
/// three directions each).
std::vector<QualitativeValue> spaceValues(const QuantitySpace& space);

/// Enumerate every total state consistent with the model that extends
/// the partial assignment: candidate-set narrowing followed by
/// exhaustive search. Result is deduplicated and canonically ordered.
std::vector<QualitativeState> propagate(const QdeModel& m, const PartialState& p,
                                        const CheckOptions& opts = {});

}  // namespace qdesim
