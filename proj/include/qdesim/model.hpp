#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdesim/qcore.hpp"

namespace qdesim {

enum class ConstraintKind : std::uint8_t { Add, Ddt, Mono, UMinus, Exclude };

std::string_view constraintKindName(ConstraintKind k);

/// One constraint of a QDE. Variables are indices into the model's
/// declaration order; cv tuples hold landmark indices, one per
/// argument position.
struct ConstraintSpec {
    ConstraintKind kind = ConstraintKind::Add;
    std::vector<Sign> signature;          // Mono only; excludes zero
    std::vector<int> vars;                // argument variables, ordered
    std::vector<std::vector<int>> cvTuples;
    std::string source;                   // original text, for diagnostics

    int arity() const { return static_cast<int>(vars.size()); }

    // source is a diagnostic aid, not part of constraint identity
    bool operator==(const ConstraintSpec& o) const {
        return kind == o.kind && signature == o.signature && vars == o.vars &&
               cvTuples == o.cvTuples;
    }
};

/// Partial initial-value declaration for one variable.
struct InitSpec {
    int var = 0;
    QMag mag;
    std::optional<QDir> dir;

    bool operator==(const InitSpec&) const = default;
};

struct QdeModel {
    std::string name;
    std::vector<std::string> varNames;    // declaration order
    std::vector<QuantitySpace> spaces;    // parallel to varNames
    std::vector<ConstraintSpec> constraints;
    std::vector<int> relevant;            // subset of variables
    std::vector<InitSpec> init;

    int varCount() const { return static_cast<int>(varNames.size()); }
    int varIndex(std::string_view name) const;
    int requireVar(std::string_view name) const;

    /// Derivative variable of v per a d/dt constraint, or -1.
    int derivativeOf(int var) const;

    bool operator==(const QdeModel&) const = default;
};

/// Syntax or resolution failure, with 1-based position.
struct ParseError : std::runtime_error {
    int line;
    int col;
    ParseError(std::string msg, int line_, int col_)
        : std::runtime_error(msg + " (line " + std::to_string(line_) + ", col " +
                             std::to_string(col_) + ")"),
          line(line_),
          col(col_) {}
};

/// Parse a .qde document. Throws ParseError on syntax errors, unknown
/// names, arity mismatches and duplicate declarations. Semantic
/// invariants beyond that are reported by validateModel.
QdeModel parseModel(std::string_view text);

enum class Severity : std::uint8_t { Warning, Error };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string location;  // e.g. variable or constraint source text
    std::string message;
};

std::vector<Diagnostic> validateModel(const QdeModel& m);

/// Deterministic canonical rendering; parseModel(serializeModel(m)) == m.
std::string serializeModel(const QdeModel& m);

/// parse + validate, throwing ModelError on error-severity diagnostics.
QdeModel loadModel(std::string_view text);

}  // namespace qdesim
