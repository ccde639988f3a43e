#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qdesim {

/// Thrown for semantic errors in models or states (unknown landmark,
/// magnitude outside its space, arity mismatch at check time).
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Direction of change of a variable: decreasing, steady, increasing.
enum class QDir : std::uint8_t { Dec = 0, Std = 1, Inc = 2 };

/// Sign of a real quantity. "Any" never appears inside a state; check
/// results use SignSet instead.
enum class Sign : std::int8_t { Neg = -1, Zero = 0, Pos = 1 };

/// Small set of signs, used as the result of qualitative addition.
/// Bit 0 = Neg, bit 1 = Zero, bit 2 = Pos.
using SignSet = std::uint8_t;

inline constexpr SignSet kSignAll = 0b111;

constexpr SignSet signSet(Sign s) {
    return static_cast<SignSet>(1u << (static_cast<int>(s) + 1));
}

constexpr bool contains(SignSet set, Sign s) { return (set & signSet(s)) != 0; }

/// Qualitative sum of two signs. Opposite definite signs are
/// unconstrained; zero is neutral.
constexpr SignSet signAdd(Sign a, Sign b) {
    if (a == Sign::Zero) return signSet(b);
    if (b == Sign::Zero) return signSet(a);
    if (a == b) return signSet(a);
    return kSignAll;
}

constexpr Sign dirSign(QDir d) {
    return d == QDir::Dec ? Sign::Neg : d == QDir::Inc ? Sign::Pos : Sign::Zero;
}

constexpr QDir signDir(Sign s) {
    return s == Sign::Neg ? QDir::Dec : s == Sign::Pos ? QDir::Inc : QDir::Std;
}

constexpr Sign negate(Sign s) { return static_cast<Sign>(-static_cast<int>(s)); }

/// Product of two signs (used to fold a monotonicity signature into an
/// argument's direction or relative position).
constexpr Sign signMul(Sign a, Sign b) {
    return static_cast<Sign>(static_cast<int>(a) * static_cast<int>(b));
}

std::string_view dirName(QDir d);
std::string_view signName(Sign s);

/// Totally ordered sequence of symbolic landmarks. The first and last
/// entries are the hard bounds of the space.
struct QuantitySpace {
    std::vector<std::string> landmarks;  // ordered low -> high, unique

    int size() const { return static_cast<int>(landmarks.size()); }

    /// Index of a landmark by name, or -1.
    int indexOf(std::string_view name) const;

    /// Index of a landmark, throwing ModelError when absent.
    int require(std::string_view name) const;

    bool operator==(const QuantitySpace&) const = default;
};

/// Qualitative magnitude: at a landmark (lo == hi) or inside the open
/// interval between two adjacent landmarks (hi == lo + 1).
struct QMag {
    int lo = 0;
    int hi = 0;

    static QMag at(int i) { return QMag{i, i}; }
    static QMag interval(int i) { return QMag{i, i + 1}; }

    bool isLandmark() const { return lo == hi; }
    bool valid(const QuantitySpace& s) const {
        return lo >= 0 && hi < s.size() && (hi == lo || hi == lo + 1);
    }

    auto operator<=>(const QMag&) const = default;
};

struct QualitativeValue {
    QMag mag;
    QDir dir = QDir::Std;

    auto operator<=>(const QualitativeValue&) const = default;
};

enum class TimeLabel : std::uint8_t { Point = 0, Interval = 1 };

/// Total assignment of qualitative values to the model's variables, in
/// declaration order, tagged as holding at a time point or over an
/// open time interval.
struct QualitativeState {
    std::vector<QualitativeValue> values;
    TimeLabel label = TimeLabel::Point;

    bool operator==(const QualitativeState&) const = default;
    bool operator<(const QualitativeState& o) const;
};

/// Position of a magnitude relative to a landmark of the same space.
/// Intervals lie strictly between adjacent landmarks, so the result is
/// always definite.
Sign signRelative(QMag m, int landmark);
Sign signRelative(const QualitativeValue& v, int landmark);

struct AdjacentRegions {
    std::optional<QMag> below;
    std::optional<QMag> above;
};

/// Neighbouring magnitudes of m in the space; absent past the bounds.
AdjacentRegions adjacentRegions(QMag m, const QuantitySpace& space);

/// Canonical byte key for a state: injective over distinct states and
/// stable across runs (variables in declaration order).
std::string stateKey(const QualitativeState& s);

/// Render "<(a,b), v>" style for one value.
std::string renderValue(const QualitativeValue& v, const QuantitySpace& space,
                        bool asciiArrows = true);

}  // namespace qdesim
