#include "qdesim/qcore.hpp"

#include <algorithm>

namespace qdesim {

std::string_view dirName(QDir d) {
    switch (d) {
        case QDir::Dec: return "dec";
        case QDir::Std: return "std";
        case QDir::Inc: return "inc";
    }
    return "?";
}

std::string_view signName(Sign s) {
    switch (s) {
        case Sign::Neg: return "neg";
        case Sign::Zero: return "zero";
        case Sign::Pos: return "pos";
    }
    return "?";
}

int QuantitySpace::indexOf(std::string_view name) const {
    for (int i = 0; i < size(); ++i)
        if (landmarks[static_cast<std::size_t>(i)] == name) return i;
    return -1;
}

int QuantitySpace::require(std::string_view name) const {
    int i = indexOf(name);
    if (i < 0) throw ModelError("unknown landmark: " + std::string(name));
    return i;
}

bool QualitativeState::operator<(const QualitativeState& o) const {
    if (label != o.label) return label < o.label;
    return values < o.values;
}

Sign signRelative(QMag m, int landmark) {
    if (m.isLandmark()) {
        if (m.lo == landmark) return Sign::Zero;
        return m.lo < landmark ? Sign::Neg : Sign::Pos;
    }
    // Open interval (lo, lo+1): strictly below when the whole interval
    // is below the landmark, strictly above otherwise. A landmark can
    // never fall inside an interval between adjacent landmarks.
    if (m.hi <= landmark) return Sign::Neg;
    return Sign::Pos;
}

Sign signRelative(const QualitativeValue& v, int landmark) {
    return signRelative(v.mag, landmark);
}

AdjacentRegions adjacentRegions(QMag m, const QuantitySpace& space) {
    AdjacentRegions r;
    if (m.isLandmark()) {
        if (m.lo > 0) r.below = QMag::interval(m.lo - 1);
        if (m.lo + 1 < space.size()) r.above = QMag::interval(m.lo);
    } else {
        r.below = QMag::at(m.lo);
        r.above = QMag::at(m.hi);
    }
    return r;
}

std::string stateKey(const QualitativeState& s) {
    std::string key;
    key.reserve(s.values.size() * 3 + 1);
    key.push_back(s.label == TimeLabel::Point ? 'P' : 'I');
    for (const auto& v : s.values) {
        key.push_back(static_cast<char>('0' + v.mag.lo));
        key.push_back(static_cast<char>('0' + v.mag.hi));
        key.push_back(static_cast<char>('0' + static_cast<int>(v.dir)));
    }
    return key;
}

std::string renderValue(const QualitativeValue& v, const QuantitySpace& space,
                        bool asciiArrows) {
    std::string out;
    if (v.mag.isLandmark()) {
        out = space.landmarks[static_cast<std::size_t>(v.mag.lo)];
    } else {
        out = "(" + space.landmarks[static_cast<std::size_t>(v.mag.lo)] + "," +
              space.landmarks[static_cast<std::size_t>(v.mag.hi)] + ")";
    }
    out += ' ';
    if (asciiArrows) {
        out += v.dir == QDir::Dec ? 'v' : v.dir == QDir::Inc ? '^' : 'o';
    } else {
        out += v.dir == QDir::Dec ? "↓" : v.dir == QDir::Inc ? "↑" : "∘";
    }
    return out;
}

}  // namespace qdesim
