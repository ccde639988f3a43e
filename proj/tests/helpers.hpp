#pragma once

#include "qdesim/model.hpp"
#include "qdesim/qcore.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace testutil {

inline std::string fixturePath(const std::string& name) {
    return std::string(QDESIM_FIXTURE_DIR) + "/" + name;
}

inline std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline qdesim::QdeModel loadFixture(const std::string& name) {
    return qdesim::loadModel(readFile(fixturePath(name)));
}

/// Builds total states by variable name; magnitudes by landmark name,
/// intervals named by their lower landmark.
struct StateBuilder {
    const qdesim::QdeModel& m;
    qdesim::QualitativeState s;

    StateBuilder(const qdesim::QdeModel& model, qdesim::TimeLabel label) : m(model) {
        s.values.resize(static_cast<std::size_t>(model.varCount()));
        s.label = label;
    }
    StateBuilder& at(const std::string& var, const std::string& landmark,
                     qdesim::QDir d) {
        int v = m.requireVar(var);
        int i = m.spaces[static_cast<std::size_t>(v)].require(landmark);
        s.values[static_cast<std::size_t>(v)] = {qdesim::QMag::at(i), d};
        return *this;
    }
    StateBuilder& in(const std::string& var, const std::string& lowLandmark,
                     qdesim::QDir d) {
        int v = m.requireVar(var);
        int i = m.spaces[static_cast<std::size_t>(v)].require(lowLandmark);
        s.values[static_cast<std::size_t>(v)] = {qdesim::QMag::interval(i), d};
        return *this;
    }
    qdesim::QualitativeState build() const { return s; }
};

}  // namespace testutil
