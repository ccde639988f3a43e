#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qdesim/analysis.hpp"
#include "qdesim/model.hpp"

namespace qdesim {

/// Numeric sampling annotations for a model: function families and
/// parameter ranges for the coverage oracle.
struct Sidecar {
    std::string model;
    std::map<std::string, std::string> families;
    std::map<std::string, std::pair<double, double>> ranges;

    double low(const std::string& name) const;
    double high(const std::string& name) const;
};

Sidecar loadSidecar(const std::string& text);

/// One concrete trajectory of a random ODE instance drawn from the
/// sidecar's families, with the landmark reals needed to abstract it.
struct OracleTrace {
    NumericTrace trace;
    std::vector<std::vector<double>> landmarkValues;  // per var, per landmark
};

/// Integrates a random instance consistent with the model by
/// construction. The trace is sampled between qualitative events and
/// symmetrically around them, and truncated before equilibria or space
/// bounds blur the abstraction. Dispatch is on the sidecar's model
/// name.
OracleTrace sampleTrace(const QdeModel& m, const Sidecar& s, std::uint64_t seed);

}  // namespace qdesim
