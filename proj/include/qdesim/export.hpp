#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdesim/analysis.hpp"
#include "qdesim/model.hpp"
#include "qdesim/sim.hpp"

namespace qdesim {

inline constexpr std::string_view kSchemaVersion = "stg-v1";

struct ExportOptions {
    enum class Format : std::uint8_t { Dot, Json };
    Format format = Format::Dot;
    bool includeSelfLoops = false;
    bool asciiArrows = true;

    /// Groups vertices into the four regions around a stock landmark
    /// and a harvest landmark, as in the figure layouts.
    struct Quadrant {
        int xVar = 0;
        int xLandmark = 0;
        int hVar = 0;
        int hLandmark = 0;
    };
    std::optional<Quadrant> quadrant;
};

/// Deterministic DOT or JSON rendering of an STG. Equilibria are drawn
/// as circles.
std::string exportStg(const QdeModel& m, const StateTransitionGraph& g,
                      const ExportOptions& options = {});

/// Same for a GSTG; over-capitalization clusters are drawn dashed and
/// irreversible edges thickened.
std::string exportGstg(const QdeModel& m, const GeneralizedStg& g,
                       const ExportOptions& options = {},
                       const std::vector<int>& overcapitalization = {});

/// Aggregated analysis results for one model run.
struct AnalysisReport {
    std::string modelName;
    int stgVertexCount = 0;
    int stgEdgeCount = 0;
    int pointStateCount = 0;
    int intervalStateCount = 0;
    int distinctAssignmentCount = 0;
    std::vector<int> stgEquilibria;
    int gstgClusterCount = 0;
    std::vector<int> equilibriumClusters;
    std::vector<std::pair<int, int>> irreversibleEdges;
    std::vector<int> criticalBranchings;
    std::vector<int> overcapitalization;
    std::optional<bool> unavoidable;
    std::vector<int> unavoidabilityGate;
    std::vector<int> unavoidabilityTargets;
    std::vector<int> unavoidabilityWitness;  // only when avoidable
    std::vector<std::string> notes;
};

std::string exportReport(const AnalysisReport& r);

/// JSON artifacts embed the variable names and spaces, so downstream
/// pipeline stages work from the artifact alone. The reconstructed
/// model carries no constraints.
struct StgArtifact {
    QdeModel model;
    StateTransitionGraph graph;
};

StgArtifact importStg(const std::string& text);

struct GstgArtifact {
    QdeModel model;
    GeneralizedStg graph;
};

GstgArtifact importGstg(const std::string& text);

}  // namespace qdesim
