#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qdesim/analysis.hpp"
#include "qdesim/export.hpp"
#include "qdesim/model.hpp"
#include "qdesim/numeric.hpp"
#include "qdesim/sim.hpp"

namespace {

using namespace qdesim;

constexpr int kExitOk = 0;
constexpr int kExitUser = 2;
constexpr int kExitBound = 3;
constexpr int kExitInternal = 4;
constexpr std::string_view kEngineVersion = "qdesim 1.0.0";

int logLevel() {
    static int level = [] {
        const char* env = std::getenv("QDESIM_LOG");
        std::string s = env ? env : "warn";
        if (s == "error") return 0;
        if (s == "warn") return 1;
        if (s == "info") return 2;
        if (s == "debug") return 3;
        return 1;
    }();
    return level;
}

void log(int level, const std::string& msg) {
    static const char* names[] = {"error", "warn", "info", "debug"};
    if (level <= logLevel())
        std::cerr << "qdesim [" << names[level] << "] " << msg << "\n";
}

std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void writeOutput(const std::optional<std::string>& out, const std::string& text) {
    if (!out) {
        std::cout << text;
        return;
    }
    std::ofstream f(*out, std::ios::binary);
    if (!f) throw ModelError("cannot write " + *out);
    f << text;
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void writeManifest(const std::string& outPath, const std::string& modelPath,
                   const std::string& modelText, const SimConfig& cfg) {
    nlohmann::json doc;
    doc["engine"] = kEngineVersion;
    doc["model"] = modelPath;
    doc["inputHash"] = fnv1a(modelText);
    doc["config"] = {{"maxStates", cfg.maxStates},
                     {"excludeMarginalSimultaneity", cfg.excludeMarginalSimultaneity}};
    doc["output"] = outPath;
    std::ofstream f(outPath + ".manifest.json", std::ios::binary);
    f << doc.dump(2) << "\n";
}

std::vector<int> resolveVars(const QdeModel& m, const std::string& csv) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string name;
    while (std::getline(in, name, ',')) {
        if (name.empty()) continue;
        out.push_back(m.requireVar(name));
    }
    if (out.empty()) throw ModelError("empty variable list: " + csv);
    return out;
}

int cmdSimulate(const std::string& modelPath, const SimConfig& cfg,
                const std::optional<std::string>& out) {
    std::string text = readFile(modelPath);
    QdeModel model = loadModel(text);
    ExportOptions eo;
    eo.format = ExportOptions::Format::Json;
    StateTransitionGraph g;
    int exit = kExitOk;
    try {
        g = buildStg(model, cfg);
    } catch (const BoundedExplorationError& e) {
        log(0, e.what());
        g = e.partial;
        exit = kExitBound;
    }
    writeOutput(out, exportStg(model, g, eo));
    if (out) writeManifest(*out, modelPath, text, cfg);
    int counts[4] = {};
    for (TerminalKind t : g.terminal) ++counts[static_cast<int>(t)];
    std::cerr << "states " << g.size() << ", edges " << g.edgeCount()
              << ", equilibria " << counts[1] << ", dead-ends " << counts[2]
              << ", bound-saturated " << counts[3] << "\n";
    return exit;
}

int cmdCluster(const std::string& artifactPath, const std::string& relevantCsv,
               const std::optional<std::string>& out) {
    StgArtifact a = importStg(readFile(artifactPath));
    std::vector<int> relevant = relevantCsv.empty()
                                    ? a.model.relevant
                                    : resolveVars(a.model, relevantCsv);
    if (relevant.empty())
        throw ModelError("no relevant variables given and none in the artifact");
    GeneralizedStg g = clusterGstg(a.model, a.graph, relevant);
    ExportOptions eo;
    eo.format = ExportOptions::Format::Json;
    writeOutput(out, exportGstg(a.model, g, eo));
    std::cerr << "clusters " << g.size() << "\n";
    return kExitOk;
}

int cmdAnalyze(const std::string& artifactPath, bool irreversible,
               bool branchings, const std::string& overcapCsv, bool unavoidable,
               const std::optional<std::string>& out) {
    GstgArtifact a = importGstg(readFile(artifactPath));
    const GeneralizedStg& g = a.graph;

    AnalysisReport r;
    r.modelName = a.model.name;
    r.gstgClusterCount = g.size();
    for (const auto& members : g.members)
        r.stgVertexCount += static_cast<int>(members.size());
    r.equilibriumClusters = findEquilibria(g);
    if (irreversible) r.irreversibleEdges = findIrreversible(g);
    if (branchings) r.criticalBranchings = findCriticalBranchings(g);
    if (!overcapCsv.empty()) {
        std::vector<int> vars = resolveVars(a.model, overcapCsv);
        if (vars.size() != 2)
            throw ModelError("--overcap needs harvestVar,capitalVar");
        r.overcapitalization = markOvercapitalization(g, vars[0], vars[1]);
    }
    if (unavoidable) {
        if (overcapCsv.empty())
            throw ModelError("--unavoidable needs --overcap as the gate");
        if (g.initials.empty()) throw ModelError("artifact has no initial cluster");
        UnavoidabilityResult u = checkUnavoidable(
            g, g.initials.front(), r.overcapitalization, r.equilibriumClusters);
        r.unavoidable = u.unavoidable;
        r.unavoidabilityGate = r.overcapitalization;
        r.unavoidabilityTargets = r.equilibriumClusters;
        r.unavoidabilityWitness = u.witness;
    }
    writeOutput(out, exportReport(r));
    return kExitOk;
}

int cmdExport(const std::string& artifactPath, bool dot, bool selfLoops,
              bool unicodeArrows, const std::string& quadrantSpec,
              const std::string& overcapCsv, const std::optional<std::string>& out) {
    std::string text = readFile(artifactPath);
    nlohmann::json doc = nlohmann::json::parse(text);
    std::string kind = doc.at("kind").get<std::string>();

    ExportOptions eo;
    eo.format = dot ? ExportOptions::Format::Dot : ExportOptions::Format::Json;
    eo.includeSelfLoops = selfLoops;
    eo.asciiArrows = !unicodeArrows;

    auto parseQuadrant = [&](const QdeModel& m) {
        if (quadrantSpec.empty()) return;
        // Shape: xVar=xLandmark,hVar=hLandmark
        auto comma = quadrantSpec.find(',');
        auto eq1 = quadrantSpec.find('=');
        auto eq2 = quadrantSpec.find('=', comma == std::string::npos ? 0 : comma);
        if (comma == std::string::npos || eq1 == std::string::npos ||
            eq2 == std::string::npos || eq1 > comma)
            throw ModelError("--quadrant needs xVar=landmark,hVar=landmark");
        ExportOptions::Quadrant q;
        q.xVar = m.requireVar(quadrantSpec.substr(0, eq1));
        q.xLandmark = m.spaces[static_cast<std::size_t>(q.xVar)].require(
            quadrantSpec.substr(eq1 + 1, comma - eq1 - 1));
        q.hVar = m.requireVar(quadrantSpec.substr(comma + 1, eq2 - comma - 1));
        q.hLandmark = m.spaces[static_cast<std::size_t>(q.hVar)].require(
            quadrantSpec.substr(eq2 + 1));
        eo.quadrant = q;
    };

    if (kind == "stg") {
        StgArtifact a = importStg(text);
        parseQuadrant(a.model);
        writeOutput(out, exportStg(a.model, a.graph, eo));
    } else if (kind == "gstg") {
        GstgArtifact a = importGstg(text);
        parseQuadrant(a.model);
        std::vector<int> overcap;
        if (!overcapCsv.empty()) {
            std::vector<int> vars = resolveVars(a.model, overcapCsv);
            if (vars.size() != 2)
                throw ModelError("--overcap needs harvestVar,capitalVar");
            overcap = markOvercapitalization(a.graph, vars[0], vars[1]);
        }
        writeOutput(out, exportGstg(a.model, a.graph, eo, overcap));
    } else {
        throw ModelError("artifact kind " + kind + " is not exportable");
    }
    return kExitOk;
}

int cmdValidate(const std::string& modelPath, const std::string& sidecarPath,
                int samples, std::uint64_t seed, const SimConfig& cfg,
                const std::optional<std::string>& out) {
    std::string text = readFile(modelPath);
    QdeModel model = loadModel(text);
    std::string scPath = sidecarPath;
    if (scPath.empty()) {
        scPath = modelPath;
        auto pos = scPath.rfind(".qde");
        if (pos != std::string::npos) scPath.resize(pos);
        scPath += ".sidecar.json";
    }
    Sidecar sidecar = loadSidecar(readFile(scPath));
    if (samples == 0) log(1, "0 samples requested; nothing to check");

    StateTransitionGraph g = buildStg(model, cfg);
    nlohmann::json violations = nlohmann::json::array();
    for (int i = 0; i < samples; ++i) {
        std::uint64_t traceSeed = seed + static_cast<std::uint64_t>(i);
        try {
            OracleTrace ot = sampleTrace(model, sidecar, traceSeed);
            auto path = abstractNumericTrace(ot.trace, model, ot.landmarkValues);
            if (auto reason = checkContainment(g, path))
                violations.push_back(
                    {{"seed", traceSeed}, {"reason", *reason}});
        } catch (const TraceResolutionError& e) {
            violations.push_back({{"seed", traceSeed}, {"reason", e.what()}});
        }
        log(3, "trace " + std::to_string(i) + " checked");
    }
    nlohmann::json doc;
    doc["model"] = model.name;
    doc["samples"] = samples;
    doc["violations"] = violations;
    writeOutput(out, doc.dump(2) + "\n");
    std::cerr << "violations " << violations.size() << " / " << samples << "\n";
    return violations.empty() ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Qualitative differential equation simulator"};
    app.require_subcommand(1);

    std::optional<std::string> out;
    std::uint64_t seed = 1;
    int jobs = 1;
    SimConfig cfg;
    bool allowMarginal = false;
    app.add_option("--out", out, "Write the artifact to this path");
    app.add_option("--seed", seed, "Random seed for sampled oracles");
    app.add_option("--jobs", jobs, "Worker cap (processing is deterministic)");
    app.add_option("--max-states", cfg.maxStates, "Exploration safety bound");
    app.add_flag("--allow-marginal", allowMarginal,
                 "Keep marginal simultaneous-event states");

    std::string modelPath, artifactPath, relevantCsv, overcapCsv, quadrantSpec,
        sidecarPath;
    bool irreversible = false, branchings = false, unavoidable = false;
    bool dot = false, selfLoops = false, unicodeArrows = false;
    int samples = 100;

    CLI::App* simulate = app.add_subcommand("simulate", "Build the STG of a model");
    simulate->add_option("model", modelPath, "Path to a .qde file")->required();

    CLI::App* cluster = app.add_subcommand("cluster", "Cluster an STG artifact");
    cluster->add_option("artifact", artifactPath, "STG JSON artifact")->required();
    cluster->add_option("--relevant", relevantCsv, "Comma-separated variables");

    CLI::App* analyze = app.add_subcommand("analyze", "Analyze a GSTG artifact");
    analyze->add_option("artifact", artifactPath, "GSTG JSON artifact")->required();
    analyze->add_flag("--irreversible", irreversible, "Report irreversible edges");
    analyze->add_flag("--branchings", branchings, "Report critical branchings");
    analyze->add_option("--overcap", overcapCsv, "harvestVar,capitalVar");
    analyze->add_flag("--unavoidable", unavoidable,
                      "Check unavoidability of the over-capitalization gate");

    CLI::App* exportCmd = app.add_subcommand("export", "Re-render an artifact");
    exportCmd->add_option("artifact", artifactPath, "STG or GSTG artifact")
        ->required();
    exportCmd->add_flag("--dot", dot, "Emit DOT instead of JSON");
    exportCmd->add_flag("--self-loops", selfLoops, "Include cluster self-loops");
    exportCmd->add_flag("--unicode", unicodeArrows, "Unicode direction arrows");
    exportCmd->add_option("--quadrant", quadrantSpec,
                          "xVar=landmark,hVar=landmark grouping");
    exportCmd->add_option("--overcap", overcapCsv,
                          "Dash over-capitalization clusters");

    CLI::App* validate = app.add_subcommand("validate", "Numeric coverage check");
    validate->add_option("model", modelPath, "Path to a .qde file")->required();
    validate->add_option("--samples", samples, "Number of sampled instances");
    validate->add_option("--sidecar", sidecarPath, "Sidecar path override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitUser : kExitOk;
    }

    cfg.excludeMarginalSimultaneity = !allowMarginal;
    try {
        if (*simulate) return cmdSimulate(modelPath, cfg, out);
        if (*cluster) return cmdCluster(artifactPath, relevantCsv, out);
        if (*analyze)
            return cmdAnalyze(artifactPath, irreversible, branchings, overcapCsv,
                              unavoidable, out);
        if (*exportCmd)
            return cmdExport(artifactPath, dot, selfLoops, unicodeArrows,
                             quadrantSpec, overcapCsv, out);
        if (*validate)
            return cmdValidate(modelPath, sidecarPath, samples, seed, cfg, out);
    } catch (const BoundedExplorationError& e) {
        log(0, e.what());
        return kExitBound;
    } catch (const ParseError& e) {
        log(0, e.what());
        return kExitUser;
    } catch (const ModelError& e) {
        log(0, e.what());
        return kExitUser;
    } catch (const std::exception& e) {
        log(0, std::string("internal error: ") + e.what());
        return kExitInternal;
    }
    return kExitUser;
}
