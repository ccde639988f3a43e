#include "qdesim/export.hpp"

#include <algorithm>

#include "json.hpp"

namespace qdesim {

namespace {

using nlohmann::json;

std::string escapeDot(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string signatureLabel(const QdeModel& m,
                           const std::vector<QualitativeValue>& values,
                           const std::vector<int>& vars, bool ascii) {
    std::string out;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (i) out += "  ";
        int v = vars[static_cast<std::size_t>(i)];
        out += m.varNames[static_cast<std::size_t>(v)];
        out += '=';
        out += renderValue(values[i], m.spaces[static_cast<std::size_t>(v)], ascii);
    }
    return out;
}

std::vector<int> allVars(const QdeModel& m) {
    std::vector<int> vars(static_cast<std::size_t>(m.varCount()));
    for (int v = 0; v < m.varCount(); ++v) vars[static_cast<std::size_t>(v)] = v;
    return vars;
}

/// 1..4 for the four off-landmark regions, 0 on a boundary.
int quadrantOf(const ExportOptions::Quadrant& q, const QualitativeValue& x,
               const QualitativeValue& h) {
    Sign sx = signRelative(x, q.xLandmark);
    Sign sh = signRelative(h, q.hLandmark);
    if (sx == Sign::Zero || sh == Sign::Zero) return 0;
    if (sx == Sign::Pos) return sh == Sign::Pos ? 1 : 4;
    return sh == Sign::Pos ? 2 : 3;
}

void validateQuadrant(const QdeModel& m, const ExportOptions::Quadrant& q) {
    auto check = [&](int var, int landmark) {
        if (var < 0 || var >= m.varCount())
            throw ModelError("quadrant hint names an unknown variable");
        if (landmark < 0 ||
            landmark >= m.spaces[static_cast<std::size_t>(var)].size())
            throw ModelError("quadrant hint names an unknown landmark");
    };
    check(q.xVar, q.xLandmark);
    check(q.hVar, q.hLandmark);
}

json valuesJson(const std::vector<QualitativeValue>& values) {
    json out = json::array();
    for (const auto& v : values)
        out.push_back(json::array(
            {v.mag.lo, v.mag.hi, static_cast<int>(v.dir)}));
    return out;
}

std::vector<QualitativeValue> valuesFromJson(const json& j) {
    std::vector<QualitativeValue> out;
    for (const auto& one : j) {
        QualitativeValue v;
        v.mag.lo = one.at(0).get<int>();
        v.mag.hi = one.at(1).get<int>();
        v.dir = static_cast<QDir>(one.at(2).get<int>());
        out.push_back(v);
    }
    return out;
}

json modelJson(const QdeModel& m) {
    json spaces = json::array();
    for (const auto& sp : m.spaces) spaces.push_back(sp.landmarks);
    return json{{"variables", m.varNames}, {"spaces", spaces}};
}

QdeModel modelFromJson(const json& doc) {
    QdeModel m;
    m.name = doc.at("model").get<std::string>();
    m.varNames = doc.at("variables").get<std::vector<std::string>>();
    for (const auto& sp : doc.at("spaces"))
        m.spaces.push_back({sp.get<std::vector<std::string>>()});
    if (m.spaces.size() != m.varNames.size())
        throw ModelError("artifact spaces do not match its variables");
    return m;
}

TerminalKind terminalFromName(std::string_view name) {
    for (TerminalKind k : {TerminalKind::Equilibrium, TerminalKind::DeadEnd,
                           TerminalKind::BoundSaturation})
        if (terminalKindName(k) == name) return k;
    throw ModelError("unknown terminal kind in artifact: " + std::string(name));
}

struct DotVertex {
    std::string label;
    bool circle = false;
    bool dashed = false;
    int quadrant = 0;  // 0 = ungrouped
};

std::string renderDot(const std::string& graphName,
                      const std::vector<DotVertex>& vertices,
                      const std::vector<std::pair<int, int>>& edges,
                      const std::vector<bool>& thick) {
    static const char* kQuadrantNames[] = {"", "I", "II", "III", "IV"};
    std::string out = "digraph " + graphName + " {\n";
    out += "  rankdir=LR;\n";
    out += "  node [fontname=\"Helvetica\"];\n";
    for (int q = 1; q <= 4; ++q) {
        bool any = std::any_of(vertices.begin(), vertices.end(),
                               [&](const DotVertex& v) { return v.quadrant == q; });
        if (!any) continue;
        out += "  subgraph cluster_q" + std::to_string(q) + " {\n";
        out += "    label=\"" + std::string(kQuadrantNames[q]) + "\";\n";
        for (std::size_t v = 0; v < vertices.size(); ++v)
            if (vertices[v].quadrant == q)
                out += "    n" + std::to_string(v) + ";\n";
        out += "  }\n";
    }
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        out += "  n" + std::to_string(v) + " [label=\"" +
               escapeDot(vertices[v].label) + "\"";
        if (vertices[v].circle) out += " shape=circle";
        if (vertices[v].dashed) out += " style=dashed";
        out += "];\n";
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        out += "  n" + std::to_string(edges[e].first) + " -> n" +
               std::to_string(edges[e].second);
        if (thick[e]) out += " [penwidth=2]";
        out += ";\n";
    }
    out += "}\n";
    return out;
}

}  // namespace

std::string exportStg(const QdeModel& m, const StateTransitionGraph& g,
                      const ExportOptions& options) {
    if (options.quadrant) validateQuadrant(m, *options.quadrant);
    const std::vector<int> vars = allVars(m);

    if (options.format == ExportOptions::Format::Dot) {
        std::vector<DotVertex> vertices(static_cast<std::size_t>(g.size()));
        for (int v = 0; v < g.size(); ++v) {
            const QualitativeState& s = g.vertices[static_cast<std::size_t>(v)];
            DotVertex& dv = vertices[static_cast<std::size_t>(v)];
            dv.label = std::to_string(v) +
                       (s.label == TimeLabel::Point ? " P  " : " I  ") +
                       signatureLabel(m, s.values, vars, options.asciiArrows);
            dv.circle =
                g.terminal[static_cast<std::size_t>(v)] == TerminalKind::Equilibrium;
            if (options.quadrant)
                dv.quadrant = quadrantOf(
                    *options.quadrant,
                    s.values[static_cast<std::size_t>(options.quadrant->xVar)],
                    s.values[static_cast<std::size_t>(options.quadrant->hVar)]);
        }
        std::vector<std::pair<int, int>> edges;
        for (int v = 0; v < g.size(); ++v)
            for (int w : g.succ[static_cast<std::size_t>(v)])
                edges.emplace_back(v, w);
        return renderDot("stg", vertices, edges,
                         std::vector<bool>(edges.size(), false));
    }

    json doc;
    doc["version"] = kSchemaVersion;
    doc["model"] = m.name;
    doc["kind"] = "stg";
    doc.update(modelJson(m));
    json jv = json::array();
    for (int v = 0; v < g.size(); ++v) {
        const QualitativeState& s = g.vertices[static_cast<std::size_t>(v)];
        json one;
        one["id"] = v;
        one["signature"] = signatureLabel(m, s.values, vars, options.asciiArrows);
        one["values"] = valuesJson(s.values);
        one["timeLabel"] = s.label == TimeLabel::Point ? "point" : "interval";
        TerminalKind t = g.terminal[static_cast<std::size_t>(v)];
        if (t != TerminalKind::None) one["terminal"] = terminalKindName(t);
        if (options.quadrant) {
            int q = quadrantOf(
                *options.quadrant,
                s.values[static_cast<std::size_t>(options.quadrant->xVar)],
                s.values[static_cast<std::size_t>(options.quadrant->hVar)]);
            if (q) one["quadrant"] = q;
        }
        jv.push_back(std::move(one));
    }
    doc["vertices"] = std::move(jv);
    json je = json::array();
    for (int v = 0; v < g.size(); ++v)
        for (int w : g.succ[static_cast<std::size_t>(v)])
            je.push_back(json{{"from", v}, {"to", w}});
    doc["edges"] = std::move(je);
    doc["annotations"] = json{{"initials", g.initials}};
    return doc.dump(2) + "\n";
}

std::string exportGstg(const QdeModel& m, const GeneralizedStg& g,
                       const ExportOptions& options,
                       const std::vector<int>& overcapitalization) {
    if (options.quadrant) validateQuadrant(m, *options.quadrant);
    std::vector<bool> dashed(static_cast<std::size_t>(g.size()), false);
    for (int c : overcapitalization) dashed[static_cast<std::size_t>(c)] = true;

    auto relPos = [&](int var) -> int {
        auto it = std::find(g.relevant.begin(), g.relevant.end(), var);
        if (it == g.relevant.end())
            throw ModelError("quadrant hint variable is not relevant");
        return static_cast<int>(it - g.relevant.begin());
    };

    std::vector<std::pair<int, int>> edges;
    std::vector<bool> thick;
    auto irreversible = findIrreversible(g);
    for (int c = 0; c < g.size(); ++c) {
        for (int w : g.succ[static_cast<std::size_t>(c)]) {
            edges.emplace_back(c, w);
            thick.push_back(std::find(irreversible.begin(), irreversible.end(),
                                      std::make_pair(c, w)) != irreversible.end());
        }
        if (options.includeSelfLoops && g.selfLoop[static_cast<std::size_t>(c)]) {
            edges.emplace_back(c, c);
            thick.push_back(false);
        }
    }

    if (options.format == ExportOptions::Format::Dot) {
        std::vector<DotVertex> vertices(static_cast<std::size_t>(g.size()));
        for (int c = 0; c < g.size(); ++c) {
            const auto& sig = g.signatures[static_cast<std::size_t>(c)];
            DotVertex& dv = vertices[static_cast<std::size_t>(c)];
            dv.label = std::to_string(c) + "  " +
                       signatureLabel(m, sig, g.relevant, options.asciiArrows);
            dv.circle = g.equilibrium[static_cast<std::size_t>(c)];
            dv.dashed = dashed[static_cast<std::size_t>(c)];
            if (options.quadrant)
                dv.quadrant = quadrantOf(
                    *options.quadrant,
                    sig[static_cast<std::size_t>(relPos(options.quadrant->xVar))],
                    sig[static_cast<std::size_t>(relPos(options.quadrant->hVar))]);
        }
        return renderDot("gstg", vertices, edges, thick);
    }

    json doc;
    doc["version"] = kSchemaVersion;
    doc["model"] = m.name;
    doc["kind"] = "gstg";
    doc.update(modelJson(m));
    json jv = json::array();
    for (int c = 0; c < g.size(); ++c) {
        const auto& sig = g.signatures[static_cast<std::size_t>(c)];
        json one;
        one["id"] = c;
        one["signature"] = signatureLabel(m, sig, g.relevant, options.asciiArrows);
        one["values"] = valuesJson(sig);
        one["members"] = g.members[static_cast<std::size_t>(c)];
        if (g.equilibrium[static_cast<std::size_t>(c)]) one["terminal"] = "equilibrium";
        if (dashed[static_cast<std::size_t>(c)]) one["overcapitalization"] = true;
        if (g.selfLoop[static_cast<std::size_t>(c)]) one["selfLoop"] = true;
        if (options.quadrant) {
            int q = quadrantOf(
                *options.quadrant,
                sig[static_cast<std::size_t>(relPos(options.quadrant->xVar))],
                sig[static_cast<std::size_t>(relPos(options.quadrant->hVar))]);
            if (q) one["quadrant"] = q;
        }
        jv.push_back(std::move(one));
    }
    doc["vertices"] = std::move(jv);
    json je = json::array();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        json one{{"from", edges[e].first}, {"to", edges[e].second}};
        if (thick[e]) one["irreversible"] = true;
        je.push_back(std::move(one));
    }
    doc["edges"] = std::move(je);
    doc["annotations"] = json{{"initials", g.initials},
                              {"relevant", [&] {
                                   std::vector<std::string> names;
                                   for (int v : g.relevant)
                                       names.push_back(
                                           m.varNames[static_cast<std::size_t>(v)]);
                                   return names;
                               }()}};
    return doc.dump(2) + "\n";
}

std::string exportReport(const AnalysisReport& r) {
    json doc;
    doc["version"] = kSchemaVersion;
    doc["model"] = r.modelName;
    doc["kind"] = "report";
    doc["stg"] = json{{"vertices", r.stgVertexCount},
                      {"edges", r.stgEdgeCount},
                      {"pointStates", r.pointStateCount},
                      {"intervalStates", r.intervalStateCount},
                      {"distinctAssignments", r.distinctAssignmentCount},
                      {"equilibria", r.stgEquilibria}};
    doc["gstg"] = json{{"clusters", r.gstgClusterCount},
                       {"equilibriumClusters", r.equilibriumClusters},
                       {"criticalBranchings", r.criticalBranchings},
                       {"overcapitalization", r.overcapitalization}};
    json irr = json::array();
    for (const auto& [from, to] : r.irreversibleEdges)
        irr.push_back(json{{"from", from}, {"to", to}});
    doc["gstg"]["irreversibleEdges"] = std::move(irr);
    if (r.unavoidable) {
        json u;
        u["holds"] = *r.unavoidable;
        u["gate"] = r.unavoidabilityGate;
        u["targets"] = r.unavoidabilityTargets;
        if (!*r.unavoidable) u["witness"] = r.unavoidabilityWitness;
        doc["unavoidability"] = std::move(u);
    }
    doc["notes"] = r.notes;
    return doc.dump(2) + "\n";
}

StgArtifact importStg(const std::string& text) {
    json doc = json::parse(text);
    if (doc.at("version").get<std::string>() != kSchemaVersion)
        throw ModelError("unsupported artifact schema version");
    if (doc.at("kind").get<std::string>() != "stg")
        throw ModelError("artifact is not an STG");
    StgArtifact a;
    a.model = modelFromJson(doc);
    for (const auto& one : doc.at("vertices")) {
        QualitativeState s;
        s.values = valuesFromJson(one.at("values"));
        s.label = one.at("timeLabel").get<std::string>() == "point"
                      ? TimeLabel::Point
                      : TimeLabel::Interval;
        a.graph.vertices.push_back(std::move(s));
        a.graph.succ.emplace_back();
        a.graph.terminal.push_back(
            one.contains("terminal")
                ? terminalFromName(one.at("terminal").get<std::string>())
                : TerminalKind::None);
    }
    for (const auto& e : doc.at("edges"))
        a.graph.succ.at(e.at("from").get<std::size_t>())
            .push_back(e.at("to").get<int>());
    a.graph.initials =
        doc.at("annotations").at("initials").get<std::vector<int>>();
    return a;
}

GstgArtifact importGstg(const std::string& text) {
    json doc = json::parse(text);
    if (doc.at("version").get<std::string>() != kSchemaVersion)
        throw ModelError("unsupported artifact schema version");
    if (doc.at("kind").get<std::string>() != "gstg")
        throw ModelError("artifact is not a GSTG");
    GstgArtifact a;
    a.model = modelFromJson(doc);
    for (const auto& name :
         doc.at("annotations").at("relevant").get<std::vector<std::string>>())
        a.graph.relevant.push_back(a.model.requireVar(name));
    for (const auto& one : doc.at("vertices")) {
        a.graph.signatures.push_back(valuesFromJson(one.at("values")));
        a.graph.members.push_back(one.at("members").get<std::vector<int>>());
        a.graph.succ.emplace_back();
        a.graph.selfLoop.push_back(one.value("selfLoop", false));
        a.graph.equilibrium.push_back(one.contains("terminal"));
    }
    for (const auto& e : doc.at("edges")) {
        int from = e.at("from").get<int>();
        int to = e.at("to").get<int>();
        if (from != to)
            a.graph.succ.at(static_cast<std::size_t>(from)).push_back(to);
    }
    int maxVertex = -1;
    for (const auto& ms : a.graph.members)
        for (int v : ms) maxVertex = std::max(maxVertex, v);
    a.graph.clusterOf.assign(static_cast<std::size_t>(maxVertex + 1), -1);
    for (int c = 0; c < a.graph.size(); ++c)
        for (int v : a.graph.members[static_cast<std::size_t>(c)])
            a.graph.clusterOf[static_cast<std::size_t>(v)] = c;
    a.graph.initials =
        doc.at("annotations").at("initials").get<std::vector<int>>();
    return a;
}

}  // namespace qdesim
