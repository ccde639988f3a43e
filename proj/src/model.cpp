#include "qdesim/model.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace qdesim {

std::string_view constraintKindName(ConstraintKind k) {
    switch (k) {
        case ConstraintKind::Add: return "add";
        case ConstraintKind::Ddt: return "d/dt";
        case ConstraintKind::Mono: return "M";
        case ConstraintKind::UMinus: return "U-";
        case ConstraintKind::Exclude: return "cornot";
    }
    return "?";
}

int QdeModel::varIndex(std::string_view name) const {
    for (int i = 0; i < varCount(); ++i)
        if (varNames[static_cast<std::size_t>(i)] == name) return i;
    return -1;
}

int QdeModel::requireVar(std::string_view name) const {
    int i = varIndex(name);
    if (i < 0) throw ModelError("unknown variable: " + std::string(name));
    return i;
}

int QdeModel::derivativeOf(int var) const {
    for (const auto& c : constraints)
        if (c.kind == ConstraintKind::Ddt && c.vars[0] == var) return c.vars[1];
    return -1;
}

namespace {

// ---------------------------------------------------------------------------
// S-expression reader. Parentheses are structural, ';' comments run to
// end of line, everything else whitespace-separated atoms.

struct Sexp {
    bool isAtom = false;
    std::string atom;
    std::vector<Sexp> items;
    int line = 1;
    int col = 1;
};

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    std::vector<Sexp> readAll() {
        std::vector<Sexp> out;
        skipSpace();
        while (!eof()) {
            out.push_back(read());
            skipSpace();
        }
        return out;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skipSpace() {
        while (!eof()) {
            char c = peek();
            if (c == ';') {
                while (!eof() && peek() != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    Sexp read() {
        skipSpace();
        if (eof()) throw ParseError("unexpected end of input", line_, col_);
        Sexp s;
        s.line = line_;
        s.col = col_;
        char c = peek();
        if (c == '(') {
            advance();
            skipSpace();
            while (!eof() && peek() != ')') {
                s.items.push_back(read());
                skipSpace();
            }
            if (eof()) throw ParseError("missing ')'", s.line, s.col);
            advance();  // ')'
            return s;
        }
        if (c == ')') throw ParseError("unexpected ')'", line_, col_);
        s.isAtom = true;
        while (!eof()) {
            char d = peek();
            if (d == '(' || d == ')' || d == ';' ||
                std::isspace(static_cast<unsigned char>(d)))
                break;
            s.atom.push_back(advance());
        }
        return s;
    }
};

[[noreturn]] void fail(const Sexp& at, const std::string& msg) {
    throw ParseError(msg, at.line, at.col);
}

const Sexp& expectList(const Sexp& s, const char* what) {
    if (s.isAtom) fail(s, std::string("expected a list for ") + what);
    return s;
}

const std::string& expectAtom(const Sexp& s, const char* what) {
    if (!s.isAtom) fail(s, std::string("expected a name for ") + what);
    return s.atom;
}

bool headIs(const Sexp& s, std::string_view word) {
    return !s.isAtom && !s.items.empty() && s.items[0].isAtom &&
           s.items[0].atom == word;
}

// "M++", "M-+-" style token -> signature; empty result if not that shape.
std::vector<Sign> monoToken(const std::string& tok) {
    std::vector<Sign> sig;
    if (tok.size() < 2 || tok[0] != 'M') return sig;
    for (std::size_t i = 1; i < tok.size(); ++i) {
        if (tok[i] == '+')
            sig.push_back(Sign::Pos);
        else if (tok[i] == '-')
            sig.push_back(Sign::Neg);
        else
            return {};
    }
    return sig;
}

std::string rewriteSource(const Sexp& s) {
    if (s.isAtom) return s.atom;
    std::string out = "(";
    for (std::size_t i = 0; i < s.items.size(); ++i) {
        if (i) out += ' ';
        out += rewriteSource(s.items[i]);
    }
    return out + ")";
}

struct ModelBuilder {
    QdeModel m;

    void vars(const Sexp& sec) {
        for (std::size_t i = 1; i < sec.items.size(); ++i) {
            const Sexp& vd = expectList(sec.items[i], "variable declaration");
            if (vd.items.size() != 2)
                fail(vd, "variable declaration needs (name (landmarks...))");
            const std::string& name = expectAtom(vd.items[0], "variable name");
            if (m.varIndex(name) >= 0) fail(vd.items[0], "duplicate variable " + name);
            const Sexp& lms = expectList(vd.items[1], "landmark list");
            QuantitySpace space;
            for (const Sexp& lm : lms.items) {
                const std::string& l = expectAtom(lm, "landmark");
                if (space.indexOf(l) >= 0) fail(lm, "duplicate landmark " + l);
                space.landmarks.push_back(l);
            }
            if (space.size() < 2) fail(lms, "quantity space needs >= 2 landmarks");
            m.varNames.push_back(name);
            m.spaces.push_back(std::move(space));
        }
    }

    // chead := "(" ctype IDENT+ ")", ctype possibly a parenthesized monospec.
    ConstraintSpec head(const Sexp& h) {
        ConstraintSpec c;
        if (h.items.empty()) fail(h, "empty constraint head");
        const Sexp& ct = h.items[0];
        std::size_t firstArg = 1;
        if (!ct.isAtom) {
            // "(M + +)" or "(M-++)" style
            std::vector<Sign> sig;
            for (const Sexp& part : ct.items) {
                const std::string& tok = expectAtom(part, "monotonicity sign");
                if (tok == "M") continue;
                if (tok == "+") {
                    sig.push_back(Sign::Pos);
                } else if (tok == "-") {
                    sig.push_back(Sign::Neg);
                } else {
                    auto merged = monoToken(tok);
                    if (merged.empty()) fail(part, "bad monotonicity spec " + tok);
                    sig.insert(sig.end(), merged.begin(), merged.end());
                }
            }
            if (sig.empty()) fail(ct, "monotonicity spec needs at least one sign");
            c.kind = ConstraintKind::Mono;
            c.signature = std::move(sig);
        } else if (ct.atom == "add") {
            c.kind = ConstraintKind::Add;
        } else if (ct.atom == "d/dt") {
            c.kind = ConstraintKind::Ddt;
        } else if (ct.atom == "U-") {
            c.kind = ConstraintKind::UMinus;
        } else if (ct.atom == "cornot") {
            c.kind = ConstraintKind::Exclude;
        } else {
            auto sig = monoToken(ct.atom);
            if (sig.empty()) fail(ct, "unknown constraint type " + ct.atom);
            c.kind = ConstraintKind::Mono;
            c.signature = std::move(sig);
        }
        for (std::size_t i = firstArg; i < h.items.size(); ++i) {
            const std::string& vn = expectAtom(h.items[i], "constraint argument");
            int vi = m.varIndex(vn);
            if (vi < 0) fail(h.items[i], "unknown variable " + vn);
            c.vars.push_back(vi);
        }
        int want = -1;
        switch (c.kind) {
            case ConstraintKind::Add: want = 3; break;
            case ConstraintKind::Ddt: want = 2; break;
            case ConstraintKind::UMinus: want = 2; break;
            case ConstraintKind::Mono:
                want = static_cast<int>(c.signature.size()) + 1;
                break;
            case ConstraintKind::Exclude:
                if (c.arity() < 2) fail(h, "cornot needs >= 2 variables");
                break;
        }
        if (want >= 0 && c.arity() != want)
            fail(h, "arity mismatch: expected " + std::to_string(want) +
                        " arguments, got " + std::to_string(c.arity()));
        return c;
    }

    void constraints(const Sexp& sec) {
        for (std::size_t i = 1; i < sec.items.size(); ++i) {
            const Sexp& cs = expectList(sec.items[i], "constraint");
            if (cs.items.empty()) fail(cs, "empty constraint");
            ConstraintSpec c = head(expectList(cs.items[0], "constraint head"));
            for (std::size_t t = 1; t < cs.items.size(); ++t) {
                const Sexp& tup = expectList(cs.items[t], "corresponding-value tuple");
                if (static_cast<int>(tup.items.size()) != c.arity())
                    fail(tup, "corresponding-value tuple arity mismatch");
                std::vector<int> lms;
                for (int p = 0; p < c.arity(); ++p) {
                    const std::string& ln =
                        expectAtom(tup.items[static_cast<std::size_t>(p)], "landmark");
                    const QuantitySpace& sp =
                        m.spaces[static_cast<std::size_t>(c.vars[static_cast<std::size_t>(p)])];
                    int li = sp.indexOf(ln);
                    if (li < 0)
                        fail(tup.items[static_cast<std::size_t>(p)],
                             "unknown landmark " + ln + " for variable " +
                                 m.varNames[static_cast<std::size_t>(
                                     c.vars[static_cast<std::size_t>(p)])]);
                    lms.push_back(li);
                }
                c.cvTuples.push_back(std::move(lms));
            }
            c.source = rewriteSource(cs);
            m.constraints.push_back(std::move(c));
        }
    }

    void relevant(const Sexp& sec) {
        for (std::size_t i = 1; i < sec.items.size(); ++i) {
            const std::string& vn = expectAtom(sec.items[i], "relevant variable");
            int vi = m.varIndex(vn);
            if (vi < 0) fail(sec.items[i], "unknown variable " + vn);
            if (std::find(m.relevant.begin(), m.relevant.end(), vi) != m.relevant.end())
                fail(sec.items[i], "duplicate relevant variable " + vn);
            m.relevant.push_back(vi);
        }
    }

    void init(const Sexp& sec) {
        for (std::size_t i = 1; i < sec.items.size(); ++i) {
            const Sexp& ivd = expectList(sec.items[i], "initial value");
            if (ivd.items.size() < 2 || ivd.items.size() > 3)
                fail(ivd, "initial value needs (var region [dir])");
            InitSpec spec;
            const std::string& vn = expectAtom(ivd.items[0], "variable");
            int vi = m.varIndex(vn);
            if (vi < 0) fail(ivd.items[0], "unknown variable " + vn);
            for (const auto& other : m.init)
                if (other.var == vi) fail(ivd.items[0], "duplicate initial value for " + vn);
            spec.var = vi;
            const QuantitySpace& sp = m.spaces[static_cast<std::size_t>(vi)];
            const Sexp& region = ivd.items[1];
            if (region.isAtom) {
                int li = sp.indexOf(region.atom);
                if (li < 0) fail(region, "unknown landmark " + region.atom);
                spec.mag = QMag::at(li);
            } else {
                if (region.items.size() != 2)
                    fail(region, "interval region needs two landmarks");
                int lo = sp.indexOf(expectAtom(region.items[0], "landmark"));
                int hi = sp.indexOf(expectAtom(region.items[1], "landmark"));
                if (lo < 0 || hi < 0) fail(region, "unknown landmark in region");
                if (hi != lo + 1)
                    fail(region, "interval region landmarks must be adjacent");
                spec.mag = QMag::interval(lo);
            }
            if (ivd.items.size() == 3) {
                const std::string& dn = expectAtom(ivd.items[2], "direction");
                if (dn == "inc")
                    spec.dir = QDir::Inc;
                else if (dn == "dec")
                    spec.dir = QDir::Dec;
                else if (dn == "std")
                    spec.dir = QDir::Std;
                else
                    fail(ivd.items[2], "unknown direction " + dn);
            }
            m.init.push_back(spec);
        }
    }
};

}  // namespace

QdeModel parseModel(std::string_view text) {
    Reader reader(text);
    std::vector<Sexp> top = reader.readAll();
    if (top.size() != 1)
        throw ParseError("expected exactly one (model ...) form", 1, 1);
    const Sexp& root = top[0];
    if (!headIs(root, "model") || root.items.size() < 3)
        throw ParseError("expected (model NAME (vars ...) (constraints ...) ...)",
                         root.line, root.col);

    ModelBuilder b;
    b.m.name = expectAtom(root.items[1], "model name");

    bool sawVars = false, sawConstraints = false, sawRelevant = false, sawInit = false;
    for (std::size_t i = 2; i < root.items.size(); ++i) {
        const Sexp& sec = expectList(root.items[i], "model section");
        if (headIs(sec, "vars")) {
            if (sawVars) fail(sec, "duplicate vars section");
            sawVars = true;
            b.vars(sec);
        } else if (headIs(sec, "constraints")) {
            if (!sawVars) fail(sec, "constraints before vars");
            if (sawConstraints) fail(sec, "duplicate constraints section");
            sawConstraints = true;
            b.constraints(sec);
        } else if (headIs(sec, "relevant")) {
            if (sawRelevant) fail(sec, "duplicate relevant section");
            sawRelevant = true;
            b.relevant(sec);
        } else if (headIs(sec, "init")) {
            if (sawInit) fail(sec, "duplicate init section");
            sawInit = true;
            b.init(sec);
        } else {
            fail(sec, "unknown model section");
        }
    }
    if (!sawVars) throw ParseError("missing vars section", root.line, root.col);
    if (!sawConstraints)
        throw ParseError("missing constraints section", root.line, root.col);
    return b.m;
}

std::vector<Diagnostic> validateModel(const QdeModel& m) {
    std::vector<Diagnostic> out;
    auto error = [&out](std::string loc, std::string msg) {
        out.push_back({Severity::Error, std::move(loc), std::move(msg)});
    };

    std::vector<bool> constrained(static_cast<std::size_t>(m.varCount()), false);
    for (const auto& c : m.constraints)
        for (int v : c.vars) constrained[static_cast<std::size_t>(v)] = true;
    for (int v = 0; v < m.varCount(); ++v)
        if (!constrained[static_cast<std::size_t>(v)])
            error(m.varNames[static_cast<std::size_t>(v)],
                  "variable appears in no constraint");

    for (const auto& c : m.constraints) {
        if (c.kind == ConstraintKind::Ddt) {
            const QuantitySpace& sp = m.spaces[static_cast<std::size_t>(c.vars[1])];
            int zero = sp.indexOf("0");
            if (zero < 0) {
                error(c.source, "derivative variable " +
                                    m.varNames[static_cast<std::size_t>(c.vars[1])] +
                                    " lacks landmark 0");
            } else if (zero == 0 || zero + 1 == sp.size()) {
                error(c.source, "landmark 0 of a derivative variable must be interior");
            }
        }
        if (c.kind == ConstraintKind::UMinus) {
            if (c.cvTuples.empty()) {
                error(c.source, "U- needs at least one corresponding-value pair");
            } else {
                int crit = c.cvTuples[0][0];
                const QuantitySpace& sp = m.spaces[static_cast<std::size_t>(c.vars[0])];
                if (crit == 0 || crit + 1 == sp.size())
                    error(c.source, "U- critical landmark must be interior");
            }
        }
        if (c.kind == ConstraintKind::Exclude) {
            if (c.cvTuples.empty())
                error(c.source, "cornot needs at least one forbidden tuple");
        }
    }

    for (const auto& iv : m.init) {
        const QuantitySpace& sp = m.spaces[static_cast<std::size_t>(iv.var)];
        if (!iv.mag.valid(sp))
            error(m.varNames[static_cast<std::size_t>(iv.var)],
                  "initial magnitude outside quantity space");
    }
    return out;
}

std::string serializeModel(const QdeModel& m) {
    std::ostringstream os;
    os << "(model " << m.name << "\n  (vars\n";
    for (int v = 0; v < m.varCount(); ++v) {
        os << "    (" << m.varNames[static_cast<std::size_t>(v)] << " (";
        const auto& lms = m.spaces[static_cast<std::size_t>(v)].landmarks;
        for (std::size_t i = 0; i < lms.size(); ++i) os << (i ? " " : "") << lms[i];
        os << "))\n";
    }
    os << "  )\n  (constraints\n";
    for (const auto& c : m.constraints) {
        os << "    ((";
        if (c.kind == ConstraintKind::Mono) {
            os << "M";
            for (Sign s : c.signature) os << (s == Sign::Pos ? '+' : '-');
        } else {
            os << constraintKindName(c.kind);
        }
        for (int v : c.vars) os << " " << m.varNames[static_cast<std::size_t>(v)];
        os << ")";
        for (const auto& tup : c.cvTuples) {
            os << " (";
            for (std::size_t p = 0; p < tup.size(); ++p) {
                const QuantitySpace& sp =
                    m.spaces[static_cast<std::size_t>(c.vars[p])];
                os << (p ? " " : "")
                   << sp.landmarks[static_cast<std::size_t>(tup[p])];
            }
            os << ")";
        }
        os << ")\n";
    }
    os << "  )\n";
    if (!m.relevant.empty()) {
        os << "  (relevant";
        for (int v : m.relevant) os << " " << m.varNames[static_cast<std::size_t>(v)];
        os << ")\n";
    }
    if (!m.init.empty()) {
        os << "  (init\n";
        for (const auto& iv : m.init) {
            const QuantitySpace& sp = m.spaces[static_cast<std::size_t>(iv.var)];
            os << "    (" << m.varNames[static_cast<std::size_t>(iv.var)] << " ";
            if (iv.mag.isLandmark()) {
                os << sp.landmarks[static_cast<std::size_t>(iv.mag.lo)];
            } else {
                os << "(" << sp.landmarks[static_cast<std::size_t>(iv.mag.lo)] << " "
                   << sp.landmarks[static_cast<std::size_t>(iv.mag.hi)] << ")";
            }
            if (iv.dir) os << " " << dirName(*iv.dir);
            os << ")\n";
        }
        os << "  )\n";
    }
    os << ")\n";
    return os.str();
}

QdeModel loadModel(std::string_view text) {
    QdeModel m = parseModel(text);
    auto diags = validateModel(m);
    for (const auto& d : diags)
        if (d.severity == Severity::Error)
            throw ModelError("invalid model: " + d.location + ": " + d.message);
    return m;
}

}  // namespace qdesim
