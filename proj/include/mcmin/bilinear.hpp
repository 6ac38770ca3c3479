#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mcmin/chain.hpp"
#include "mcmin/distance.hpp"
#include "mcmin/parallel.hpp"

namespace mcmin {

/// Variable of the bilinear program. Kinds and index tuples:
///   d[m,n]      distance variable
///   a[n,l]      label-indicator variable
///   t[n,v]      approximant transition variable
///   c[m,n,u,v]  coupling variable
struct VarRef {
    enum Kind { D, A, T, C } kind;
    std::array<int, 4> idx{0, 0, 0, 0};

    friend bool operator==(const VarRef&, const VarRef&) = default;

    std::string str() const {
        static const char* names = "datc";
        std::string s(1, names[kind]);
        s += '[';
        int arity = kind == C ? 4 : 2;
        for (int i = 0; i < arity; ++i) {
            if (i) s += ',';
            s += std::to_string(idx[i]);
        }
        s += ']';
        return s;
    }
};

/// coef * x  or  coef * x * y (bilinear when y is present).
struct BiTerm {
    Rational coef;
    VarRef x;
    std::optional<VarRef> y;

    friend bool operator==(const BiTerm&, const BiTerm&) = default;
};

enum class Sense { LE, EQ, GE };

struct BiConstraint {
    std::string name;  // e.g. "prefix[0,0]"
    std::vector<BiTerm> terms;
    Sense sense = Sense::LE;
    Rational rhs;

    friend bool operator==(const BiConstraint&, const BiConstraint&) = default;
};

/// The bounded-approximant bilinear program for a chain and a state budget.
struct BilinearProgram {
    int m_states = 0;  // |M|
    int k = 0;         // approximant budget
    int m_initial = 0;
    Rational lambda;
    std::vector<std::string> label_names;  // L(M), deduplicated in state order
    std::vector<int> state_label;          // label index (into label_names) per M state
    VarRef objective;                      // minimized
    std::vector<BiConstraint> cons;

    friend bool operator==(const BilinearProgram&, const BilinearProgram&) = default;

    /// Declarations in fixed order: all d, all a, all t, all c.
    std::vector<VarRef> variables() const {
        std::vector<VarRef> vars;
        int L = static_cast<int>(label_names.size());
        for (int m = 0; m < m_states; ++m)
            for (int n = 0; n < k; ++n) vars.push_back({VarRef::D, {m, n}});
        for (int n = 0; n < k; ++n)
            for (int l = 0; l < L; ++l) vars.push_back({VarRef::A, {n, l}});
        for (int n = 0; n < k; ++n)
            for (int v = 0; v < k; ++v) vars.push_back({VarRef::T, {n, v}});
        for (int m = 0; m < m_states; ++m)
            for (int n = 0; n < k; ++n)
                for (int u = 0; u < m_states; ++u)
                    for (int v = 0; v < k; ++v) vars.push_back({VarRef::C, {m, n, u, v}});
        return vars;
    }
};

/// Instantiates the discounted prefix-point program: minimize d at the
/// initial pair subject to prefix points, label-distance bounds, label
/// exclusivity and totality, both marginal families, and nonnegativity.
///
/// The label-distance lower bound is emitted as 1 - a[n, label(m)] <= d[m,n]
/// (one pair of bound constraints per (m,n)): with the indicator semantics
/// of the a variables this forces d[m,n] = 1 exactly when the approximant
/// state n carries a label different from m's, and is satisfied by every
/// discrepancy produced by the distance engine.
inline BilinearProgram build_program(const MarkovChain<Rational>& m, int k,
                                     const Rational& lambda) {
    if (k < 1) throw McError("approximant budget must be at least 1");
    if (!(lambda > 0 && lambda <= 1)) throw BadDiscount("discount must lie in (0,1]");
    validate(m);
    BilinearProgram p;
    p.m_states = m.size();
    p.k = k;
    p.m_initial = m.initial;
    p.lambda = lambda;
    auto ids = m.label_set();
    for (int id : ids) p.label_names.push_back(label_text(id));
    p.state_label.resize(m.size());
    for (int s = 0; s < m.size(); ++s)
        p.state_label[s] = static_cast<int>(
            std::find(ids.begin(), ids.end(), m.labels[s]) - ids.begin());
    const int L = static_cast<int>(p.label_names.size());
    p.objective = {VarRef::D, {m.initial, 0}};

    auto idx2 = [](int a, int b) {
        return "[" + std::to_string(a) + "," + std::to_string(b) + "]";
    };
    auto idx3 = [](int a, int b, int c) {
        return "[" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c) + "]";
    };

    // prefix points: lambda * sum c[m,n,u,v]*d[u,v] - d[m,n] <= 0
    for (int mm = 0; mm < p.m_states; ++mm)
        for (int n = 0; n < k; ++n) {
            BiConstraint con;
            con.name = "prefix" + idx2(mm, n);
            for (int u = 0; u < p.m_states; ++u)
                for (int v = 0; v < k; ++v)
                    con.terms.push_back(
                        {lambda, {VarRef::C, {mm, n, u, v}}, VarRef{VarRef::D, {u, v}}});
            con.terms.push_back({Rational(-1), {VarRef::D, {mm, n}}, std::nullopt});
            con.sense = Sense::LE;
            con.rhs = 0;
            p.cons.push_back(std::move(con));
        }
    // label-distance bounds: 1 - a[n,l(m)] <= d[m,n] <= 1
    for (int mm = 0; mm < p.m_states; ++mm)
        for (int n = 0; n < k; ++n) {
            BiConstraint lo;
            lo.name = "lbound" + idx2(mm, n);
            lo.terms.push_back({Rational(-1), {VarRef::D, {mm, n}}, std::nullopt});
            lo.terms.push_back({Rational(-1), {VarRef::A, {n, p.state_label[mm]}}, std::nullopt});
            lo.sense = Sense::LE;
            lo.rhs = -1;
            p.cons.push_back(std::move(lo));
            BiConstraint hi;
            hi.name = "ubound" + idx2(mm, n);
            hi.terms.push_back({Rational(1), {VarRef::D, {mm, n}}, std::nullopt});
            hi.sense = Sense::LE;
            hi.rhs = 1;
            p.cons.push_back(std::move(hi));
        }
    // label exclusivity: a[n,l] * a[n,l'] = 0 for l < l'
    for (int n = 0; n < k; ++n)
        for (int l = 0; l < L; ++l)
            for (int l2 = l + 1; l2 < L; ++l2) {
                BiConstraint con;
                con.name = "labelexcl" + idx3(n, l, l2);
                con.terms.push_back({Rational(1), {VarRef::A, {n, l}}, VarRef{VarRef::A, {n, l2}}});
                con.sense = Sense::EQ;
                con.rhs = 0;
                p.cons.push_back(std::move(con));
            }
    // label totality: sum_l a[n,l] = 1
    for (int n = 0; n < k; ++n) {
        BiConstraint con;
        con.name = "labeltotal[" + std::to_string(n) + "]";
        for (int l = 0; l < L; ++l)
            con.terms.push_back({Rational(1), {VarRef::A, {n, l}}, std::nullopt});
        con.sense = Sense::EQ;
        con.rhs = 1;
        p.cons.push_back(std::move(con));
    }
    // left marginals: sum_v c[m,n,u,v] = tau(m)(u)
    for (int mm = 0; mm < p.m_states; ++mm)
        for (int n = 0; n < k; ++n)
            for (int u = 0; u < p.m_states; ++u) {
                BiConstraint con;
                con.name = "leftmarg" + idx3(mm, n, u);
                for (int v = 0; v < k; ++v)
                    con.terms.push_back({Rational(1), {VarRef::C, {mm, n, u, v}}, std::nullopt});
                con.sense = Sense::EQ;
                con.rhs = m.rows[mm].at(u);
                p.cons.push_back(std::move(con));
            }
    // right marginals: sum_u c[m,n,u,v] - t[n,v] = 0
    for (int mm = 0; mm < p.m_states; ++mm)
        for (int n = 0; n < k; ++n)
            for (int v = 0; v < k; ++v) {
                BiConstraint con;
                con.name = "rightmarg" + idx3(mm, n, v);
                for (int u = 0; u < p.m_states; ++u)
                    con.terms.push_back({Rational(1), {VarRef::C, {mm, n, u, v}}, std::nullopt});
                con.terms.push_back({Rational(-1), {VarRef::T, {n, v}}, std::nullopt});
                con.sense = Sense::EQ;
                con.rhs = 0;
                p.cons.push_back(std::move(con));
            }
    // nonnegativity of couplings
    for (int mm = 0; mm < p.m_states; ++mm)
        for (int n = 0; n < k; ++n)
            for (int u = 0; u < p.m_states; ++u)
                for (int v = 0; v < k; ++v) {
                    BiConstraint con;
                    con.name = "nonneg[" + std::to_string(mm) + "," + std::to_string(n) + "," +
                               std::to_string(u) + "," + std::to_string(v) + "]";
                    con.terms.push_back({Rational(1), {VarRef::C, {mm, n, u, v}}, std::nullopt});
                    con.sense = Sense::GE;
                    con.rhs = 0;
                    p.cons.push_back(std::move(con));
                }
    return p;
}

/// Appends d[m0,0] <= eps, turning the program into the threshold
/// feasibility instance.
inline BilinearProgram add_threshold(BilinearProgram p, const Rational& eps) {
    if (eps < 0) throw McError("threshold must be nonnegative");
    BiConstraint con;
    con.name = "threshold";
    con.terms.push_back({Rational(1), p.objective, std::nullopt});
    con.sense = Sense::LE;
    con.rhs = eps;
    p.cons.push_back(std::move(con));
    return p;
}

namespace detail {

inline const char* sense_str(Sense s) {
    switch (s) {
        case Sense::LE: return "<=";
        case Sense::EQ: return "=";
        default: return ">=";
    }
}

}  // namespace detail

/// Native "bprog" text: deterministic, byte-stable, lossless (see README
/// for the grammar). One variable declaration and one constraint per line.
inline std::string export_bprog(const BilinearProgram& p) {
    std::ostringstream out;
    out << "bprog v1\n";
    out << "lambda " << rat_str(p.lambda) << "\n";
    out << "states " << p.m_states << "\n";
    out << "approx " << p.k << "\n";
    out << "initial " << p.m_initial << "\n";
    out << "labels " << p.label_names.size() << "\n";
    for (size_t l = 0; l < p.label_names.size(); ++l)
        out << "label " << l << " " << p.label_names[l] << "\n";
    for (int s = 0; s < p.m_states; ++s)
        out << "statelabel " << s << " " << p.state_label[s] << "\n";
    for (const auto& v : p.variables()) out << "var " << v.str() << "\n";
    out << "minimize " << p.objective.str() << "\n";
    for (const auto& con : p.cons) {
        out << "con " << con.name;
        for (const auto& t : con.terms) {
            out << (t.y ? " bil " : " lin ") << rat_str(t.coef) << " " << t.x.str();
            if (t.y) out << " " << t.y->str();
        }
        out << " " << detail::sense_str(con.sense) << " " << rat_str(con.rhs) << "\n";
    }
    return out.str();
}

/// Quantifier-free real-arithmetic s-expressions.
inline std::string export_sexp(const BilinearProgram& p) {
    auto rat_sexp = [](const Rational& q) {
        return "(/ " + q.get_num().get_str() + " " + q.get_den().get_str() + ")";
    };
    auto var_sexp = [](const VarRef& v) {
        std::string s = "(";
        s += "datc"[v.kind];
        int arity = v.kind == VarRef::C ? 4 : 2;
        for (int i = 0; i < arity; ++i) s += " " + std::to_string(v.idx[i]);
        return s + ")";
    };
    std::ostringstream out;
    out << "(bprog\n";
    out << "  (lambda " << rat_sexp(p.lambda) << ")\n";
    out << "  (states " << p.m_states << ")\n";
    out << "  (approx " << p.k << ")\n";
    out << "  (vars";
    for (const auto& v : p.variables()) out << " " << var_sexp(v);
    out << ")\n";
    out << "  (minimize " << var_sexp(p.objective) << ")\n";
    for (const auto& con : p.cons) {
        out << "  (assert (";
        out << (con.sense == Sense::LE ? "<=" : con.sense == Sense::EQ ? "=" : ">=");
        out << " (+";
        for (const auto& t : con.terms) {
            out << " (* " << rat_sexp(t.coef) << " " << var_sexp(t.x);
            if (t.y) out << " " << var_sexp(*t.y);
            out << ")";
        }
        out << ") " << rat_sexp(con.rhs) << "))\n";
    }
    out << ")\n";
    return out.str();
}

inline std::string export_program(const BilinearProgram& p, const std::string& format) {
    if (format == "bprog") return export_bprog(p);
    if (format == "sexp") return export_sexp(p);
    throw UnsupportedFormat("unknown export format '" + format + "'");
}

/// Round-trip parser for the native format.
inline BilinearProgram parse_bprog(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    BilinearProgram p;
    auto parse_var = [&](const std::string& tok) -> VarRef {
        VarRef v;
        if (tok.size() < 4 || tok[1] != '[' || tok.back() != ']')
            throw ParseError(lineno, 1, "bad variable reference '" + tok + "'");
        switch (tok[0]) {
            case 'd': v.kind = VarRef::D; break;
            case 'a': v.kind = VarRef::A; break;
            case 't': v.kind = VarRef::T; break;
            case 'c': v.kind = VarRef::C; break;
            default: throw ParseError(lineno, 1, "bad variable kind in '" + tok + "'");
        }
        std::istringstream is(tok.substr(2, tok.size() - 3));
        std::string part;
        int slot = 0;
        while (std::getline(is, part, ',')) {
            if (slot >= 4) throw ParseError(lineno, 1, "too many indices in '" + tok + "'");
            v.idx[slot++] = std::stoi(part);
        }
        int want = v.kind == VarRef::C ? 4 : 2;
        if (slot != want) throw ParseError(lineno, 1, "bad arity in '" + tok + "'");
        return v;
    };
    bool got_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "bprog") {
            std::string version;
            ls >> version;
            if (version != "v1") throw ParseError(lineno, 1, "unsupported bprog version");
            got_header = true;
        } else if (key == "lambda") {
            std::string r;
            ls >> r;
            p.lambda = parse_rational(r);
        } else if (key == "states") {
            ls >> p.m_states;
        } else if (key == "approx") {
            ls >> p.k;
        } else if (key == "initial") {
            ls >> p.m_initial;
        } else if (key == "labels") {
            size_t n;
            ls >> n;
            p.label_names.reserve(n);
        } else if (key == "label") {
            int idx;
            std::string name;
            ls >> idx >> name;
            if (idx != static_cast<int>(p.label_names.size()))
                throw ParseError(lineno, 1, "labels out of order");
            p.label_names.push_back(name);
        } else if (key == "statelabel") {
            int s, l;
            ls >> s >> l;
            if (s != static_cast<int>(p.state_label.size()))
                throw ParseError(lineno, 1, "state labels out of order");
            p.state_label.push_back(l);
        } else if (key == "var") {
            std::string tok;
            ls >> tok;
            parse_var(tok);  // declarations are implied by the header; validated only
        } else if (key == "minimize") {
            std::string tok;
            ls >> tok;
            p.objective = parse_var(tok);
        } else if (key == "con") {
            BiConstraint con;
            ls >> con.name;
            std::string tok;
            while (ls >> tok) {
                if (tok == "lin" || tok == "bil") {
                    BiTerm t;
                    std::string coef, x;
                    ls >> coef >> x;
                    t.coef = parse_rational(coef);
                    t.x = parse_var(x);
                    if (tok == "bil") {
                        std::string y;
                        ls >> y;
                        t.y = parse_var(y);
                    }
                    con.terms.push_back(std::move(t));
                } else if (tok == "<=" || tok == "=" || tok == ">=") {
                    con.sense = tok == "<=" ? Sense::LE : tok == "=" ? Sense::EQ : Sense::GE;
                    std::string rhs;
                    ls >> rhs;
                    con.rhs = parse_rational(rhs);
                } else {
                    throw ParseError(lineno, 1, "unexpected token '" + tok + "' in constraint");
                }
            }
            p.cons.push_back(std::move(con));
        } else {
            throw ParseError(lineno, 1, "unknown directive '" + key + "'");
        }
    }
    if (!got_header) throw ParseError(lineno, 1, "missing bprog header");
    return p;
}

/// Evaluates every constraint under an assignment; returns the names of the
/// violated ones. Exact when S = Rational; float mode uses the tolerance.
template <class S, class Assign>
std::vector<std::string> check_program(const BilinearProgram& p, Assign value, double tol = 0.0) {
    std::vector<std::string> violations;
    for (const auto& con : p.cons) {
        S lhs = num<S>::zero();
        for (const auto& t : con.terms) {
            S term = num<S>::from_rational(t.coef) * value(t.x);
            if (t.y) term *= value(*t.y);
            lhs += term;
        }
        S rhs = num<S>::from_rational(con.rhs);
        bool ok = true;
        if constexpr (num<S>::exact) {
            switch (con.sense) {
                case Sense::LE: ok = lhs <= rhs; break;
                case Sense::EQ: ok = lhs == rhs; break;
                case Sense::GE: ok = lhs >= rhs; break;
            }
        } else {
            double l = num<S>::as_double(lhs), r = num<S>::as_double(rhs);
            switch (con.sense) {
                case Sense::LE: ok = l <= r + tol; break;
                case Sense::EQ: ok = std::fabs(l - r) <= tol; break;
                case Sense::GE: ok = l >= r - tol; break;
            }
        }
        if (!ok) violations.push_back(con.name);
    }
    return violations;
}

/// Assignment built from a distance-engine result on the full pair space:
/// d := gamma, a := label indicators, t := approximant rows, c := plans.
inline Rational solution_value(const DistanceResult<Rational>& res,
                               const BilinearProgram& p, const VarRef& v) {
    const auto& sp = *res.space;
    switch (v.kind) {
        case VarRef::D: return res.delta.at(v.idx[0], v.idx[1]);
        case VarRef::A: {
            int label_id = intern_label(p.label_names[v.idx[1]]);
            return sp.right.labels[v.idx[0]] == label_id ? Rational(1) : Rational(0);
        }
        case VarRef::T: return sp.right.rows[v.idx[0]].at(v.idx[1]);
        case VarRef::C: return res.witness.at(v.idx[0], v.idx[1]).mass(v.idx[2], v.idx[3]);
    }
    return Rational(0);
}

/// Parametric template: row `row` of the base chain is replaced by
/// x -> cell_x, y -> cell_y (when present), remainder -> cell_rest.
struct SweepSpec {
    MarkovChain<Rational> base;
    int row = 0;
    int cell_x = 0;
    std::optional<int> cell_y;
    int cell_rest = 0;
    double x_lo = 0.0, x_hi = 1.0;
    double y_lo = 0.0, y_hi = 1.0;
    int resolution = 2;  // grid points per axis
};

struct SweepResult {
    double best_x = 0.0, best_y = 0.0;
    double best_value = 0.0;
    // feasible grid evaluations as (x, y, distance), x-major order
    std::vector<std::array<double, 3>> grid;
};

/// Evaluates the distance from M to every feasible template instance on the
/// grid (float mode) and returns the argmin with lowest-index tie-break.
/// Grid points whose remainder cell would be negative do not instantiate a
/// valid chain and are skipped.
inline SweepResult sweep(const MarkovChain<Rational>& m, const SweepSpec& spec,
                         const Rational& lambda, bool parallel = true) {
    if (spec.resolution < 1) throw InvalidTemplate("grid resolution must be positive");
    if (spec.row < 0 || spec.row >= spec.base.size())
        throw InvalidTemplate("template row out of range");
    auto in_range = [&](int c) { return c >= 0 && c < spec.base.size(); };
    if (!in_range(spec.cell_x) || !in_range(spec.cell_rest) ||
        (spec.cell_y && !in_range(*spec.cell_y)))
        throw InvalidTemplate("template cell out of range");
    if (spec.cell_x == spec.cell_rest || (spec.cell_y && (*spec.cell_y == spec.cell_x ||
                                                          *spec.cell_y == spec.cell_rest)))
        throw InvalidTemplate("template cells must be distinct");

    MarkovChain<double> mf = to_float(m);
    MarkovChain<double> base = to_float(spec.base);
    const int res = spec.resolution;
    auto coord = [&](double lo, double hi, int i) {
        return res == 1 ? lo : lo + (hi - lo) * i / (res - 1);
    };
    const int ny = spec.cell_y ? res : 1;
    std::vector<double> values(static_cast<size_t>(res) * ny,
                               std::numeric_limits<double>::infinity());

    parallel_for(res, parallel, [&](int xi) {
        double x = coord(spec.x_lo, spec.x_hi, xi);
        for (int yi = 0; yi < ny; ++yi) {
            double y = spec.cell_y ? coord(spec.y_lo, spec.y_hi, yi) : 0.0;
            double rest = 1.0 - x - y;
            if (rest < -1e-12 || x < -1e-12 || y < -1e-12) continue;
            if (rest < 0) rest = 0;
            MarkovChain<double> inst = base;
            std::vector<std::pair<int, double>> row{{spec.cell_x, x}, {spec.cell_rest, rest}};
            if (spec.cell_y) row.emplace_back(*spec.cell_y, y);
            inst.rows[spec.row] = Distribution<double>(std::move(row));
            values[static_cast<size_t>(xi) * ny + yi] =
                distance_between(mf, inst, lambda, EngineOpts{.parallel = false});
        }
    });

    SweepResult out;
    bool found = false;
    for (int xi = 0; xi < res; ++xi)
        for (int yi = 0; yi < ny; ++yi) {
            double v = values[static_cast<size_t>(xi) * ny + yi];
            if (std::isinf(v)) continue;
            double x = coord(spec.x_lo, spec.x_hi, xi);
            double y = spec.cell_y ? coord(spec.y_lo, spec.y_hi, yi) : 0.0;
            out.grid.push_back({x, y, v});
            if (!found || v < out.best_value) {
                found = true;
                out.best_value = v;
                out.best_x = x;
                out.best_y = y;
            }
        }
    if (!found) throw InvalidTemplate("no feasible grid point");
    return out;
}

}  // namespace mcmin
