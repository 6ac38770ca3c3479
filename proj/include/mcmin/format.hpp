#pragma once

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mcmin/chain.hpp"
#include "mcmin/errors.hpp"

namespace mcmin {

/// Line-oriented textual chain format (see README for the grammar):
///
///   mc <name>
///   states <n>
///   initial <index>
///   label <index> <string>          one per state
///   trans <from> <to> <p>/<q>       omitted pairs are 0
///
/// '#' starts a comment; rationals may be unreduced on input and are
/// emitted in lowest terms.
inline MarkovChain<Rational> parse_chain(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::string name;
    int n_states = -1, initial = -1;
    std::vector<std::pair<bool, int>> labels;  // (seen, id)
    std::vector<std::vector<std::pair<int, Rational>>> rows;

    auto fail = [&](int col, const std::string& msg) -> ParseError {
        return ParseError(lineno, col, msg);
    };

    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "mc") {
            if (!(ls >> name)) throw fail(1, "expected chain name after 'mc'");
        } else if (key == "states") {
            if (!(ls >> n_states) || n_states <= 0) throw fail(1, "expected positive state count");
            labels.assign(n_states, {false, 0});
            rows.assign(n_states, {});
        } else if (key == "initial") {
            if (!(ls >> initial)) throw fail(1, "expected initial state index");
        } else if (key == "label") {
            int idx;
            std::string text_label;
            if (n_states < 0) throw fail(1, "'label' before 'states'");
            if (!(ls >> idx >> text_label)) throw fail(1, "expected 'label <index> <string>'");
            if (idx < 0 || idx >= n_states) throw fail(1, "label index out of range");
            if (text_label == kBottomLabel) throw fail(1, "label '__bottom' is reserved");
            if (labels[idx].first) throw fail(1, "duplicate label for state " + std::to_string(idx));
            labels[idx] = {true, intern_label(text_label)};
        } else if (key == "trans") {
            int from, to;
            std::string prob;
            if (n_states < 0) throw fail(1, "'trans' before 'states'");
            if (!(ls >> from >> to >> prob)) throw fail(1, "expected 'trans <from> <to> <p>/<q>'");
            if (from < 0 || from >= n_states || to < 0 || to >= n_states)
                throw fail(1, "transition endpoint out of range");
            Rational p;
            try {
                p = parse_rational(prob);
            } catch (const McError& e) {
                throw fail(1, e.what());
            }
            rows[from].emplace_back(to, p);
        } else {
            throw fail(1, "unknown directive '" + key + "'");
        }
    }
    if (n_states < 0) throw ParseError(lineno, 1, "missing 'states' directive");
    if (initial < 0) throw ParseError(lineno, 1, "missing 'initial' directive");
    MarkovChain<Rational> mc;
    mc.name = name.empty() ? "chain" : name;
    mc.initial = initial;
    mc.labels.resize(n_states);
    for (int i = 0; i < n_states; ++i) {
        if (!labels[i].first)
            throw ParseError(lineno, 1, "state " + std::to_string(i) + " has no label");
        mc.labels[i] = labels[i].second;
    }
    mc.rows.reserve(n_states);
    for (auto& row : rows) mc.rows.push_back(Distribution<Rational>(std::move(row)));
    try {
        validate(mc);
    } catch (const McError& e) {
        throw ParseError(lineno, 1, e.what());
    }
    return mc;
}

/// Canonical serialization: directives in fixed order, transitions sorted
/// by (from, to), rationals in lowest terms. parse/serialize round-trips.
inline std::string serialize_chain(const MarkovChain<Rational>& mc) {
    std::ostringstream out;
    out << "mc " << (mc.name.empty() ? "chain" : mc.name) << "\n";
    out << "states " << mc.size() << "\n";
    out << "initial " << mc.initial << "\n";
    for (int i = 0; i < mc.size(); ++i) out << "label " << i << " " << label_text(mc.labels[i]) << "\n";
    for (int i = 0; i < mc.size(); ++i)
        for (const auto& [j, w] : mc.rows[i].entries)
            out << "trans " << i << " " << j << " " << rat_str(w) << "\n";
    return out.str();
}

/// JSON mirror with the same field names as the text format.
inline std::string serialize_chain_json(const MarkovChain<Rational>& mc) {
    nlohmann::json j;
    j["mc"] = mc.name.empty() ? "chain" : mc.name;
    j["states"] = mc.size();
    j["initial"] = mc.initial;
    nlohmann::json labels = nlohmann::json::array();
    for (int l : mc.labels) labels.push_back(label_text(l));
    j["label"] = labels;
    nlohmann::json trans = nlohmann::json::array();
    for (int i = 0; i < mc.size(); ++i)
        for (const auto& [t, w] : mc.rows[i].entries)
            trans.push_back({{"from", i}, {"to", t}, {"p", rat_str(w)}});
    j["trans"] = trans;
    return j.dump(2) + "\n";
}

inline MarkovChain<Rational> parse_chain_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(1, 1, e.what());
    }
    try {
        MarkovChain<Rational> mc;
        mc.name = j.value("mc", "chain");
        int n = j.at("states").get<int>();
        if (n <= 0) throw ParseError(1, 1, "state count must be positive");
        mc.initial = j.at("initial").get<int>();
        for (const auto& l : j.at("label")) {
            std::string s = l.get<std::string>();
            if (s == kBottomLabel) throw ParseError(1, 1, "label '__bottom' is reserved");
            mc.labels.push_back(intern_label(s));
        }
        if (static_cast<int>(mc.labels.size()) != n)
            throw ParseError(1, 1, "label array size differs from 'states'");
        std::vector<std::vector<std::pair<int, Rational>>> rows(n);
        for (const auto& t : j.at("trans")) {
            int from = t.at("from").get<int>();
            int to = t.at("to").get<int>();
            if (from < 0 || from >= n || to < 0 || to >= n)
                throw ParseError(1, 1, "transition endpoint out of range");
            rows[from].emplace_back(to, parse_rational(t.at("p").get<std::string>()));
        }
        for (auto& row : rows) mc.rows.push_back(Distribution<Rational>(std::move(row)));
        validate(mc);
        return mc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(1, 1, e.what());
    } catch (const ParseError&) {
        throw;
    } catch (const McError& e) {
        throw ParseError(1, 1, e.what());
    }
}

/// Parses either format; JSON is detected by a leading '{'.
inline MarkovChain<Rational> parse_chain_auto(const std::string& text) {
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
        if (c == '{') return parse_chain_json(text);
        break;
    }
    return parse_chain(text);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw McError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw McError("cannot write '" + path + "'");
    out << content;
}

inline MarkovChain<Rational> load_chain(const std::string& path) {
    return parse_chain_auto(read_file(path));
}

/// FNV-1a digest of raw input bytes, used in reports.
inline std::string digest(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace mcmin
