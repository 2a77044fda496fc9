#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "driftwatch/document.hpp"
#include "driftwatch/error.hpp"

namespace driftwatch {

// Rule DSL, one program per topic:
//
//   program  := "topic" STRING rule*
//   rule     := ("assert" IDENT | "accept" | "reject") "when"
//               clause ("and" clause)* ["scope" ("sentence"|"document")]
//   clause   := atom ["near/" INT atom]
//   atom     := STRING | "fact(" IDENT ")"
//
// Keywords are case-insensitive, '#' starts a line comment, string literals
// are tokenized with the corpus tokenizer. Default scope is sentence.

enum class Scope { kSentence, kDocument };

struct Atom {
    enum class Kind { kLiteral, kFact };
    Kind kind = Kind::kLiteral;
    std::vector<std::string> literal;  // tokenized, lowercase
    std::string fact;
};

struct Clause {
    Atom left;
    std::optional<int> proximity;  // token-distance bound, >= 1
    std::optional<Atom> right;     // present iff proximity present
};

struct Rule {
    enum class Head { kAssert, kAccept, kReject };
    Head head = Head::kAccept;
    std::string fact;  // assert rules only
    std::vector<Clause> clauses;
    Scope scope = Scope::kSentence;
};

struct RuleSet {
    std::string topic_name;
    std::vector<Rule> assert_rules;
    std::vector<Rule> accept_rules;
    std::vector<Rule> reject_rules;
    std::set<std::string> rule_terms;  // every literal token in any pattern
};

// Evaluation result: the binary verdict F(d) plus the matched evidence.
struct Verdict {
    bool selected = false;
    std::vector<TokenSpan> matches;                 // atoms of fired accept rules
    std::map<std::string, std::set<TokenSpan>> facts;
};

// ---------------------------------------------------------------------------
// Parsing

namespace rules_detail {

struct Token {
    enum class Kind { kIdent, kString, kInt, kSlash, kLParen, kRParen, kEnd };
    Kind kind = Kind::kEnd;
    std::string text;   // ident as written / string contents / digits
    std::string lower;  // lowercased ident, for keyword matching
    int line = 0;
    int col = 0;
};

inline std::string ascii_lower(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c += 0x20;
    }
    return s;
}

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return cur_; }

    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const Token& at, const std::string& msg) const {
        throw RuleError("line " + std::to_string(at.line) + ", col " +
                        std::to_string(at.col) + ": " + msg);
    }

private:
    void advance() {
        skip_space_and_comments();
        cur_ = Token{};
        cur_.line = line_;
        cur_.col = col_;
        if (pos_ >= src_.size()) {
            cur_.kind = Token::Kind::kEnd;
            return;
        }
        const char c = src_[pos_];
        if (c == '"') {
            bump();
            std::string value;
            while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') {
                value += src_[pos_];
                bump();
            }
            if (pos_ >= src_.size() || src_[pos_] != '"') {
                fail(cur_, "unterminated string literal");
            }
            bump();
            cur_.kind = Token::Kind::kString;
            cur_.text = std::move(value);
            return;
        }
        if (c == '/') {
            bump();
            cur_.kind = Token::Kind::kSlash;
            return;
        }
        if (c == '(') {
            bump();
            cur_.kind = Token::Kind::kLParen;
            return;
        }
        if (c == ')') {
            bump();
            cur_.kind = Token::Kind::kRParen;
            return;
        }
        if (c >= '0' && c <= '9') {
            std::string digits;
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
                digits += src_[pos_];
                bump();
            }
            cur_.kind = Token::Kind::kInt;
            cur_.text = std::move(digits);
            return;
        }
        if (is_ident_char(c)) {
            std::string ident;
            while (pos_ < src_.size() && (is_ident_char(src_[pos_]) ||
                                          (src_[pos_] >= '0' && src_[pos_] <= '9'))) {
                ident += src_[pos_];
                bump();
            }
            cur_.kind = Token::Kind::kIdent;
            cur_.lower = ascii_lower(ident);
            cur_.text = std::move(ident);
            return;
        }
        fail(cur_, std::string("unexpected character '") + c + "'");
    }

    static bool is_ident_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }

    void skip_space_and_comments() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') bump();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                bump();
            } else {
                break;
            }
        }
    }

    void bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token cur_;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) {}

    RuleSet parse() {
        if (lex_.peek().kind == Token::Kind::kEnd) throw RuleError("empty program");
        expect_keyword("topic");
        RuleSet rs;
        rs.topic_name = expect(Token::Kind::kString, "topic name string").text;
        std::size_t rule_count = 0;
        while (lex_.peek().kind != Token::Kind::kEnd) {
            parse_rule(rs);
            ++rule_count;
        }
        if (rule_count == 0) throw RuleError("empty program");
        validate(rs);
        return rs;
    }

private:
    void parse_rule(RuleSet& rs) {
        const Token head_tok = lex_.take();
        if (head_tok.kind != Token::Kind::kIdent) {
            lex_.fail(head_tok, "expected 'assert', 'accept' or 'reject'");
        }
        Rule rule;
        if (head_tok.lower == "assert") {
            rule.head = Rule::Head::kAssert;
            const Token name = lex_.take();
            if (name.kind != Token::Kind::kIdent) {
                lex_.fail(name, "expected fact name after 'assert'");
            }
            rule.fact = name.text;
        } else if (head_tok.lower == "accept") {
            rule.head = Rule::Head::kAccept;
        } else if (head_tok.lower == "reject") {
            rule.head = Rule::Head::kReject;
        } else {
            lex_.fail(head_tok, "expected 'assert', 'accept' or 'reject', got '" +
                                    head_tok.text + "'");
        }
        expect_keyword("when");
        rule.clauses.push_back(parse_clause(rs));
        while (peek_keyword("and")) {
            lex_.take();
            rule.clauses.push_back(parse_clause(rs));
        }
        if (peek_keyword("scope")) {
            lex_.take();
            const Token sc = lex_.take();
            if (sc.kind == Token::Kind::kIdent && sc.lower == "sentence") {
                rule.scope = Scope::kSentence;
            } else if (sc.kind == Token::Kind::kIdent && sc.lower == "document") {
                rule.scope = Scope::kDocument;
            } else {
                lex_.fail(sc, "expected 'sentence' or 'document' after 'scope'");
            }
        }
        switch (rule.head) {
            case Rule::Head::kAssert: rs.assert_rules.push_back(std::move(rule)); break;
            case Rule::Head::kAccept: rs.accept_rules.push_back(std::move(rule)); break;
            case Rule::Head::kReject: rs.reject_rules.push_back(std::move(rule)); break;
        }
    }

    Clause parse_clause(RuleSet& rs) {
        Clause clause;
        clause.left = parse_atom(rs);
        if (peek_keyword("near")) {
            const Token near_tok = lex_.take();
            const Token slash = lex_.take();
            if (slash.kind != Token::Kind::kSlash) {
                lex_.fail(slash, "expected '/' after 'near'");
            }
            const Token k = lex_.take();
            if (k.kind != Token::Kind::kInt) lex_.fail(k, "expected integer after 'near/'");
            const long value = std::stol(k.text);
            if (value < 1) lex_.fail(k, "proximity bound must be >= 1");
            (void)near_tok;
            clause.proximity = static_cast<int>(value);
            clause.right = parse_atom(rs);
        }
        return clause;
    }

    Atom parse_atom(RuleSet& rs) {
        const Token t = lex_.take();
        if (t.kind == Token::Kind::kString) {
            Atom a;
            a.kind = Atom::Kind::kLiteral;
            a.literal = tokenize(t.text);
            if (a.literal.empty()) {
                lex_.fail(t, "string literal \"" + t.text + "\" contains no tokens");
            }
            for (const auto& term : a.literal) rs.rule_terms.insert(term);
            return a;
        }
        if (t.kind == Token::Kind::kIdent && t.lower == "fact") {
            const Token open = lex_.take();
            if (open.kind != Token::Kind::kLParen) lex_.fail(open, "expected '(' after 'fact'");
            const Token name = lex_.take();
            if (name.kind != Token::Kind::kIdent) lex_.fail(name, "expected fact name");
            const Token close = lex_.take();
            if (close.kind != Token::Kind::kRParen) lex_.fail(close, "expected ')'");
            Atom a;
            a.kind = Atom::Kind::kFact;
            a.fact = name.text;
            fact_refs_.emplace_back(name.text, name);
            return a;
        }
        lex_.fail(t, "expected a quoted pattern or fact(NAME)");
    }

    void validate(const RuleSet& rs) const {
        std::set<std::string> heads;
        for (const auto& r : rs.assert_rules) heads.insert(r.fact);
        for (const auto& [name, tok] : fact_refs_) {
            if (!heads.count(name)) {
                lex_.fail(tok, "undefined fact '" + name + "' (no assert rule asserts it)");
            }
        }
    }

    bool peek_keyword(const char* kw) const {
        return lex_.peek().kind == Token::Kind::kIdent && lex_.peek().lower == kw;
    }

    void expect_keyword(const char* kw) {
        const Token t = lex_.take();
        if (t.kind != Token::Kind::kIdent || t.lower != kw) {
            lex_.fail(t, std::string("expected '") + kw + "'");
        }
    }

    Token expect(Token::Kind kind, const char* what) {
        const Token t = lex_.take();
        if (t.kind != kind) lex_.fail(t, std::string("expected ") + what);
        return t;
    }

    Lexer lex_;
    std::vector<std::pair<std::string, Token>> fact_refs_;
};

}  // namespace rules_detail

inline RuleSet parse_rules(const std::string& source) {
    return rules_detail::Parser(source).parse();
}

// ---------------------------------------------------------------------------
// Evaluation

namespace rules_detail {

using Span = std::pair<std::uint32_t, std::uint32_t>;  // [begin, end)

inline std::uint32_t span_gap(const Span& a, const Span& b) {
    if (a.second <= b.first) return b.first - a.second;
    if (b.second <= a.first) return a.first - b.second;
    return 0;  // overlap
}

// Sentence containing the span entirely, or npos if it crosses boundaries.
inline std::size_t sentence_of(const Document& d, const Span& s) {
    for (std::size_t i = 0; i < d.sentences.size(); ++i) {
        if (d.sentences[i].begin <= s.first && s.second <= d.sentences[i].end) return i;
    }
    return static_cast<std::size_t>(-1);
}

inline std::vector<Span> literal_spans(const Document& d,
                                       const std::vector<std::string>& literal) {
    std::vector<Span> out;
    if (literal.empty() || d.tokens.size() < literal.size()) return out;
    const std::size_t last = d.tokens.size() - literal.size();
    for (std::size_t i = 0; i <= last; ++i) {
        bool hit = true;
        for (std::size_t j = 0; j < literal.size(); ++j) {
            if (d.tokens[i + j] != literal[j]) {
                hit = false;
                break;
            }
        }
        if (hit) {
            out.emplace_back(static_cast<std::uint32_t>(i),
                             static_cast<std::uint32_t>(i + literal.size()));
        }
    }
    return out;
}

struct EvalState {
    const Document& doc;
    std::map<std::string, std::set<Span>> facts;

    std::vector<Span> atom_spans(const Atom& a) const {
        if (a.kind == Atom::Kind::kLiteral) return literal_spans(doc, a.literal);
        std::vector<Span> out;
        const auto it = facts.find(a.fact);
        if (it != facts.end()) out.assign(it->second.begin(), it->second.end());
        return out;
    }

    // Every way the clause can match inside the scope unit. A match is the
    // covering span of the involved atoms. `unit` is a sentence index for
    // sentence scope, npos for document scope. Proximity pairs must share a
    // sentence regardless of the rule's scope.
    std::vector<Span> clause_matches(const Clause& c, std::size_t unit) const {
        std::vector<Span> out;
        const auto left = atom_spans(c.left);
        if (!c.proximity) {
            for (const auto& s : left) {
                if (unit == static_cast<std::size_t>(-1) || sentence_of(doc, s) == unit) {
                    out.push_back(s);
                }
            }
            return out;
        }
        const auto right = atom_spans(*c.right);
        const auto bound = static_cast<std::uint32_t>(*c.proximity);
        for (const auto& a : left) {
            const std::size_t sa = sentence_of(doc, a);
            if (sa == static_cast<std::size_t>(-1)) continue;
            if (unit != static_cast<std::size_t>(-1) && sa != unit) continue;
            for (const auto& b : right) {
                if (sentence_of(doc, b) != sa) continue;
                if (span_gap(a, b) <= bound) {
                    out.emplace_back(std::min(a.first, b.first),
                                     std::max(a.second, b.second));
                }
            }
        }
        return out;
    }

    std::vector<std::size_t> scope_units(Scope scope) const {
        if (scope == Scope::kDocument) return {static_cast<std::size_t>(-1)};
        std::vector<std::size_t> units(doc.sentences.size());
        for (std::size_t i = 0; i < units.size(); ++i) units[i] = i;
        return units;
    }

    // Union spans of every combination of per-clause matches, folded
    // incrementally with set deduplication so overlapping matches do not
    // blow up combinatorially.
    std::set<Span> rule_union_spans(const Rule& r) const {
        std::set<Span> result;
        for (const std::size_t unit : scope_units(r.scope)) {
            std::set<Span> partial;
            bool first = true;
            bool dead = false;
            for (const auto& clause : r.clauses) {
                const auto matches = clause_matches(clause, unit);
                if (matches.empty()) {
                    dead = true;
                    break;
                }
                if (first) {
                    partial.insert(matches.begin(), matches.end());
                    first = false;
                    continue;
                }
                std::set<Span> next;
                for (const auto& p : partial) {
                    for (const auto& m : matches) {
                        next.emplace(std::min(p.first, m.first),
                                     std::max(p.second, m.second));
                    }
                }
                partial.swap(next);
            }
            if (!dead) result.insert(partial.begin(), partial.end());
        }
        return result;
    }

    // Whether the rule fires anywhere; collects the matched atom spans of
    // every unit in which it fires.
    bool rule_fires(const Rule& r, std::set<Span>* matched) const {
        bool fired = false;
        for (const std::size_t unit : scope_units(r.scope)) {
            std::vector<std::vector<Span>> per_clause;
            per_clause.reserve(r.clauses.size());
            bool all = true;
            for (const auto& clause : r.clauses) {
                per_clause.push_back(clause_matches(clause, unit));
                if (per_clause.back().empty()) {
                    all = false;
                    break;
                }
            }
            if (!all) continue;
            fired = true;
            if (matched) {
                for (const auto& spans : per_clause) {
                    matched->insert(spans.begin(), spans.end());
                }
            }
        }
        return fired;
    }
};

}  // namespace rules_detail

// Runs the program on a document: assert rules chain monotonically to a
// fixpoint, then selected = (some accept rule fires) and (no reject rule
// fires). Deterministic; rule order within a stratum does not matter.
inline Verdict evaluate(const RuleSet& rules, const Document& d) {
    rules_detail::EvalState state{d, {}};

    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& r : rules.assert_rules) {
            for (const auto& span : state.rule_union_spans(r)) {
                if (state.facts[r.fact].insert(span).second) changed = true;
            }
        }
    }

    std::set<rules_detail::Span> accept_spans;
    bool accept_fired = false;
    for (const auto& r : rules.accept_rules) {
        if (state.rule_fires(r, &accept_spans)) accept_fired = true;
    }
    bool reject_fired = false;
    for (const auto& r : rules.reject_rules) {
        if (state.rule_fires(r, nullptr)) {
            reject_fired = true;
            break;
        }
    }

    Verdict v;
    v.selected = accept_fired && !reject_fired;
    for (const auto& s : accept_spans) {
        v.matches.push_back(TokenSpan{d.id, s.first, s.second});
    }
    for (const auto& [name, spans] : state.facts) {
        auto& dst = v.facts[name];
        for (const auto& s : spans) dst.insert(TokenSpan{d.id, s.first, s.second});
    }
    return v;
}

}  // namespace driftwatch
