#pragma once

// Implicational propositional logic: formulas over Var/Impl/And/Or (no
// negation, no falsum), a small goal-stack tactic engine, a truth-table
// validity oracle, and a proof-first theorem generator.
//
// Serialized forms, all single-line:
//   statement   theorem : P∧Q→Q∧P
//   tactic      intro h1 | exact h2 | apply h3 | split | left | right | cases h4
//   state       h1 : P, h2 : P→Q ⊢ Q | ⊢ R        (goals separated by " | ")
//   closed      QED

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "proofgym/common.hpp"
#include "proofgym/proof.hpp"
#include "proofgym/rng.hpp"

namespace proofgym {

// ============================ formulas ============================

enum class FKind { Var, Impl, And, Or };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
    FKind kind = FKind::Var;
    int var = 0;  // for Var
    FormulaPtr lhs, rhs;
};

inline FormulaPtr fvar(int i) {
    auto f = std::make_shared<Formula>();
    f->kind = FKind::Var;
    f->var = i;
    return f;
}
inline FormulaPtr fbin(FKind k, FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = k;
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}
inline FormulaPtr fimpl(FormulaPtr a, FormulaPtr b) { return fbin(FKind::Impl, std::move(a), std::move(b)); }
inline FormulaPtr fand(FormulaPtr a, FormulaPtr b) { return fbin(FKind::And, std::move(a), std::move(b)); }
inline FormulaPtr for_(FormulaPtr a, FormulaPtr b) { return fbin(FKind::Or, std::move(a), std::move(b)); }

inline bool formula_eq(const FormulaPtr& a, const FormulaPtr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b || a->kind != b->kind) return false;
    if (a->kind == FKind::Var) return a->var == b->var;
    return formula_eq(a->lhs, b->lhs) && formula_eq(a->rhs, b->rhs);
}

inline constexpr const char* kVarLetters = "PQRSTUVWXYZABCDEFGHIJKLMNO";
inline constexpr int kMaxVars = 26;

namespace logic_detail {

inline int prec(FKind k) {
    switch (k) {
        case FKind::Var: return 9;
        case FKind::And: return 3;
        case FKind::Or: return 2;
        case FKind::Impl: return 1;
    }
    return 9;
}

inline void render_rec(const FormulaPtr& f, std::string& out) {
    if (f->kind == FKind::Var) {
        if (f->var < 0 || f->var >= kMaxVars)
            throw ConfigError("variable index out of renderable range: " + std::to_string(f->var));
        out += kVarLetters[f->var];
        return;
    }
    const char* op = f->kind == FKind::Impl ? "→" : f->kind == FKind::And ? "∧" : "∨";
    int p = prec(f->kind);
    // Impl is right-associative, And/Or left-associative.
    bool lp = prec(f->lhs->kind) < p || (prec(f->lhs->kind) == p && f->kind == FKind::Impl);
    bool rp = prec(f->rhs->kind) < p || (prec(f->rhs->kind) == p && f->kind != FKind::Impl);
    if (lp) out += '(';
    render_rec(f->lhs, out);
    if (lp) out += ')';
    out += op;
    if (rp) out += '(';
    render_rec(f->rhs, out);
    if (rp) out += ')';
}

}  // namespace logic_detail

inline std::string render_formula(const FormulaPtr& f) {
    std::string out;
    logic_detail::render_rec(f, out);
    return out;
}

namespace logic_detail {

struct FormulaParser {
    std::string_view s;
    size_t i = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("formula parse error at byte " + std::to_string(i) + ": " + why +
                          " in '" + std::string(s) + "'");
    }
    bool eat(std::string_view tok) {
        if (s.substr(i, tok.size()) == tok) {
            i += tok.size();
            return true;
        }
        return false;
    }
    FormulaPtr atom() {
        if (eat("(")) {
            FormulaPtr f = impl();
            if (!eat(")")) fail("expected ')'");
            return f;
        }
        if (i < s.size()) {
            const char* hit = nullptr;
            for (const char* p = kVarLetters; *p; ++p)
                if (*p == s[i]) { hit = p; break; }
            if (hit) {
                ++i;
                return fvar(static_cast<int>(hit - kVarLetters));
            }
        }
        fail("expected variable or '('");
    }
    FormulaPtr conj() {
        FormulaPtr f = atom();
        while (eat("∧")) f = fand(f, atom());
        return f;
    }
    FormulaPtr disj() {
        FormulaPtr f = conj();
        while (eat("∨")) f = for_(f, conj());
        return f;
    }
    FormulaPtr impl() {
        FormulaPtr f = disj();
        if (eat("→")) return fimpl(f, impl());
        return f;
    }
};

}  // namespace logic_detail

inline FormulaPtr parse_formula(std::string_view text) {
    logic_detail::FormulaParser p{text};
    FormulaPtr f = p.impl();
    if (p.i != text.size()) p.fail("trailing input");
    return f;
}

// ============================ truth-table oracle ============================

inline void collect_vars(const FormulaPtr& f, std::vector<int>& vars) {
    if (f->kind == FKind::Var) {
        for (int v : vars)
            if (v == f->var) return;
        vars.push_back(f->var);
        return;
    }
    collect_vars(f->lhs, vars);
    collect_vars(f->rhs, vars);
}

inline bool eval_formula(const FormulaPtr& f, const std::function<bool(int)>& val) {
    switch (f->kind) {
        case FKind::Var: return val(f->var);
        case FKind::Impl: return !eval_formula(f->lhs, val) || eval_formula(f->rhs, val);
        case FKind::And: return eval_formula(f->lhs, val) && eval_formula(f->rhs, val);
        case FKind::Or: return eval_formula(f->lhs, val) || eval_formula(f->rhs, val);
    }
    return false;
}

// Classical tautology check by exhaustive truth table.  Hard-capped at 20
// distinct variables; larger formulas are a usage error.
inline bool classical_validity(const FormulaPtr& f) {
    std::vector<int> vars;
    collect_vars(f, vars);
    if (vars.size() > 20)
        throw ConfigError("classical_validity: formula has " + std::to_string(vars.size()) +
                          " variables, cap is 20");
    for (uint64_t mask = 0; mask < (1ull << vars.size()); ++mask) {
        auto val = [&](int v) {
            for (size_t j = 0; j < vars.size(); ++j)
                if (vars[j] == v) return (mask >> j & 1) != 0;
            return false;
        };
        if (!eval_formula(f, val)) return false;
    }
    return true;
}

// ============================ proof states ============================

struct Hyp {
    std::string name;
    FormulaPtr f;
};

struct Goal {
    std::vector<Hyp> hyps;
    FormulaPtr target;
};

struct ProofState {
    std::vector<Goal> goals;  // goals[0] is the active goal
    bool closed() const { return goals.empty(); }
};

inline ProofState initial_state(const FormulaPtr& statement) {
    ProofState st;
    st.goals.push_back(Goal{{}, statement});
    return st;
}

inline std::string serialize_goal(const Goal& g) {
    std::string out;
    for (size_t i = 0; i < g.hyps.size(); ++i) {
        if (i) out += ", ";
        out += g.hyps[i].name + " : " + render_formula(g.hyps[i].f);
    }
    if (!g.hyps.empty()) out += ' ';
    out += "⊢ ";
    out += render_formula(g.target);
    return out;
}

inline std::string serialize_state(const ProofState& st) {
    if (st.closed()) return "QED";
    std::string out;
    for (size_t i = 0; i < st.goals.size(); ++i) {
        if (i) out += " | ";
        out += serialize_goal(st.goals[i]);
    }
    return out;
}

inline ProofState parse_state(std::string_view text) {
    ProofState st;
    if (text == "QED") return st;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t bar = text.find(" | ", pos);
        std::string_view part =
            text.substr(pos, bar == std::string_view::npos ? std::string_view::npos : bar - pos);
        size_t turn = part.find("⊢ ");
        if (turn == std::string_view::npos)
            throw ConfigError("state parse error: no turnstile in '" + std::string(part) + "'");
        Goal g;
        std::string_view hyps = part.substr(0, turn);
        if (!hyps.empty()) {
            if (hyps.back() != ' ')
                throw ConfigError("state parse error: malformed hypothesis list");
            hyps.remove_suffix(1);
            size_t hp = 0;
            while (hp <= hyps.size()) {
                size_t comma = hyps.find(", ", hp);
                std::string_view one = hyps.substr(
                    hp, comma == std::string_view::npos ? std::string_view::npos : comma - hp);
                size_t colon = one.find(" : ");
                if (colon == std::string_view::npos)
                    throw ConfigError("state parse error: malformed hypothesis '" +
                                      std::string(one) + "'");
                g.hyps.push_back(Hyp{std::string(one.substr(0, colon)),
                                     parse_formula(one.substr(colon + 3))});
                if (comma == std::string_view::npos) break;
                hp = comma + 2;
            }
        }
        g.target = parse_formula(part.substr(turn + 4));  // turnstile is 3 bytes + space
        st.goals.push_back(std::move(g));
        if (bar == std::string_view::npos) break;
        pos = bar + 3;
    }
    return st;
}

// ============================ tactics ============================

enum class TKind { Intro, Exact, Apply, Split, Left, Right, Cases };

struct Tactic {
    TKind kind = TKind::Split;
    std::string arg;  // hypothesis name for intro/exact/apply/cases
};

inline std::string render_tactic(const Tactic& t) {
    switch (t.kind) {
        case TKind::Intro: return "intro " + t.arg;
        case TKind::Exact: return "exact " + t.arg;
        case TKind::Apply: return "apply " + t.arg;
        case TKind::Split: return "split";
        case TKind::Left: return "left";
        case TKind::Right: return "right";
        case TKind::Cases: return "cases " + t.arg;
    }
    return "?";
}

inline std::optional<Tactic> try_parse_tactic(std::string_view line) {
    auto word_arg = [&](std::string_view kw, TKind k) -> std::optional<Tactic> {
        if (line.size() > kw.size() + 1 && line.substr(0, kw.size()) == kw &&
            line[kw.size()] == ' ') {
            std::string arg(line.substr(kw.size() + 1));
            if (arg.empty() || arg.find(' ') != std::string::npos) return std::nullopt;
            return Tactic{k, arg};
        }
        return std::nullopt;
    };
    if (line == "split") return Tactic{TKind::Split, ""};
    if (line == "left") return Tactic{TKind::Left, ""};
    if (line == "right") return Tactic{TKind::Right, ""};
    if (auto t = word_arg("intro", TKind::Intro)) return t;
    if (auto t = word_arg("exact", TKind::Exact)) return t;
    if (auto t = word_arg("apply", TKind::Apply)) return t;
    if (auto t = word_arg("cases", TKind::Cases)) return t;
    return std::nullopt;
}

inline Tactic parse_tactic(std::string_view line) {
    if (auto t = try_parse_tactic(line)) return *t;
    throw ConfigError("tactic parse error: '" + std::string(line) + "'");
}

struct TacticException : std::runtime_error {
    explicit TacticException(const std::string& why) : std::runtime_error(why) {}
};

namespace logic_detail {

inline int hyp_numeric_suffix(const std::string& name) {
    if (name.size() < 2 || name[0] != 'h') return -1;
    int v = 0;
    for (size_t i = 1; i < name.size(); ++i) {
        if (name[i] < '0' || name[i] > '9') return -1;
        v = v * 10 + (name[i] - '0');
    }
    return v;
}

// Fresh hypothesis names are goal-local: smallest hN above every numbered
// hypothesis already in the goal.
inline int fresh_hyp_index(const Goal& g) {
    int mx = 0;
    for (const Hyp& h : g.hyps) mx = std::max(mx, hyp_numeric_suffix(h.name));
    return mx + 1;
}

inline const Hyp* find_hyp(const Goal& g, const std::string& name) {
    for (const Hyp& h : g.hyps)
        if (h.name == name) return &h;
    return nullptr;
}

}  // namespace logic_detail

// Applies one tactic to the top goal.  Throws TacticException with the reason
// when the tactic does not apply; use try_apply_tactic for a non-throwing
// variant in search loops.
inline ProofState apply_tactic(const ProofState& st, const Tactic& t) {
    using logic_detail::find_hyp;
    using logic_detail::fresh_hyp_index;

    if (st.closed()) throw TacticException("no goals left");
    ProofState out = st;
    Goal g = out.goals.front();
    out.goals.erase(out.goals.begin());

    switch (t.kind) {
        case TKind::Intro: {
            if (g.target->kind != FKind::Impl)
                throw TacticException("intro: goal is not an implication");
            if (t.arg.empty()) throw TacticException("intro: missing hypothesis name");
            if (find_hyp(g, t.arg))
                throw TacticException("intro: name '" + t.arg + "' already in use");
            g.hyps.push_back(Hyp{t.arg, g.target->lhs});
            g.target = g.target->rhs;
            out.goals.insert(out.goals.begin(), std::move(g));
            return out;
        }
        case TKind::Exact: {
            const Hyp* h = find_hyp(g, t.arg);
            if (!h) throw TacticException("exact: no hypothesis '" + t.arg + "'");
            if (!formula_eq(h->f, g.target))
                throw TacticException("exact: hypothesis '" + t.arg +
                                      "' does not match the goal");
            return out;  // goal discharged
        }
        case TKind::Apply: {
            const Hyp* h = find_hyp(g, t.arg);
            if (!h) throw TacticException("apply: no hypothesis '" + t.arg + "'");
            if (h->f->kind != FKind::Impl)
                throw TacticException("apply: hypothesis '" + t.arg + "' is not an implication");
            if (!formula_eq(h->f->rhs, g.target))
                throw TacticException("apply: conclusion of '" + t.arg +
                                      "' does not match the goal");
            g.target = h->f->lhs;
            out.goals.insert(out.goals.begin(), std::move(g));
            return out;
        }
        case TKind::Split: {
            if (g.target->kind != FKind::And)
                throw TacticException("split: goal is not a conjunction");
            Goal right = g;
            g.target = g.target->lhs;
            right.target = right.target->rhs;
            out.goals.insert(out.goals.begin(), std::move(right));
            out.goals.insert(out.goals.begin(), std::move(g));
            return out;
        }
        case TKind::Left:
        case TKind::Right: {
            if (g.target->kind != FKind::Or)
                throw TacticException(t.kind == TKind::Left ? "left: goal is not a disjunction"
                                                            : "right: goal is not a disjunction");
            g.target = t.kind == TKind::Left ? g.target->lhs : g.target->rhs;
            out.goals.insert(out.goals.begin(), std::move(g));
            return out;
        }
        case TKind::Cases: {
            const Hyp* h = find_hyp(g, t.arg);
            if (!h) throw TacticException("cases: no hypothesis '" + t.arg + "'");
            if (h->f->kind == FKind::Or) {
                Goal a = g, b = g;
                for (Hyp& hh : a.hyps)
                    if (hh.name == t.arg) hh.f = h->f->lhs;
                for (Hyp& hh : b.hyps)
                    if (hh.name == t.arg) hh.f = h->f->rhs;
                out.goals.insert(out.goals.begin(), std::move(b));
                out.goals.insert(out.goals.begin(), std::move(a));
                return out;
            }
            if (h->f->kind == FKind::And) {
                int idx = fresh_hyp_index(g);
                FormulaPtr a = h->f->lhs, b = h->f->rhs;
                for (size_t i = 0; i < g.hyps.size(); ++i) {
                    if (g.hyps[i].name == t.arg) {
                        g.hyps[i] = Hyp{"h" + std::to_string(idx), a};
                        g.hyps.insert(g.hyps.begin() + static_cast<long>(i) + 1,
                                      Hyp{"h" + std::to_string(idx + 1), b});
                        break;
                    }
                }
                out.goals.insert(out.goals.begin(), std::move(g));
                return out;
            }
            throw TacticException("cases: hypothesis '" + t.arg +
                                  "' is neither a disjunction nor a conjunction");
        }
    }
    throw TacticException("unknown tactic");
}

inline std::optional<ProofState> try_apply_tactic(const ProofState& st, const Tactic& t,
                                                  std::string* why = nullptr) {
    try {
        return apply_tactic(st, t);
    } catch (const TacticException& e) {
        if (why) *why = e.what();
        return std::nullopt;
    }
}

// Replays tactics from the initial state; returns the serialized state after
// each tactic, or nullopt if any application fails.
inline std::optional<std::vector<std::string>> replay_trace(const FormulaPtr& statement,
                                                            const std::vector<Tactic>& tactics) {
    ProofState st = initial_state(statement);
    std::vector<std::string> trace;
    for (const Tactic& t : tactics) {
        auto next = try_apply_tactic(st, t);
        if (!next) return std::nullopt;
        st = std::move(*next);
        trace.push_back(serialize_state(st));
    }
    return trace;
}

// True iff the tactic list proves the statement outright.
inline bool check_tactics(const FormulaPtr& statement, const std::vector<Tactic>& tactics) {
    ProofState st = initial_state(statement);
    for (const Tactic& t : tactics) {
        auto next = try_apply_tactic(st, t);
        if (!next) return false;
        st = std::move(*next);
    }
    return st.closed();
}

// True iff the tactics prove the statement AND every provided state line
// matches the engine's state exactly, ending in QED.
inline bool check_full_proof(const FormulaPtr& statement, const std::vector<Tactic>& tactics,
                             const std::vector<std::string>& states) {
    if (states.size() != tactics.size()) return false;
    auto trace = replay_trace(statement, tactics);
    if (!trace) return false;
    for (size_t i = 0; i < states.size(); ++i)
        if ((*trace)[i] != states[i]) return false;
    return !trace->empty() && trace->back() == "QED";
}

// ============================ theorems ============================

struct Theorem {
    FormulaPtr statement;
    std::vector<Tactic> tactics;
    std::vector<std::string> state_trace;  // after each tactic; last is "QED"

    std::string statement_line() const { return "theorem : " + render_formula(statement); }
};

// Proof layout: T1, S1, T2, S2, ..., Tk, QED — the closing QED state is the
// final-answer step.
inline Proof theorem_to_proof(const Theorem& t, const std::string& id) {
    Proof p;
    p.id = id;
    p.problem = t.statement_line();
    auto push = [&](Role role, const std::string& text) {
        ProofStep s;
        s.id = static_cast<int>(p.steps.size()) + 1;
        s.role = role;
        s.text = text;
        for (int i = 1; i < s.id; ++i) s.deps.push_back(i);
        p.steps.push_back(std::move(s));
    };
    for (size_t i = 0; i < t.tactics.size(); ++i) {
        push(Role::Tactic, render_tactic(t.tactics[i]));
        bool last = i + 1 == t.tactics.size();
        push(last ? Role::FinalAnswer : Role::State, t.state_trace[i]);
    }
    p.final_answer_id = static_cast<int>(p.steps.size());
    return p;
}

// ============================ generation ============================

namespace logic_detail {

struct GenCtx {
    Rng& rng;
    int var_count;
};

inline FormulaPtr random_formula(GenCtx& cx, int depth) {
    double r = cx.rng.next_double();
    if (depth <= 0 || r < 0.45) return fvar(static_cast<int>(cx.rng.bounded(
        static_cast<uint64_t>(cx.var_count))));
    FKind k = r < 0.65 ? FKind::Impl : r < 0.825 ? FKind::And : FKind::Or;
    return fbin(k, random_formula(cx, depth - 1), random_formula(cx, depth - 1));
}

// Hypothesis material for intro: biased toward implications whose premise is
// an existing hypothesis, so apply/cases show up in generated proofs.
inline FormulaPtr intro_formula(GenCtx& cx, const std::vector<Hyp>& hyps) {
    if (!hyps.empty() && cx.rng.chance(0.3)) {
        const Hyp& h = hyps[static_cast<size_t>(cx.rng.bounded(hyps.size()))];
        return fimpl(h.f, random_formula(cx, 1));
    }
    return random_formula(cx, 2);
}

inline int fresh_index_of(const std::vector<Hyp>& hyps) {
    Goal g;
    g.hyps = hyps;
    return fresh_hyp_index(g);
}

std::optional<std::vector<Tactic>> prove_exact(GenCtx& cx, const std::vector<Hyp>& hyps,
                                               const FormulaPtr& target, int budget);

// Samples a random target together with a tactic list proving it from `hyps`
// in exactly `budget` tactics.
inline std::optional<std::pair<FormulaPtr, std::vector<Tactic>>> sample_goal(
    GenCtx& cx, const std::vector<Hyp>& hyps, int budget) {
    if (budget <= 0) return std::nullopt;
    if (budget == 1) {
        if (hyps.empty()) return std::nullopt;
        const Hyp& h = hyps[static_cast<size_t>(cx.rng.bounded(hyps.size()))];
        return std::make_pair(h.f, std::vector<Tactic>{Tactic{TKind::Exact, h.name}});
    }

    enum Opt { INTRO, SPLIT, LEFT, RIGHT, APPLY, CASES_AND, CASES_OR };
    std::vector<std::pair<Opt, double>> opts{{INTRO, 3.0}};
    if (budget >= 3) opts.push_back({SPLIT, 1.5});
    opts.push_back({LEFT, 0.6});
    opts.push_back({RIGHT, 0.6});
    std::vector<size_t> impl_hyps, and_hyps, or_hyps;
    for (size_t i = 0; i < hyps.size(); ++i) {
        if (hyps[i].f->kind == FKind::Impl) impl_hyps.push_back(i);
        if (hyps[i].f->kind == FKind::And) and_hyps.push_back(i);
        if (hyps[i].f->kind == FKind::Or) or_hyps.push_back(i);
    }
    if (!impl_hyps.empty()) opts.push_back({APPLY, 1.5});
    if (!and_hyps.empty()) opts.push_back({CASES_AND, 1.2});
    if (!or_hyps.empty() && budget >= 3) opts.push_back({CASES_OR, 1.2});

    // weighted order without replacement
    while (!opts.empty()) {
        double total = 0;
        for (auto& [o, w] : opts) total += w;
        double pickv = cx.rng.next_double() * total;
        size_t chosen = 0;
        for (; chosen + 1 < opts.size(); ++chosen) {
            pickv -= opts[chosen].second;
            if (pickv < 0) break;
        }
        Opt opt = opts[chosen].first;
        opts.erase(opts.begin() + static_cast<long>(chosen));

        switch (opt) {
            case INTRO: {
                FormulaPtr f = intro_formula(cx, hyps);
                std::string name = "h" + std::to_string(fresh_index_of(hyps));
                std::vector<Hyp> h2 = hyps;
                h2.push_back(Hyp{name, f});
                if (auto rec = sample_goal(cx, h2, budget - 1)) {
                    std::vector<Tactic> tac{Tactic{TKind::Intro, name}};
                    tac.insert(tac.end(), rec->second.begin(), rec->second.end());
                    return std::make_pair(fimpl(f, rec->first), std::move(tac));
                }
                break;
            }
            case SPLIT: {
                int b1 = static_cast<int>(cx.rng.range(1, budget - 2));
                auto a = sample_goal(cx, hyps, b1);
                if (!a) break;
                auto b = sample_goal(cx, hyps, budget - 1 - b1);
                if (!b) break;
                std::vector<Tactic> tac{Tactic{TKind::Split, ""}};
                tac.insert(tac.end(), a->second.begin(), a->second.end());
                tac.insert(tac.end(), b->second.begin(), b->second.end());
                return std::make_pair(fand(a->first, b->first), std::move(tac));
            }
            case LEFT:
            case RIGHT: {
                auto rec = sample_goal(cx, hyps, budget - 1);
                if (!rec) break;
                FormulaPtr junk = random_formula(cx, 1);
                std::vector<Tactic> tac{
                    Tactic{opt == LEFT ? TKind::Left : TKind::Right, ""}};
                tac.insert(tac.end(), rec->second.begin(), rec->second.end());
                FormulaPtr t = opt == LEFT ? for_(rec->first, junk) : for_(junk, rec->first);
                return std::make_pair(t, std::move(tac));
            }
            case APPLY: {
                const Hyp& h = hyps[impl_hyps[static_cast<size_t>(
                    cx.rng.bounded(impl_hyps.size()))]];
                if (auto pre = prove_exact(cx, hyps, h.f->lhs, budget - 1)) {
                    std::vector<Tactic> tac{Tactic{TKind::Apply, h.name}};
                    tac.insert(tac.end(), pre->begin(), pre->end());
                    return std::make_pair(h.f->rhs, std::move(tac));
                }
                break;
            }
            case CASES_AND: {
                const Hyp& h = hyps[and_hyps[static_cast<size_t>(
                    cx.rng.bounded(and_hyps.size()))]];
                int idx = fresh_index_of(hyps);
                std::vector<Hyp> h2;
                for (const Hyp& hh : hyps) {
                    if (hh.name == h.name) {
                        h2.push_back(Hyp{"h" + std::to_string(idx), h.f->lhs});
                        h2.push_back(Hyp{"h" + std::to_string(idx + 1), h.f->rhs});
                    } else {
                        h2.push_back(hh);
                    }
                }
                if (auto rec = sample_goal(cx, h2, budget - 1)) {
                    std::vector<Tactic> tac{Tactic{TKind::Cases, h.name}};
                    tac.insert(tac.end(), rec->second.begin(), rec->second.end());
                    return std::make_pair(rec->first, std::move(tac));
                }
                break;
            }
            case CASES_OR: {
                const Hyp& h = hyps[or_hyps[static_cast<size_t>(
                    cx.rng.bounded(or_hyps.size()))]];
                int b1 = static_cast<int>(cx.rng.range(1, budget - 2));
                std::vector<Hyp> ha = hyps, hb = hyps;
                for (Hyp& hh : ha)
                    if (hh.name == h.name) hh.f = h.f->lhs;
                for (Hyp& hh : hb)
                    if (hh.name == h.name) hh.f = h.f->rhs;
                auto a = sample_goal(cx, ha, b1);
                if (!a) break;
                auto b = prove_exact(cx, hb, a->first, budget - 1 - b1);
                if (!b) break;
                std::vector<Tactic> tac{Tactic{TKind::Cases, h.name}};
                tac.insert(tac.end(), a->second.begin(), a->second.end());
                tac.insert(tac.end(), b->begin(), b->end());
                return std::make_pair(a->first, std::move(tac));
            }
        }
    }
    return std::nullopt;
}

// Proves a *prescribed* target in exactly `budget` tactics, or gives up.
inline std::optional<std::vector<Tactic>> prove_exact_impl(GenCtx& cx,
                                                           const std::vector<Hyp>& hyps,
                                                           const FormulaPtr& target,
                                                           int budget) {
    if (budget <= 0) return std::nullopt;
    if (budget == 1) {
        std::vector<size_t> matches;
        for (size_t i = 0; i < hyps.size(); ++i)
            if (formula_eq(hyps[i].f, target)) matches.push_back(i);
        if (matches.empty()) return std::nullopt;
        const Hyp& h = hyps[matches[static_cast<size_t>(cx.rng.bounded(matches.size()))]];
        return std::vector<Tactic>{Tactic{TKind::Exact, h.name}};
    }

    enum Opt { INTRO, SPLIT, LEFT, RIGHT, APPLY, CASES_AND, CASES_OR };
    std::vector<Opt> opts;
    if (target->kind == FKind::Impl) opts.push_back(INTRO);
    if (target->kind == FKind::And && budget >= 3) opts.push_back(SPLIT);
    if (target->kind == FKind::Or) {
        opts.push_back(LEFT);
        opts.push_back(RIGHT);
    }
    std::vector<size_t> apply_hyps, and_hyps, or_hyps;
    for (size_t i = 0; i < hyps.size(); ++i) {
        if (hyps[i].f->kind == FKind::Impl && formula_eq(hyps[i].f->rhs, target))
            apply_hyps.push_back(i);
        if (hyps[i].f->kind == FKind::And) and_hyps.push_back(i);
        if (hyps[i].f->kind == FKind::Or) or_hyps.push_back(i);
    }
    if (!apply_hyps.empty()) opts.push_back(APPLY);
    if (!and_hyps.empty()) opts.push_back(CASES_AND);
    if (!or_hyps.empty() && budget >= 3) opts.push_back(CASES_OR);

    std::vector<Opt> order;
    while (!opts.empty()) {
        size_t i = static_cast<size_t>(cx.rng.bounded(opts.size()));
        order.push_back(opts[i]);
        opts.erase(opts.begin() + static_cast<long>(i));
    }

    for (Opt opt : order) {
        switch (opt) {
            case INTRO: {
                std::string name = "h" + std::to_string(fresh_index_of(hyps));
                std::vector<Hyp> h2 = hyps;
                h2.push_back(Hyp{name, target->lhs});
                if (auto rec = prove_exact_impl(cx, h2, target->rhs, budget - 1)) {
                    std::vector<Tactic> tac{Tactic{TKind::Intro, name}};
                    tac.insert(tac.end(), rec->begin(), rec->end());
                    return tac;
                }
                break;
            }
            case SPLIT: {
                for (int tries = 0; tries < budget - 2; ++tries) {
                    int b1 = static_cast<int>(cx.rng.range(1, budget - 2));
                    auto a = prove_exact_impl(cx, hyps, target->lhs, b1);
                    if (!a) continue;
                    auto b = prove_exact_impl(cx, hyps, target->rhs, budget - 1 - b1);
                    if (!b) continue;
                    std::vector<Tactic> tac{Tactic{TKind::Split, ""}};
                    tac.insert(tac.end(), a->begin(), a->end());
                    tac.insert(tac.end(), b->begin(), b->end());
                    return tac;
                }
                break;
            }
            case LEFT:
            case RIGHT: {
                const FormulaPtr& side = opt == LEFT ? target->lhs : target->rhs;
                if (auto rec = prove_exact_impl(cx, hyps, side, budget - 1)) {
                    std::vector<Tactic> tac{
                        Tactic{opt == LEFT ? TKind::Left : TKind::Right, ""}};
                    tac.insert(tac.end(), rec->begin(), rec->end());
                    return tac;
                }
                break;
            }
            case APPLY: {
                const Hyp& h = hyps[apply_hyps[static_cast<size_t>(
                    cx.rng.bounded(apply_hyps.size()))]];
                if (auto rec = prove_exact_impl(cx, hyps, h.f->lhs, budget - 1)) {
                    std::vector<Tactic> tac{Tactic{TKind::Apply, h.name}};
                    tac.insert(tac.end(), rec->begin(), rec->end());
                    return tac;
                }
                break;
            }
            case CASES_AND: {
                const Hyp& h = hyps[and_hyps[static_cast<size_t>(
                    cx.rng.bounded(and_hyps.size()))]];
                int idx = fresh_index_of(hyps);
                std::vector<Hyp> h2;
                for (const Hyp& hh : hyps) {
                    if (hh.name == h.name) {
                        h2.push_back(Hyp{"h" + std::to_string(idx), h.f->lhs});
                        h2.push_back(Hyp{"h" + std::to_string(idx + 1), h.f->rhs});
                    } else {
                        h2.push_back(hh);
                    }
                }
                if (auto rec = prove_exact_impl(cx, h2, target, budget - 1)) {
                    std::vector<Tactic> tac{Tactic{TKind::Cases, h.name}};
                    tac.insert(tac.end(), rec->begin(), rec->end());
                    return tac;
                }
                break;
            }
            case CASES_OR: {
                const Hyp& h = hyps[or_hyps[static_cast<size_t>(
                    cx.rng.bounded(or_hyps.size()))]];
                std::vector<Hyp> ha = hyps, hb = hyps;
                for (Hyp& hh : ha)
                    if (hh.name == h.name) hh.f = h.f->lhs;
                for (Hyp& hh : hb)
                    if (hh.name == h.name) hh.f = h.f->rhs;
                for (int tries = 0; tries < budget - 2; ++tries) {
                    int b1 = static_cast<int>(cx.rng.range(1, budget - 2));
                    auto a = prove_exact_impl(cx, ha, target, b1);
                    if (!a) continue;
                    auto b = prove_exact_impl(cx, hb, target, budget - 1 - b1);
                    if (!b) continue;
                    std::vector<Tactic> tac{Tactic{TKind::Cases, h.name}};
                    tac.insert(tac.end(), a->begin(), a->end());
                    tac.insert(tac.end(), b->begin(), b->end());
                    return tac;
                }
                break;
            }
        }
    }
    return std::nullopt;
}

inline std::optional<std::vector<Tactic>> prove_exact(GenCtx& cx, const std::vector<Hyp>& hyps,
                                                      const FormulaPtr& target, int budget) {
    return prove_exact_impl(cx, hyps, target, budget);
}

}  // namespace logic_detail

// Proof-first theorem generation: the proof skeleton is sampled first and the
// statement read off it, so replay always succeeds and the tactic count is
// exact.  Deterministic in the seed.
inline Theorem gen_theorem(uint64_t seed, int var_count, int len_min, int len_max) {
    if (var_count < 1 || var_count > kMaxVars)
        throw ConfigError("var_count must be in [1, " + std::to_string(kMaxVars) + "]");
    if (len_min < 1 || len_max < len_min)
        throw ConfigError("bad tactic length range");
    Rng rng(derive_seed(seed, fnv1a64("logic-theorem")));
    logic_detail::GenCtx cx{rng, var_count};

    for (int attempt = 0; attempt < 10000; ++attempt) {
        int budget = static_cast<int>(rng.range(len_min, len_max));
        auto got = logic_detail::sample_goal(cx, {}, budget);
        if (!got) continue;
        Theorem t;
        t.statement = got->first;
        t.tactics = std::move(got->second);
        if (static_cast<int>(t.tactics.size()) != budget) continue;
        auto trace = replay_trace(t.statement, t.tactics);
        if (!trace || trace->back() != "QED")
            throw std::runtime_error("generator produced a proof the engine rejects: " +
                                     t.statement_line());
        if (!classical_validity(t.statement))
            throw std::runtime_error("generator produced a classically invalid theorem: " +
                                     t.statement_line());
        t.state_trace = std::move(*trace);
        return t;
    }
    throw std::runtime_error("gen_theorem: exhausted attempts");
}

// Unique-statement corpus; statements are deduplicated globally so train and
// test never share a theorem.
inline std::vector<Theorem> gen_logic_corpus(uint64_t seed, int var_count, int len_min,
                                             int len_max, int64_t count) {
    std::vector<Theorem> out;
    std::set<std::string> seen;
    out.reserve(static_cast<size_t>(count));
    uint64_t stream = 0;
    while (static_cast<int64_t>(out.size()) < count) {
        if (stream > static_cast<uint64_t>(count) * 200 + 10000)
            throw std::runtime_error("gen_logic_corpus: duplicate rate too high for " +
                                     std::to_string(count) + " unique theorems");
        Theorem t = gen_theorem(derive_seed(seed, stream++), var_count, len_min, len_max);
        std::string key = render_formula(t.statement);
        if (seen.insert(key).second) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace proofgym
