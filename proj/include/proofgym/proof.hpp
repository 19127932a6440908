#pragma once

// Step-structured proof model and presentation-order transforms.
//
// A Proof is a problem line plus steps 1..n in discovery order: the order in
// which a solver would actually derive them, every step justified only by
// earlier ones.  Training text is produced by laying the same steps out under
// a presentation scheme:
//
//   SEQ    problem, S1, ..., S(n-1), FA          (discovery order)
//   PSER   problem, S(n-1), ..., S1, FA          (body reversed, answer last)
//   SER    problem, FA, S(n-1), ..., S1          (answer first, body reversed)
//   Custom problem, then any permutation of 1..n
//
// where FA is the unique final-answer step (always id n).

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "proofgym/common.hpp"

namespace proofgym {

enum class Role { Problem, Decompose, PartialProduct, Accumulate, Tactic, State, FinalAnswer };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::Problem: return "problem";
        case Role::Decompose: return "decompose";
        case Role::PartialProduct: return "partial_product";
        case Role::Accumulate: return "accumulate";
        case Role::Tactic: return "tactic";
        case Role::State: return "state";
        case Role::FinalAnswer: return "final_answer";
    }
    return "?";
}

inline Role role_from_name(const std::string& s) {
    if (s == "problem") return Role::Problem;
    if (s == "decompose") return Role::Decompose;
    if (s == "partial_product") return Role::PartialProduct;
    if (s == "accumulate") return Role::Accumulate;
    if (s == "tactic") return Role::Tactic;
    if (s == "state") return Role::State;
    if (s == "final_answer") return Role::FinalAnswer;
    throw ConfigError("unknown step role: '" + s + "'");
}

enum class OrderScheme { SEQ, PSER, SER, Custom };

inline const char* scheme_name(OrderScheme s) {
    switch (s) {
        case OrderScheme::SEQ: return "SEQ";
        case OrderScheme::PSER: return "PSER";
        case OrderScheme::SER: return "SER";
        case OrderScheme::Custom: return "CUSTOM";
    }
    return "?";
}

inline OrderScheme scheme_from_name(const std::string& s) {
    std::string up;
    for (char c : s) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (up == "SEQ") return OrderScheme::SEQ;
    if (up == "PSER") return OrderScheme::PSER;
    if (up == "SER") return OrderScheme::SER;
    if (up == "CUSTOM") return OrderScheme::Custom;
    throw ConfigError("unknown order scheme: '" + s + "' (expected SEQ, PSER, SER or CUSTOM)");
}

struct ProofStep {
    int id = 0;             // 1..n, discovery position
    Role role = Role::State;
    std::string text;       // single line, no newline
    std::vector<int> deps;  // discovery dependencies, all < id
};

struct Proof {
    std::string id;
    std::string problem;           // problem line (presentation slot 0)
    std::vector<ProofStep> steps;  // discovery order, ids dense 1..n
    int final_answer_id = 0;

    int n_steps() const { return static_cast<int>(steps.size()); }
    const ProofStep& step(int id_) const { return steps.at(static_cast<size_t>(id_ - 1)); }
};

// Structural sanity for hand-built or deserialized proofs.  Generated corpora
// satisfy this by construction.
inline void validate_proof(const Proof& p) {
    if (p.steps.empty()) throw ConfigError("proof '" + p.id + "': no steps");
    if (p.problem.find('\n') != std::string::npos)
        throw ConfigError("proof '" + p.id + "': problem text contains newline");
    int n = p.n_steps();
    int fa_count = 0;
    for (int i = 0; i < n; ++i) {
        const ProofStep& s = p.steps[static_cast<size_t>(i)];
        if (s.id != i + 1)
            throw ConfigError("proof '" + p.id + "': step ids must be dense 1..n");
        if (s.text.find('\n') != std::string::npos)
            throw ConfigError("proof '" + p.id + "': step text contains newline");
        for (int d : s.deps)
            if (d < 1 || d >= s.id)
                throw ConfigError("proof '" + p.id + "': step " + std::to_string(s.id) +
                                  " has dep " + std::to_string(d) +
                                  " that is not an earlier step");
        if (s.role == Role::FinalAnswer) ++fa_count;
    }
    if (fa_count != 1)
        throw ConfigError("proof '" + p.id + "': expected exactly one final-answer step, got " +
                          std::to_string(fa_count));
    if (p.final_answer_id != n || p.steps.back().role != Role::FinalAnswer)
        throw ConfigError("proof '" + p.id + "': final-answer step must be the last step");
}

// ============================ presentation order ============================

// Step ids in presentation order (problem excluded; it is always slot 0).
inline std::vector<int> presentation_order(const Proof& p, OrderScheme scheme,
                                           const std::vector<int>* custom = nullptr) {
    int n = p.n_steps();
    std::vector<int> order;
    order.reserve(static_cast<size_t>(n));
    switch (scheme) {
        case OrderScheme::SEQ:
            for (int i = 1; i <= n; ++i) order.push_back(i);
            break;
        case OrderScheme::PSER:
            for (int i = n - 1; i >= 1; --i) order.push_back(i);
            order.push_back(n);
            break;
        case OrderScheme::SER:
            order.push_back(n);
            for (int i = n - 1; i >= 1; --i) order.push_back(i);
            break;
        case OrderScheme::Custom: {
            if (!custom) throw ConfigError("CUSTOM scheme requires a permutation");
            order = *custom;
            std::vector<bool> seen(static_cast<size_t>(n) + 1, false);
            if (static_cast<int>(order.size()) != n)
                throw ConfigError("custom order must list every step exactly once");
            for (int id : order) {
                if (id < 1 || id > n || seen[static_cast<size_t>(id)])
                    throw ConfigError("custom order is not a permutation of 1..n");
                seen[static_cast<size_t>(id)] = true;
            }
            break;
        }
    }
    return order;
}

// ============================ ordered samples ============================

struct Span {
    int step_id = 0;  // 0 = problem line
    Role role = Role::Problem;
    size_t begin = 0, end = 0;  // byte offsets into text, end exclusive
};

struct OrderedSample {
    std::string id;
    OrderScheme scheme = OrderScheme::SEQ;
    std::string text;        // problem + steps joined with '\n', no trailing newline
    std::vector<Span> spans;

    const Span& span_of(int step_id) const {
        for (const Span& s : spans)
            if (s.step_id == step_id) return s;
        throw ConfigError("sample '" + id + "': no span for step " + std::to_string(step_id));
    }
};

inline OrderedSample reorder(const Proof& p, OrderScheme scheme,
                             const std::vector<int>* custom = nullptr) {
    validate_proof(p);
    std::vector<int> order = presentation_order(p, scheme, custom);

    OrderedSample out;
    out.id = p.id;
    out.scheme = scheme;
    out.text.reserve(p.problem.size() + 16 * order.size());

    out.text += p.problem;
    out.spans.push_back({0, Role::Problem, 0, p.problem.size()});
    for (int id : order) {
        const ProofStep& s = p.step(id);
        out.text += '\n';
        size_t begin = out.text.size();
        out.text += s.text;
        out.spans.push_back({s.id, s.role, begin, out.text.size()});
    }
    return out;
}

// ============================ order diagnostics ============================

static inline void check_order_permutation(const Proof& p, const std::vector<int>& order) {
    int n = p.n_steps();
    if (static_cast<int>(order.size()) != n)
        throw ConfigError("order must contain every step id exactly once");
    std::vector<bool> seen(static_cast<size_t>(n) + 1, false);
    for (int id : order) {
        if (id < 1 || id > n || seen[static_cast<size_t>(id)])
            throw ConfigError("order is not a permutation of step ids 1..n");
        seen[static_cast<size_t>(id)] = true;
    }
}

// True iff every step's dependencies appear strictly before it in `order`.
inline bool is_intuitively_sequential(const Proof& p, const std::vector<int>& order) {
    check_order_permutation(p, order);
    std::vector<bool> placed(static_cast<size_t>(p.n_steps()) + 1, false);
    for (int id : order) {
        for (int d : p.step(id).deps)
            if (!placed[static_cast<size_t>(d)]) return false;
        placed[static_cast<size_t>(id)] = true;
    }
    return true;
}

// Delayed-insight violations: pairs (step, dep) where the dependency is
// presented only after the step that needs it, ordered by the violating
// step's position (then the dependency's position).
inline std::vector<std::pair<int, int>> detect_dii(const Proof& p,
                                                   const std::vector<int>& order) {
    check_order_permutation(p, order);
    std::vector<int> pos(static_cast<size_t>(p.n_steps()) + 1, 0);
    for (int i = 0; i < static_cast<int>(order.size()); ++i)
        pos[static_cast<size_t>(order[static_cast<size_t>(i)])] = i;

    std::vector<std::pair<int, int>> violations;
    for (int id : order) {
        std::vector<int> deps = p.step(id).deps;
        std::sort(deps.begin(), deps.end(),
                  [&](int a, int b) { return pos[static_cast<size_t>(a)] < pos[static_cast<size_t>(b)]; });
        for (int d : deps)
            if (pos[static_cast<size_t>(d)] > pos[static_cast<size_t>(id)])
                violations.emplace_back(id, d);
    }
    std::sort(violations.begin(), violations.end(), [&](const auto& a, const auto& b) {
        if (pos[static_cast<size_t>(a.first)] != pos[static_cast<size_t>(b.first)])
            return pos[static_cast<size_t>(a.first)] < pos[static_cast<size_t>(b.first)];
        return pos[static_cast<size_t>(a.second)] < pos[static_cast<size_t>(b.second)];
    });
    return violations;
}

struct CycleError : std::runtime_error {
    std::vector<int> cycle;
    explicit CycleError(std::vector<int> c)
        : std::runtime_error(describe(c)), cycle(std::move(c)) {}
    static std::string describe(const std::vector<int>& c) {
        std::string s = "dependency cycle: ";
        for (size_t i = 0; i < c.size(); ++i) {
            if (i) s += " -> ";
            s += std::to_string(c[i]);
        }
        return s;
    }
};

// Deterministic topological order of the dependency DAG: Kahn's algorithm,
// always emitting the smallest ready id.  Unlike the rest of this header it
// tolerates forward deps (id ordering is what it exists to repair) and
// reports a concrete cycle when the deps are not a DAG.
inline std::vector<int> topological_reorder(const Proof& p) {
    int n = p.n_steps();
    std::vector<std::vector<int>> dependents(static_cast<size_t>(n) + 1);
    std::vector<int> indegree(static_cast<size_t>(n) + 1, 0);
    for (const ProofStep& s : p.steps) {
        for (int d : s.deps) {
            if (d < 1 || d > n || d == s.id)
                throw ConfigError("proof '" + p.id + "': step " + std::to_string(s.id) +
                                  " has invalid dep " + std::to_string(d));
            dependents[static_cast<size_t>(d)].push_back(s.id);
            ++indegree[static_cast<size_t>(s.id)];
        }
    }

    std::set<int> ready;
    for (int i = 1; i <= n; ++i)
        if (indegree[static_cast<size_t>(i)] == 0) ready.insert(i);

    std::vector<int> order;
    order.reserve(static_cast<size_t>(n));
    while (!ready.empty()) {
        int id = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(id);
        for (int dep : dependents[static_cast<size_t>(id)])
            if (--indegree[static_cast<size_t>(dep)] == 0) ready.insert(dep);
    }
    if (static_cast<int>(order.size()) == n) return order;

    // Walk dep edges among the unplaced steps until a node repeats.
    std::vector<bool> placed(static_cast<size_t>(n) + 1, false);
    for (int id : order) placed[static_cast<size_t>(id)] = true;
    int start = 0;
    for (int i = 1; i <= n; ++i)
        if (!placed[static_cast<size_t>(i)]) { start = i; break; }
    std::vector<int> path;
    std::vector<int> at(static_cast<size_t>(n) + 1, -1);
    int cur = start;
    while (at[static_cast<size_t>(cur)] < 0) {
        at[static_cast<size_t>(cur)] = static_cast<int>(path.size());
        path.push_back(cur);
        for (int d : p.step(cur).deps)
            if (!placed[static_cast<size_t>(d)]) { cur = d; break; }
    }
    std::vector<int> cycle(path.begin() + at[static_cast<size_t>(cur)], path.end());
    cycle.push_back(cur);
    throw CycleError(std::move(cycle));
}

}  // namespace proofgym
