#pragma once

// Evaluation harness.  Prompts are built from the sample's own layout text so
// that, except for the documented step-1 splice, every prompt is a byte-exact
// prefix of the ground truth.  Generation is abstracted behind GenFn, which
// lets tests substitute an oracle that completes every prompt perfectly; a
// correct harness must then score 100% on every metric.

#include <algorithm>
#include <functional>
#include <memory>
#include <unordered_map>

#include "proofgym/logic.hpp"
#include "proofgym/model.hpp"
#include "proofgym/mult.hpp"
#include "proofgym/proof.hpp"
#include "proofgym/tokenizer.hpp"

namespace proofgym {

// Takes a prompt and a generation budget (maximum new tokens, 0 for no cap
// beyond the model context) and returns the generated continuation (decoded
// text, no control tokens).  The harness always passes a budget sized from
// the ground-truth remainder: any correct completion fits, and a checkpoint
// that rambles (an early or answer-masked one) cannot stretch evaluation to
// the context edge on every item.
using GenFn = std::function<std::string(const std::string&, int)>;

enum class PromptMode {
    ProblemOnly,               // problem line and nothing else
    ProblemPlusSteps,          // everything except the final-answer line
    ProblemPlusStepsMinusStep1,  // also withholds step 1 (splices for SEQ)
    StatementOnly,             // alias of ProblemOnly, named for logic corpora
};

inline const char* prompt_mode_name(PromptMode m) {
    switch (m) {
        case PromptMode::ProblemOnly: return "problem_only";
        case PromptMode::ProblemPlusSteps: return "problem_plus_steps";
        case PromptMode::ProblemPlusStepsMinusStep1: return "problem_plus_steps_minus_step1";
        case PromptMode::StatementOnly: return "statement_only";
    }
    return "?";
}

// Slot index (line number) of a step id in the sample, or -1.
inline int slot_of_step(const OrderedSample& os, int step_id) {
    for (size_t j = 0; j < os.spans.size(); ++j)
        if (os.spans[j].step_id == step_id) return static_cast<int>(j);
    return -1;
}

inline int final_answer_slot(const OrderedSample& os) {
    for (size_t j = 0; j < os.spans.size(); ++j)
        if (os.spans[j].role == Role::FinalAnswer) return static_cast<int>(j);
    throw ConfigError("sample " + os.id + " has no final answer");
}

// Every prompt ends in '\n' so the model always starts at a line boundary.
inline std::string build_prompt(const OrderedSample& os, PromptMode mode) {
    std::vector<std::string> lines = split_lines(os.text);
    if (lines.size() != os.spans.size())
        throw ConfigError("sample " + os.id + " text does not match its spans");

    switch (mode) {
        case PromptMode::ProblemOnly:
        case PromptMode::StatementOnly:
            return lines[0] + "\n";
        case PromptMode::ProblemPlusSteps: {
            int fa = final_answer_slot(os);
            if (fa != static_cast<int>(lines.size()) - 1)
                throw ConfigError("prompt mode problem_plus_steps needs the final answer "
                                  "last; sample " + os.id + " puts it at slot " +
                                  std::to_string(fa));
            std::string out;
            for (int j = 0; j + 1 < static_cast<int>(lines.size()); ++j) out += lines[j] + "\n";
            return out;
        }
        case PromptMode::ProblemPlusStepsMinusStep1: {
            int s1 = slot_of_step(os, 1);
            if (s1 < 0) throw ConfigError("sample " + os.id + " has no step 1");
            int fa = final_answer_slot(os);
            std::vector<int> kept;
            for (int j = 0; j < static_cast<int>(lines.size()); ++j)
                if (j != s1) kept.push_back(j);
            // Drop the final answer too when it would be the trailing line,
            // since producing it is exactly what this probe measures.
            if (!kept.empty() && kept.back() == fa) kept.pop_back();
            std::string out;
            for (int j : kept) out += lines[static_cast<size_t>(j)] + "\n";
            return out;
        }
    }
    throw ConfigError("unknown prompt mode");
}

// Ground-truth generator: completes byte-prefix prompts with the exact
// remaining text, and answers the spliced minus-step1 prompt with the final
// answer line.  Used by self-tests to certify the harness end to end.
inline GenFn make_oracle_gen(const OrderedSample& os) {
    std::string text = os.text;
    std::string fa_line;
    for (const Span& sp : os.spans)
        if (sp.role == Role::FinalAnswer) fa_line = text.substr(sp.begin, sp.end - sp.begin);
    return [text, fa_line](const std::string& prompt, int) -> std::string {
        if (prompt.size() <= text.size() && text.compare(0, prompt.size(), prompt) == 0)
            return text.substr(prompt.size());
        return fa_line;
    };
}

// Corpus-wide oracle: routes each prompt to the sample it belongs to by its
// first line (problem lines are unique within a corpus).
inline GenFn make_corpus_oracle(const std::vector<OrderedSample>& samples) {
    auto table = std::make_shared<std::unordered_map<std::string, GenFn>>();
    for (const OrderedSample& os : samples) {
        std::string first = split_lines(os.text)[0];
        (*table)[first] = make_oracle_gen(os);
    }
    return [table](const std::string& prompt, int max_new) -> std::string {
        size_t nl = prompt.find('\n');
        std::string first = prompt.substr(0, nl);
        auto it = table->find(first);
        if (it == table->end())
            throw ConfigError("oracle has no sample for prompt line '" + first + "'");
        return it->second(prompt, max_new);
    };
}

// Model-backed generator.  Prompts are tokenized with a leading BOS exactly
// as in training; decoding is greedy and stops at EOS or the context edge.
template <typename S>
GenFn make_model_gen(const Model<S>& model) {
    return [&model](const std::string& prompt, int max_new) -> std::string {
        std::vector<int> ids;
        ids.push_back(Tokenizer::kBos);
        for (int t : Tokenizer::encode(prompt)) ids.push_back(t);
        if (static_cast<int>(ids.size()) >= model.cfg.n_ctx) return "";
        int budget = model.cfg.n_ctx - static_cast<int>(ids.size());
        if (max_new > 0) budget = std::min(budget, max_new);
        return Tokenizer::decode(model.generate(ids, budget, Tokenizer::kEos));
    };
}

namespace eval_detail {

inline std::string line_at(const std::vector<std::string>& lines, int idx) {
    if (idx < 0 || idx >= static_cast<int>(lines.size())) return {};
    return lines[static_cast<size_t>(idx)];
}

// Room for one stray line beyond the ground-truth remainder before a
// generation is cut off; anything truncated at that point is wrong anyway.
inline constexpr int kGenSlack = 24;

inline int gen_budget(const std::string& full_text, const std::string& prompt) {
    int full = static_cast<int>(Tokenizer::encode(full_text).size());
    int used = static_cast<int>(Tokenizer::encode(prompt).size());
    return std::max(full - used, 0) + 1 + kGenSlack;  // +1 for the EOS
}

}  // namespace eval_detail

// ---- multiplication metrics ----

struct MultEval {
    int n = 0;
    int proof_ok = 0;    // every step verified, no extra lines
    int fa_po = 0;       // final answer from the problem alone
    int fa_ps = 0;       // final answer given all steps
    int fa_ms = 0;       // final answer with step 1 withheld (SEQ only)
    int step1_ok = 0;    // step 1 reproduced from the problem alone
    bool has_plus_steps = true;
    bool has_minus_step1 = true;

    double rate(int k) const { return n ? static_cast<double>(k) / n : 0.0; }
    nlohmann::json to_json() const {
        nlohmann::json j = {{"n", n},
                            {"proof_correctness", rate(proof_ok)},
                            {"final_answer_problem_only", rate(fa_po)},
                            {"step1_correctness", rate(step1_ok)}};
        j["final_answer_plus_steps"] =
            has_plus_steps ? nlohmann::json(rate(fa_ps)) : nlohmann::json();
        j["final_answer_minus_step1"] =
            has_minus_step1 ? nlohmann::json(rate(fa_ms)) : nlohmann::json();
        return j;
    }
};

// Each item is evaluated in its native layout: the model sees prompts in the
// same order scheme it was trained on, and the final answer / step 1 are read
// from the slots that scheme puts them in.
inline MultEval eval_mult(const std::vector<Proof>& proofs, OrderScheme scheme,
                          const GenFn& gen) {
    MultEval ev;
    ev.has_plus_steps = scheme != OrderScheme::SER;
    // Withholding step 1 only isolates the final answer when the layout ends
    // with it and everything else was shown; in other layouts the probe would
    // either include the answer in the prompt or let the model restate the
    // withheld step first.
    ev.has_minus_step1 = scheme == OrderScheme::SEQ;
    for (const Proof& p : proofs) {
        MultProblem prob = parse_mult_problem(p);
        OrderedSample os = reorder(p, scheme);
        std::vector<std::string> lines = split_lines(os.text);
        int fa_slot = final_answer_slot(os);
        int s1_slot = slot_of_step(os, 1);
        const std::string& fa_text = lines[static_cast<size_t>(fa_slot)];

        std::string po = build_prompt(os, PromptMode::ProblemOnly);
        std::string gen_po = gen(po, eval_detail::gen_budget(os.text, po));
        MultVerdicts v = verify_mult_proof(po + gen_po, prob, scheme);
        std::vector<std::string> gen_lines = split_lines(gen_po);
        if (v.all_correct() && v.extra_lines == 0) ev.proof_ok++;
        if (eval_detail::line_at(gen_lines, fa_slot - 1) == fa_text) ev.fa_po++;
        if (eval_detail::line_at(gen_lines, s1_slot - 1) ==
            lines[static_cast<size_t>(s1_slot)])
            ev.step1_ok++;

        if (ev.has_plus_steps) {
            std::string ps = build_prompt(os, PromptMode::ProblemPlusSteps);
            std::vector<std::string> first =
                split_lines(gen(ps, eval_detail::gen_budget(os.text, ps)));
            if (!first.empty() && first[0] == fa_text) ev.fa_ps++;
        }

        if (ev.has_minus_step1) {
            std::string ms = build_prompt(os, PromptMode::ProblemPlusStepsMinusStep1);
            std::vector<std::string> first_ms =
                split_lines(gen(ms, eval_detail::gen_budget(os.text, ms)));
            if (!first_ms.empty() && first_ms[0] == fa_text) ev.fa_ms++;
        }

        ev.n++;
    }
    return ev;
}

// ---- logic metrics ----

struct LogicEval {
    int n = 0;
    int proof_gen_ok = 0;  // whole layout reproduced from the statement
    int probes = 0;        // next-tactic prompts across all samples
    int probes_ok = 0;

    nlohmann::json to_json() const {
        return {{"n", n},
                {"tactic_probes", probes},
                {"proof_generation", n ? static_cast<double>(proof_gen_ok) / n : 0.0},
                {"tactic_prediction",
                 probes ? static_cast<double>(probes_ok) / probes : 0.0}};
    }
};

// Tactic prediction truncates the native layout right before each tactic line
// and asks for that one line back; proof generation must reproduce the whole
// layout from the statement.  Greedy decoding makes the second at most the
// first on every corpus: a perfect full generation implies every truncated
// prompt also continues perfectly.
inline LogicEval eval_logic(const std::vector<Proof>& proofs, OrderScheme scheme,
                            const GenFn& gen) {
    LogicEval ev;
    for (const Proof& p : proofs) {
        OrderedSample os = reorder(p, scheme);
        std::vector<std::string> lines = split_lines(os.text);

        std::string so = build_prompt(os, PromptMode::StatementOnly);
        if (so + gen(so, eval_detail::gen_budget(os.text, so)) == os.text)
            ev.proof_gen_ok++;

        std::string prefix = so;
        for (size_t j = 1; j < lines.size(); ++j) {
            if (os.spans[j].role == Role::Tactic) {
                ev.probes++;
                // One line back is enough for the probe; budget accordingly.
                int budget = static_cast<int>(Tokenizer::encode(lines[j]).size()) + 1 +
                             eval_detail::kGenSlack;
                std::vector<std::string> first = split_lines(gen(prefix, budget));
                if (!first.empty() && first[0] == lines[j]) ev.probes_ok++;
            }
            prefix += lines[j] + "\n";
        }
        ev.n++;
    }
    return ev;
}

}  // namespace proofgym
