#pragma once

// Long-multiplication proof corpus.
//
// A problem asks for num1*num2 where both factors have exactly k digits.  The
// canonical proof decomposes num2 by decimal place, states each partial
// product largest place first, accumulates running sums, and closes with the
// product:
//
//   Tell me what is 2345*2345 and prove it
//   2345 = 2*1000+3*100+4*10+5*1
//   2345*2*1000 = 4690000
//   2345*3*100 = 703500
//   2345*4*10 = 93800
//   2345*5*1 = 11725
//   4690000 + 703500 = 5393500
//   5393500 + 93800 = 5487300
//   2345*2345 = 5499025
//
// k >= 2 gives 2k steps (1 decompose, k partial products, k-2 accumulates,
// final answer); the last accumulation is folded into the final answer.
// Discovery deps are the full left prefix: each step uses everything before it.

#include <cstdint>
#include <string>
#include <vector>

#include "proofgym/common.hpp"
#include "proofgym/proof.hpp"
#include "proofgym/rng.hpp"

namespace proofgym {

struct MultProblem {
    int64_t num1 = 0, num2 = 0;
    int k = 0;
};

inline int64_t pow10_i64(int e) {
    int64_t v = 1;
    while (e-- > 0) v *= 10;
    return v;
}

inline void check_mult_k(int k) {
    if (k < 1 || k > 9)
        throw ConfigError("mult k must be in [1, 9], got " + std::to_string(k));
}

inline std::string mult_problem_text(const MultProblem& p) {
    return "Tell me what is " + std::to_string(p.num1) + "*" + std::to_string(p.num2) +
           " and prove it";
}

inline std::vector<int> digits_msb_first(int64_t v, int k) {
    std::vector<int> d(static_cast<size_t>(k));
    for (int i = k - 1; i >= 0; --i) {
        d[static_cast<size_t>(i)] = static_cast<int>(v % 10);
        v /= 10;
    }
    return d;
}

inline Proof gen_mult_proof(const MultProblem& p) {
    check_mult_k(p.k);
    int64_t lo = pow10_i64(p.k - 1), hi = pow10_i64(p.k) - 1;
    if (p.num1 < lo || p.num1 > hi || p.num2 < lo || p.num2 > hi)
        throw ConfigError("factors must have exactly " + std::to_string(p.k) + " digits");

    Proof proof;
    proof.id = "mult-k" + std::to_string(p.k) + "-" + std::to_string(p.num1) + "x" +
               std::to_string(p.num2);
    proof.problem = mult_problem_text(p);

    std::vector<int> d = digits_msb_first(p.num2, p.k);
    auto push = [&](Role role, std::string text) {
        ProofStep s;
        s.id = static_cast<int>(proof.steps.size()) + 1;
        s.role = role;
        s.text = std::move(text);
        for (int i = 1; i < s.id; ++i) s.deps.push_back(i);
        proof.steps.push_back(std::move(s));
    };

    std::string dec = std::to_string(p.num2) + " = ";
    for (int j = 0; j < p.k; ++j) {
        if (j) dec += '+';
        dec += std::to_string(d[static_cast<size_t>(j)]) + "*" +
               std::to_string(pow10_i64(p.k - 1 - j));
    }
    push(Role::Decompose, dec);

    std::vector<int64_t> partials;
    for (int j = 0; j < p.k; ++j) {
        int64_t place = pow10_i64(p.k - 1 - j);
        int64_t v = p.num1 * d[static_cast<size_t>(j)] * place;
        partials.push_back(v);
        push(Role::PartialProduct, std::to_string(p.num1) + "*" +
                                       std::to_string(d[static_cast<size_t>(j)]) + "*" +
                                       std::to_string(place) + " = " + std::to_string(v));
    }

    int64_t acc = partials.empty() ? 0 : partials[0];
    for (int j = 1; j + 1 < p.k; ++j) {
        int64_t next = acc + partials[static_cast<size_t>(j)];
        push(Role::Accumulate,
             std::to_string(acc) + " + " + std::to_string(partials[static_cast<size_t>(j)]) +
                 " = " + std::to_string(next));
        acc = next;
    }

    push(Role::FinalAnswer,
         std::to_string(p.num1) + "*" + std::to_string(p.num2) + " = " +
             std::to_string(p.num1 * p.num2));
    proof.final_answer_id = static_cast<int>(proof.steps.size());
    return proof;
}

// ============================ verification ============================

enum class StepVerdict { Correct, Malformed, WrongValue, Missing };

struct MultVerdicts {
    // index 0 = problem line, 1..n = step ids
    std::vector<StepVerdict> verdicts;
    int extra_lines = 0;

    bool all_correct() const {
        for (StepVerdict v : verdicts)
            if (v != StepVerdict::Correct) return false;
        return extra_lines == 0;
    }
};

namespace detail {

// Tiny scanning parser for the step grammar; no regex, no allocation surprises.
struct LineScan {
    std::string_view s;
    size_t i = 0;
    bool lit(std::string_view w) {
        if (s.substr(i, w.size()) != w) return false;
        i += w.size();
        return true;
    }
    bool num(int64_t& out) {
        size_t b = i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
        if (i == b || i - b > 18) return false;
        out = 0;
        for (size_t j = b; j < i; ++j) out = out * 10 + (s[j] - '0');
        return true;
    }
    bool done() const { return i == s.size(); }
};

// "a*b*c = v" -> true and fills parts; used for partial products.
inline bool scan_triple_product(std::string_view line, int64_t& a, int64_t& b, int64_t& c,
                                int64_t& v) {
    LineScan sc{line};
    return sc.num(a) && sc.lit("*") && sc.num(b) && sc.lit("*") && sc.num(c) &&
           sc.lit(" = ") && sc.num(v) && sc.done();
}

inline bool scan_sum(std::string_view line, int64_t& a, int64_t& b, int64_t& v) {
    LineScan sc{line};
    return sc.num(a) && sc.lit(" + ") && sc.num(b) && sc.lit(" = ") && sc.num(v) && sc.done();
}

inline bool scan_product(std::string_view line, int64_t& a, int64_t& b, int64_t& v) {
    LineScan sc{line};
    return sc.num(a) && sc.lit("*") && sc.num(b) && sc.lit(" = ") && sc.num(v) && sc.done();
}

inline bool scan_decompose(std::string_view line, int64_t& lhs,
                           std::vector<std::pair<int64_t, int64_t>>& terms) {
    LineScan sc{line};
    if (!sc.num(lhs) || !sc.lit(" = ")) return false;
    terms.clear();
    while (true) {
        int64_t digit = 0, place = 0;
        if (!sc.num(digit) || !sc.lit("*") || !sc.num(place)) return false;
        terms.emplace_back(digit, place);
        if (sc.done()) return true;
        if (!sc.lit("+")) return false;
    }
}

inline bool scan_problem(std::string_view line, int64_t& a, int64_t& b) {
    LineScan sc{line};
    return sc.lit("Tell me what is ") && sc.num(a) && sc.lit("*") && sc.num(b) &&
           sc.lit(" and prove it") && sc.done();
}

}  // namespace detail

// Recovers the problem from a proof's problem line; k comes from the digit
// count of the second factor.
inline MultProblem parse_mult_problem(const Proof& proof) {
    int64_t a = 0, b = 0;
    if (!detail::scan_problem(proof.problem, a, b))
        throw ConfigError("not a multiplication problem line: '" + proof.problem + "'");
    MultProblem p;
    p.num1 = a;
    p.num2 = b;
    p.k = static_cast<int>(std::to_string(b).size());
    check_mult_k(p.k);
    return p;
}

// Grades a candidate transcript against the canonical proof for `p`.  The
// text is expected in `scheme` layout (problem line first, then steps in
// presentation order).  Each step is judged independently against ground
// truth: Malformed when its line does not scan as the right grammar shape,
// WrongValue when it scans but the operands or the stated equality are off.
inline MultVerdicts verify_mult_proof(const std::string& text, const MultProblem& p,
                                      OrderScheme scheme = OrderScheme::SEQ) {
    Proof expected = gen_mult_proof(p);
    std::vector<int> order = presentation_order(expected, scheme);
    int n = expected.n_steps();

    std::vector<std::string> lines = split_lines(text);
    if (lines.size() == 1 && lines[0].empty()) lines.clear();

    MultVerdicts out;
    out.verdicts.assign(static_cast<size_t>(n) + 1, StepVerdict::Missing);
    out.extra_lines = std::max(0, static_cast<int>(lines.size()) - (n + 1));

    std::vector<int> digits = digits_msb_first(p.num2, p.k);

    for (size_t slot = 0; slot < lines.size() && slot <= static_cast<size_t>(n); ++slot) {
        std::string line = trim(lines[slot]);
        int step_id = slot == 0 ? 0 : order[slot - 1];
        StepVerdict v = StepVerdict::Malformed;

        if (slot == 0) {
            int64_t a = 0, b = 0;
            if (detail::scan_problem(line, a, b))
                v = (a == p.num1 && b == p.num2) ? StepVerdict::Correct : StepVerdict::WrongValue;
        } else {
            const ProofStep& st = expected.step(step_id);
            switch (st.role) {
                case Role::Decompose: {
                    int64_t lhs = 0;
                    std::vector<std::pair<int64_t, int64_t>> terms;
                    if (detail::scan_decompose(line, lhs, terms)) {
                        bool ok = lhs == p.num2 && static_cast<int>(terms.size()) == p.k;
                        __int128 sum = 0;
                        for (int j = 0; ok && j < p.k; ++j) {
                            ok = terms[static_cast<size_t>(j)].first ==
                                     digits[static_cast<size_t>(j)] &&
                                 terms[static_cast<size_t>(j)].second == pow10_i64(p.k - 1 - j);
                            sum += static_cast<__int128>(terms[static_cast<size_t>(j)].first) *
                                   terms[static_cast<size_t>(j)].second;
                        }
                        v = (ok && sum == p.num2) ? StepVerdict::Correct : StepVerdict::WrongValue;
                    }
                    break;
                }
                case Role::PartialProduct: {
                    int j = step_id - 2;  // partial index, MSB first
                    int64_t a = 0, b = 0, c = 0, val = 0;
                    if (detail::scan_triple_product(line, a, b, c, val)) {
                        int64_t place = pow10_i64(p.k - 1 - j);
                        bool ok = a == p.num1 && b == digits[static_cast<size_t>(j)] &&
                                  c == place &&
                                  static_cast<__int128>(a) * b * c == val;
                        v = ok ? StepVerdict::Correct : StepVerdict::WrongValue;
                    }
                    break;
                }
                case Role::Accumulate: {
                    int64_t a = 0, b = 0, val = 0;
                    if (detail::scan_sum(line, a, b, val)) {
                        // ground truth, recomputed independently of step text
                        int acc_index = step_id - (p.k + 1);  // 1-based accumulate number
                        int64_t truth_a = 0;
                        for (int j = 0; j < acc_index; ++j)
                            truth_a += p.num1 * digits[static_cast<size_t>(j)] *
                                       pow10_i64(p.k - 1 - j);
                        int64_t truth_b = p.num1 * digits[static_cast<size_t>(acc_index)] *
                                          pow10_i64(p.k - 1 - acc_index);
                        bool ok = a == truth_a && b == truth_b && a + b == val;
                        v = ok ? StepVerdict::Correct : StepVerdict::WrongValue;
                    }
                    break;
                }
                case Role::FinalAnswer: {
                    int64_t a = 0, b = 0, val = 0;
                    if (detail::scan_product(line, a, b, val)) {
                        bool ok = a == p.num1 && b == p.num2 &&
                                  static_cast<__int128>(a) * b == val;
                        v = ok ? StepVerdict::Correct : StepVerdict::WrongValue;
                    }
                    break;
                }
                default:
                    break;
            }
        }
        out.verdicts[static_cast<size_t>(step_id)] = v;
    }
    return out;
}

// ============================ splits ============================

struct MultSplits {
    std::vector<MultProblem> train, test;
};

// Enumerates every k-digit factor pair, shuffles once, then takes the first
// n_train and the last n_test: splits are disjoint by construction.
inline MultSplits enumerate_splits(int k, int64_t n_train, int64_t n_test, uint64_t seed) {
    check_mult_k(k);
    int64_t lo = pow10_i64(k - 1), hi = pow10_i64(k) - 1;
    int64_t side = hi - lo + 1;
    int64_t population = side * side;
    if (n_train < 0 || n_test < 0 || n_train + n_test > population)
        throw ConfigError("requested " + std::to_string(n_train) + "+" + std::to_string(n_test) +
                          " samples but only " + std::to_string(population) +
                          " distinct k=" + std::to_string(k) + " factor pairs exist");

    std::vector<uint64_t> packed;
    packed.reserve(static_cast<size_t>(population));
    for (int64_t a = lo; a <= hi; ++a)
        for (int64_t b = lo; b <= hi; ++b)
            packed.push_back((static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b));
    Rng rng(derive_seed(seed, fnv1a64("mult-splits")));
    rng.shuffle(packed);

    auto unpack = [k](uint64_t v) {
        return MultProblem{static_cast<int64_t>(v >> 32),
                           static_cast<int64_t>(v & 0xffffffffull), k};
    };
    MultSplits out;
    out.train.reserve(static_cast<size_t>(n_train));
    out.test.reserve(static_cast<size_t>(n_test));
    for (int64_t i = 0; i < n_train; ++i)
        out.train.push_back(unpack(packed[static_cast<size_t>(i)]));
    for (int64_t i = 0; i < n_test; ++i)
        out.test.push_back(unpack(packed[static_cast<size_t>(population - n_test + i)]));
    return out;
}

}  // namespace proofgym
