#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>

#include "proofgym/mult.hpp"
#include "proofgym/rng.hpp"

using namespace proofgym;

namespace {

// ---- independent oracle -------------------------------------------------
// Schoolbook digit-array multiplication; shares no code with the generator.
std::string big_mult(const std::string& a, const std::string& b) {
    std::vector<int> out(a.size() + b.size(), 0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j)
            out[i + j] += (a[a.size() - 1 - i] - '0') * (b[b.size() - 1 - j] - '0');
    // note: indices count from the least significant end
    for (size_t t = 0; t + 1 < out.size(); ++t) {
        out[t + 1] += out[t] / 10;
        out[t] %= 10;
    }
    std::string s;
    for (auto it = out.rbegin(); it != out.rend(); ++it) s += static_cast<char>('0' + *it);
    size_t nz = s.find_first_not_of('0');
    return nz == std::string::npos ? "0" : s.substr(nz);
}

// Evaluates a flat +/* integer expression (as the proof lines use: * binds
// tighter than +) and returns the value as a decimal string.
std::string eval_expr(const std::string& e) {
    std::string total = "0";
    size_t pos = 0;
    while (pos <= e.size()) {
        size_t plus = e.find('+', pos);
        std::string term = e.substr(pos, plus == std::string::npos ? std::string::npos
                                                                   : plus - pos);
        std::string prod = "1";
        size_t tpos = 0;
        while (tpos <= term.size()) {
            size_t star = term.find('*', tpos);
            std::string factor =
                term.substr(tpos, star == std::string::npos ? std::string::npos : star - tpos);
            prod = big_mult(prod, factor);
            if (star == std::string::npos) break;
            tpos = star + 1;
        }
        // decimal addition
        std::string sum;
        int carry = 0;
        for (size_t i = 0; i < std::max(total.size(), prod.size()) || carry; ++i) {
            int d = carry;
            if (i < total.size()) d += total[total.size() - 1 - i] - '0';
            if (i < prod.size()) d += prod[prod.size() - 1 - i] - '0';
            sum += static_cast<char>('0' + d % 10);
            carry = d / 10;
        }
        std::reverse(sum.begin(), sum.end());
        size_t nz = sum.find_first_not_of('0');
        total = nz == std::string::npos ? "0" : sum.substr(nz);
        if (plus == std::string::npos) break;
        pos = plus + 1;
    }
    return total;
}

// True iff "lhs = rhs" holds, both sides evaluated independently.
bool equality_line_true(const std::string& line) {
    size_t eq = line.find(" = ");
    if (eq == std::string::npos) return false;
    std::string lhs = line.substr(0, eq), rhs = line.substr(eq + 3);
    // strip the spaces the accumulate grammar puts around '+'
    auto strip = [](std::string s) {
        std::string t;
        for (char c : s)
            if (c != ' ') t += c;
        return t;
    };
    return eval_expr(strip(lhs)) == eval_expr(strip(rhs));
}

MultProblem prob(int64_t a, int64_t b, int k) { return MultProblem{a, b, k}; }

}  // namespace

TEST_CASE("canonical k=4 proof matches frozen strings") {
    Proof p = gen_mult_proof(prob(2345, 2345, 4));
    REQUIRE(p.n_steps() == 8);
    CHECK(p.problem == "Tell me what is 2345*2345 and prove it");
    CHECK(p.steps[0].text == "2345 = 2*1000+3*100+4*10+5*1");
    CHECK(p.steps[1].text == "2345*2*1000 = 4690000");
    CHECK(p.steps[2].text == "2345*3*100 = 703500");
    CHECK(p.steps[3].text == "2345*4*10 = 93800");
    CHECK(p.steps[4].text == "2345*5*1 = 11725");
    CHECK(p.steps[5].text == "4690000 + 703500 = 5393500");
    CHECK(p.steps[6].text == "5393500 + 93800 = 5487300");
    CHECK(p.steps[7].text == "2345*2345 = 5499025");
    CHECK(p.final_answer_id == 8);

    std::vector<Role> roles;
    for (const auto& s : p.steps) roles.push_back(s.role);
    CHECK(roles == std::vector<Role>{Role::Decompose, Role::PartialProduct, Role::PartialProduct,
                                     Role::PartialProduct, Role::PartialProduct, Role::Accumulate,
                                     Role::Accumulate, Role::FinalAnswer});
}

TEST_CASE("k=4 lower corner") {
    Proof p = gen_mult_proof(prob(1000, 1000, 4));
    CHECK(p.steps.back().text == "1000*1000 = 1000000");
}

TEST_CASE("9876 x 5432 worked example") {
    Proof p = gen_mult_proof(prob(9876, 5432, 4));
    CHECK(p.steps[0].text == "5432 = 5*1000+4*100+3*10+2*1");
    CHECK(p.steps[1].text == "9876*5*1000 = 49380000");
    CHECK(p.steps[4].text == "9876*2*1 = 19752");
    CHECK(p.steps[5].text == "49380000 + 3950400 = 53330400");
    CHECK(p.steps[6].text == "53330400 + 296280 = 53626680");
    CHECK(p.steps[7].text == "9876*5432 = 53646432");
    CHECK(big_mult("9876", "5432") == "53646432");
}

TEST_CASE("k=2 schema has no accumulate steps") {
    Proof p = gen_mult_proof(prob(42, 57, 2));
    REQUIRE(p.n_steps() == 4);
    CHECK(p.steps[0].text == "57 = 5*10+7*1");
    CHECK(p.steps[1].text == "42*5*10 = 2100");
    CHECK(p.steps[2].text == "42*7*1 = 294");
    CHECK(p.steps[3].text == "42*57 = 2394");
    for (const auto& s : p.steps) CHECK(s.role != Role::Accumulate);
}

TEST_CASE("k=1 degenerates to three steps") {
    Proof p = gen_mult_proof(prob(7, 3, 1));
    REQUIRE(p.n_steps() == 3);
    CHECK(p.steps[0].text == "3 = 3*1");
    CHECK(p.steps[1].text == "7*3*1 = 21");
    CHECK(p.steps[2].text == "7*3 = 21");
}

TEST_CASE("deps are the full left prefix") {
    Proof p = gen_mult_proof(prob(2345, 6789, 4));
    for (const auto& s : p.steps) {
        std::vector<int> want;
        for (int d = 1; d < s.id; ++d) want.push_back(d);
        CHECK(s.deps == want);
    }
}

TEST_CASE("every generated line is a true equality", "[property][oracle]") {
    Rng rng(20240815);
    for (int trial = 0; trial < 10000; ++trial) {
        int k = static_cast<int>(rng.range(1, 4));
        int64_t lo = pow10_i64(k - 1), hi = pow10_i64(k) - 1;
        MultProblem mp = prob(rng.range(lo, hi), rng.range(lo, hi), k);
        Proof p = gen_mult_proof(mp);
        for (const auto& s : p.steps) {
            INFO("k=" << k << " problem " << mp.num1 << "*" << mp.num2 << " line: " << s.text);
            REQUIRE(equality_line_true(s.text));
        }
        // final answer equals the independent big multiplication
        std::string fa = p.steps.back().text;
        std::string want = std::to_string(mp.num1) + "*" + std::to_string(mp.num2) + " = " +
                           big_mult(std::to_string(mp.num1), std::to_string(mp.num2));
        REQUIRE(fa == want);
    }
}

TEST_CASE("verifier accepts its own generator in every layout", "[property]") {
    Rng rng(5150);
    for (int trial = 0; trial < 300; ++trial) {
        int k = static_cast<int>(rng.range(1, 4));
        int64_t lo = pow10_i64(k - 1), hi = pow10_i64(k) - 1;
        MultProblem mp = prob(rng.range(lo, hi), rng.range(lo, hi), k);
        Proof p = gen_mult_proof(mp);
        for (OrderScheme s : {OrderScheme::SEQ, OrderScheme::PSER, OrderScheme::SER}) {
            MultVerdicts v = verify_mult_proof(reorder(p, s).text, mp, s);
            CHECK(v.all_correct());
        }
    }
}

TEST_CASE("corrupting one digit in step 6 flags exactly that step") {
    MultProblem mp = prob(2345, 2345, 4);
    OrderedSample sample = reorder(gen_mult_proof(mp), OrderScheme::SEQ);
    std::string text = sample.text;
    // step 6 is "4690000 + 703500 = 5393500"; bump one digit of the sum
    size_t at = text.find("5393500");
    REQUIRE(at != std::string::npos);
    text[at] = '6';

    MultVerdicts v = verify_mult_proof(text, mp);
    REQUIRE(v.verdicts.size() == 9);
    for (int i = 0; i <= 8; ++i) {
        if (i == 6)
            CHECK(v.verdicts[static_cast<size_t>(i)] == StepVerdict::WrongValue);
        else
            CHECK(v.verdicts[static_cast<size_t>(i)] == StepVerdict::Correct);
    }
    CHECK_FALSE(v.all_correct());
}

TEST_CASE("verdict taxonomy") {
    MultProblem mp = prob(42, 57, 2);
    OrderedSample sample = reorder(gen_mult_proof(mp), OrderScheme::SEQ);
    auto lines = split_lines(sample.text);

    SECTION("empty text: everything missing") {
        MultVerdicts v = verify_mult_proof("", mp);
        for (StepVerdict sv : v.verdicts) CHECK(sv == StepVerdict::Missing);
    }
    SECTION("garbage line is malformed") {
        lines[2] = "blah blah";
        MultVerdicts v = verify_mult_proof(join_lines(lines), mp);
        CHECK(v.verdicts[2] == StepVerdict::Malformed);
        CHECK(v.verdicts[1] == StepVerdict::Correct);
    }
    SECTION("true-but-wrong-operands equality is a wrong value") {
        lines[2] = "42*6*10 = 2520";  // arithmetic holds, schema operand does not
        MultVerdicts v = verify_mult_proof(join_lines(lines), mp);
        CHECK(v.verdicts[2] == StepVerdict::WrongValue);
    }
    SECTION("short output: trailing steps missing") {
        lines.resize(3);
        MultVerdicts v = verify_mult_proof(join_lines(lines), mp);
        CHECK(v.verdicts[3] == StepVerdict::Missing);
        CHECK(v.verdicts[4] == StepVerdict::Missing);
        CHECK(v.verdicts[1] == StepVerdict::Correct);
    }
    SECTION("extra lines are counted") {
        lines.push_back("42*57 = 2394");
        MultVerdicts v = verify_mult_proof(join_lines(lines), mp);
        CHECK(v.extra_lines == 1);
        CHECK_FALSE(v.all_correct());
    }
    SECTION("whitespace around lines is tolerated") {
        lines[1] = "  " + lines[1] + " ";
        MultVerdicts v = verify_mult_proof(join_lines(lines), mp);
        CHECK(v.all_correct());
    }
}

TEST_CASE("enumerate_splits basics") {
    SECTION("k=1 population is 81") {
        MultSplits s = enumerate_splits(1, 81, 0, 7);
        CHECK(s.train.size() == 81);
        std::set<std::pair<int64_t, int64_t>> uniq;
        for (const auto& p : s.train) uniq.insert({p.num1, p.num2});
        CHECK(uniq.size() == 81);
    }
    SECTION("train and test are disjoint") {
        MultSplits s = enumerate_splits(2, 7000, 1000, 42);
        std::set<std::pair<int64_t, int64_t>> train_set;
        for (const auto& p : s.train) train_set.insert({p.num1, p.num2});
        CHECK(train_set.size() == 7000);
        for (const auto& p : s.test) {
            CHECK(train_set.count({p.num1, p.num2}) == 0);
            CHECK(p.num1 >= 10);
            CHECK(p.num1 <= 99);
        }
    }
    SECTION("deterministic in the seed") {
        MultSplits a = enumerate_splits(2, 100, 50, 1);
        MultSplits b = enumerate_splits(2, 100, 50, 1);
        MultSplits c = enumerate_splits(2, 100, 50, 2);
        REQUIRE(a.train.size() == b.train.size());
        bool same = true, diff = false;
        for (size_t i = 0; i < a.train.size(); ++i) {
            same = same && a.train[i].num1 == b.train[i].num1 &&
                   a.train[i].num2 == b.train[i].num2;
            diff = diff || a.train[i].num1 != c.train[i].num1 ||
                   a.train[i].num2 != c.train[i].num2;
        }
        CHECK(same);
        CHECK(diff);
    }
    SECTION("over-requesting errors out") {
        CHECK_THROWS_AS(enumerate_splits(1, 82, 0, 7), ConfigError);
        CHECK_THROWS_AS(enumerate_splits(2, 8000, 1000, 7), ConfigError);
    }
    SECTION("bad k errors out") {
        CHECK_THROWS_AS(enumerate_splits(0, 1, 0, 7), ConfigError);
        CHECK_THROWS_AS(gen_mult_proof(prob(5, 5, 0)), ConfigError);
        CHECK_THROWS_AS(gen_mult_proof(prob(123, 45, 2)), ConfigError);
    }
}

TEST_CASE("distinct problems yield distinct texts", "[property]") {
    MultSplits s = enumerate_splits(2, 1000, 0, 3);
    std::set<std::string> texts, ids;
    for (const auto& mp : s.train) {
        Proof p = gen_mult_proof(mp);
        texts.insert(reorder(p, OrderScheme::SEQ).text);
        ids.insert(p.id);
    }
    CHECK(texts.size() == 1000);
    CHECK(ids.size() == 1000);
}
