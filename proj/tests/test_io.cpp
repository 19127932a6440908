#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <unistd.h>

#include "proofgym/logic.hpp"
#include "proofgym/mult.hpp"
#include "proofgym/proof_io.hpp"
#include "proofgym/tokenizer.hpp"

using namespace proofgym;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("proofgym-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("proof JSONL round trips bit-exactly") {
    std::vector<Proof> proofs;
    for (uint64_t i = 0; i < 20; ++i)
        proofs.push_back(gen_mult_proof(MultProblem{1234 + static_cast<int64_t>(i), 5678, 4}));
    for (int i = 0; i < 5; ++i)
        proofs.push_back(theorem_to_proof(gen_theorem(static_cast<uint64_t>(i), 4, 3, 5),
                                          "logic-" + std::to_string(i)));

    TempDir tmp;
    std::string path = tmp.file("proofs.jsonl");
    write_proofs_jsonl(path, proofs);
    auto back = read_proofs_jsonl(path);
    REQUIRE(back.size() == proofs.size());
    for (size_t i = 0; i < proofs.size(); ++i) {
        CHECK(back[i].id == proofs[i].id);
        CHECK(back[i].problem == proofs[i].problem);
        CHECK(back[i].final_answer_id == proofs[i].final_answer_id);
        REQUIRE(back[i].steps.size() == proofs[i].steps.size());
        for (size_t j = 0; j < proofs[i].steps.size(); ++j) {
            CHECK(back[i].steps[j].id == proofs[i].steps[j].id);
            CHECK(back[i].steps[j].role == proofs[i].steps[j].role);
            CHECK(back[i].steps[j].text == proofs[i].steps[j].text);
            CHECK(back[i].steps[j].deps == proofs[i].steps[j].deps);
        }
    }

    // reading validates: corrupt a dep to point forward
    json j = proof_to_json(proofs[0]);
    j["steps"][0]["deps"] = {5};
    CHECK_THROWS_AS(proof_from_json(j), ConfigError);
}

TEST_CASE("ordered sample JSONL round trips") {
    Proof p = gen_mult_proof(MultProblem{2345, 2345, 4});
    std::vector<OrderedSample> samples;
    for (OrderScheme s : {OrderScheme::SEQ, OrderScheme::PSER, OrderScheme::SER})
        samples.push_back(reorder(p, s));

    TempDir tmp;
    std::string path = tmp.file("samples.jsonl");
    write_samples_jsonl(path, samples);
    auto back = read_samples_jsonl(path);
    REQUIRE(back.size() == samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        CHECK(back[i].id == samples[i].id);
        CHECK(back[i].scheme == samples[i].scheme);
        CHECK(back[i].text == samples[i].text);
        REQUIRE(back[i].spans.size() == samples[i].spans.size());
        for (size_t j = 0; j < samples[i].spans.size(); ++j) {
            CHECK(back[i].spans[j].step_id == samples[i].spans[j].step_id);
            CHECK(back[i].spans[j].role == samples[i].spans[j].role);
            CHECK(back[i].spans[j].begin == samples[i].spans[j].begin);
            CHECK(back[i].spans[j].end == samples[i].spans[j].end);
        }
    }
}

TEST_CASE("sidecar metadata round trips") {
    TempDir tmp;
    std::string corpus = tmp.file("train.jsonl");
    json meta = {{"k", 4}, {"seed", 17}, {"n_train", 100}, {"n_test", 10},
                 {"prng_id", kPrngId}, {"schema_version", kSchemaVersion}};
    write_meta(corpus, meta);
    CHECK(read_meta(corpus) == meta);
    CHECK(std::filesystem::exists(corpus + ".meta.json"));
}

TEST_CASE("jsonl reader flags corrupt lines") {
    CHECK_THROWS_AS(from_jsonl<Proof>("{\"id\": \"x\"\n", proof_from_json), IoError);
    CHECK(from_jsonl<Proof>("", proof_from_json).empty());
    // blank lines are tolerated
    Proof p = gen_mult_proof(MultProblem{12, 34, 2});
    std::string text = proof_to_json(p).dump() + "\n\n" + proof_to_json(p).dump() + "\n";
    CHECK(from_jsonl<Proof>(text, proof_from_json).size() == 2);
}

TEST_CASE("tokenizer vocabulary is frozen") {
    CHECK(Tokenizer::vocab_size() == 79);
    CHECK(Tokenizer::kPad == 0);
    CHECK(Tokenizer::kBos == 1);
    CHECK(Tokenizer::kEos == 2);
    CHECK(Tokenizer::piece_id("<pad>") == 0);
    CHECK(Tokenizer::piece_id("0") == 3);
    CHECK(Tokenizer::piece_id("9") == 12);
    CHECK(Tokenizer::piece_id("a") == 13);
    CHECK(Tokenizer::piece_id("A") == 39);
    CHECK(Tokenizer::piece_id(" ") == 65);
    CHECK(Tokenizer::piece_id("⊢") == 78);
    CHECK(Tokenizer::piece_id("?") == -1);

    // ids never change: every piece maps back to itself
    for (int id = 0; id < Tokenizer::vocab_size(); ++id)
        CHECK(Tokenizer::piece_id(Tokenizer::piece(id)) == id);
}

TEST_CASE("tokenizer encodes every corpus character and nothing else") {
    std::string text = "theorem : P∧Q→Q∧P\nh1 : (P∨Q)∧R ⊢ Z | ⊢ R→R\n"
                       "Tell me what is 23*45 and prove it\n23*4*10 = 920\n920 + 15 = 935\nQED";
    std::vector<size_t> offsets;
    auto ids = Tokenizer::encode(text, &offsets);
    REQUIRE(offsets.size() == ids.size() + 1);
    CHECK(offsets.back() == text.size());
    CHECK(Tokenizer::decode(ids) == text);
    // token i covers bytes [offsets[i], offsets[i+1])
    for (size_t i = 0; i < ids.size(); ++i)
        CHECK(text.substr(offsets[i], offsets[i + 1] - offsets[i]) == Tokenizer::piece(ids[i]));

    CHECK_THROWS_AS(Tokenizer::encode("price: 9€"), ConfigError);
    CHECK_THROWS_AS(Tokenizer::encode("tab\there"), ConfigError);
    CHECK_THROWS_AS(Tokenizer::encode("a-b"), ConfigError);
    try {
        Tokenizer::encode("ok then — bad");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("byte 8") != std::string::npos);
    }

    // generated corpora stay inside the vocabulary
    for (uint64_t s = 0; s < 20; ++s) {
        Proof mult = gen_mult_proof(MultProblem{9000 + static_cast<int64_t>(s), 4321, 4});
        CHECK_NOTHROW(Tokenizer::encode(reorder(mult, OrderScheme::SEQ).text));
        Proof logic = theorem_to_proof(gen_theorem(s, 4, 3, 5), "t");
        CHECK_NOTHROW(Tokenizer::encode(reorder(logic, OrderScheme::SER).text));
    }
}

TEST_CASE("tokenizer decode skips control tokens") {
    std::vector<int> ids = {Tokenizer::kBos, Tokenizer::piece_id("Q"),
                            Tokenizer::piece_id("E"), Tokenizer::piece_id("D"),
                            Tokenizer::kEos, Tokenizer::kPad};
    CHECK(Tokenizer::decode(ids) == "QED");
}
