#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "proofgym/checkpoint.hpp"
#include "proofgym/mult.hpp"
#include "proofgym/train.hpp"

using namespace proofgym;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.n_layers = 2;
    c.n_heads = 2;
    c.d_model = 16;
    c.d_ff = 32;
    c.n_ctx = 32;
    c.vocab_size = Tokenizer::vocab_size();
    return c;
}

std::vector<int> random_ids(Rng& rng, int len, int vocab) {
    std::vector<int> ids;
    for (int i = 0; i < len; ++i)
        ids.push_back(static_cast<int>(rng.bounded(static_cast<uint64_t>(vocab))));
    return ids;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("proofgym-model-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<TokenSample> mult_batch(int n, bool masked = false) {
    std::vector<TokenSample> out;
    for (int i = 0; i < n; ++i) {
        Proof p = gen_mult_proof(MultProblem{10 + i, 20 + 3 * i, 2});
        out.push_back(build_token_sample(reorder(p, OrderScheme::SEQ), masked));
    }
    return out;
}

// Distinct first digits: the only position a memorizing model cannot predict
// is that one branch, so the attainable loss floor is 4*ln(4) spread over
// roughly a thousand supervised tokens.
std::vector<TokenSample> separable_batch() {
    std::vector<TokenSample> out;
    for (int64_t a : {1234, 2345, 3456, 4567}) {
        Proof p = gen_mult_proof(MultProblem{a, a + 4444, 4});
        out.push_back(build_token_sample(reorder(p, OrderScheme::SEQ), false));
    }
    return out;
}

}  // namespace

TEST_CASE("finite differences confirm every analytic gradient") {
    Model<double> model(tiny_config());
    model.init(11);

    Rng rng(99);
    std::vector<int> ids = random_ids(rng, 12, model.cfg.vocab_size);
    std::vector<int> targets = random_ids(rng, 12, model.cfg.vocab_size);
    std::vector<double> weights(12, 1.0);
    for (size_t t = 0; t < weights.size(); ++t)
        if (rng.chance(0.4)) weights[t] = 0.0;  // exercise the mask path too
    weights[3] = 1.0;

    Parameters<double> grads = Parameters<double>::shaped(model.cfg);
    auto [loss, wsum] = model.loss_and_grads(ids, targets, weights, grads);
    CHECK(wsum > 0);
    CHECK(std::isfinite(loss));

    auto loss_at = [&]() {
        Parameters<double> scratch = Parameters<double>::shaped(model.cfg);
        return model.loss_and_grads(ids, targets, weights, scratch).first;
    };

    const double h = 1e-4;
    auto ge = grads.entries();
    auto pe = model.p.entries();
    double worst = 0;
    for (size_t ti = 0; ti < pe.size(); ++ti) {
        Mat<double>& P = *pe[ti].second;
        Mat<double>& G = *ge[ti].second;
        int probes = static_cast<int>(std::min<Eigen::Index>(P.size(), 40));
        for (int pi = 0; pi < probes; ++pi) {
            Eigen::Index idx = static_cast<Eigen::Index>(
                rng.bounded(static_cast<uint64_t>(P.size())));
            double saved = P.data()[idx];
            P.data()[idx] = saved + h;
            double up = loss_at();
            P.data()[idx] = saved - h;
            double down = loss_at();
            P.data()[idx] = saved;
            double fd = (up - down) / (2 * h);
            double an = G.data()[idx];
            if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) continue;
            double rel = std::abs(fd - an) / std::max(1e-8, std::abs(fd) + std::abs(an));
            INFO(pe[ti].first << " flat index " << idx << " fd=" << fd << " an=" << an);
            CHECK(rel < 1e-4);
            worst = std::max(worst, rel);
        }
    }
    INFO("worst relative gradient error " << worst);
    CHECK(worst < 1e-4);
}

TEST_CASE("freshly initialized model predicts near-uniform") {
    ModelConfig cfg;
    cfg.vocab_size = Tokenizer::vocab_size();
    cfg.n_ctx = 256;
    Model<float> model(cfg);
    model.init(3);

    Proof p = gen_mult_proof(MultProblem{62, 43, 2});
    TokenSample ts = build_token_sample(reorder(p, OrderScheme::SEQ), false);
    Parameters<float> grads = Parameters<float>::shaped(cfg);
    auto [loss, wsum] = model.loss_and_grads(
        ts.inputs, ts.targets, std::vector<float>(ts.mask.begin(), ts.mask.end()), grads);
    double mean = loss / wsum;
    double uniform = std::log(static_cast<double>(cfg.vocab_size));
    CHECK(mean > uniform * 0.95);
    CHECK(mean < uniform * 1.05);
}

TEST_CASE("attention is causal") {
    Model<float> model(tiny_config());
    model.init(5);
    Rng rng(17);
    std::vector<int> ids = random_ids(rng, 20, model.cfg.vocab_size);
    Mat<float> base = model.forward(ids);

    auto mutated = ids;
    mutated[10] = (mutated[10] + 1) % model.cfg.vocab_size;
    Mat<float> changed = model.forward(mutated);

    for (int t = 0; t < 10; ++t)
        CHECK(base.row(t) == changed.row(t));  // bitwise: token 10 is invisible to the past
    CHECK(base.row(10) != changed.row(10));
}

TEST_CASE("greedy decoding matches full-forward argmax") {
    Model<double> model(tiny_config());
    model.init(21);
    Rng rng(8);
    std::vector<int> prompt = random_ids(rng, 6, model.cfg.vocab_size);

    std::vector<int> want;
    std::vector<int> ids = prompt;
    for (int i = 0; i < 15; ++i) {
        Mat<double> logits = model.forward(ids);
        int next = 0;
        for (int v = 1; v < model.cfg.vocab_size; ++v)
            if (logits(static_cast<int>(ids.size()) - 1, v) >
                logits(static_cast<int>(ids.size()) - 1, next))
                next = v;
        want.push_back(next);
        if (next == Tokenizer::kEos) break;
        ids.push_back(next);
    }

    CHECK(model.generate(prompt, 15, Tokenizer::kEos) == want);
}

TEST_CASE("greedy ties resolve to the lowest token id") {
    Model<float> model(tiny_config());
    model.init(4);
    model.p.wu.setZero();  // all logits identical
    auto gen = model.generate({5, 6, 7}, 4, Tokenizer::kEos);
    CHECK(gen == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("one batch can be memorized") {
    ModelConfig cfg = tiny_config();
    cfg.d_model = 64;
    cfg.n_heads = 4;
    cfg.d_ff = 256;
    cfg.n_ctx = 320;
    Model<float> model(cfg);
    model.init(7);
    Adam<float> adam(AdamConfig{2e-3, 0.9, 0.999, 1e-8}, cfg);

    auto batch = separable_batch();
    Parameters<float> grads = Parameters<float>::shaped(cfg);
    double loss = 0;
    for (int it = 0; it < 2000; ++it) {
        grads.set_zero();
        double wce = 0, wsum = 0;
        for (const TokenSample& s : batch) {
            std::vector<float> w(s.mask.begin(), s.mask.end());
            auto [l, c] = model.loss_and_grads(s.inputs, s.targets, w, grads);
            wce += l;
            wsum += c;
        }
        loss = wce / wsum;
        if (loss < 0.0095) break;
        const float inv = static_cast<float>(1.0 / wsum);
        for (auto& [name, g] : grads.entries()) (*g) *= inv;
        adam.step(model.p, grads);
    }
    CHECK(loss < 0.01);
}

TEST_CASE("adam first steps match the closed form") {
    ModelConfig cfg = tiny_config();
    Model<double> model(cfg);
    model.init(13);
    Parameters<double> before = model.p;

    AdamConfig ac{1e-2, 0.9, 0.999, 1e-8};
    Adam<double> adam(ac, cfg);
    Parameters<double> grads = Parameters<double>::shaped(cfg);
    for (auto& [name, g] : grads.entries()) g->setConstant(0.5);

    // With m = v = 0 and bias correction, one step moves every weight by
    // exactly -lr * g / (|g| + eps'), i.e. about -lr for any sizable g.
    adam.step(model.p, grads);
    auto pb = before.entries();
    auto pa = model.p.entries();
    for (size_t i = 0; i < pa.size(); ++i) {
        double delta = (*pa[i].second)(0, 0) - (*pb[i].second)(0, 0);
        CHECK(delta == Catch::Approx(-1e-2).epsilon(1e-5));
    }

    adam.step(model.p, grads);  // same gradient again: same normalized step
    for (size_t i = 0; i < pa.size(); ++i) {
        double delta = (*pa[i].second)(0, 0) - (*pb[i].second)(0, 0);
        CHECK(delta == Catch::Approx(-2e-2).epsilon(1e-5));
    }
    CHECK(adam.t == 2);
}

TEST_CASE("token samples shift targets and mask the final answer") {
    Proof p = gen_mult_proof(MultProblem{42, 57, 2});

    OrderedSample seq = reorder(p, OrderScheme::SEQ);
    TokenSample full = build_token_sample(seq, false);
    std::vector<size_t> offsets;
    auto toks = Tokenizer::encode(seq.text, &offsets);
    REQUIRE(full.inputs.size() == toks.size() + 1);
    CHECK(full.inputs[0] == Tokenizer::kBos);
    CHECK(full.targets.back() == Tokenizer::kEos);
    for (size_t i = 0; i < toks.size(); ++i) {
        CHECK(full.inputs[i + 1] == toks[i]);
        CHECK(full.targets[i] == toks[i]);
    }
    CHECK(std::count(full.mask.begin(), full.mask.end(), 1) ==
          static_cast<long>(full.mask.size()));

    auto masked_text = [&](const OrderedSample& os) {
        TokenSample ts = build_token_sample(os, true);
        std::vector<size_t> off;
        auto tk = Tokenizer::encode(os.text, &off);
        std::string got;
        for (size_t t = 0; t < tk.size(); ++t)
            if (ts.mask[t]) got += Tokenizer::piece(tk[t]);
        return std::make_pair(got, ts.mask.back() == 1);
    };

    // SEQ puts the final answer last: its tokens and the EOS carry loss
    auto [seq_text, seq_eos] = masked_text(seq);
    CHECK(seq_text == "42*57 = 2394");
    CHECK(seq_eos);

    // SER puts it first: no EOS supervision, same span
    auto [ser_text, ser_eos] = masked_text(reorder(p, OrderScheme::SER));
    CHECK(ser_text == "42*57 = 2394");
    CHECK_FALSE(ser_eos);

    TokenSample masked = build_token_sample(seq, true);
    long supervised = std::count(masked.mask.begin(), masked.mask.end(), 1);
    CHECK(supervised == static_cast<long>(Tokenizer::encode("42*57 = 2394").size() + 1));
}

TEST_CASE("training is deterministic") {
    ModelConfig cfg = tiny_config();
    cfg.n_ctx = 128;
    auto run = [&] {
        Model<float> model(cfg);
        model.init(100);
        Adam<float> adam(AdamConfig{1e-3, 0.9, 0.999, 1e-8}, cfg);
        auto samples = mult_batch(12);
        TrainConfig tc;
        TrainResult r = train_epoch(model, adam, samples, tc);
        return std::make_pair(r.step_loss, model.p.tok_emb);
    };
    auto a = run();
    auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);  // bitwise equal parameters
}

TEST_CASE("trainer sees each sample once and checkpoints on cadence") {
    ModelConfig cfg = tiny_config();
    cfg.n_ctx = 128;
    Model<float> model(cfg);
    model.init(1);
    Adam<float> adam(AdamConfig{1e-3, 0.9, 0.999, 1e-8}, cfg);

    auto samples = mult_batch(10);
    TrainConfig tc;
    tc.checkpoint_every = 2;
    std::vector<int64_t> at;
    TrainResult r = train_epoch(model, adam, samples, tc,
                                [&](int64_t step, int64_t) { at.push_back(step); });
    CHECK(r.steps == 3);  // ceil(10 / 4)
    CHECK(r.samples_seen == 10);
    CHECK(r.step_loss.size() == 3);
    CHECK(at == std::vector<int64_t>{2, 3});
}

TEST_CASE("divergence raises instead of training on garbage") {
    ModelConfig cfg = tiny_config();
    cfg.n_ctx = 128;
    Model<float> model(cfg);
    model.init(1);
    Adam<float> adam(AdamConfig{1e-3, 0.9, 0.999, 1e-8}, cfg);
    auto samples = mult_batch(4);
    TrainConfig tc;
    tc.divergence_loss = 0.1;  // initial loss is ~4.4, so step one trips it
    CHECK_THROWS_AS(train_epoch(model, adam, samples, tc), std::runtime_error);
}

TEST_CASE("checkpoints restore training exactly") {
    ModelConfig cfg = tiny_config();
    cfg.n_ctx = 128;
    auto samples = mult_batch(24);
    AdamConfig ac{1e-3, 0.9, 0.999, 1e-8};

    // uninterrupted run
    Model<float> straight(cfg);
    straight.init(55);
    Adam<float> adam1(ac, cfg);
    train_epoch(straight, adam1, samples, TrainConfig{});

    // interrupted at sample 12, checkpointed, resumed in a fresh process-alike
    TempDir tmp;
    std::string path = tmp.file("ckpt.bin");
    {
        Model<float> m(cfg);
        m.init(55);
        Adam<float> a(ac, cfg);
        std::vector<TokenSample> half(samples.begin(), samples.begin() + 12);
        TrainResult r = train_epoch(m, a, half, TrainConfig{});
        save_checkpoint(path, m, a, r.steps, r.samples_seen, {{"note", "mid-run"}});
    }
    {
        auto data = load_checkpoint<float>(path);
        CHECK(data.step == 3);
        CHECK(data.samples_seen == 12);
        CHECK(data.extra.at("note") == "mid-run");
        Model<float> m;
        Adam<float> a;
        restore(data, m, a);
        CHECK(a.t == 3);
        train_epoch(m, a, samples, TrainConfig{}, {}, data.samples_seen);

        auto pe = straight.p.entries();
        auto qe = m.p.entries();
        for (size_t i = 0; i < pe.size(); ++i) {
            INFO(pe[i].first);
            CHECK(*pe[i].second == *qe[i].second);  // bitwise
        }
    }

    CHECK_THROWS_AS(load_checkpoint<double>(path), IoError);  // scalar mismatch
    {
        std::string raw = read_file(path);
        raw[3] = 'X';
        write_file_atomic(path, raw);
        CHECK_THROWS_AS(load_checkpoint<float>(path), IoError);
    }
}

TEST_CASE("model config validation") {
    ModelConfig cfg = tiny_config();
    cfg.n_heads = 3;
    CHECK_THROWS_AS(Model<float>(cfg), ConfigError);
    cfg = tiny_config();
    cfg.vocab_size = 0;
    CHECK_THROWS_AS(Model<float>(cfg), ConfigError);

    Model<float> model(tiny_config());
    model.init(2);
    CHECK_THROWS_AS(model.forward({}), ConfigError);
    CHECK_THROWS_AS(model.forward(std::vector<int>(40, 1)), ConfigError);  // ctx is 32
    CHECK_THROWS_AS(model.forward({1, 2, 200}), ConfigError);
    CHECK_THROWS_AS(model.generate({}, 4, 2), ConfigError);
}
