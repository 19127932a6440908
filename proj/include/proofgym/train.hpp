#pragma once

// Tokenized training samples and the single-epoch trainer.  Every sample is
// consumed at most once per run; there is no shuffling inside a batch, so a
// (corpus, seed) pair always produces bitwise-identical training.

#include <functional>

#include "proofgym/optim.hpp"
#include "proofgym/proof.hpp"
#include "proofgym/tokenizer.hpp"

namespace proofgym {

struct TokenSample {
    std::vector<int> inputs;      // BOS + text, minus the last token
    std::vector<int> targets;     // text + EOS
    std::vector<uint8_t> mask;    // which targets contribute to the loss
};

// When masked is set, only targets inside the final-answer span (plus the
// trailing EOS when the final answer ends the text) carry loss; everything
// else still conditions the model but is not supervised.
inline TokenSample build_token_sample(const OrderedSample& os, bool masked) {
    std::vector<size_t> offsets;
    std::vector<int> toks = Tokenizer::encode(os.text, &offsets);
    const size_t n = toks.size();

    TokenSample ts;
    ts.inputs.reserve(n + 1);
    ts.inputs.push_back(Tokenizer::kBos);
    ts.inputs.insert(ts.inputs.end(), toks.begin(), toks.end());
    ts.targets = toks;
    ts.targets.push_back(Tokenizer::kEos);

    if (!masked) {
        ts.mask.assign(n + 1, 1);
        return ts;
    }

    const Span* fa = nullptr;
    for (const Span& sp : os.spans)
        if (sp.role == Role::FinalAnswer) fa = &sp;
    if (!fa) throw ConfigError("sample " + os.id + " has no final answer span");

    ts.mask.assign(n + 1, 0);
    for (size_t t = 0; t < n; ++t)
        if (offsets[t] >= fa->begin && offsets[t + 1] <= fa->end) ts.mask[t] = 1;
    if (fa->end == os.text.size()) ts.mask[n] = 1;
    return ts;
}

struct TrainConfig {
    int batch_size = 4;
    double divergence_loss = 20.0;  // halt when the batch loss blows past this
    int checkpoint_every = 0;       // in steps; 0 means final checkpoint only
    // Learning rate for the step about to be taken (1-based index).  Unset
    // means the optimizer's configured rate.  Must be a pure function of the
    // step index so resumed runs retrace the same schedule.
    std::function<double(int64_t)> lr_for;
};

struct TrainResult {
    std::vector<double> step_loss;  // mean masked CE per step
    int64_t steps = 0;
    int64_t samples_seen = 0;
};

// One pass over `samples` in the given order.  on_checkpoint(step, seen) runs
// at the cadence and always after the last step; `start_sample` skips work
// already covered by a resumed checkpoint.
template <typename S>
TrainResult train_epoch(Model<S>& model, Adam<S>& adam, const std::vector<TokenSample>& samples,
                        const TrainConfig& tc,
                        const std::function<void(int64_t, int64_t)>& on_checkpoint = {},
                        int64_t start_sample = 0,
                        const std::function<void(int64_t, double)>& on_step = {}) {
    if (tc.batch_size < 1) throw ConfigError("batch_size must be positive");
    if (start_sample % tc.batch_size != 0)
        throw ConfigError("start_sample must be a multiple of the batch size");

    const int64_t n = static_cast<int64_t>(samples.size());
    Parameters<S> grads = Parameters<S>::shaped(model.cfg);

    TrainResult res;
    res.samples_seen = start_sample;
    res.steps = start_sample / tc.batch_size;
    int64_t last_ckpt_step = -1;

    for (int64_t begin = start_sample; begin < n; begin += tc.batch_size) {
        int64_t end = std::min(n, begin + tc.batch_size);
        grads.set_zero();
        double wce = 0, wsum = 0;
        for (int64_t i = begin; i < end; ++i) {
            const TokenSample& s = samples[static_cast<size_t>(i)];
            std::vector<S> w(s.mask.begin(), s.mask.end());
            auto [l, c] = model.loss_and_grads(s.inputs, s.targets, w, grads);
            wce += l;
            wsum += c;
        }
        if (wsum == 0) throw ConfigError("batch with no supervised tokens");
        double loss = wce / wsum;
        if (!std::isfinite(loss) || loss > tc.divergence_loss)
            throw std::runtime_error("training diverged at step " +
                                     std::to_string(res.steps + 1) +
                                     " (loss " + std::to_string(loss) + ")");
        const S inv = static_cast<S>(1.0 / wsum);
        for (auto& [name, g] : grads.entries()) (*g) *= inv;
        if (tc.lr_for) adam.cfg.lr = tc.lr_for(res.steps + 1);
        adam.step(model.p, grads);

        res.steps += 1;
        res.samples_seen = end;
        res.step_loss.push_back(loss);
        if (on_step) on_step(res.steps, loss);
        if (on_checkpoint && tc.checkpoint_every > 0 && res.steps % tc.checkpoint_every == 0) {
            on_checkpoint(res.steps, res.samples_seen);
            last_ckpt_step = res.steps;
        }
    }

    if (on_checkpoint && res.steps != last_ckpt_step) on_checkpoint(res.steps, res.samples_seen);
    return res;
}

}  // namespace proofgym
