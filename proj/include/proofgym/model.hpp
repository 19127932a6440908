#pragma once

// A small decoder-only transformer with exact, hand-written gradients.
//
// Architecture, fixed by ModelConfig: learned token + position embeddings,
// pre-norm blocks (RMSNorm with learned gains), multi-head causal attention,
// ReLU MLP, no biases anywhere, untied unembedding.  Everything is templated
// on the scalar so the finite-difference tests can run the whole stack in
// double precision while training runs in float.

#include <Eigen/Core>
#include <cmath>
#include <nlohmann/json.hpp>

#include "proofgym/common.hpp"
#include "proofgym/rng.hpp"

namespace proofgym {

struct ModelConfig {
    int n_layers = 4;
    int n_heads = 4;
    int d_model = 128;
    int d_ff = 512;
    int n_ctx = 1024;
    int vocab_size = 0;

    int head_dim() const { return d_model / n_heads; }

    void validate() const {
        if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_ff < 1 || n_ctx < 1 ||
            vocab_size < 1)
            throw ConfigError("model config fields must be positive");
        if (d_model % n_heads != 0)
            throw ConfigError("d_model must be divisible by n_heads");
    }

    nlohmann::json to_json() const {
        return {{"n_layers", n_layers}, {"n_heads", n_heads}, {"d_model", d_model},
                {"d_ff", d_ff},         {"n_ctx", n_ctx},     {"vocab_size", vocab_size}};
    }
    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig c;
        c.n_layers = j.at("n_layers").get<int>();
        c.n_heads = j.at("n_heads").get<int>();
        c.d_model = j.at("d_model").get<int>();
        c.d_ff = j.at("d_ff").get<int>();
        c.n_ctx = j.at("n_ctx").get<int>();
        c.vocab_size = j.at("vocab_size").get<int>();
        c.validate();
        return c;
    }
};

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kRmsEps = 1e-6;
inline constexpr double kInitStd = 0.02;

template <typename S>
struct Parameters {
    struct Layer {
        Mat<S> wq, wk, wv, wo;  // d x d
        Mat<S> w1, w2;          // d x ff, ff x d
        Mat<S> g1, g2;          // 1 x d RMSNorm gains
    };
    Mat<S> tok_emb;  // V x d
    Mat<S> pos_emb;  // ctx x d
    std::vector<Layer> layers;
    Mat<S> gf;  // 1 x d
    Mat<S> wu;  // d x V

    // Stable enumeration order; the checkpoint format and Adam state rely on
    // it matching across instances with the same config.
    std::vector<std::pair<std::string, Mat<S>*>> entries() {
        std::vector<std::pair<std::string, Mat<S>*>> out;
        out.push_back({"tok_emb", &tok_emb});
        out.push_back({"pos_emb", &pos_emb});
        for (size_t i = 0; i < layers.size(); ++i) {
            std::string p = "L" + std::to_string(i) + ".";
            Layer& l = layers[i];
            out.push_back({p + "g1", &l.g1});
            out.push_back({p + "wq", &l.wq});
            out.push_back({p + "wk", &l.wk});
            out.push_back({p + "wv", &l.wv});
            out.push_back({p + "wo", &l.wo});
            out.push_back({p + "g2", &l.g2});
            out.push_back({p + "w1", &l.w1});
            out.push_back({p + "w2", &l.w2});
        }
        out.push_back({"final_g", &gf});
        out.push_back({"wu", &wu});
        return out;
    }
    std::vector<std::pair<std::string, const Mat<S>*>> entries() const {
        auto mut = const_cast<Parameters*>(this)->entries();
        std::vector<std::pair<std::string, const Mat<S>*>> out;
        out.reserve(mut.size());
        for (auto& [n, m] : mut) out.push_back({n, m});
        return out;
    }

    static Parameters shaped(const ModelConfig& c) {
        Parameters p;
        p.tok_emb.setZero(c.vocab_size, c.d_model);
        p.pos_emb.setZero(c.n_ctx, c.d_model);
        p.layers.resize(static_cast<size_t>(c.n_layers));
        for (auto& l : p.layers) {
            l.wq.setZero(c.d_model, c.d_model);
            l.wk.setZero(c.d_model, c.d_model);
            l.wv.setZero(c.d_model, c.d_model);
            l.wo.setZero(c.d_model, c.d_model);
            l.w1.setZero(c.d_model, c.d_ff);
            l.w2.setZero(c.d_ff, c.d_model);
            l.g1.setZero(1, c.d_model);
            l.g2.setZero(1, c.d_model);
        }
        p.gf.setZero(1, c.d_model);
        p.wu.setZero(c.d_model, c.vocab_size);
        return p;
    }

    void set_zero() {
        for (auto& [n, m] : entries()) m->setZero();
    }

    int64_t count() const {
        int64_t n = 0;
        for (auto& [name, m] : entries()) n += m->size();
        return n;
    }

    template <typename T>
    Parameters<T> cast() const {
        Parameters<T> out;
        out.tok_emb = tok_emb.template cast<T>();
        out.pos_emb = pos_emb.template cast<T>();
        out.layers.resize(layers.size());
        for (size_t i = 0; i < layers.size(); ++i) {
            out.layers[i].wq = layers[i].wq.template cast<T>();
            out.layers[i].wk = layers[i].wk.template cast<T>();
            out.layers[i].wv = layers[i].wv.template cast<T>();
            out.layers[i].wo = layers[i].wo.template cast<T>();
            out.layers[i].w1 = layers[i].w1.template cast<T>();
            out.layers[i].w2 = layers[i].w2.template cast<T>();
            out.layers[i].g1 = layers[i].g1.template cast<T>();
            out.layers[i].g2 = layers[i].g2.template cast<T>();
        }
        out.gf = gf.template cast<T>();
        out.wu = wu.template cast<T>();
        return out;
    }
};

namespace model_detail {

// y[t] = x[t] * g / sqrt(mean(x[t]^2) + eps); inv_rms[t] is cached for the
// backward pass.
template <typename S>
Mat<S> rmsnorm(const Mat<S>& x, const Mat<S>& g, Mat<S>& inv_rms) {
    const auto d = x.cols();
    inv_rms.resize(x.rows(), 1);
    Mat<S> y(x.rows(), d);
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
        S ms = x.row(t).squaredNorm() / static_cast<S>(d) + static_cast<S>(kRmsEps);
        S inv = S(1) / std::sqrt(ms);
        inv_rms(t, 0) = inv;
        y.row(t) = x.row(t).cwiseProduct(g.row(0)) * inv;
    }
    return y;
}

template <typename S>
void rmsnorm_backward(const Mat<S>& x, const Mat<S>& g, const Mat<S>& inv_rms,
                      const Mat<S>& dy, Mat<S>& dx, Mat<S>& dg) {
    const auto d = x.cols();
    dx.resize(x.rows(), d);
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
        S inv = inv_rms(t, 0);
        auto dyg = dy.row(t).cwiseProduct(g.row(0));
        S dot = dyg.cwiseProduct(x.row(t)).sum();
        dx.row(t) = dyg * inv - x.row(t) * (dot * inv * inv * inv / static_cast<S>(d));
        dg.row(0) += dy.row(t).cwiseProduct(x.row(t)) * inv;
    }
}

}  // namespace model_detail

template <typename S>
struct LayerCache {
    Mat<S> x_in, a, q, k, v, att, x_mid, b, h;
    Mat<S> inv1, inv2;            // per-row 1/rms
    std::vector<Mat<S>> probs;    // per-head softmax, T x T lower-triangular
};

template <typename S>
struct ForwardCache {
    std::vector<LayerCache<S>> layers;
    Mat<S> x_final, f, inv_f, logits;
    std::vector<int> ids;
};

template <typename S>
class Model {
  public:
    ModelConfig cfg;
    Parameters<S> p;

    Model() = default;
    explicit Model(const ModelConfig& c) : cfg(c), p(Parameters<S>::shaped(c)) {
        cfg.validate();
    }

    // All weights N(0, 0.02^2); norm gains start at 1.
    void init(uint64_t seed) {
        Rng rng(derive_seed(seed, fnv1a64("model-init")));
        for (auto& [name, m] : p.entries()) {
            if ((name.size() >= 2 && (name.substr(name.size() - 2) == "g1" ||
                                      name.substr(name.size() - 2) == "g2")) ||
                name == "final_g") {
                m->setOnes();
                continue;
            }
            for (Eigen::Index i = 0; i < m->rows(); ++i)
                for (Eigen::Index j = 0; j < m->cols(); ++j)
                    (*m)(i, j) = static_cast<S>(rng.gauss() * kInitStd);
        }
    }

    // Teacher-forced forward over a full sequence; returns logits (T x V).
    Mat<S> forward(const std::vector<int>& ids, ForwardCache<S>* cache = nullptr) const {
        const int T = static_cast<int>(ids.size());
        if (T == 0) throw ConfigError("forward: empty sequence");
        if (T > cfg.n_ctx)
            throw ConfigError("forward: sequence length " + std::to_string(T) +
                              " exceeds context " + std::to_string(cfg.n_ctx));
        const int H = cfg.n_heads, dh = cfg.head_dim();
        const S scale = S(1) / std::sqrt(static_cast<S>(dh));

        Mat<S> x(T, cfg.d_model);
        for (int t = 0; t < T; ++t) {
            int id = ids[static_cast<size_t>(t)];
            if (id < 0 || id >= cfg.vocab_size)
                throw ConfigError("forward: token id out of range: " + std::to_string(id));
            x.row(t) = p.tok_emb.row(id) + p.pos_emb.row(t);
        }

        if (cache) {
            cache->layers.assign(static_cast<size_t>(cfg.n_layers), {});
            cache->ids = ids;
        }

        for (int li = 0; li < cfg.n_layers; ++li) {
            const auto& L = p.layers[static_cast<size_t>(li)];
            LayerCache<S> lc;
            lc.x_in = x;
            lc.a = model_detail::rmsnorm(x, L.g1, lc.inv1);
            lc.q.noalias() = lc.a * L.wq;
            lc.k.noalias() = lc.a * L.wk;
            lc.v.noalias() = lc.a * L.wv;
            lc.att.resize(T, cfg.d_model);
            lc.probs.assign(static_cast<size_t>(H), Mat<S>());
            for (int h = 0; h < H; ++h) {
                auto qh = lc.q.middleCols(h * dh, dh);
                auto kh = lc.k.middleCols(h * dh, dh);
                auto vh = lc.v.middleCols(h * dh, dh);
                Mat<S> scores = qh * kh.transpose() * scale;
                Mat<S>& prob = lc.probs[static_cast<size_t>(h)];
                prob.setZero(T, T);
                for (int t = 0; t < T; ++t) {
                    auto row = scores.row(t).head(t + 1);
                    S mx = row.maxCoeff();
                    Eigen::Array<S, 1, Eigen::Dynamic> e = (row.array() - mx).exp();
                    prob.row(t).head(t + 1) = e / e.sum();
                }
                lc.att.middleCols(h * dh, dh).noalias() = prob * vh;
            }
            x.noalias() = lc.x_in + lc.att * L.wo;
            lc.x_mid = x;
            lc.b = model_detail::rmsnorm(x, L.g2, lc.inv2);
            lc.h.noalias() = (lc.b * L.w1).cwiseMax(S(0));
            x.noalias() = lc.x_mid + lc.h * L.w2;
            if (cache) cache->layers[static_cast<size_t>(li)] = std::move(lc);
        }

        Mat<S> inv_f;
        Mat<S> f = model_detail::rmsnorm(x, p.gf, inv_f);
        Mat<S> logits = f * p.wu;
        if (cache) {
            cache->x_final = std::move(x);
            cache->f = std::move(f);
            cache->inv_f = std::move(inv_f);
            cache->logits = logits;
        }
        return logits;
    }

    // Cross entropy of targets under the model, weighted per position.
    // Returns (sum of weighted CE, sum of weights) and accumulates the
    // gradient of the weighted sum into `grads` (callers scale afterwards).
    std::pair<double, double> loss_and_grads(const std::vector<int>& ids,
                                             const std::vector<int>& targets,
                                             const std::vector<S>& weights,
                                             Parameters<S>& grads) const {
        const int T = static_cast<int>(ids.size());
        if (targets.size() != ids.size() || weights.size() != ids.size())
            throw ConfigError("loss_and_grads: ids/targets/weights length mismatch");
        ForwardCache<S> cc;
        forward(ids, &cc);

        double loss = 0, wsum = 0;
        Mat<S> dlogits(T, cfg.vocab_size);
        for (int t = 0; t < T; ++t) {
            S w = weights[static_cast<size_t>(t)];
            if (w == S(0)) {
                dlogits.row(t).setZero();
                continue;
            }
            int tgt = targets[static_cast<size_t>(t)];
            if (tgt < 0 || tgt >= cfg.vocab_size)
                throw ConfigError("loss_and_grads: target id out of range");
            auto row = cc.logits.row(t);
            S mx = row.maxCoeff();
            Eigen::Array<S, 1, Eigen::Dynamic> e = (row.array() - mx).exp();
            S z = e.sum();
            loss += static_cast<double>(w) *
                    (std::log(static_cast<double>(z)) + static_cast<double>(mx) -
                     static_cast<double>(row(tgt)));
            wsum += static_cast<double>(w);
            dlogits.row(t) = (e / z).matrix() * w;
            dlogits(t, tgt) -= w;
        }

        backward(cc, dlogits, grads);
        return {loss, wsum};
    }

    // Gradient of an arbitrary scalar function with dlogits supplied by the
    // caller.  Split out of loss_and_grads so tests can probe it directly.
    void backward(const ForwardCache<S>& cc, const Mat<S>& dlogits,
                  Parameters<S>& grads) const {
        const int T = static_cast<int>(cc.ids.size());
        const int H = cfg.n_heads, dh = cfg.head_dim();
        const S scale = S(1) / std::sqrt(static_cast<S>(dh));

        grads.wu.noalias() += cc.f.transpose() * dlogits;
        Mat<S> df = dlogits * p.wu.transpose();
        Mat<S> dx;
        model_detail::rmsnorm_backward(cc.x_final, p.gf, cc.inv_f, df, dx, grads.gf);

        for (int li = cfg.n_layers - 1; li >= 0; --li) {
            const auto& L = p.layers[static_cast<size_t>(li)];
            auto& G = grads.layers[static_cast<size_t>(li)];
            const LayerCache<S>& lc = cc.layers[static_cast<size_t>(li)];

            // MLP: x = x_mid + relu(b W1) W2
            G.w2.noalias() += lc.h.transpose() * dx;
            Mat<S> dh_act = dx * L.w2.transpose();
            dh_act = ((lc.h.array() > S(0)).template cast<S>() * dh_act.array()).matrix();
            G.w1.noalias() += lc.b.transpose() * dh_act;
            Mat<S> db = dh_act * L.w1.transpose();
            Mat<S> dx_mid;
            model_detail::rmsnorm_backward(lc.x_mid, L.g2, lc.inv2, db, dx_mid, G.g2);
            dx_mid += dx;  // residual

            // attention: x_mid = x_in + att Wo
            G.wo.noalias() += lc.att.transpose() * dx_mid;
            Mat<S> datt = dx_mid * L.wo.transpose();
            Mat<S> dq(T, cfg.d_model), dk(T, cfg.d_model), dv(T, cfg.d_model);
            for (int h = 0; h < H; ++h) {
                auto qh = lc.q.middleCols(h * dh, dh);
                auto kh = lc.k.middleCols(h * dh, dh);
                auto vh = lc.v.middleCols(h * dh, dh);
                const Mat<S>& prob = lc.probs[static_cast<size_t>(h)];
                auto datt_h = datt.middleCols(h * dh, dh);
                Mat<S> dprob = datt_h * vh.transpose();
                dv.middleCols(h * dh, dh).noalias() = prob.transpose() * datt_h;
                Mat<S> dscore(T, T);
                for (int t = 0; t < T; ++t) {
                    auto pr = prob.row(t).head(t + 1).array();
                    auto dpr = dprob.row(t).head(t + 1).array();
                    S dot = (pr * dpr).sum();
                    dscore.row(t).setZero();
                    dscore.row(t).head(t + 1) = (pr * (dpr - dot)).matrix();
                }
                dq.middleCols(h * dh, dh).noalias() = dscore * kh * scale;
                dk.middleCols(h * dh, dh).noalias() = dscore.transpose() * qh * scale;
            }
            G.wq.noalias() += lc.a.transpose() * dq;
            G.wk.noalias() += lc.a.transpose() * dk;
            G.wv.noalias() += lc.a.transpose() * dv;
            Mat<S> da = dq * L.wq.transpose() + dk * L.wk.transpose() + dv * L.wv.transpose();
            Mat<S> dx_in;
            model_detail::rmsnorm_backward(lc.x_in, L.g1, lc.inv1, da, dx_in, G.g1);
            dx = dx_in + dx_mid;  // residual
        }

        for (int t = 0; t < T; ++t) {
            grads.tok_emb.row(cc.ids[static_cast<size_t>(t)]) += dx.row(t);
            grads.pos_emb.row(t) += dx.row(t);
        }
    }

    // Greedy decoding with a KV cache.  Ties pick the lowest token id.  Stops
    // after emitting eos_id, after max_new tokens, or at the context limit.
    // Returns only the newly generated ids (eos included when reached).
    std::vector<int> generate(const std::vector<int>& prompt, int max_new, int eos_id) const {
        if (prompt.empty()) throw ConfigError("generate: empty prompt");
        if (static_cast<int>(prompt.size()) > cfg.n_ctx)
            throw ConfigError("generate: prompt exceeds context");
        const int H = cfg.n_heads, dh = cfg.head_dim();
        const S scale = S(1) / std::sqrt(static_cast<S>(dh));

        struct KvLayer {
            Mat<S> k, v;
        };
        std::vector<KvLayer> kv(static_cast<size_t>(cfg.n_layers));
        for (auto& l : kv) {
            l.k.resize(cfg.n_ctx, cfg.d_model);
            l.v.resize(cfg.n_ctx, cfg.d_model);
        }

        Mat<S> inv_dummy;
        // Runs one token through the stack at `pos` and returns its logits.
        auto feed = [&](int id, int pos) -> Mat<S> {
            if (id < 0 || id >= cfg.vocab_size)
                throw ConfigError("generate: token id out of range: " + std::to_string(id));
            Mat<S> x = p.tok_emb.row(id) + p.pos_emb.row(pos);
            for (int li = 0; li < cfg.n_layers; ++li) {
                const auto& L = p.layers[static_cast<size_t>(li)];
                auto& c = kv[static_cast<size_t>(li)];
                Mat<S> a = model_detail::rmsnorm(x, L.g1, inv_dummy);
                c.k.row(pos).noalias() = a * L.wk;
                c.v.row(pos).noalias() = a * L.wv;
                Mat<S> q = a * L.wq;
                Mat<S> att(1, cfg.d_model);
                for (int h = 0; h < H; ++h) {
                    auto kh = c.k.middleCols(h * dh, dh).topRows(pos + 1);
                    auto vh = c.v.middleCols(h * dh, dh).topRows(pos + 1);
                    Eigen::Array<S, Eigen::Dynamic, 1> sc =
                        (kh * q.middleCols(h * dh, dh).transpose() * scale).array();
                    S mx = sc.maxCoeff();
                    Eigen::Array<S, Eigen::Dynamic, 1> e = (sc - mx).exp();
                    e /= e.sum();
                    att.middleCols(h * dh, dh).noalias() = e.matrix().transpose() * vh;
                }
                x += att * L.wo;
                Mat<S> b = model_detail::rmsnorm(x, L.g2, inv_dummy);
                Mat<S> hid = (b * L.w1).cwiseMax(S(0));
                x += hid * L.w2;
            }
            Mat<S> f = model_detail::rmsnorm(x, p.gf, inv_dummy);
            return f * p.wu;
        };

        Mat<S> logits;
        for (size_t i = 0; i < prompt.size(); ++i)
            logits = feed(prompt[i], static_cast<int>(i));

        std::vector<int> gen;
        int pos = static_cast<int>(prompt.size());
        while (static_cast<int>(gen.size()) < max_new) {
            int next = 0;
            for (int v = 1; v < cfg.vocab_size; ++v)
                if (logits(0, v) > logits(0, next)) next = v;
            gen.push_back(next);
            if (next == eos_id || pos >= cfg.n_ctx) break;
            logits = feed(next, pos++);
        }
        return gen;
    }
};

}  // namespace proofgym
