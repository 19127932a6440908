#pragma once

// Adam with bias correction, state laid out in parallel with the model
// parameters so checkpoints can persist it tensor by tensor.

#include "proofgym/model.hpp"

namespace proofgym {

struct AdamConfig {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    nlohmann::json to_json() const {
        return {{"lr", lr}, {"beta1", beta1}, {"beta2", beta2}, {"eps", eps}};
    }
    static AdamConfig from_json(const nlohmann::json& j) {
        AdamConfig c;
        c.lr = j.at("lr").get<double>();
        c.beta1 = j.at("beta1").get<double>();
        c.beta2 = j.at("beta2").get<double>();
        c.eps = j.at("eps").get<double>();
        return c;
    }
};

template <typename S>
class Adam {
  public:
    AdamConfig cfg;
    Parameters<S> m, v;
    int64_t t = 0;

    Adam() = default;
    Adam(const AdamConfig& c, const ModelConfig& mc)
        : cfg(c), m(Parameters<S>::shaped(mc)), v(Parameters<S>::shaped(mc)) {}

    void step(Parameters<S>& params, const Parameters<S>& grads) {
        ++t;
        const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
        const S corr1 = static_cast<S>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
        const S corr2 = static_cast<S>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
        const S lr = static_cast<S>(cfg.lr), eps = static_cast<S>(cfg.eps);

        auto pe = params.entries();
        auto ge = grads.entries();
        auto me = m.entries();
        auto ve = v.entries();
        for (size_t i = 0; i < pe.size(); ++i) {
            auto& pm = *pe[i].second;
            const auto& gm = *ge[i].second;
            auto& mm = *me[i].second;
            auto& vm = *ve[i].second;
            mm = b1 * mm + (S(1) - b1) * gm;
            vm = (b2 * vm.array() + (S(1) - b2) * gm.array().square()).matrix();
            pm.array() -=
                lr * (mm.array() / corr1) / ((vm.array() / corr2).sqrt() + eps);
        }
    }
};

}  // namespace proofgym
