#pragma once

// Experiment runner: one config describes corpus, layout, model, schedule and
// eval cadence; one run directory holds everything derived from it.  Every
// stage is idempotent (rerunning with an unchanged config rewrites nothing)
// and every artifact embeds the config hash it was produced under, so a run
// directory is always reconstructible from its own config.json.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "proofgym/checkpoint.hpp"
#include "proofgym/eval.hpp"
#include "proofgym/logic.hpp"
#include "proofgym/mult.hpp"
#include "proofgym/proof_io.hpp"
#include "proofgym/train.hpp"

namespace proofgym {

namespace fs = std::filesystem;

// ============================ config ============================

struct PhaseSpec {
    OrderScheme scheme = OrderScheme::SEQ;
    int64_t steps = 0;

    json to_json() const { return {{"scheme", scheme_name(scheme)}, {"steps", steps}}; }
    static PhaseSpec from_json(const json& j) {
        PhaseSpec p;
        p.scheme = scheme_from_name(j.at("scheme").get<std::string>());
        p.steps = j.at("steps").get<int64_t>();
        return p;
    }
};

struct ExperimentConfig {
    std::string name = "exp";
    std::string task = "mult";  // "mult" or "logic"
    uint64_t seed = 1;

    // corpus
    int k = 2;                  // mult factor width
    int var_count = 4;          // logic propositional variables
    int len_min = 3;            // logic tactic count range
    int len_max = 5;
    int64_t n_train = 7000;
    int64_t n_test = 1000;

    // layout and loss
    OrderScheme scheme = OrderScheme::SEQ;  // training layout, also used for eval
    bool masked = false;                    // supervise only the final answer
    std::vector<PhaseSpec> phases;          // curriculum; empty means {scheme, steps}

    // model and schedule
    ModelConfig model;
    AdamConfig adam;
    int64_t steps = 1750;
    int batch_size = 4;
    int64_t eval_every = 175;  // checkpoint cadence, in optimizer steps
    std::string lr_decay = "none";  // "none" or "cosine" (over the whole run)
    double lr_min_frac = 0.05;      // cosine floor, as a fraction of adam.lr

    // evaluation sizes (clamped to the test split)
    int64_t eval_items = 200;        // intermediate checkpoints
    int64_t eval_items_final = 1000;  // last checkpoint

    ExperimentConfig() { model.vocab_size = Tokenizer::vocab_size(); }

    // The training schedule as an explicit phase list.
    std::vector<PhaseSpec> resolved_phases() const {
        if (!phases.empty()) return phases;
        return {PhaseSpec{scheme, steps}};
    }
    int64_t total_steps() const {
        int64_t t = 0;
        for (const PhaseSpec& p : resolved_phases()) t += p.steps;
        return t;
    }

    void validate() const {
        if (name.empty()) throw ConfigError("experiment name must not be empty");
        if (task != "mult" && task != "logic")
            throw ConfigError("task must be 'mult' or 'logic', got '" + task + "'");
        if (scheme == OrderScheme::Custom)
            throw ConfigError("experiments use the named schemes only");
        if (batch_size < 1) throw ConfigError("batch_size must be positive");
        if (eval_every < 1) throw ConfigError("eval_every must be positive");
        if (n_train < 1 || n_test < 1) throw ConfigError("corpus sizes must be positive");
        if (n_train % batch_size != 0)
            throw ConfigError("n_train must be a multiple of batch_size so epochs tile "
                              "into whole batches");
        if (eval_items < 1 || eval_items_final < 1)
            throw ConfigError("eval item counts must be positive");
        if (lr_decay != "none" && lr_decay != "cosine")
            throw ConfigError("lr_decay must be 'none' or 'cosine', got '" + lr_decay + "'");
        if (lr_min_frac < 0.0 || lr_min_frac > 1.0)
            throw ConfigError("lr_min_frac must lie in [0, 1]");
        model.validate();
        for (const PhaseSpec& p : resolved_phases()) {
            if (p.steps < 1) throw ConfigError("every phase needs at least one step");
            if (p.scheme == OrderScheme::Custom)
                throw ConfigError("experiments use the named schemes only");
        }
    }

    json to_json() const {
        json j = {{"name", name},
                  {"task", task},
                  {"seed", seed},
                  {"k", k},
                  {"var_count", var_count},
                  {"len_min", len_min},
                  {"len_max", len_max},
                  {"n_train", n_train},
                  {"n_test", n_test},
                  {"scheme", scheme_name(scheme)},
                  {"masked", masked},
                  {"model", model.to_json()},
                  {"adam", adam.to_json()},
                  {"steps", steps},
                  {"batch_size", batch_size},
                  {"eval_every", eval_every},
                  {"lr_decay", lr_decay},
                  {"lr_min_frac", lr_min_frac},
                  {"eval_items", eval_items},
                  {"eval_items_final", eval_items_final}};
        json ph = json::array();
        for (const PhaseSpec& p : phases) ph.push_back(p.to_json());
        j["phases"] = std::move(ph);
        return j;
    }

    static ExperimentConfig from_json(const json& j) {
        ExperimentConfig c;
        for (const auto& [key, val] : j.items()) {
            if (key == "name") c.name = val.get<std::string>();
            else if (key == "task") c.task = val.get<std::string>();
            else if (key == "seed") c.seed = val.get<uint64_t>();
            else if (key == "k") c.k = val.get<int>();
            else if (key == "var_count") c.var_count = val.get<int>();
            else if (key == "len_min") c.len_min = val.get<int>();
            else if (key == "len_max") c.len_max = val.get<int>();
            else if (key == "n_train") c.n_train = val.get<int64_t>();
            else if (key == "n_test") c.n_test = val.get<int64_t>();
            else if (key == "scheme") c.scheme = scheme_from_name(val.get<std::string>());
            else if (key == "masked") c.masked = val.get<bool>();
            else if (key == "phases") {
                c.phases.clear();
                for (const auto& p : val) c.phases.push_back(PhaseSpec::from_json(p));
            } else if (key == "model") c.model = ModelConfig::from_json(val);
            else if (key == "adam") c.adam = AdamConfig::from_json(val);
            else if (key == "steps") c.steps = val.get<int64_t>();
            else if (key == "batch_size") c.batch_size = val.get<int>();
            else if (key == "eval_every") c.eval_every = val.get<int64_t>();
            else if (key == "lr_decay") c.lr_decay = val.get<std::string>();
            else if (key == "lr_min_frac") c.lr_min_frac = val.get<double>();
            else if (key == "eval_items") c.eval_items = val.get<int64_t>();
            else if (key == "eval_items_final") c.eval_items_final = val.get<int64_t>();
            else throw ConfigError("unknown experiment config key '" + key + "'");
        }
        if (c.model.vocab_size != Tokenizer::vocab_size())
            throw ConfigError("model.vocab_size must match the tokenizer (" +
                              std::to_string(Tokenizer::vocab_size()) + ")");
        c.validate();
        return c;
    }

    // nlohmann serializes object keys sorted, so dump() is canonical.
    std::string config_hash() const { return hex64(fnv1a64(to_json().dump())); }
};

// Dotted-path override, e.g. apply_override(j, "model.d_model", "64").  Values
// parse as JSON when they can (numbers, bools, arrays) and fall back to bare
// strings, so --set scheme=pser works without inner quotes.
inline void apply_override(json& j, const std::string& path, const std::string& value) {
    json* node = &j;
    size_t start = 0;
    for (size_t dot = path.find('.'); dot != std::string::npos;
         start = dot + 1, dot = path.find('.', start)) {
        node = &(*node)[path.substr(start, dot - start)];
    }
    std::string leaf = path.substr(start);
    if (leaf.empty()) throw ConfigError("bad override path '" + path + "'");
    json parsed = json::parse(value, nullptr, false);
    (*node)[leaf] = parsed.is_discarded() ? json(value) : parsed;
}

// ============================ run layout ============================

struct RunPaths {
    fs::path dir;

    explicit RunPaths(fs::path d) : dir(std::move(d)) {}
    fs::path config() const { return dir / "config.json"; }
    fs::path corpus_dir() const { return dir / "corpus"; }
    fs::path train_proofs() const { return corpus_dir() / "train.jsonl"; }
    fs::path test_proofs() const { return corpus_dir() / "test.jsonl"; }
    fs::path ckpt_dir() const { return dir / "ckpt"; }
    fs::path eval_dir() const { return dir / "eval"; }
    fs::path loss_csv() const { return dir / "loss.csv"; }
    fs::path summary_csv() const { return dir / "summary.csv"; }

    static std::string step_tag(int64_t step) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%07lld", static_cast<long long>(step));
        return buf;
    }
    fs::path ckpt(int64_t step) const { return ckpt_dir() / ("step-" + step_tag(step) + ".ckpt"); }
    fs::path eval_json(int64_t step) const {
        return eval_dir() / ("step-" + step_tag(step) + ".json");
    }
};

// Creates the directory skeleton and snapshots the resolved config.  A second
// call with a different config on the same directory is refused: one run
// directory belongs to one config, forever.
inline RunPaths init_run_dir(const ExperimentConfig& cfg, const fs::path& dir) {
    cfg.validate();
    RunPaths rp(dir);
    fs::create_directories(rp.corpus_dir());
    fs::create_directories(rp.ckpt_dir());
    fs::create_directories(rp.eval_dir());

    json snap = {{"schema_version", kSchemaVersion},
                 {"engine_version", kEngineVersion},
                 {"prng", kPrngId},
                 {"config_hash", cfg.config_hash()},
                 {"config", cfg.to_json()}};
    if (fs::exists(rp.config())) {
        json old = json::parse(read_file(rp.config()));
        std::string old_hash = old.value("config_hash", std::string());
        if (old_hash != cfg.config_hash())
            throw ConfigError("run directory " + dir.string() +
                              " was created with a different config (hash " + old_hash +
                              ", this config is " + cfg.config_hash() + ")");
    }
    write_file_if_changed(rp.config(), snap.dump(2) + "\n");
    return rp;
}

inline ExperimentConfig load_run_config(const fs::path& dir) {
    RunPaths rp(dir);
    if (!fs::exists(rp.config()))
        throw ConfigError("no config.json in run directory " + dir.string());
    json snap = json::parse(read_file(rp.config()));
    return ExperimentConfig::from_json(snap.at("config"));
}

// ============================ corpus ============================

namespace exp_detail {

inline json corpus_meta(const ExperimentConfig& cfg, const char* split, int64_t count,
                        const std::string& content) {
    json m = {{"schema_version", kSchemaVersion},
              {"prng", kPrngId},
              {"config_hash", cfg.config_hash()},
              {"task", cfg.task},
              {"split", split},
              {"count", count},
              {"seed", cfg.seed},
              {"content_hash", hex64(fnv1a64(content))}};
    if (cfg.task == "mult") {
        m["k"] = cfg.k;
    } else {
        m["var_count"] = cfg.var_count;
        m["len_min"] = cfg.len_min;
        m["len_max"] = cfg.len_max;
        m["engine_version"] = kEngineVersion;
    }
    return m;
}

// A split is fresh when its meta matches the expected meta except for the
// content hash, and the hash matches the bytes actually on disk.
inline bool corpus_fresh(const fs::path& path, json expected) {
    if (!fs::exists(path) || !fs::exists(path.string() + ".meta.json")) return false;
    json have = read_meta(path.string());
    std::string actual = hex64(fnv1a64(read_file(path)));
    if (have.value("content_hash", std::string()) != actual) return false;
    have.erase("content_hash");
    expected.erase("content_hash");
    return have == expected;
}

inline std::string proofs_to_jsonl(const std::vector<Proof>& proofs) {
    return to_jsonl<Proof>(proofs, proof_to_json);
}

}  // namespace exp_detail

// Generates both splits unless they are already on disk with matching
// metadata and content hash.  Regeneration is deterministic, so a damaged or
// stale file is simply rewritten (write_file_if_changed keeps byte-stable
// reruns free of churn).
inline void build_corpus_files(const ExperimentConfig& cfg, const fs::path& train_path,
                               const fs::path& test_path) {
    json want_train = exp_detail::corpus_meta(cfg, "train", cfg.n_train, "");
    json want_test = exp_detail::corpus_meta(cfg, "test", cfg.n_test, "");
    if (exp_detail::corpus_fresh(train_path, want_train) &&
        exp_detail::corpus_fresh(test_path, want_test))
        return;

    std::vector<Proof> train, test;
    if (cfg.task == "mult") {
        MultSplits sp = enumerate_splits(cfg.k, cfg.n_train, cfg.n_test, cfg.seed);
        train.reserve(sp.train.size());
        test.reserve(sp.test.size());
        for (const MultProblem& p : sp.train) train.push_back(gen_mult_proof(p));
        for (const MultProblem& p : sp.test) test.push_back(gen_mult_proof(p));
    } else {
        std::vector<Theorem> all = gen_logic_corpus(cfg.seed, cfg.var_count, cfg.len_min,
                                                    cfg.len_max, cfg.n_train + cfg.n_test);
        for (int64_t i = 0; i < cfg.n_train; ++i)
            train.push_back(theorem_to_proof(all[static_cast<size_t>(i)],
                                             "logic-train-" + std::to_string(i)));
        for (int64_t i = 0; i < cfg.n_test; ++i)
            test.push_back(theorem_to_proof(all[static_cast<size_t>(cfg.n_train + i)],
                                            "logic-test-" + std::to_string(i)));
    }

    std::string train_body = exp_detail::proofs_to_jsonl(train);
    std::string test_body = exp_detail::proofs_to_jsonl(test);
    write_file_if_changed(train_path, train_body);
    write_file_if_changed(test_path, test_body);
    write_meta(train_path.string(),
               exp_detail::corpus_meta(cfg, "train", cfg.n_train, train_body));
    write_meta(test_path.string(),
               exp_detail::corpus_meta(cfg, "test", cfg.n_test, test_body));
}

inline void build_corpus(const ExperimentConfig& cfg, const RunPaths& rp) {
    build_corpus_files(cfg, rp.train_proofs(), rp.test_proofs());
}

// ============================ training ============================

inline std::vector<std::pair<int64_t, fs::path>> list_checkpoints(const RunPaths& rp) {
    std::vector<std::pair<int64_t, fs::path>> out;
    if (!fs::exists(rp.ckpt_dir())) return out;
    for (const auto& e : fs::directory_iterator(rp.ckpt_dir())) {
        std::string fn = e.path().filename().string();
        if (fn.rfind("step-", 0) != 0 || fn.size() < 11 ||
            fn.substr(fn.size() - 5) != ".ckpt")
            continue;
        out.emplace_back(std::stoll(fn.substr(5, fn.size() - 10)), e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace exp_detail {

template <typename S>
std::vector<TokenSample> tokenize_phase(const ExperimentConfig& cfg,
                                        const std::vector<Proof>& proofs,
                                        OrderScheme scheme, int64_t want,
                                        const ModelConfig& mc) {
    std::vector<TokenSample> out;
    out.reserve(static_cast<size_t>(want));
    for (int64_t i = 0; i < want; ++i) {
        OrderedSample os = reorder(proofs[static_cast<size_t>(i)], scheme);
        TokenSample ts = build_token_sample(os, cfg.masked);
        if (static_cast<int>(ts.inputs.size()) > mc.n_ctx)
            throw ConfigError("sample " + os.id + " needs " +
                              std::to_string(ts.inputs.size()) + " positions but n_ctx is " +
                              std::to_string(mc.n_ctx));
        out.push_back(std::move(ts));
    }
    return out;
}

inline std::string loss_csv_text(const ExperimentConfig& cfg, const RunPaths& rp) {
    std::vector<std::array<double, 3>> rows;  // step, phase, loss
    for (const auto& [step, path] : list_checkpoints(rp)) {
        json h = read_checkpoint_header(path.string());
        const json& extra = h.at("extra");
        for (const auto& r : extra.value("loss_rows", json::array()))
            rows.push_back({r.at(0).get<double>(), r.at(1).get<double>(),
                            r.at(2).get<double>()});
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a[0] < b[0]; });
    std::string out = "# config_hash=" + cfg.config_hash() +
                      " seed=" + std::to_string(cfg.seed) + "\n";
    out += "step,phase,scheme,loss\n";
    auto ph = cfg.resolved_phases();
    char buf[96];
    for (const auto& r : rows) {
        int pi = static_cast<int>(r[1]);
        std::snprintf(buf, sizeof buf, "%lld,%d,%s,%.6f\n",
                      static_cast<long long>(r[0]), pi,
                      scheme_name(ph[static_cast<size_t>(pi)].scheme), r[2]);
        out += buf;
    }
    return out;
}

// Learning rate for step i (1-based) of a phase of the given length.  The
// schedule restarts at phase boundaries, so a continuation phase sees the
// same rate trajectory a scratch run of that length would; phase comparisons
// then differ only in starting weights and data layout.
inline double lr_at(const ExperimentConfig& cfg, int64_t i, int64_t phase_len) {
    if (cfg.lr_decay == "none") return cfg.adam.lr;
    const double pi = 3.14159265358979323846;
    double span = static_cast<double>(std::max<int64_t>(phase_len - 1, 1));
    double c = 0.5 * (1.0 + std::cos(pi * static_cast<double>(i - 1) / span));
    return cfg.adam.lr * (cfg.lr_min_frac + (1.0 - cfg.lr_min_frac) * c);
}

}  // namespace exp_detail

// Runs the full schedule, resuming from the newest checkpoint when one
// exists.  A phase longer than one pass over the corpus wraps into further
// epochs, each visiting every sample once in a fresh seed-derived order, so
// any step count is reachable from a capped corpus.  Checkpoints land at the
// eval cadence, at phase ends and at the final step, each carrying the
// per-step losses since the previous one; loss.csv can always be rebuilt from
// the checkpoints alone.  Curriculum phases share the model and optimizer
// state across the boundary; only the layout and the (restarted) learning
// rate schedule change.
template <typename S = float>
void run_train(const ExperimentConfig& cfg, const RunPaths& rp,
               const std::function<void(int64_t, double)>& progress = {}) {
    cfg.validate();
    build_corpus(cfg, rp);
    const int64_t total = cfg.total_steps();

    auto ckpts = list_checkpoints(rp);
    if (ckpts.empty() || ckpts.back().first < total) {
        std::vector<Proof> train = read_proofs_jsonl(rp.train_proofs().string());
        const int64_t spe = cfg.n_train / cfg.batch_size;  // steps per epoch

        Model<S> model(cfg.model);
        Adam<S> adam(cfg.adam, cfg.model);
        int64_t done = 0;  // global steps already covered
        if (!ckpts.empty()) {
            CheckpointData<S> c = load_checkpoint<S>(ckpts.back().second.string());
            if (c.extra.value("config_hash", std::string()) != cfg.config_hash())
                throw ConfigError("checkpoint " + ckpts.back().second.string() +
                                  " belongs to a different config");
            restore(c, model, adam);
            done = c.step;
        } else {
            model.init(derive_seed(cfg.seed, fnv1a64("model-init")));
        }

        auto phases = cfg.resolved_phases();
        int64_t base = 0;
        for (size_t pi = 0; pi < phases.size(); ++pi) {
            const PhaseSpec& ph = phases[pi];
            const int64_t phase_end = base + ph.steps;
            if (done >= phase_end) {
                base = phase_end;
                continue;
            }
            std::vector<TokenSample> corpus = exp_detail::tokenize_phase<S>(
                cfg, train, ph.scheme, cfg.n_train, cfg.model);

            std::vector<json> pending;
            auto save = [&](int64_t g) {
                json extra = {{"config_hash", cfg.config_hash()},
                              {"seed", cfg.seed},
                              {"phase", pi},
                              {"phase_scheme", scheme_name(ph.scheme)},
                              {"loss_rows", json(pending)}};
                save_checkpoint(rp.ckpt(g).string(), model, adam, g, g * cfg.batch_size,
                                extra);
                pending.clear();
            };

            while (done < phase_end) {
                const int64_t epoch = (done - base) / spe;
                const int64_t epoch_base = base + epoch * spe;
                const int64_t epoch_steps = std::min(spe, phase_end - epoch_base);

                // Epoch 0 keeps the corpus order (already shuffled at split
                // time); later epochs revisit it in a fresh derived order
                // shared by every run with the same seed.
                std::vector<TokenSample> samples;
                samples.reserve(static_cast<size_t>(epoch_steps * cfg.batch_size));
                std::vector<size_t> idx(corpus.size());
                for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
                if (epoch > 0) {
                    Rng perm(derive_seed(cfg.seed,
                                         fnv1a64("epoch-" + std::to_string(epoch))));
                    perm.shuffle(idx);
                }
                for (int64_t i = 0; i < epoch_steps * cfg.batch_size; ++i)
                    samples.push_back(corpus[idx[static_cast<size_t>(i)]]);

                TrainConfig tc;
                tc.batch_size = cfg.batch_size;
                tc.checkpoint_every = 0;  // cadence handled on global steps below
                tc.lr_for = [&cfg, epoch_base, base, len = ph.steps](int64_t local) {
                    return exp_detail::lr_at(cfg, epoch_base - base + local, len);
                };
                auto on_step = [&](int64_t local_step, double loss) {
                    int64_t g = epoch_base + local_step;
                    pending.push_back(json::array({g, pi, loss}));
                    if (progress) progress(g, loss);
                    if (g % cfg.eval_every == 0 || g == phase_end || g == total) save(g);
                };
                train_epoch(model, adam, samples, tc, {}, (done - epoch_base) * cfg.batch_size,
                            on_step);
                done = epoch_base + epoch_steps;
            }
            base = phase_end;
        }
    }

    write_file_if_changed(rp.loss_csv(), exp_detail::loss_csv_text(cfg, rp));
}

// ============================ evaluation ============================

namespace exp_detail {

inline std::vector<Proof> eval_subset(const RunPaths& rp, int64_t want) {
    std::vector<Proof> test = read_proofs_jsonl(rp.test_proofs().string());
    if (static_cast<int64_t>(test.size()) > want) test.resize(static_cast<size_t>(want));
    return test;
}

inline json run_metrics(const ExperimentConfig& cfg, const std::vector<Proof>& subset,
                        const GenFn& gen) {
    if (cfg.task == "mult") return eval_mult(subset, cfg.scheme, gen).to_json();
    return eval_logic(subset, cfg.scheme, gen).to_json();
}

}  // namespace exp_detail

// Long-format per-run summary: one row per (checkpoint, metric).
inline std::string summary_csv_text(const ExperimentConfig& cfg, const RunPaths& rp) {
    std::string out = "# config_hash=" + cfg.config_hash() +
                      " seed=" + std::to_string(cfg.seed) + "\n";
    out += "step,samples_seen,metric,rate\n";
    for (const auto& [step, path] : list_checkpoints(rp)) {
        fs::path ej = rp.eval_json(step);
        if (!fs::exists(ej)) continue;
        json r = json::parse(read_file(ej));
        char buf[128];
        for (const auto& [key, val] : r.at("metrics").items()) {
            if (!val.is_number() || key == "n" || key == "tactic_probes") continue;
            std::snprintf(buf, sizeof buf, "%lld,%lld,%s,%.6f\n",
                          static_cast<long long>(step),
                          static_cast<long long>(r.at("samples_seen").get<int64_t>()),
                          key.c_str(), val.get<double>());
            out += buf;
        }
    }
    return out;
}

// Evaluates every checkpoint that does not already have a report.  The final
// checkpoint gets the larger item budget; intermediates use the smaller one
// so ten-checkpoint learning curves stay cheap.
template <typename S = float>
void run_eval(const ExperimentConfig& cfg, const RunPaths& rp,
              const std::function<void(int64_t, const json&)>& progress = {}) {
    cfg.validate();
    const int64_t total = cfg.total_steps();
    auto ckpts = list_checkpoints(rp);
    if (ckpts.empty()) throw ConfigError("no checkpoints to evaluate in " + rp.dir.string());

    for (const auto& [step, path] : ckpts) {
        fs::path out = rp.eval_json(step);
        if (fs::exists(out)) continue;

        CheckpointData<S> c = load_checkpoint<S>(path.string());
        if (c.extra.value("config_hash", std::string()) != cfg.config_hash())
            throw ConfigError("checkpoint " + path.string() +
                              " belongs to a different config");
        Model<S> model(c.model_cfg);
        model.p = c.params;

        int64_t want = (step == total) ? cfg.eval_items_final : cfg.eval_items;
        std::vector<Proof> subset = exp_detail::eval_subset(rp, want);
        json metrics = exp_detail::run_metrics(cfg, subset, make_model_gen(model));

        json report = {{"schema_version", kSchemaVersion},
                       {"config_hash", cfg.config_hash()},
                       {"seed", cfg.seed},
                       {"task", cfg.task},
                       {"scheme", scheme_name(cfg.scheme)},
                       {"step", step},
                       {"samples_seen", c.samples_seen},
                       {"phase", c.extra.value("phase", 0)},
                       {"metrics", metrics}};
        write_file_if_changed(out, report.dump(2) + "\n");
        if (progress) progress(step, metrics);
    }

    write_file_if_changed(rp.summary_csv(), summary_csv_text(cfg, rp));
}

// Harness self-test at the run level: the ground-truth oracle plays the role
// of the model on the test split.  Every defined metric must come back 1.0.
inline json run_eval_selftest(const ExperimentConfig& cfg, const RunPaths& rp) {
    cfg.validate();
    std::vector<Proof> subset = exp_detail::eval_subset(rp, cfg.eval_items_final);
    std::vector<OrderedSample> ordered;
    ordered.reserve(subset.size());
    for (const Proof& p : subset) ordered.push_back(reorder(p, cfg.scheme));
    json metrics = exp_detail::run_metrics(cfg, subset, make_corpus_oracle(ordered));
    for (const auto& [key, val] : metrics.items())
        if (val.is_number() && key != "n" && key != "tactic_probes" &&
            val.get<double>() != 1.0)
            throw std::runtime_error("harness self-test failed: " + key + " = " +
                                     val.dump() + " on " + cfg.name);
    return metrics;
}

// ============================ reporting ============================

struct RunSummary {
    std::string name;
    std::string task;
    std::string scheme;
    std::string config_hash;
    // step -> metric -> rate, nulls dropped
    std::map<int64_t, std::map<std::string, double>> points;

    int64_t final_step() const { return points.empty() ? 0 : points.rbegin()->first; }
};

inline RunSummary load_run_summary(const fs::path& dir) {
    ExperimentConfig cfg = load_run_config(dir);
    RunPaths rp(dir);
    RunSummary rs;
    rs.name = cfg.name;
    rs.task = cfg.task;
    rs.scheme = scheme_name(cfg.scheme);
    rs.config_hash = cfg.config_hash();
    for (const auto& [step, path] : list_checkpoints(rp)) {
        fs::path ej = rp.eval_json(step);
        if (!fs::exists(ej)) continue;
        json r = json::parse(read_file(ej));
        for (const auto& [key, val] : r.at("metrics").items())
            if (val.is_number() && key != "n" && key != "tactic_probes")
                rs.points[step][key] = val.get<double>();
    }
    return rs;
}

// Merges runs into one long-format table (run, task, scheme, step, metric,
// rate) for external plotting, plus a final-checkpoint text table with
// pairwise deltas between runs of the same task.  Metrics missing from one
// side of a pair are reported as warnings rather than dropped silently.
struct ReportFiles {
    std::string csv;
    std::string table;
};

inline ReportFiles make_report(const std::vector<RunSummary>& runs) {
    ReportFiles out;
    out.csv = "run,task,scheme,step,metric,rate\n";
    char buf[192];
    for (const RunSummary& r : runs)
        for (const auto& [step, metrics] : r.points)
            for (const auto& [key, rate] : metrics) {
                std::snprintf(buf, sizeof buf, "%s,%s,%s,%lld,%s,%.6f\n", r.name.c_str(),
                              r.task.c_str(), r.scheme.c_str(),
                              static_cast<long long>(step), key.c_str(), rate);
                out.csv += buf;
            }

    std::string& t = out.table;
    t += "final-checkpoint rates\n";
    for (const RunSummary& r : runs) {
        if (r.points.empty()) {
            t += "  " + r.name + ": no evaluated checkpoints\n";
            continue;
        }
        const auto& fin = r.points.rbegin()->second;
        t += "  " + r.name + " (" + r.task + "/" + r.scheme + ", step " +
             std::to_string(r.final_step()) + ")\n";
        for (const auto& [key, rate] : fin) {
            std::snprintf(buf, sizeof buf, "    %-32s %.4f\n", key.c_str(), rate);
            t += buf;
        }
    }
    t += "\npairwise final deltas\n";
    for (size_t i = 0; i < runs.size(); ++i)
        for (size_t j = i + 1; j < runs.size(); ++j) {
            const RunSummary &a = runs[i], &b = runs[j];
            if (a.task != b.task || a.points.empty() || b.points.empty()) continue;
            const auto& fa = a.points.rbegin()->second;
            const auto& fb = b.points.rbegin()->second;
            t += "  " + a.name + " - " + b.name + "\n";
            for (const auto& [key, rate] : fa) {
                auto it = fb.find(key);
                if (it == fb.end()) {
                    t += "    warning: " + key + " missing in " + b.name + "\n";
                    continue;
                }
                std::snprintf(buf, sizeof buf, "    %-32s %+.4f\n", key.c_str(),
                              rate - it->second);
                t += buf;
            }
            for (const auto& [key, rate] : fb)
                if (!fa.count(key))
                    t += "    warning: " + key + " missing in " + a.name + "\n";
        }
    return out;
}

inline ReportFiles run_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
    std::vector<RunSummary> runs;
    runs.reserve(run_dirs.size());
    for (const fs::path& d : run_dirs) runs.push_back(load_run_summary(d));
    ReportFiles rf = make_report(runs);
    fs::create_directories(out_dir);
    write_file_if_changed(out_dir / "report.csv", rf.csv);
    write_file_if_changed(out_dir / "report.txt", rf.table);
    return rf;
}

// ============================ one-call pipeline ============================

template <typename S = float>
void run_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
    RunPaths rp = init_run_dir(cfg, dir);
    build_corpus(cfg, rp);
    run_train<S>(cfg, rp);
    run_eval<S>(cfg, rp);
}

}  // namespace proofgym
