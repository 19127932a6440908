// Command-line front end.  Subcommands mirror the pipeline stages: corpus
// generation, reordering, training, evaluation and cross-run reporting, plus
// a fast wiring self-test.  Exit codes: 0 ok, 1 usage or config error,
// 2 runtime failure.

#include <cmath>
#include <iostream>

#include "CLI11.hpp"
#include "proofgym/experiment.hpp"
#include "proofgym/presets.hpp"

namespace pg = proofgym;
namespace fs = std::filesystem;

namespace {

void cmd_gen_mult(int k, int64_t n_train, int64_t n_test, uint64_t seed,
                  const std::string& out_dir) {
    pg::ExperimentConfig cfg;
    cfg.name = "gen-mult";
    cfg.task = "mult";
    cfg.k = k;
    cfg.n_train = n_train;
    cfg.n_test = n_test;
    cfg.seed = seed;
    fs::create_directories(out_dir);
    pg::build_corpus_files(cfg, fs::path(out_dir) / "train.jsonl",
                           fs::path(out_dir) / "test.jsonl");
    std::cout << "wrote " << n_train << " train + " << n_test << " test proofs (k=" << k
              << ", seed " << seed << ") to " << out_dir << "\n";
}

void cmd_gen_logic(int vars, int len_min, int len_max, int64_t n_train, int64_t n_test,
                   uint64_t seed, const std::string& out_dir) {
    pg::ExperimentConfig cfg;
    cfg.name = "gen-logic";
    cfg.task = "logic";
    cfg.var_count = vars;
    cfg.len_min = len_min;
    cfg.len_max = len_max;
    cfg.n_train = n_train;
    cfg.n_test = n_test;
    cfg.seed = seed;
    fs::create_directories(out_dir);
    pg::build_corpus_files(cfg, fs::path(out_dir) / "train.jsonl",
                           fs::path(out_dir) / "test.jsonl");
    std::cout << "wrote " << n_train << " train + " << n_test << " test theorems ("
              << vars << " vars, " << len_min << ".." << len_max << " tactics, seed "
              << seed << ") to " << out_dir << "\n";
}

void cmd_reorder(const std::string& in, const std::string& scheme_str,
                 const std::string& out) {
    pg::OrderScheme scheme = pg::scheme_from_name(scheme_str);
    std::vector<pg::Proof> proofs = pg::read_proofs_jsonl(in);
    std::vector<pg::OrderedSample> samples;
    samples.reserve(proofs.size());
    for (const pg::Proof& p : proofs) samples.push_back(pg::reorder(p, scheme));
    std::string body = pg::to_jsonl<pg::OrderedSample>(samples, pg::sample_to_json);
    pg::write_file_if_changed(out, body);
    pg::write_meta(out, {{"schema_version", pg::kSchemaVersion},
                         {"kind", "samples"},
                         {"scheme", pg::scheme_name(scheme)},
                         {"count", samples.size()},
                         {"source_hash", pg::hex64(pg::fnv1a64(pg::read_file(in)))},
                         {"content_hash", pg::hex64(pg::fnv1a64(body))}});
    std::cout << "reordered " << samples.size() << " proofs into " << scheme_str << " at "
              << out << "\n";
}

pg::ExperimentConfig resolve_config(const std::string& preset_name,
                                    const std::string& config_file,
                                    const std::vector<std::string>& overrides) {
    if (preset_name.empty() == config_file.empty())
        throw pg::ConfigError("pass exactly one of --preset and --config");
    nlohmann::json j = preset_name.empty()
                           ? nlohmann::json::parse(pg::read_file(config_file))
                           : pg::preset(preset_name).to_json();
    for (const std::string& ov : overrides) {
        size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw pg::ConfigError("override '" + ov + "' is not of the form key=value");
        pg::apply_override(j, ov.substr(0, eq), ov.substr(eq + 1));
    }
    return pg::ExperimentConfig::from_json(j);
}

void cmd_train(const pg::ExperimentConfig& cfg, const std::string& dir) {
    pg::RunPaths rp = pg::init_run_dir(cfg, dir);
    const int64_t total = cfg.total_steps();
    auto t0 = std::chrono::steady_clock::now();
    pg::run_train(cfg, rp, [&](int64_t step, double loss) {
        if (step % cfg.eval_every != 0 && step != 1 && step != total) return;
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
        std::cerr << cfg.name << ": step " << step << "/" << total << "  loss " << loss
                  << "  (" << static_cast<int64_t>(dt.count()) << "s)\n";
    });
    std::cout << "trained " << cfg.name << " to step " << total << " in " << dir << "\n";
}

void print_metrics(const nlohmann::json& metrics, std::ostream& os) {
    for (const auto& [key, val] : metrics.items())
        if (val.is_number() && key != "n" && key != "tactic_probes")
            os << "    " << key << " = " << val.get<double>() << "\n";
}

void cmd_eval(const std::string& dir, bool self_test) {
    pg::ExperimentConfig cfg = pg::load_run_config(dir);
    pg::RunPaths rp(dir);
    if (self_test) {
        nlohmann::json m = pg::run_eval_selftest(cfg, rp);
        std::cout << "harness self-test on " << cfg.name << ": all rates 1.0\n";
        print_metrics(m, std::cout);
        return;
    }
    pg::run_eval(cfg, rp, [&](int64_t step, const nlohmann::json& metrics) {
        std::cerr << cfg.name << ": evaluated step " << step << "\n";
        print_metrics(metrics, std::cerr);
    });
    std::cout << "evaluation reports in " << rp.eval_dir().string() << "\n";
}

void cmd_report(const std::vector<std::string>& dirs, const std::string& out_dir) {
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    pg::ReportFiles rf = pg::run_report(paths, out_dir);
    std::cout << rf.table;
    std::cout << "\nmerged csv: " << (fs::path(out_dir) / "report.csv").string() << "\n";
}

// Fast wiring check: oracle-backed evaluation must be perfect on both tasks,
// generated corpora must verify and tokenize, and a fresh model's loss must
// sit at ln(vocab).  Seconds, not minutes; the heavy property suites live in
// the test binary.
void cmd_selftest() {
    { // multiplication: generator, verifier, oracle harness
        pg::MultSplits sp = pg::enumerate_splits(2, 60, 30, 11);
        std::vector<pg::Proof> proofs;
        for (const pg::MultProblem& p : sp.test) proofs.push_back(pg::gen_mult_proof(p));
        for (auto scheme :
             {pg::OrderScheme::SEQ, pg::OrderScheme::PSER, pg::OrderScheme::SER}) {
            std::vector<pg::OrderedSample> ordered;
            for (const pg::Proof& p : proofs) {
                pg::OrderedSample os = pg::reorder(p, scheme);
                pg::MultVerdicts v = pg::verify_mult_proof(
                    os.text + "\n", pg::parse_mult_problem(p), scheme);
                if (!v.all_correct())
                    throw std::runtime_error("selftest: ground-truth proof failed to verify");
                pg::Tokenizer::encode(os.text);  // throws on any unknown character
                ordered.push_back(std::move(os));
            }
            pg::MultEval ev = pg::eval_mult(proofs, scheme, pg::make_corpus_oracle(ordered));
            if (ev.proof_ok != ev.n || ev.fa_po != ev.n || ev.step1_ok != ev.n)
                throw std::runtime_error(std::string("selftest: oracle not perfect on ") +
                                         pg::scheme_name(scheme));
        }
        std::cout << "selftest: mult generator, verifier and harness ok\n";
    }
    { // logic: generator, engine replay, oracle harness
        std::vector<pg::Theorem> thms = pg::gen_logic_corpus(5, 4, 2, 3, 30);
        std::vector<pg::Proof> proofs;
        for (size_t i = 0; i < thms.size(); ++i)
            proofs.push_back(pg::theorem_to_proof(thms[i], "t" + std::to_string(i)));
        for (auto scheme : {pg::OrderScheme::SEQ, pg::OrderScheme::SER}) {
            std::vector<pg::OrderedSample> ordered;
            for (const pg::Proof& p : proofs) ordered.push_back(pg::reorder(p, scheme));
            pg::LogicEval ev = pg::eval_logic(proofs, scheme, pg::make_corpus_oracle(ordered));
            if (ev.proof_gen_ok != ev.n || ev.probes_ok != ev.probes)
                throw std::runtime_error(std::string("selftest: oracle not perfect on ") +
                                         pg::scheme_name(scheme));
        }
        std::cout << "selftest: logic generator, engine and harness ok\n";
    }
    { // model: loss at init
        pg::ModelConfig mc;
        mc.n_layers = 2;
        mc.n_heads = 2;
        mc.d_model = 32;
        mc.d_ff = 64;
        mc.n_ctx = 128;
        mc.vocab_size = pg::Tokenizer::vocab_size();
        pg::Model<float> model(mc);
        model.init(123);
        pg::MultSplits sp = pg::enumerate_splits(2, 4, 1, 3);
        double wce = 0, wsum = 0;
        pg::Parameters<float> grads = pg::Parameters<float>::shaped(mc);
        for (const pg::MultProblem& p : sp.train) {
            pg::OrderedSample os = pg::reorder(pg::gen_mult_proof(p), pg::OrderScheme::SEQ);
            pg::TokenSample ts = pg::build_token_sample(os, false);
            std::vector<float> w(ts.mask.begin(), ts.mask.end());
            auto [l, c] = model.loss_and_grads(ts.inputs, ts.targets, w, grads);
            wce += l;
            wsum += c;
        }
        double loss = wce / wsum, want = std::log(mc.vocab_size);
        if (std::abs(loss - want) / want > 0.05)
            throw std::runtime_error("selftest: init loss " + std::to_string(loss) +
                                     " is far from ln(vocab) " + std::to_string(want));
        std::cout << "selftest: fresh-model loss sits at ln(vocab) ok\n";
    }
    std::cout << "selftest: all checks passed\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ordering experiments for step-by-step proof corpora"};
    app.require_subcommand(1);

    auto* gm = app.add_subcommand("gen-mult", "generate a multiplication proof corpus");
    int gm_k = 3;
    int64_t gm_train = 100000, gm_test = 1000;
    uint64_t gm_seed = 1;
    std::string gm_out = "corpus-mult";
    gm->add_option("--k", gm_k, "factor width in digits");
    gm->add_option("--n-train", gm_train, "training split size");
    gm->add_option("--n-test", gm_test, "test split size");
    gm->add_option("--seed", gm_seed, "corpus seed");
    gm->add_option("--out", gm_out, "output directory");

    auto* gl = app.add_subcommand("gen-logic", "generate a propositional proof corpus");
    int gl_vars = 4, gl_min = 3, gl_max = 5;
    int64_t gl_train = 12000, gl_test = 800;
    uint64_t gl_seed = 1;
    std::string gl_out = "corpus-logic";
    gl->add_option("--vars", gl_vars, "distinct propositional variables");
    gl->add_option("--len-min", gl_min, "minimum tactics per proof");
    gl->add_option("--len-max", gl_max, "maximum tactics per proof");
    gl->add_option("--n-train", gl_train, "training split size");
    gl->add_option("--n-test", gl_test, "test split size");
    gl->add_option("--seed", gl_seed, "corpus seed");
    gl->add_option("--out", gl_out, "output directory");

    auto* ro = app.add_subcommand("reorder", "serialize proofs under an order scheme");
    std::string ro_in, ro_scheme = "SEQ", ro_out;
    ro->add_option("--in", ro_in, "proof jsonl file")->required();
    ro->add_option("--scheme", ro_scheme, "SEQ, PSER or SER");
    ro->add_option("--out", ro_out, "sample jsonl file")->required();

    auto* tr = app.add_subcommand("train", "train a run directory to completion");
    std::string tr_dir, tr_preset, tr_config;
    std::vector<std::string> tr_set;
    tr->add_option("--dir", tr_dir, "run directory")->required();
    tr->add_option("--preset", tr_preset, "named preset configuration");
    tr->add_option("--config", tr_config, "json config file");
    tr->add_option("--set", tr_set, "config override key=value (repeatable)");

    auto* ev = app.add_subcommand("eval", "evaluate the checkpoints of a run directory");
    std::string ev_dir;
    bool ev_selftest = false;
    ev->add_option("--dir", ev_dir, "run directory")->required();
    ev->add_flag("--self-test", ev_selftest,
                 "score the ground-truth oracle instead of checkpoints");

    auto* rp = app.add_subcommand("report", "merge run summaries into plot data");
    std::vector<std::string> rp_dirs;
    std::string rp_out = "report";
    rp->add_option("--out", rp_out, "output directory");
    rp->add_option("dirs", rp_dirs, "run directories")->required();

    auto* st = app.add_subcommand("selftest", "fast end-to-end wiring check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gm) cmd_gen_mult(gm_k, gm_train, gm_test, gm_seed, gm_out);
        if (*gl) cmd_gen_logic(gl_vars, gl_min, gl_max, gl_train, gl_test, gl_seed, gl_out);
        if (*ro) cmd_reorder(ro_in, ro_scheme, ro_out);
        if (*tr) cmd_train(resolve_config(tr_preset, tr_config, tr_set), tr_dir);
        if (*ev) cmd_eval(ev_dir, ev_selftest);
        if (*rp) cmd_report(rp_dirs, rp_out);
        if (*st) cmd_selftest();
    } catch (const pg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
