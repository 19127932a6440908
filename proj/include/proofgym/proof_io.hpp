#pragma once

// JSONL persistence for proofs and ordered samples, plus the sidecar metadata
// object written next to every corpus file.

#include <nlohmann/json.hpp>

#include "proofgym/common.hpp"
#include "proofgym/proof.hpp"

namespace proofgym {

using json = nlohmann::json;

inline json proof_to_json(const Proof& p) {
    json steps = json::array();
    for (const ProofStep& s : p.steps) {
        steps.push_back({{"id", s.id},
                         {"role", role_name(s.role)},
                         {"text", s.text},
                         {"deps", s.deps}});
    }
    return {{"id", p.id},
            {"problem", p.problem},
            {"steps", std::move(steps)},
            {"final_answer_id", p.final_answer_id}};
}

inline Proof proof_from_json(const json& j) {
    Proof p;
    p.id = j.at("id").get<std::string>();
    p.problem = j.at("problem").get<std::string>();
    for (const json& js : j.at("steps")) {
        ProofStep s;
        s.id = js.at("id").get<int>();
        s.role = role_from_name(js.at("role").get<std::string>());
        s.text = js.at("text").get<std::string>();
        s.deps = js.at("deps").get<std::vector<int>>();
        p.steps.push_back(std::move(s));
    }
    p.final_answer_id = j.at("final_answer_id").get<int>();
    validate_proof(p);
    return p;
}

inline json sample_to_json(const OrderedSample& s) {
    json spans = json::array();
    for (const Span& sp : s.spans)
        spans.push_back({sp.step_id, role_name(sp.role), sp.begin, sp.end});
    return {{"id", s.id},
            {"scheme", scheme_name(s.scheme)},
            {"text", s.text},
            {"spans", std::move(spans)}};
}

inline OrderedSample sample_from_json(const json& j) {
    OrderedSample s;
    s.id = j.at("id").get<std::string>();
    s.scheme = scheme_from_name(j.at("scheme").get<std::string>());
    s.text = j.at("text").get<std::string>();
    for (const json& js : j.at("spans")) {
        if (!js.is_array() || js.size() != 4)
            throw ConfigError("span entries must be [step_id, role, begin, end]");
        Span sp;
        sp.step_id = js[0].get<int>();
        sp.role = role_from_name(js[1].get<std::string>());
        sp.begin = js[2].get<size_t>();
        sp.end = js[3].get<size_t>();
        s.spans.push_back(sp);
    }
    return s;
}

// ---- generic JSONL files ----

template <typename T, typename ToJson>
std::string to_jsonl(const std::vector<T>& items, ToJson to_json_fn) {
    std::string out;
    for (const T& it : items) {
        out += to_json_fn(it).dump();
        out += '\n';
    }
    return out;
}

template <typename T, typename FromJson>
std::vector<T> from_jsonl(const std::string& text, FromJson from_json_fn) {
    std::vector<T> out;
    size_t pos = 0;
    int lineno = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        ++lineno;
        std::string_view line(text.data() + pos, nl - pos);
        if (!line.empty()) {
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw IoError("bad JSON on line " + std::to_string(lineno));
            out.push_back(from_json_fn(j));
        }
        pos = nl + 1;
    }
    return out;
}

inline void write_proofs_jsonl(const std::string& path, const std::vector<Proof>& proofs) {
    write_file_atomic(path, to_jsonl(proofs, proof_to_json));
}
inline std::vector<Proof> read_proofs_jsonl(const std::string& path) {
    return from_jsonl<Proof>(read_file(path), proof_from_json);
}

inline void write_samples_jsonl(const std::string& path,
                                const std::vector<OrderedSample>& samples) {
    write_file_atomic(path, to_jsonl(samples, sample_to_json));
}
inline std::vector<OrderedSample> read_samples_jsonl(const std::string& path) {
    return from_jsonl<OrderedSample>(read_file(path), sample_from_json);
}

// Sidecar written as <corpus>.meta.json; callers fill in the fields that
// describe their generator.
inline void write_meta(const std::string& corpus_path, const json& meta) {
    write_file_atomic(corpus_path + ".meta.json", meta.dump(2) + "\n");
}
inline json read_meta(const std::string& corpus_path) {
    return json::parse(read_file(corpus_path + ".meta.json"));
}

}  // namespace proofgym
