#pragma once

// Single-file binary checkpoints: an 8-byte magic, a JSON header describing
// config and tensor layout, then raw little-endian tensor data.  Params and
// Adam state are both stored so training resumes exactly.

#include <cstring>
#include <map>

#include "proofgym/optim.hpp"
#include "proofgym/tokenizer.hpp"

namespace proofgym {

inline constexpr char kCkptMagic[9] = "PGCKPT01";

template <typename S>
const char* scalar_tag() {
    if constexpr (sizeof(S) == 4) return "f32";
    else return "f64";
}

template <typename S>
struct CheckpointData {
    ModelConfig model_cfg;
    AdamConfig adam_cfg;
    int64_t step = 0;
    int64_t samples_seen = 0;
    int64_t adam_t = 0;
    nlohmann::json extra;
    Parameters<S> params, adam_m, adam_v;
};

namespace ckpt_detail {

template <typename S>
void append_tensors(std::string& blob, nlohmann::json& dir, const std::string& prefix,
                    const Parameters<S>& p) {
    for (const auto& [name, m] : p.entries()) {
        size_t bytes = static_cast<size_t>(m->size()) * sizeof(S);
        dir.push_back({{"name", prefix + name},
                       {"rows", m->rows()},
                       {"cols", m->cols()},
                       {"offset", blob.size()},
                       {"bytes", bytes}});
        blob.append(reinterpret_cast<const char*>(m->data()), bytes);
    }
}

template <typename S>
void read_tensors(const std::string& blob, size_t base, const nlohmann::json& dir,
                  const std::string& prefix, Parameters<S>& p, const std::string& path) {
    std::map<std::string, const nlohmann::json*> by_name;
    for (const auto& e : dir) by_name[e.at("name").get<std::string>()] = &e;
    for (auto& [name, m] : p.entries()) {
        auto it = by_name.find(prefix + name);
        if (it == by_name.end())
            throw IoError("checkpoint " + path + " is missing tensor " + prefix + name);
        const auto& e = *it->second;
        if (e.at("rows").template get<Eigen::Index>() != m->rows() ||
            e.at("cols").template get<Eigen::Index>() != m->cols())
            throw IoError("checkpoint " + path + ": tensor " + prefix + name +
                          " has wrong shape");
        size_t off = base + e.at("offset").template get<size_t>();
        size_t bytes = e.at("bytes").template get<size_t>();
        if (bytes != static_cast<size_t>(m->size()) * sizeof(S) ||
            off + bytes > blob.size())
            throw IoError("checkpoint " + path + ": tensor " + prefix + name +
                          " has wrong byte count");
        std::memcpy(m->data(), blob.data() + off, bytes);
    }
}

}  // namespace ckpt_detail

template <typename S>
void save_checkpoint(const std::string& path, const Model<S>& model, const Adam<S>& adam,
                     int64_t step, int64_t samples_seen,
                     const nlohmann::json& extra = nlohmann::json::object()) {
    std::string blob;
    nlohmann::json dir = nlohmann::json::array();
    ckpt_detail::append_tensors(blob, dir, "", model.p);
    ckpt_detail::append_tensors(blob, dir, "adam.m.", adam.m);
    ckpt_detail::append_tensors(blob, dir, "adam.v.", adam.v);

    nlohmann::json header = {{"schema_version", kSchemaVersion},
                             {"scalar", scalar_tag<S>()},
                             {"model_config", model.cfg.to_json()},
                             {"adam_config", adam.cfg.to_json()},
                             {"step", step},
                             {"samples_seen", samples_seen},
                             {"adam_t", adam.t},
                             {"vocab", Tokenizer::vocab()},
                             {"extra", extra},
                             {"tensors", std::move(dir)}};
    std::string head = header.dump();

    std::string out;
    out.reserve(8 + 8 + head.size() + blob.size());
    out.append(kCkptMagic, 8);
    uint64_t hlen = head.size();
    out.append(reinterpret_cast<const char*>(&hlen), 8);
    out += head;
    out += blob;
    write_file_atomic(path, out);
}

// Parses just the JSON header, skipping tensor data.  Cheap enough to call on
// every checkpoint in a run when assembling loss curves or listings.
inline nlohmann::json read_checkpoint_header(const std::string& path) {
    std::string raw = read_file(path);
    if (raw.size() < 16 || std::memcmp(raw.data(), kCkptMagic, 8) != 0)
        throw IoError("not a checkpoint file: " + path);
    uint64_t hlen;
    std::memcpy(&hlen, raw.data() + 8, 8);
    if (16 + hlen > raw.size()) throw IoError("truncated checkpoint header: " + path);
    return nlohmann::json::parse(raw.substr(16, hlen));
}

template <typename S>
CheckpointData<S> load_checkpoint(const std::string& path) {
    std::string raw = read_file(path);
    if (raw.size() < 16 || std::memcmp(raw.data(), kCkptMagic, 8) != 0)
        throw IoError("not a checkpoint file: " + path);
    uint64_t hlen;
    std::memcpy(&hlen, raw.data() + 8, 8);
    if (16 + hlen > raw.size()) throw IoError("truncated checkpoint header: " + path);
    nlohmann::json header = nlohmann::json::parse(raw.substr(16, hlen));

    if (header.at("scalar").get<std::string>() != scalar_tag<S>())
        throw IoError("checkpoint " + path + " holds " +
                      header.at("scalar").get<std::string>() + " tensors, expected " +
                      scalar_tag<S>());
    if (header.at("vocab").get<std::vector<std::string>>() != Tokenizer::vocab())
        throw IoError("checkpoint " + path + " was written with a different vocabulary");

    CheckpointData<S> out;
    out.model_cfg = ModelConfig::from_json(header.at("model_config"));
    out.adam_cfg = AdamConfig::from_json(header.at("adam_config"));
    out.step = header.at("step").get<int64_t>();
    out.samples_seen = header.at("samples_seen").get<int64_t>();
    out.adam_t = header.at("adam_t").get<int64_t>();
    out.extra = header.at("extra");
    out.params = Parameters<S>::shaped(out.model_cfg);
    out.adam_m = Parameters<S>::shaped(out.model_cfg);
    out.adam_v = Parameters<S>::shaped(out.model_cfg);
    size_t base = 16 + hlen;
    ckpt_detail::read_tensors(raw, base, header.at("tensors"), "", out.params, path);
    ckpt_detail::read_tensors(raw, base, header.at("tensors"), "adam.m.", out.adam_m, path);
    ckpt_detail::read_tensors(raw, base, header.at("tensors"), "adam.v.", out.adam_v, path);
    return out;
}

// Rebuilds a live model + optimizer pair from checkpoint data.
template <typename S>
void restore(const CheckpointData<S>& c, Model<S>& model, Adam<S>& adam) {
    model = Model<S>(c.model_cfg);
    model.p = c.params;
    adam = Adam<S>(c.adam_cfg, c.model_cfg);
    adam.m = c.adam_m;
    adam.v = c.adam_v;
    adam.t = c.adam_t;
}

}  // namespace proofgym
