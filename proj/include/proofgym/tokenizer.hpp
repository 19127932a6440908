#pragma once

// Character-level tokenizer over a fixed, closed vocabulary.  Every corpus
// this project emits stays inside this character set; anything else is a
// hard error rather than an <unk>, because an unknown character always means
// a generator or prompt bug.

#include <unordered_map>

#include "proofgym/common.hpp"

namespace proofgym {

class Tokenizer {
  public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;

    static const std::vector<std::string>& vocab() {
        static const std::vector<std::string> v = [] {
            std::vector<std::string> out = {"<pad>", "<bos>", "<eos>"};
            for (char c = '0'; c <= '9'; ++c) out.emplace_back(1, c);
            for (char c = 'a'; c <= 'z'; ++c) out.emplace_back(1, c);
            for (char c = 'A'; c <= 'Z'; ++c) out.emplace_back(1, c);
            for (const char* s : {" ", "\n", "*", "+", "=", ":", "(", ")", "|", ",",
                                  "→", "∧", "∨", "⊢"})
                out.emplace_back(s);
            return out;
        }();
        return v;
    }

    static int vocab_size() { return static_cast<int>(vocab().size()); }

    static int piece_id(const std::string& piece) {
        const auto& m = piece_map();
        auto it = m.find(piece);
        return it == m.end() ? -1 : it->second;
    }

    static const std::string& piece(int id) {
        const auto& v = vocab();
        if (id < 0 || id >= static_cast<int>(v.size()))
            throw ConfigError("token id out of range: " + std::to_string(id));
        return v[static_cast<size_t>(id)];
    }

    // Encodes text one codepoint per token.  If byte_offsets is given it
    // receives the starting byte of each token plus a final sentinel equal to
    // text.size(), so token i covers bytes [offsets[i], offsets[i+1]).
    static std::vector<int> encode(const std::string& text,
                                   std::vector<size_t>* byte_offsets = nullptr) {
        std::vector<std::string> chunks;
        std::vector<size_t> offsets;
        utf8_chunks(text, chunks, offsets);
        std::vector<int> ids;
        ids.reserve(chunks.size());
        const auto& m = piece_map();
        for (size_t i = 0; i < chunks.size(); ++i) {
            auto it = m.find(chunks[i]);
            if (it == m.end())
                throw ConfigError("tokenizer: unknown character '" + chunks[i] +
                                  "' at byte " + std::to_string(offsets[i]));
            ids.push_back(it->second);
        }
        if (byte_offsets) *byte_offsets = std::move(offsets);
        return ids;
    }

    // Special tokens decode to nothing; callers strip EOS before display.
    static std::string decode(const std::vector<int>& ids) {
        std::string out;
        for (int id : ids)
            if (id > kEos) out += piece(id);
        return out;
    }

  private:
    static const std::unordered_map<std::string, int>& piece_map() {
        static const std::unordered_map<std::string, int> m = [] {
            std::unordered_map<std::string, int> out;
            const auto& v = vocab();
            for (size_t i = 0; i < v.size(); ++i) out[v[i]] = static_cast<int>(i);
            return out;
        }();
        return m;
    }
};

}  // namespace proofgym
