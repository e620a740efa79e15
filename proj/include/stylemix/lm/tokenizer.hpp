#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stylemix/error.hpp"

namespace stylemix::lm {

namespace utf8 {

inline std::u32string decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        char32_t cp = 0;
        std::size_t len = 0;
        if (c < 0x80) {
            cp = c;
            len = 1;
        } else if ((c & 0xE0) == 0xC0) {
            cp = c & 0x1F;
            len = 2;
        } else if ((c & 0xF0) == 0xE0) {
            cp = c & 0x0F;
            len = 3;
        } else if ((c & 0xF8) == 0xF0) {
            cp = c & 0x07;
            len = 4;
        } else {
            throw VocabError("invalid UTF-8 lead byte");
        }
        if (i + len > s.size()) {
            throw VocabError("truncated UTF-8 sequence");
        }
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) {
                throw VocabError("invalid UTF-8 continuation byte");
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

} // namespace utf8

/// Character-level vocabulary.
///
/// Id 0 is the end-of-text token, which also opens plain-text sequences.
/// With task tokens, ids 1 and 2 mark the paraphrase instruction and the
/// start of the output. Characters follow.
class Tokenizer {
public:
    static constexpr int kEot = 0;

    explicit Tokenizer(std::u32string chars, bool task_tokens = true)
        : chars_(std::move(chars)), task_tokens_(task_tokens) {
        const int offset = first_char_id();
        for (std::size_t i = 0; i < chars_.size(); ++i) {
            if (!index_.emplace(chars_[i], offset + static_cast<int>(i)).second) {
                throw VocabError("Tokenizer: duplicate character");
            }
        }
    }

    /// Printable ASCII plus the guillemets and the em dash used by the style layer.
    static const Tokenizer& standard() {
        static const Tokenizer tok = [] {
            std::u32string chars;
            for (char32_t c = 32; c <= 126; ++c) {
                chars.push_back(c);
            }
            chars.push_back(U'«');
            chars.push_back(U'»');
            chars.push_back(U'—');
            return Tokenizer(std::move(chars), true);
        }();
        return tok;
    }

    int vocab_size() const noexcept { return first_char_id() + static_cast<int>(chars_.size()); }
    bool has_task_tokens() const noexcept { return task_tokens_; }

    int para() const {
        require_task_tokens();
        return 1;
    }
    int sep() const {
        require_task_tokens();
        return 2;
    }

    std::vector<int> encode(std::string_view text) const {
        std::vector<int> ids;
        for (char32_t cp : utf8::decode(text)) {
            auto it = index_.find(cp);
            if (it == index_.end()) {
                throw VocabError("character outside vocabulary: U+" + hex(cp));
            }
            ids.push_back(it->second);
        }
        return ids;
    }

    // Special tokens are dropped.
    std::string decode(std::span<const int> ids) const {
        std::string out;
        const int offset = first_char_id();
        for (int id : ids) {
            if (id < 0 || id >= vocab_size()) {
                throw VocabError("token id outside vocabulary");
            }
            if (id >= offset) {
                utf8::append(out, chars_[static_cast<std::size_t>(id - offset)]);
            }
        }
        return out;
    }

    bool is_special(int id) const noexcept { return id < first_char_id(); }

    /// [PARA] input [SEP]: the instruction/input half of the paraphrase template.
    std::vector<int> paraphrase_prompt(std::string_view input) const {
        std::vector<int> ids{para()};
        const auto body = encode(input);
        ids.insert(ids.end(), body.begin(), body.end());
        ids.push_back(sep());
        return ids;
    }

    /// output [EOT]
    std::vector<int> completion(std::string_view output) const {
        auto ids = encode(output);
        ids.push_back(kEot);
        return ids;
    }

    /// [EOT] text [EOT]
    std::vector<int> plain(std::string_view text) const {
        std::vector<int> ids{kEot};
        const auto body = encode(text);
        ids.insert(ids.end(), body.begin(), body.end());
        ids.push_back(kEot);
        return ids;
    }

private:
    int first_char_id() const noexcept { return task_tokens_ ? 3 : 1; }

    void require_task_tokens() const {
        if (!task_tokens_) {
            throw VocabError("Tokenizer has no task tokens");
        }
    }

    static std::string hex(char32_t cp) {
        static const char* digits = "0123456789ABCDEF";
        std::string s;
        for (int shift = 12; shift >= 0; shift -= 4) {
            s += digits[(cp >> shift) & 0xF];
        }
        return s;
    }

    std::u32string chars_;
    bool task_tokens_;
    std::unordered_map<char32_t, int> index_;
};

} // namespace stylemix::lm
