#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stylemix/core/rng.hpp"
#include "stylemix/corpus/lexicon.hpp"
#include "stylemix/error.hpp"

namespace stylemix::corpus {

inline constexpr std::string_view kEmDash = "\xE2\x80\x94";
inline constexpr std::string_view kLeftGuillemet = "\xC2\xAB";
inline constexpr std::string_view kRightGuillemet = "\xC2\xBB";

enum class QuoteStyle { none, straight, guillemet };

inline std::string_view to_string(QuoteStyle q) {
    switch (q) {
    case QuoteStyle::straight:
        return "straight";
    case QuoteStyle::guillemet:
        return "guillemet";
    case QuoteStyle::none:
        break;
    }
    return "none";
}

inline QuoteStyle quote_style_from_string(std::string_view s) {
    if (s == "none") {
        return QuoteStyle::none;
    }
    if (s == "straight") {
        return QuoteStyle::straight;
    }
    if (s == "guillemet") {
        return QuoteStyle::guillemet;
    }
    throw FormatError("unknown quote style: " + std::string(s));
}

/// Surface-level style of one synthetic author.
///
/// Every transform it describes is invertible given the profile, which is
/// what lets neutralize() recover the exact neutral sentence.
struct StyleProfile {
    std::string author_id;
    std::map<std::string, std::string> synonym_table; // canonical -> styled
    std::string terminal_punct = ".";                 // ".", "!" or an em dash
    double terminal_rate = 0.0;
    QuoteStyle quote_style = QuoteStyle::none;
    std::optional<std::string> interjection;
    double interjection_rate = 0.0;
    int length_bias = 0; // clause-count offset applied when generating this author's content
    bool archaic_spelling = false;

    static StyleProfile identity(std::string id) {
        StyleProfile p;
        p.author_id = std::move(id);
        return p;
    }

    void validate() const {
        const auto& lex = Lexicon::instance();
        if (author_id.empty()) {
            throw ConfigError("StyleProfile: empty author_id");
        }
        if (terminal_punct != "." && terminal_punct != "!" && terminal_punct != kEmDash) {
            throw ConfigError("StyleProfile " + author_id + ": bad terminal punctuation");
        }
        auto check_rate = [&](double r, const char* what) {
            if (!(r >= 0.0 && r <= 1.0)) {
                throw ConfigError("StyleProfile " + author_id + ": " + what + " outside [0,1]");
            }
        };
        check_rate(terminal_rate, "terminal_rate");
        check_rate(interjection_rate, "interjection_rate");
        if (interjection && !lex.is_interjection(*interjection)) {
            throw ConfigError("StyleProfile " + author_id + ": unknown interjection " + *interjection);
        }
        if (length_bias < -1 || length_bias > 1) {
            throw ConfigError("StyleProfile " + author_id + ": length_bias must be -1, 0 or 1");
        }
        std::set<std::string> seen;
        for (const auto& [canon, styled] : synonym_table) {
            if (!lex.in_synonym_pool(canon, styled)) {
                throw ConfigError("StyleProfile " + author_id + ": " + canon + "->" + styled +
                                  " is not a pooled synonym");
            }
            if (!seen.insert(styled).second) {
                throw ConfigError("StyleProfile " + author_id + ": synonym table not injective");
            }
        }
    }

    friend bool operator==(const StyleProfile&, const StyleProfile&) = default;
};

namespace detail {

struct SentenceParts {
    std::vector<std::string> words;   // bare words in order
    std::vector<bool> comma_after;    // word followed by ','
};

inline SentenceParts split_words(std::string_view body) {
    SentenceParts parts;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        const std::size_t sp = body.find(' ', pos);
        std::string_view tok = body.substr(pos, sp == std::string_view::npos ? std::string_view::npos : sp - pos);
        if (tok.empty()) {
            throw FormatError("empty word in sentence");
        }
        bool comma = false;
        if (tok.back() == ',') {
            comma = true;
            tok.remove_suffix(1);
        }
        if (tok.empty()) {
            throw FormatError("stray comma in sentence");
        }
        parts.words.emplace_back(tok);
        parts.comma_after.push_back(comma);
        if (sp == std::string_view::npos) {
            break;
        }
        pos = sp + 1;
    }
    return parts;
}

inline std::string join_words(const SentenceParts& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.words.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += parts.words[i];
        if (parts.comma_after[i]) {
            out += ',';
        }
    }
    return out;
}

inline std::pair<std::string_view, std::string_view> quote_marks(QuoteStyle q) {
    switch (q) {
    case QuoteStyle::straight:
        return {"\"", "\""};
    case QuoteStyle::guillemet:
        return {kLeftGuillemet, kRightGuillemet};
    case QuoteStyle::none:
        break;
    }
    return {"", ""};
}

inline bool contains_quote_mark(std::string_view s) {
    return s.find('"') != std::string_view::npos || s.find(kLeftGuillemet) != std::string_view::npos ||
           s.find(kRightGuillemet) != std::string_view::npos;
}

} // namespace detail

/// Applies a profile to a neutral sentence, in order: synonyms, archaic
/// spelling, interjection prefix (rate-gated), terminal punctuation
/// (rate-gated), quoting of the final word. Always consumes two draws.
inline std::string stylize(const StyleProfile& profile, std::string_view neutral, core::SeededRng& rng) {
    const auto& lex = Lexicon::instance();
    const double interjection_draw = rng.uniform();
    const double terminal_draw = rng.uniform();

    if (neutral.size() < 2 || neutral.back() != '.') {
        throw FormatError("stylize: neutral sentence must end with '.'");
    }
    auto parts = detail::split_words(neutral.substr(0, neutral.size() - 1));
    for (auto& w : parts.words) {
        if (!lex.is_canonical(w)) {
            throw FormatError("stylize: word outside canonical lexicon: " + w);
        }
        if (auto it = profile.synonym_table.find(w); it != profile.synonym_table.end()) {
            w = it->second;
        } else if (profile.archaic_spelling) {
            if (const std::string* arch = lex.archaic_of(w)) {
                w = *arch;
            }
        }
    }
    if (profile.interjection && interjection_draw < profile.interjection_rate) {
        parts.words.insert(parts.words.begin(), *profile.interjection);
        parts.comma_after.insert(parts.comma_after.begin(), true);
    }
    std::string terminal = ".";
    if (profile.terminal_punct != "." && terminal_draw < profile.terminal_rate) {
        terminal = profile.terminal_punct;
    }
    if (profile.quote_style != QuoteStyle::none) {
        const auto [open, close] = detail::quote_marks(profile.quote_style);
        std::string& last = parts.words.back();
        last = std::string(open) + last + std::string(close);
    }
    return detail::join_words(parts) + terminal;
}

/// Exact inverse of stylize() for the same profile. Throws FormatError for
/// any text stylize() could not have produced.
inline std::string neutralize(const StyleProfile& profile, std::string_view styled) {
    const auto& lex = Lexicon::instance();
    std::string_view body = styled;

    if (body.ends_with(kEmDash)) {
        if (profile.terminal_punct != kEmDash || profile.terminal_rate <= 0.0) {
            throw FormatError("neutralize: unexpected em dash terminal");
        }
        body.remove_suffix(kEmDash.size());
    } else if (body.ends_with('!')) {
        if (profile.terminal_punct != "!" || profile.terminal_rate <= 0.0) {
            throw FormatError("neutralize: unexpected '!' terminal");
        }
        body.remove_suffix(1);
    } else if (body.ends_with('.')) {
        if (profile.terminal_punct != "." && profile.terminal_rate >= 1.0) {
            throw FormatError("neutralize: '.' terminal under a rate-1 profile");
        }
        body.remove_suffix(1);
    } else {
        throw FormatError("neutralize: missing terminal punctuation");
    }
    if (body.empty()) {
        throw FormatError("neutralize: empty sentence");
    }

    auto parts = detail::split_words(body);
    std::string& last = parts.words.back();
    if (profile.quote_style == QuoteStyle::none) {
        if (detail::contains_quote_mark(body)) {
            throw FormatError("neutralize: quote marks under an unquoted profile");
        }
    } else {
        const auto [open, close] = detail::quote_marks(profile.quote_style);
        if (!last.starts_with(open) || !last.ends_with(close) || last.size() <= open.size() + close.size()) {
            throw FormatError("neutralize: final word not quoted as the profile requires");
        }
        last = last.substr(open.size(), last.size() - open.size() - close.size());
        for (std::size_t i = 0; i < parts.words.size(); ++i) {
            if (detail::contains_quote_mark(parts.words[i])) {
                throw FormatError("neutralize: stray quote mark");
            }
        }
    }

    if (!parts.words.empty() && parts.comma_after.front() && lex.is_interjection(parts.words.front())) {
        if (!profile.interjection || *profile.interjection != parts.words.front() || profile.interjection_rate <= 0.0) {
            throw FormatError("neutralize: interjection not produced by this profile");
        }
        parts.words.erase(parts.words.begin());
        parts.comma_after.erase(parts.comma_after.begin());
    } else if (profile.interjection && profile.interjection_rate >= 1.0) {
        throw FormatError("neutralize: missing rate-1 interjection");
    }
    if (parts.words.empty()) {
        throw FormatError("neutralize: no words left");
    }

    std::map<std::string, std::string> inverse;
    for (const auto& [canon, syn] : profile.synonym_table) {
        inverse.emplace(syn, canon);
    }
    for (auto& w : parts.words) {
        if (auto it = inverse.find(w); it != inverse.end()) {
            w = it->second;
            continue;
        }
        if (const std::string* canon = lex.canonical_of_archaic(w)) {
            if (!profile.archaic_spelling || profile.synonym_table.contains(*canon)) {
                throw FormatError("neutralize: unexpected archaic form " + w);
            }
            w = *canon;
            continue;
        }
        if (!lex.is_canonical(w)) {
            throw FormatError("neutralize: word outside lexicon: " + w);
        }
        if (profile.synonym_table.contains(w)) {
            throw FormatError("neutralize: '" + w + "' should carry the profile synonym");
        }
        if (profile.archaic_spelling && lex.archaic_of(w) != nullptr) {
            throw FormatError("neutralize: '" + w + "' should carry archaic spelling");
        }
    }
    return detail::join_words(parts) + ".";
}

/// Fresh random profile from the shared transform family.
inline StyleProfile draw_profile(std::string author_id, core::SeededRng& rng) {
    StyleProfile p;
    p.author_id = std::move(author_id);
    static const std::vector<std::string> terminals = {".", "!", std::string(kEmDash)};
    p.terminal_punct = terminals[rng.uniform_index(terminals.size())];
    p.terminal_rate = p.terminal_punct == "." ? 0.0 : (rng.bernoulli(0.5) ? 1.0 : rng.uniform(0.5, 1.0));
    p.quote_style = static_cast<QuoteStyle>(rng.uniform_index(3));
    if (rng.bernoulli(0.6)) {
        p.interjection = rng.pick(interjection_lexicon());
        p.interjection_rate = rng.bernoulli(0.5) ? 1.0 : rng.uniform(0.5, 1.0);
    }
    p.archaic_spelling = rng.bernoulli(0.5);
    p.length_bias = static_cast<int>(rng.uniform_index(3)) - 1;
    for (const auto& [canon, syns] : synonym_pool()) {
        if (rng.bernoulli(0.5)) {
            p.synonym_table.emplace(canon, syns[rng.uniform_index(syns.size())]);
        }
    }
    return p;
}

} // namespace stylemix::corpus
