#pragma once

#include <string>

#include "stylemix/core/rng.hpp"
#include "stylemix/corpus/lexicon.hpp"

namespace stylemix::corpus {

// Neutral sentences never exceed this many bytes, which keeps a full
// (prompt, rewrite) pair inside the model context.
inline constexpr std::size_t kMaxNeutralChars = 48;

namespace detail {

inline std::string noun_phrase(core::SeededRng& rng) {
    // Articles are not agreed with the following word ("a old hill" is fine).
    std::string np = rng.pick(words::determiners);
    np += ' ';
    if (rng.bernoulli(0.3)) {
        np += rng.pick(words::adjectives);
        np += ' ';
    }
    np += rng.pick(words::nouns);
    return np;
}

inline std::string clause(core::SeededRng& rng) {
    std::string c = noun_phrase(rng);
    const double shape = rng.uniform();
    if (shape < 0.6) {
        c += ' ' + rng.pick(words::transitive_verbs) + ' ' + noun_phrase(rng);
    } else if (shape < 0.85) {
        c += ' ' + rng.pick(words::intransitive_verbs);
    } else {
        c += ' ' + rng.pick(words::intransitive_verbs) + ' ' + rng.pick(words::prepositions) + ' ' +
             noun_phrase(rng);
    }
    return c;
}

} // namespace detail

/// One sentence of the neutral grammar: lowercase canonical words, clauses
/// joined by ", and" / ", but" / ", while", terminated by '.'.
///
/// length_bias shifts the clause count: -1 always one clause, +1 always two,
/// 0 two clauses with probability 0.3.
inline std::string gen_neutral_sentence(core::SeededRng& rng, int length_bias = 0) {
    for (;;) {
        const bool two = length_bias > 0 || (length_bias == 0 && rng.bernoulli(0.3));
        std::string s = detail::clause(rng);
        if (two) {
            s += ", " + rng.pick(words::conjunctions) + ' ' + detail::clause(rng);
        }
        s += '.';
        if (s.size() <= kMaxNeutralChars) {
            return s;
        }
    }
}

} // namespace stylemix::corpus
