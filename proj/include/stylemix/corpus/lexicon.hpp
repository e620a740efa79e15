#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace stylemix::corpus {

// Canonical vocabulary of the neutral grammar. Every neutral sentence is built
// only from these words.
namespace words {

inline const std::vector<std::string> determiners = {"the", "a", "this", "that", "every", "some", "each", "one"};

inline const std::vector<std::string> nouns = {
    "dog",     "cat",     "hill",    "river",   "man",      "woman",   "child",  "house",   "tree",
    "bird",    "horse",   "king",    "queen",   "road",     "town",    "field",  "ship",    "sea",
    "garden",  "door",    "window",  "letter",  "book",     "table",   "stone",  "fire",    "storm",
    "lamp",    "bell",    "boat",    "bridge",  "castle",   "cloud",   "coat",   "cup",     "farm",
    "forest",  "friend",  "gate",    "ghost",   "girl",     "boy",     "hat",    "key",     "lake",
    "moon",    "sun",     "star",    "mountain", "night",   "morning", "path",   "priest",  "rain",
    "room",    "shop",    "soldier", "song",    "spring",   "street",  "sword",  "teacher", "village",
    "wall",    "wind",    "wolf",    "mill",    "wagon",    "valley",  "sailor", "baker",   "doctor",
    "farmer",  "hunter",  "painter", "church",  "tower",    "island",  "meadow", "orchard", "candle",
    "mirror",  "basket",  "bottle",  "chair",   "clock",    "coin",    "crown",  "drum",    "flower",
    "fox",     "goat",    "lion",    "mouse",   "owl",      "sheep",   "snake",  "swan",    "ring",
    "rope",    "harbor",  "lantern", "ladder",  "cart",     "fence",   "pond",   "anchor"};

inline const std::vector<std::string> transitive_verbs = {
    "sees",    "finds",   "holds",  "takes",   "follows", "watches", "keeps",  "leaves",  "meets",
    "hears",   "paints",  "builds", "carries", "opens",   "closes",  "loves",  "fears",   "calls",
    "greets",  "guards",  "crosses", "reaches", "seeks",  "wants",   "knows",  "helps",   "brings",
    "pulls",   "pushes",  "visits", "remembers", "forgets", "praises", "chases", "buys",  "sells"};

inline const std::vector<std::string> intransitive_verbs = {
    "runs",  "sleeps", "waits",   "sings",  "falls",    "rests",  "walks",  "stays",
    "shines", "laughs", "weeps",  "wanders", "burns",   "trembles", "dances", "listens"};

inline const std::vector<std::string> adjectives = {
    "old",    "young",  "green",   "dark",   "bright", "small",  "large",   "quiet",  "loud",   "cold",
    "warm",   "red",    "white",   "black",  "grey",   "tall",   "short",   "poor",   "rich",   "brave",
    "gentle", "proud",  "wild",    "calm",   "strange", "silent", "golden", "ancient", "narrow", "wide",
    "lonely", "happy",  "tired",   "hungry", "heavy",  "soft",   "sharp",   "deep",   "empty",  "broken",
    "clever", "honest", "humble",  "kind",   "fierce", "noble",  "pale",    "rough",  "sweet",  "wicked"};

inline const std::vector<std::string> prepositions = {"in", "on", "near", "under", "over", "by", "with", "from"};

inline const std::vector<std::string> conjunctions = {"and", "but", "while"};

} // namespace words

/// Forty-word function-word list used by the style embedding and stripped by
/// the meaning score.
inline const std::vector<std::string>& function_words() {
    static const std::vector<std::string> list = {
        "the", "a",    "an",   "this", "that", "these", "those", "every", "each", "some",
        "and", "but",  "or",   "while", "of",  "in",    "on",    "at",    "to",   "with",
        "by",  "from", "near", "under", "over", "into", "is",    "was",   "he",   "she",
        "it",  "they", "we",   "you",  "i",    "his",   "her",   "not",   "no",   "one"};
    return list;
}

/// Canonical word -> candidate styled synonyms. Every synonym is unique across
/// the pool and disjoint from the canonical lexicon, so any profile drawing
/// one synonym per key is injective and invertible.
inline const std::vector<std::pair<std::string, std::vector<std::string>>>& synonym_pool() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> pool = {
        {"dog", {"hound", "cur"}},          {"cat", {"puss", "mouser"}},
        {"hill", {"knoll", "mound"}},        {"river", {"stream", "brook"}},
        {"man", {"fellow", "gent"}},         {"woman", {"lady", "dame"}},
        {"child", {"infant", "youngster"}},  {"house", {"dwelling", "cottage"}},
        {"horse", {"steed", "mare"}},        {"road", {"lane", "highway"}},
        {"ship", {"vessel", "barque"}},      {"sea", {"ocean", "brine"}},
        {"boat", {"skiff", "dinghy"}},       {"storm", {"tempest", "gale"}},
        {"forest", {"woods", "thicket"}},    {"friend", {"companion", "comrade"}},
        {"sees", {"beholds", "spies"}},      {"finds", {"discovers", "locates"}},
        {"holds", {"grips", "clutches"}},    {"takes", {"seizes", "grabs"}},
        {"watches", {"observes", "eyes"}},   {"leaves", {"abandons", "quits"}},
        {"meets", {"encounters", "joins"}},  {"runs", {"dashes", "hurries"}},
        {"walks", {"strolls", "strides"}},   {"waits", {"lingers", "tarries"}},
        {"falls", {"tumbles", "drops"}},     {"sleeps", {"slumbers", "dozes"}},
        {"old", {"aged", "elderly"}},        {"small", {"little", "tiny"}},
        {"large", {"huge", "vast"}},         {"quiet", {"hushed", "still"}},
        {"dark", {"dim", "gloomy"}},         {"bright", {"radiant", "vivid"}},
        {"cold", {"chilly", "frosty"}},      {"brave", {"bold", "valiant"}},
        {"strange", {"odd", "peculiar"}},    {"happy", {"merry", "glad"}},
        {"tired", {"weary", "spent"}},       {"kind", {"benign", "caring"}}};
    return pool;
}

/// Fixed archaic respellings toggled by StyleProfile::archaic_spelling.
inline const std::vector<std::pair<std::string, std::string>>& archaic_spellings() {
    static const std::vector<std::pair<std::string, std::string>> list = {
        {"sees", "seeth"},     {"finds", "findeth"}, {"holds", "holdeth"}, {"takes", "taketh"},
        {"runs", "runneth"},   {"knows", "knoweth"}, {"keeps", "keepeth"}, {"walks", "walketh"},
        {"sleeps", "sleepeth"}, {"waits", "waiteth"}, {"loves", "loveth"}, {"calls", "calleth"},
        {"old", "olde"},       {"shop", "shoppe"},   {"town", "towne"},    {"green", "greene"},
        {"night", "nighte"},   {"king", "kyng"},     {"queen", "queene"},  {"friend", "frende"}};
    return list;
}

/// Interjections a profile may prefix ("lo, the dog ...").
inline const std::vector<std::string>& interjection_lexicon() {
    static const std::vector<std::string> list = {"lo",   "alas",   "indeed", "well", "oh",
                                                   "hark", "behold", "verily", "ah"};
    return list;
}

/// Lookup tables derived from the lists above.
class Lexicon {
public:
    static const Lexicon& instance() {
        static const Lexicon lex;
        return lex;
    }

    bool is_canonical(std::string_view w) const { return canonical_.contains(std::string(w)); }
    bool is_function_word(std::string_view w) const { return function_.contains(std::string(w)); }
    bool is_interjection(std::string_view w) const { return interjections_.contains(std::string(w)); }
    bool is_archaic_form(std::string_view w) const { return archaic_to_canonical_.contains(std::string(w)); }

    // Maps any synonym or archaic form back to its canonical word; identity otherwise.
    std::string canonical_form(const std::string& w) const {
        if (auto it = synonym_to_canonical_.find(w); it != synonym_to_canonical_.end()) {
            return it->second;
        }
        if (auto it = archaic_to_canonical_.find(w); it != archaic_to_canonical_.end()) {
            return it->second;
        }
        return w;
    }

    const std::string* archaic_of(const std::string& canonical) const {
        auto it = canonical_to_archaic_.find(canonical);
        return it == canonical_to_archaic_.end() ? nullptr : &it->second;
    }
    const std::string* canonical_of_archaic(const std::string& archaic) const {
        auto it = archaic_to_canonical_.find(archaic);
        return it == archaic_to_canonical_.end() ? nullptr : &it->second;
    }

    // Canonical word for a pooled synonym, or nullptr.
    const std::string* canonical_of_synonym(const std::string& syn) const {
        auto it = synonym_to_canonical_.find(syn);
        return it == synonym_to_canonical_.end() ? nullptr : &it->second;
    }

    bool in_synonym_pool(const std::string& canonical, const std::string& syn) const {
        auto it = synonym_to_canonical_.find(syn);
        return it != synonym_to_canonical_.end() && it->second == canonical;
    }

    std::size_t canonical_size() const { return canonical_.size(); }

private:
    Lexicon() {
        auto add_all = [this](const std::vector<std::string>& ws) {
            for (const auto& w : ws) {
                canonical_.insert(w);
            }
        };
        add_all(words::determiners);
        add_all(words::nouns);
        add_all(words::transitive_verbs);
        add_all(words::intransitive_verbs);
        add_all(words::adjectives);
        add_all(words::prepositions);
        add_all(words::conjunctions);
        for (const auto& w : function_words()) {
            function_.insert(w);
        }
        for (const auto& w : interjection_lexicon()) {
            interjections_.insert(w);
        }
        for (const auto& [canon, syns] : synonym_pool()) {
            for (const auto& s : syns) {
                synonym_to_canonical_.emplace(s, canon);
            }
        }
        for (const auto& [canon, arch] : archaic_spellings()) {
            canonical_to_archaic_.emplace(canon, arch);
            archaic_to_canonical_.emplace(arch, canon);
        }
    }

    std::unordered_set<std::string> canonical_;
    std::unordered_set<std::string> function_;
    std::unordered_set<std::string> interjections_;
    std::unordered_map<std::string, std::string> synonym_to_canonical_;
    std::unordered_map<std::string, std::string> canonical_to_archaic_;
    std::unordered_map<std::string, std::string> archaic_to_canonical_;
};

} // namespace stylemix::corpus
