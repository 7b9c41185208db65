#include "hype/synthetic.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "hype/errors.hpp"
#include "hype/rng.hpp"

namespace hype {

namespace {

constexpr std::size_t kTopics = 8;
constexpr std::size_t kNounsPerTopic = 5;
constexpr std::size_t kVerbsPerTopic = 4;
constexpr std::size_t kAdjsPerTopic = 3;
constexpr std::size_t kSynonyms = 2;
constexpr double kOnTopic = 0.85;
constexpr std::uint64_t kLexiconSeed = 0x4c6578696b6f6eULL;

const std::vector<std::string> kDetSingular = {"one", "this", "each", "that"};
const std::vector<std::string> kDetPlural = {"two", "these", "many", "several"};
const std::string kDetAny = "the";
const std::vector<std::string> kPreps = {"near", "under", "beside", "behind"};
const std::vector<std::string> kAdverbs = {"today", "often", "again"};

struct Lexicon {
    // [topic][concept][synonym] stems
    std::vector<std::vector<std::array<std::string, kSynonyms>>> nouns, verbs;
    std::vector<std::vector<std::string>> adjs;
};

const Lexicon& lexicon() {
    static const Lexicon lex = [] {
        const std::string consonants = "bdfgklmnprtvz";
        const std::string vowels = "aeiou";
        RngStream rng({kLexiconSeed, 0, 0, Purpose::synthetic});
        std::set<std::string> used = {"the", "one", "this", "each", "that", "two", "these", "many", "several",
                                      "near", "under", "beside", "behind", "today", "often", "again"};
        // Stems never end in 's', so stem+"s" cannot collide with another stem.
        auto fresh = [&](std::size_t syllables) {
            while (true) {
                std::string w;
                for (std::size_t i = 0; i < syllables; ++i) {
                    w += consonants[rng() % consonants.size()];
                    w += vowels[rng() % vowels.size()];
                }
                if (rng() % 2) w += consonants[rng() % consonants.size()];
                if (w.back() == 's') continue;
                if (used.count(w) || used.count(w + "s")) continue;
                used.insert(w);
                used.insert(w + "s");
                return w;
            }
        };
        Lexicon l;
        l.nouns.resize(kTopics);
        l.verbs.resize(kTopics);
        l.adjs.resize(kTopics);
        for (std::size_t t = 0; t < kTopics; ++t) {
            for (std::size_t c = 0; c < kNounsPerTopic; ++c) l.nouns[t].push_back({fresh(2), fresh(2)});
            for (std::size_t c = 0; c < kVerbsPerTopic; ++c) l.verbs[t].push_back({fresh(2), fresh(2)});
            for (std::size_t c = 0; c < kAdjsPerTopic; ++c) l.adjs[t].push_back(fresh(3));
        }
        return l;
    }();
    return lex;
}

struct ConceptRef {
    std::size_t topic = 0;
    std::size_t index = 0;
    bool operator==(const ConceptRef&) const = default;
};

struct NounPhrase {
    ConceptRef noun;
    bool plural = false;
    std::optional<ConceptRef> adj;
};

// Latent structure of one sentence.
struct Clause {
    std::size_t topic = 0;
    NounPhrase subject;
    ConceptRef verb;
    NounPhrase object;
    std::optional<std::size_t> prep;
    NounPhrase prep_object;
    std::optional<std::size_t> adverb;
};

enum class Corruption { none, agreement, verb_front, adj_after_noun };

class Sampler {
   public:
    explicit Sampler(RngStream rng) : rng_(rng) {}
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
    bool chance(double p) { return rng_.uniform01() < p; }
    double normal(double sd) { return std::normal_distribution<double>(0.0, sd)(rng_); }

    ConceptRef pick(std::size_t topic, std::size_t per_topic) {
        const std::size_t t = chance(kOnTopic) ? topic : below(kTopics);
        return {t, below(per_topic)};
    }
    ConceptRef pick_other(std::size_t topic, std::size_t per_topic, const ConceptRef& avoid) {
        while (true) {
            ConceptRef c = pick(topic, per_topic);
            if (!(c == avoid)) return c;
        }
    }
    NounPhrase noun_phrase(std::size_t topic) {
        NounPhrase np;
        np.noun = pick(topic, kNounsPerTopic);
        np.plural = chance(0.5);
        if (chance(0.5)) np.adj = pick(topic, kAdjsPerTopic);
        return np;
    }
    Clause clause() {
        Clause c;
        c.topic = below(kTopics);
        c.subject = noun_phrase(c.topic);
        c.verb = pick(c.topic, kVerbsPerTopic);
        c.object = noun_phrase(c.topic);
        if (chance(0.4)) {
            c.prep = below(kPreps.size());
            c.prep_object = noun_phrase(c.topic);
        }
        if (chance(0.3)) c.adverb = below(kAdverbs.size());
        return c;
    }

   private:
    RngStream rng_;
};

std::string determiner(Sampler& s, bool plural) {
    if (s.chance(0.3)) return kDetAny;
    const auto& pool = plural ? kDetPlural : kDetSingular;
    return pool[s.below(pool.size())];
}

std::string noun_form(Sampler& s, const ConceptRef& c, bool plural) {
    const auto& stem = lexicon().nouns[c.topic][c.index][s.below(kSynonyms)];
    return plural ? stem + "s" : stem;
}

// English-like agreement: singular subjects take the -s verb form.
std::string verb_form(Sampler& s, const ConceptRef& c, bool plural_subject) {
    const auto& stem = lexicon().verbs[c.topic][c.index][s.below(kSynonyms)];
    return plural_subject ? stem : stem + "s";
}

std::vector<std::string> render_np(Sampler& s, const NounPhrase& np, bool adj_after) {
    std::vector<std::string> out = {determiner(s, np.plural)};
    const std::string noun = noun_form(s, np.noun, np.plural);
    const std::string adj = np.adj ? lexicon().adjs[np.adj->topic][np.adj->index] : std::string();
    if (np.adj && !adj_after) out.push_back(adj);
    out.push_back(noun);
    if (np.adj && adj_after) out.push_back(adj);
    return out;
}

// Every corruption keeps the multiset of token *kinds* fixed, so it cannot be
// detected from a bag of words alone.
std::string render(Sampler& s, const Clause& c, Corruption corruption = Corruption::none) {
    auto subj = render_np(s, c.subject, corruption == Corruption::adj_after_noun);
    const bool verb_plural = corruption == Corruption::agreement ? !c.subject.plural : c.subject.plural;
    const std::string verb = verb_form(s, c.verb, verb_plural);
    auto obj = render_np(s, c.object, false);

    std::vector<std::string> words;
    if (corruption == Corruption::verb_front) {
        words.push_back(verb);
        words.insert(words.end(), subj.begin(), subj.end());
    } else {
        words.insert(words.end(), subj.begin(), subj.end());
        words.push_back(verb);
    }
    words.insert(words.end(), obj.begin(), obj.end());
    if (c.prep) {
        words.push_back(kPreps[*c.prep]);
        auto po = render_np(s, c.prep_object, false);
        words.insert(words.end(), po.begin(), po.end());
    }
    if (c.adverb) words.push_back(kAdverbs[*c.adverb]);
    std::ostringstream out;
    for (std::size_t i = 0; i < words.size(); ++i) out << (i ? " " : "") << words[i];
    return out.str();
}

// Same latent meaning: keep concepts and numbers, redraw surface choices
// (synonyms, determiners, optional adjectives and modifiers).
Clause paraphrase(Sampler& s, const Clause& c) {
    Clause p = c;
    auto vary_adj = [&](NounPhrase& np) {
        if (s.chance(0.3)) np.adj = s.chance(0.5) ? std::optional<ConceptRef>(s.pick(c.topic, kAdjsPerTopic)) : std::nullopt;
    };
    vary_adj(p.subject);
    vary_adj(p.object);
    if (s.chance(0.3)) p.adverb = s.chance(0.5) ? std::optional<std::size_t>(s.below(kAdverbs.size())) : std::nullopt;
    return p;
}

std::string key_of(const Example& e) { return e.text_a + "\t" + e.text_b.value_or(""); }

using ExampleMaker = std::function<Example(Sampler&)>;

// Draws train then dev; dev rejects any text already used in train.
void fill_splits(Sampler& s, const ExampleMaker& make, std::size_t n_train, std::size_t n_dev, Dataset& train,
                 Dataset& dev) {
    std::set<std::string> seen;
    while (train.examples.size() < n_train) {
        Example e = make(s);
        seen.insert(key_of(e));
        train.examples.push_back(std::move(e));
    }
    while (dev.examples.size() < n_dev) {
        Example e = make(s);
        if (seen.count(key_of(e))) continue;
        dev.examples.push_back(std::move(e));
    }
}

Example acceptability_example(Sampler& s, double noise) {
    const Clause c = s.clause();
    bool good = s.chance(0.5);
    Corruption corruption = Corruption::none;
    if (!good) {
        const std::size_t r = s.below(4);
        corruption = r < 2 ? Corruption::agreement : (r == 2 ? Corruption::verb_front : Corruption::adj_after_noun);
        if (corruption == Corruption::adj_after_noun && !c.subject.adj) corruption = Corruption::verb_front;
    }
    Example e;
    e.text_a = render(s, c, corruption);
    if (s.chance(noise)) good = !good;
    e.target = good ? 1.0 : 0.0;
    return e;
}

Example match_example(Sampler& s, double noise) {
    const Clause a = s.clause();
    Clause b;
    bool positive = s.chance(0.55);
    if (positive) {
        b = paraphrase(s, a);
    } else {
        b = paraphrase(s, a);
        switch (s.below(5)) {
            case 0:
                b.subject.noun = s.pick_other(a.topic, kNounsPerTopic, a.subject.noun);
                break;
            case 1:
                b.verb = s.pick_other(a.topic, kVerbsPerTopic, a.verb);
                break;
            case 2:
                b.object.noun = s.pick_other(a.topic, kNounsPerTopic, a.object.noun);
                break;
            case 3:
                std::swap(b.subject, b.object);
                if (b.subject.noun == b.object.noun) b.object.noun = s.pick_other(a.topic, kNounsPerTopic, a.object.noun);
                break;
            default:
                b = s.clause();
                break;
        }
    }
    Example e;
    e.text_a = render(s, a);
    e.text_b = render(s, b);
    if (s.chance(noise)) positive = !positive;
    e.target = positive ? 1.0 : 0.0;
    return e;
}

Example similarity_example(Sampler& s, double noise) {
    const Clause a = s.clause();
    Clause b = paraphrase(s, a);
    // Five latent slots; `keep` of them survive, the rest are redrawn to differ.
    const std::size_t keep = s.below(6);
    std::array<std::size_t, 5> slots = {0, 1, 2, 3, 4};
    for (std::size_t i = 4; i > 0; --i) std::swap(slots[i], slots[s.below(i + 1)]);
    for (std::size_t i = keep; i < 5; ++i) {
        switch (slots[i]) {
            case 0:
                b.subject.noun = s.pick_other(a.topic, kNounsPerTopic, a.subject.noun);
                break;
            case 1:
                b.subject.plural = !a.subject.plural;
                break;
            case 2:
                b.verb = s.pick_other(a.topic, kVerbsPerTopic, a.verb);
                break;
            case 3:
                b.object.noun = s.pick_other(a.topic, kNounsPerTopic, a.object.noun);
                break;
            default:
                b.object.plural = !a.object.plural;
                break;
        }
    }
    Example e;
    e.text_a = render(s, a);
    e.text_b = render(s, b);
    // Label noise is graded here: a Gaussian jitter scaled so noise=0.1 gives sd 0.3.
    e.target = std::clamp(static_cast<double>(keep) + s.normal(3.0 * noise), 0.0, 5.0);
    return e;
}

}  // namespace

std::vector<std::string> synthetic_vocabulary() {
    const auto& lex = lexicon();
    std::vector<std::string> words = {kDetAny};
    for (const auto* pool : {&kDetSingular, &kDetPlural, &kPreps, &kAdverbs}) words.insert(words.end(), pool->begin(), pool->end());
    for (std::size_t t = 0; t < kTopics; ++t) {
        for (const auto& syn : lex.nouns[t]) {
            for (const auto& stem : syn) {
                words.push_back(stem);
                words.push_back(stem + "s");
            }
        }
        for (const auto& syn : lex.verbs[t]) {
            for (const auto& stem : syn) {
                words.push_back(stem);
                words.push_back(stem + "s");
            }
        }
        for (const auto& adj : lex.adjs[t]) words.push_back(adj);
    }
    return words;
}

const SyntheticTask& SyntheticSuite::task(const std::string& name) const {
    for (const auto& t : tasks) {
        if (t.name == name) return t;
    }
    throw InputError("no synthetic task named '" + name + "'");
}

SyntheticSuite generate_synthetic_suite(std::uint64_t seed, const SyntheticOptions& options) {
    SyntheticSuite suite;
    suite.words = synthetic_vocabulary();

    {
        Sampler s(RngStream({seed, 0, 0, Purpose::synthetic}));
        suite.pretrain_corpus.reserve(options.corpus_size);
        for (std::size_t i = 0; i < options.corpus_size; ++i) {
            const Clause c = s.clause();
            Example e;
            e.text_a = render(s, c);
            if (s.chance(0.5)) {
                const Clause other = s.chance(0.5) ? paraphrase(s, c) : s.clause();
                e.text_b = render(s, other);
            }
            suite.pretrain_corpus.push_back(std::move(e));
        }
    }

    auto make_task = [&](std::string name, MetricKind metric, TaskKind kind, std::vector<std::string> labels,
                         std::uint32_t stream, Example (*maker)(Sampler&, double)) {
        SyntheticTask task;
        task.name = name;
        task.metric = metric;
        task.train.name = name + ".train";
        task.dev.name = name + ".dev";
        task.train.kind = task.dev.kind = kind;
        task.train.label_names = task.dev.label_names = std::move(labels);
        Sampler s(RngStream({seed, 0, stream, Purpose::synthetic}));
        const double noise = options.label_noise;
        fill_splits(s, [&](Sampler& inner) { return maker(inner, noise); }, options.train_size, options.dev_size,
                    task.train, task.dev);
        task.train.validate();
        task.dev.validate();
        suite.tasks.push_back(std::move(task));
    };
    make_task("acceptability", MetricKind::matthews, TaskKind::classification, {"unacceptable", "acceptable"}, 1,
              acceptability_example);
    make_task("match", MetricKind::f1, TaskKind::classification, {"different", "paraphrase"}, 2, match_example);
    make_task("similarity", MetricKind::pearson_spearman, TaskKind::regression, {}, 3, similarity_example);
    return suite;
}

}  // namespace hype
