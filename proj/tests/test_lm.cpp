#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stylemix/corpus/dataset.hpp"
#include "stylemix/lm/inference.hpp"
#include "stylemix/lm/model.hpp"
#include "stylemix/lm/tokenizer.hpp"
#include "stylemix/lm/training.hpp"
#include "stylemix/mixing/mixing.hpp"

using namespace stylemix;
using core::DenseMatrix;
using core::SeededRng;

namespace {

lm::ModelConfig tiny_config(int vocab = 12) {
    lm::ModelConfig c;
    c.vocab_size = vocab;
    c.d_model = 8;
    c.n_layers = 2;
    c.n_heads = 2;
    c.d_ff = 16;
    c.context_len = 16;
    return c;
}

// Random weights large enough that every path carries signal, with
// layer-norm gains and biases moved off their defaults.
lm::BaseModel random_model(std::uint64_t seed, const lm::ModelConfig& cfg = tiny_config()) {
    SeededRng rng(seed);
    lm::BaseModel m = lm::BaseModel::init(cfg, rng, 0.4);
    lm::ModelParams::visit(m.params, [&](const std::string&, DenseMatrix& t) {
        for (double& x : t.data()) {
            x += rng.normal(0.0, 0.1);
        }
    });
    return m;
}

lm::AuthorAdapter random_adapter(const lm::BaseModel& base, const std::string& id, std::uint64_t seed) {
    SeededRng rng(seed);
    auto a = lm::AuthorAdapter::init(base, id, rng, 2, 4.0);
    for (auto& l : a.layers) {
        for (double& x : l.q.b.data()) {
            x = rng.normal(0.0, 0.3);
        }
        for (double& x : l.v.b.data()) {
            x = rng.normal(0.0, 0.3);
        }
    }
    return a;
}

double log_softmax_at(const DenseMatrix& logits, std::size_t row, int token) {
    double peak = -1e300;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
        peak = std::max(peak, logits(row, c));
    }
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
        z += std::exp(logits(row, c) - peak);
    }
    return logits(row, static_cast<std::size_t>(token)) - peak - std::log(z);
}

} // namespace

TEST(Tokenizer, StandardVocabulary) {
    const auto& tok = lm::Tokenizer::standard();
    EXPECT_EQ(tok.vocab_size(), 101);
    EXPECT_EQ(lm::Tokenizer::kEot, 0);
    EXPECT_EQ(tok.para(), 1);
    EXPECT_EQ(tok.sep(), 2);
    const std::string text = "lo, the \xC2\xABhound\xC2\xBB sees the hill\xE2\x80\x94";
    EXPECT_EQ(tok.decode(tok.encode(text)), text);
    EXPECT_EQ(tok.encode("the").size(), 3U);
    EXPECT_THROW(tok.encode("tab\there"), VocabError);
}

TEST(Forward, UniformLogitsVocabFour) {
    const auto cfg = tiny_config(4);
    const auto params = lm::ModelParams::zeros(cfg);
    const std::vector<int> prompt{0};
    const std::vector<int> completion{1, 2, 3};
    const double lp = lm::sequence_log_prob_params(cfg, params, prompt, completion);
    EXPECT_NEAR(lp, 3.0 * std::log(0.25), 1e-12);
    EXPECT_NEAR(lp, -4.1588830834, 1e-9);
}

TEST(Forward, CompletionProbabilitiesSumToOne) {
    const auto m = random_model(1);
    const std::vector<int> prompt{3, 5, 7};
    double total = 0.0;
    for (int v = 0; v < m.config.vocab_size; ++v) {
        const std::vector<int> c{v};
        const double lp = lm::sequence_log_prob(m, {}, prompt, c);
        EXPECT_LE(lp, 0.0);
        total += std::exp(lp);
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Forward, LogProbMatchesPerStepOracle) {
    const auto m = random_model(2);
    const auto a = random_adapter(m, "a", 3);
    const std::vector<lm::ScaledAdapter> ads{{&a, {0.7, -0.4}}};
    const std::vector<int> prompt{1, 4};
    const std::vector<int> completion{6, 2, 9, 0};
    double expected = 0.0;
    std::vector<int> prefix = prompt;
    for (int tok : completion) {
        const auto logits = lm::forward_logits(m, ads, prefix);
        expected += log_softmax_at(logits, prefix.size() - 1, tok);
        prefix.push_back(tok);
    }
    EXPECT_NEAR(lm::sequence_log_prob(m, ads, prompt, completion), expected, 1e-10);
}

TEST(Forward, Causal) {
    const auto m = random_model(4);
    const std::vector<int> tokens{1, 2, 3, 4, 5, 6, 7, 8};
    const auto full = lm::forward_logits(m, {}, tokens);
    for (std::size_t n = 1; n < tokens.size(); ++n) {
        const auto part = lm::forward_logits(m, {}, std::span<const int>(tokens).first(n));
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < full.cols(); ++c) {
                EXPECT_NEAR(part(r, c), full(r, c), 1e-12);
            }
        }
    }
}

TEST(Forward, ZeroScalesAreExactNoOp) {
    const auto m = random_model(5);
    const auto a = random_adapter(m, "a", 6);
    const std::vector<int> tokens{2, 7, 1, 9};
    const std::vector<lm::ScaledAdapter> zero{{&a, {0.0, 0.0}}};
    EXPECT_EQ(lm::forward_logits(m, {}, tokens), lm::forward_logits(m, zero, tokens));
}

TEST(Forward, DynamicMatchesStaticMerge) {
    const auto m = random_model(7);
    const std::vector<lm::AuthorAdapter> ads{random_adapter(m, "a", 8), random_adapter(m, "b", 9)};
    auto W = mixing::MixWeights::zeros({"a", "b"}, 2);
    W.w(0, 0) = 1.0;
    W.w(0, 1) = -0.5;
    W.w(1, 0) = 0.25;
    W.w(1, 1) = 1.3;
    const std::vector<int> tokens{1, 3, 5, 7, 9, 11};
    const auto dyn = lm::forward_logits(m, mixing::scaled_adapters(ads, W), tokens);
    const auto merged = mixing::merge_into_base(m, mixing::mix_layerwise(ads, W));
    const auto stat = lm::forward_logits(merged, {}, tokens);
    EXPECT_LE(core::max_abs_diff(dyn, stat), 1e-9);
}

TEST(Forward, Errors) {
    const auto m = random_model(10);
    const std::vector<int> bad{1, 99};
    EXPECT_THROW(lm::forward_logits(m, {}, bad), VocabError);
    const std::vector<int> prompt{1};
    const std::vector<int> empty;
    EXPECT_THROW(lm::sequence_log_prob(m, {}, prompt, empty), DomainError);
    const std::vector<int> too_long(20, 3);
    EXPECT_THROW(lm::sequence_log_prob(m, {}, prompt, too_long), DomainError);
}

TEST(Gradients, MatchCentralDifferences) {
    const auto m = random_model(11);
    const auto a = random_adapter(m, "a", 12);
    const std::vector<lm::ScaledAdapter> ads{{&a, {0.8, 1.1}}};
    const std::vector<int> prompt{2, 5, 1};
    const std::vector<int> completion{7, 3, 0};
    const lm::ModelParams eff = lm::effective_params(m, ads);
    const lm::ModelParams grads = lm::param_gradients(m, ads, prompt, completion);
    auto loss = [&](const lm::ModelParams& p) { return -lm::sequence_log_prob_params(m.config, p, prompt, completion); };

    std::vector<std::string> names;
    lm::ModelParams::visit(eff, [&](const std::string& n, const DenseMatrix&) { names.push_back(n); });
    SeededRng rng(13);
    const double h = 1e-5;
    int checked = 0;
    while (checked < 20) {
        const std::size_t ti = rng.uniform_index(names.size());
        lm::ModelParams plus = eff, minus = eff;
        DenseMatrix* tp = plus.tensors()[ti];
        DenseMatrix* tm = minus.tensors()[ti];
        const std::size_t k = rng.uniform_index(tp->size());
        if (names[ti] == "pos_emb" && k / tp->cols() >= prompt.size() + completion.size() - 1) {
            continue; // unused positions are covered below
        }
        tp->data()[k] += h;
        tm->data()[k] -= h;
        const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
        const double g = grads.tensors()[ti]->data()[k];
        const double rel = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-7});
        EXPECT_LE(rel, 1e-4) << names[ti] << "[" << k << "] analytic " << g << " numeric " << fd;
        ++checked;
    }
}

TEST(Gradients, UnusedPositionsGetZero) {
    const auto m = random_model(14);
    const std::vector<int> prompt{1, 2};
    const std::vector<int> completion{3};
    const auto g = lm::param_gradients(m, {}, prompt, completion);
    for (std::size_t r = 2; r < g.pos_emb.rows(); ++r) {
        for (std::size_t c = 0; c < g.pos_emb.cols(); ++c) {
            EXPECT_EQ(g.pos_emb(r, c), 0.0);
        }
    }
    // Tokens that never appear get no embedding gradient.
    for (int v : {0, 4, 5, 6}) {
        for (std::size_t c = 0; c < g.tok_emb.cols(); ++c) {
            EXPECT_EQ(g.tok_emb(static_cast<std::size_t>(v), c), 0.0);
        }
    }
}

TEST(Generate, GreedyDeterministicWithoutRng) {
    const auto m = random_model(15);
    const std::vector<int> prompt{1, 2, 3};
    lm::GenerationConfig gen;
    gen.greedy = true;
    gen.max_len = 8;
    const auto a = lm::generate_tokens(m.config, m.params, prompt, gen, nullptr);
    const auto b = lm::generate_tokens(m.config, m.params, prompt, gen, nullptr);
    EXPECT_EQ(a, b);
    // Greedy picks the argmax of the full forward pass at every step.
    std::vector<int> seq = prompt;
    for (int tok : a) {
        const auto logits = lm::forward_logits(m, {}, seq);
        const auto row = logits.row(seq.size() - 1);
        EXPECT_EQ(static_cast<int>(core::argmax(row)), tok);
        seq.push_back(tok);
    }
}

TEST(Generate, SeededSamplingReproducible) {
    const auto m = random_model(16);
    const std::vector<int> prompt{4};
    lm::GenerationConfig gen;
    gen.max_len = 10;
    SeededRng r1(5), r2(5);
    EXPECT_EQ(lm::generate_tokens(m.config, m.params, prompt, gen, &r1),
              lm::generate_tokens(m.config, m.params, prompt, gen, &r2));
    EXPECT_THROW(lm::generate_tokens(m.config, m.params, prompt, gen, nullptr), DomainError);
}

TEST(Generate, MaxLenZeroIsEmpty) {
    const auto m = random_model(17);
    const std::vector<int> prompt{4};
    lm::GenerationConfig gen;
    gen.max_len = 0;
    SeededRng rng(1);
    EXPECT_TRUE(lm::generate_tokens(m.config, m.params, prompt, gen, &rng).empty());
}

TEST(Generate, StaysInsideContext) {
    const auto m = random_model(18);
    const std::vector<int> prompt(12, 3);
    lm::GenerationConfig gen;
    gen.max_len = 100;
    gen.temperature = 5.0;
    gen.top_p = 1.0;
    SeededRng rng(2);
    for (int i = 0; i < 20; ++i) {
        EXPECT_LT(prompt.size() + lm::generate_tokens(m.config, m.params, prompt, gen, &rng).size(),
                  static_cast<std::size_t>(m.config.context_len));
    }
}

namespace {

struct SmallWorld {
    corpus::Dataset ds;
    lm::BaseModel base;
    lm::ModelConfig cfg;
};

lm::ModelConfig small_text_config() {
    lm::ModelConfig c;
    c.d_model = 16;
    c.n_layers = 2;
    c.n_heads = 2;
    c.d_ff = 32;
    c.context_len = 112;
    return c;
}

corpus::Dataset small_dataset() {
    corpus::CorpusSpec spec;
    spec.n_high_resource = 2;
    spec.pairs_per_author = 64;
    spec.n_targets = 1;
    spec.n_sources = 1;
    return corpus::build_dataset(spec);
}

lm::TrainConfig short_training(int steps) {
    lm::TrainConfig tc;
    tc.steps = steps;
    tc.batch = 8;
    tc.warmup = 5;
    tc.adam.lr = 1e-2;
    return tc;
}

} // namespace

TEST(Training, ZeroStepsLeavesParameters) {
    const auto ds = small_dataset();
    SeededRng rng(1);
    auto m = lm::BaseModel::init(small_text_config(), rng);
    const auto before = m.params;
    const auto trace = lm::train_base(m, lm::make_base_corpus(ds, 2), short_training(0));
    EXPECT_TRUE(trace.loss.empty());
    EXPECT_EQ(m.params, before);
}

TEST(Training, BaseLossDropsAndIsDeterministic) {
    const auto ds = small_dataset();
    const auto corpus = lm::make_base_corpus(ds, 2);
    const auto heldout = lm::base_heldout_texts(ds, 32);
    SeededRng r1(1), r2(1);
    auto a = lm::BaseModel::init(small_text_config(), r1);
    auto b = lm::BaseModel::init(small_text_config(), r2);
    const double initial = lm::plain_cross_entropy(a.config, a.params, heldout);
    auto tc = short_training(40);
    tc.threads = 1;
    lm::train_base(a, corpus, tc);
    tc.threads = 3;
    lm::train_base(b, corpus, tc);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.hash(), b.hash());
    const double after = lm::plain_cross_entropy(a.config, a.params, heldout);
    EXPECT_LT(after, 0.8 * initial);
    EXPECT_TRUE(a.params.all_finite());
}

TEST(Training, AdapterTouchesOnlyLowRankFactors) {
    const auto ds = small_dataset();
    SeededRng rng(3);
    auto base = lm::BaseModel::init(small_text_config(), rng);
    lm::train_base(base, lm::make_base_corpus(ds, 2), short_training(30));
    const auto frozen = base.params;
    const auto hash = base.hash();
    const auto& pairs = ds.library[0].pairs;

    lm::SftConfig untrained;
    untrained.train = short_training(0);
    const auto noop = lm::sft_train_adapter(base, pairs, untrained, "hr00");
    EXPECT_EQ(lm::sft_loss(base, &noop, pairs), lm::sft_loss(base, nullptr, pairs));
    for (const auto& l : noop.layers) {
        EXPECT_EQ(core::max_abs_diff(l.q.b, DenseMatrix(l.q.b.rows(), l.q.b.cols())), 0.0);
    }

    lm::SftConfig sc;
    sc.train = short_training(40);
    lm::TrainTrace trace;
    const auto ad = lm::sft_train_adapter(base, pairs, sc, "hr00", &trace);
    EXPECT_EQ(base.params, frozen);
    EXPECT_EQ(base.hash(), hash);
    EXPECT_EQ(ad.base_hash, hash);
    ASSERT_EQ(trace.loss.size(), 40U);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 5; ++i) {
        head += trace.loss[static_cast<std::size_t>(i)];
        tail += trace.loss[trace.loss.size() - 1 - static_cast<std::size_t>(i)];
    }
    EXPECT_LT(tail, head);
    EXPECT_LT(lm::sft_loss(base, &ad, pairs), lm::sft_loss(base, nullptr, pairs));
}

TEST(Training, AdapterRejectsOtherBase) {
    SeededRng r1(1), r2(2);
    const auto a = lm::BaseModel::init(small_text_config(), r1);
    const auto b = lm::BaseModel::init(small_text_config(), r2);
    SeededRng r3(3);
    const auto ad = lm::AuthorAdapter::init(a, "x", r3);
    EXPECT_NO_THROW(ad.check_base(a));
    EXPECT_THROW(ad.check_base(b), CompatibilityError);
    auto other = tiny_config(101);
    EXPECT_THROW(ad.validate(other), ConfigError);
}

TEST(Training, ConfigValidation) {
    auto tc = short_training(-1);
    EXPECT_THROW(tc.validate(), ConfigError);
    lm::ModelConfig bad = tiny_config();
    bad.n_heads = 3;
    EXPECT_THROW(bad.validate(), ConfigError);
}
