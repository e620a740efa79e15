#include <gtest/gtest.h>

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stylemix/core/similarity.hpp"
#include "stylemix/corpus/dataset.hpp"
#include "stylemix/corpus/grammar.hpp"
#include "stylemix/corpus/profile.hpp"
#include "stylemix/lm/training.hpp"
#include "stylemix/metrics/scores.hpp"
#include "stylemix/metrics/style_embedding.hpp"

using namespace stylemix;
using core::SeededRng;
using metrics::FeatureIndex;

namespace {

std::vector<double> random_unit(SeededRng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.normal();
    }
    return core::l2_normalize(v);
}

// Unit vector at a chosen angular similarity to `base` (both in the plane of
// base and helper).
std::vector<double> at_similarity(const std::vector<double>& base, const std::vector<double>& helper, double sim) {
    const double theta = (1.0 - sim) * std::numbers::pi;
    std::vector<double> perp = helper;
    const double d = core::dot(helper, base);
    for (std::size_t i = 0; i < perp.size(); ++i) {
        perp[i] -= d * base[i];
    }
    perp = core::l2_normalize(perp);
    std::vector<double> out(base.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::cos(theta) * base[i] + std::sin(theta) * perp[i];
    }
    return out;
}

std::string random_styled(SeededRng& rng) {
    const SeededRng master(rng.next_u64());
    auto prng = master.derive("p");
    const auto profile = corpus::draw_profile("x", prng);
    std::string text;
    const int n = 1 + static_cast<int>(rng.uniform_index(3));
    for (int i = 0; i < n; ++i) {
        if (!text.empty()) {
            text += ' ';
        }
        text += corpus::stylize(profile, corpus::gen_neutral_sentence(rng), rng);
    }
    return text;
}

} // namespace

TEST(StyleEmbedding, UnitNormAndDeterministic) {
    SeededRng rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto t = random_styled(rng);
        const auto e = metrics::style_embed(t);
        ASSERT_EQ(e.size(), metrics::kEmbeddingDim);
        EXPECT_NEAR(core::l2_norm(e), 1.0, 1e-12);
        EXPECT_EQ(e, metrics::style_embed(t));
    }
}

TEST(StyleEmbedding, EmptyTextRejected) {
    EXPECT_THROW(metrics::style_embed(""), DomainError);
    EXPECT_THROW(metrics::prototype_embed(std::vector<std::string>{}), DomainError);
}

TEST(StyleEmbedding, RatesIgnoreRepetition) {
    SeededRng rng(2);
    for (int i = 0; i < 50; ++i) {
        const auto t = random_styled(rng);
        const auto a = metrics::raw_features(t);
        const auto b = metrics::raw_features(t + " " + t);
        for (std::size_t k = 0; k < metrics::kEmbeddingDim; ++k) {
            if (FeatureIndex::is_rate(k)) {
                EXPECT_NEAR(a[k], b[k], 1e-9) << k;
            }
        }
    }
}

TEST(StyleEmbedding, SentenceOrderIrrelevant) {
    const std::string a = "lo, the hound sees the hill!";
    const std::string b = "a cat sleeps, and the king runs.";
    const auto ab = metrics::style_embed(a + " " + b);
    const auto ba = metrics::style_embed(b + " " + a);
    for (std::size_t k = 0; k < ab.size(); ++k) {
        EXPECT_NEAR(ab[k], ba[k], 1e-9);
    }
}

TEST(StyleEmbedding, ExclamationRate) {
    const std::string x = "the dog sees the hill.";
    const std::string y = "the dog sees the hill!";
    const auto fx = metrics::raw_features(x);
    const auto fy = metrics::raw_features(y);
    const std::size_t bang = metrics::punct_index(U'!');
    const std::size_t dot = metrics::punct_index(U'.');
    // 18 non-space characters, one of them the terminal mark.
    EXPECT_DOUBLE_EQ(fx[bang], 0.0);
    EXPECT_DOUBLE_EQ(fy[bang], 1.0 / 18.0);
    EXPECT_DOUBLE_EQ(fx[dot], 1.0 / 18.0);
    EXPECT_DOUBLE_EQ(fy[dot], 0.0);
    EXPECT_NE(metrics::style_embed(x), metrics::style_embed(y));
}

TEST(StyleEmbedding, HandComputedFeatures) {
    const auto f = metrics::raw_features("lo, the hound seeth the hill.");
    // words: lo the hound seeth the hill
    EXPECT_DOUBLE_EQ(f[FeatureIndex::interjection], 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(f[FeatureIndex::archaic], 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(f[FeatureIndex::synonym], 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(f[FeatureIndex::mean_word_len], 22.0 / 6.0); // 2+3+5+5+3+4 letters
    EXPECT_DOUBLE_EQ(f[FeatureIndex::mean_sentence_len], 6.0);
    EXPECT_DOUBLE_EQ(f[FeatureIndex::type_token], 5.0 / 6.0);
    EXPECT_DOUBLE_EQ(f[metrics::punct_index(U',')], 1.0 / 24.0);
}

TEST(Prototype, MeanOfMembers) {
    const std::string a = "lo, the hound sees the hill!";
    const std::string b = "a cat sleeps, and the king runs.";
    const auto ea = metrics::style_embed(a);
    const auto eb = metrics::style_embed(b);
    std::vector<double> mid(ea.size());
    for (std::size_t i = 0; i < mid.size(); ++i) {
        mid[i] = (ea[i] + eb[i]) / 2.0;
    }
    const auto expected = core::l2_normalize(mid);
    const auto got = metrics::prototype_embed(std::vector<std::string>{a, b});
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_NEAR(got[i], expected[i], 1e-12);
    }
    const auto one = metrics::prototype_embed(std::vector<std::string>{a});
    const auto two = metrics::prototype_embed(std::vector<std::string>{a, a});
    for (std::size_t i = 0; i < one.size(); ++i) {
        EXPECT_NEAR(one[i], ea[i], 1e-12);
        EXPECT_NEAR(two[i], ea[i], 1e-12);
    }
}

TEST(Toward, KnownValues) {
    SeededRng rng(3);
    const auto e_t = random_unit(rng, 64);
    const auto h = random_unit(rng, 64);
    const auto e_s = at_similarity(e_t, h, 0.6);
    EXPECT_NEAR(core::angular_similarity(e_s, e_t), 0.6, 1e-12);
    EXPECT_NEAR(metrics::toward(e_s, e_t, e_t), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(metrics::toward(e_s, e_t, e_s), 0.0);
    const auto e_out = at_similarity(e_t, h, 0.8);
    EXPECT_NEAR(metrics::toward(e_s, e_t, e_out), 0.5, 1e-9);
    EXPECT_DOUBLE_EQ(metrics::toward_from_sims(0.8, 0.6), (0.8 - 0.6) / (1.0 - 0.6));
    EXPECT_NEAR(metrics::toward_from_sims(0.8, 0.6), 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(metrics::toward_from_sims(0.5, 0.6), 0.0);
}

TEST(Away, KnownValues) {
    SeededRng rng(4);
    const auto e_t = random_unit(rng, 64);
    const auto e_s = at_similarity(e_t, random_unit(rng, 64), 0.4);
    EXPECT_DOUBLE_EQ(metrics::away(e_s, e_t, e_s), 0.0);
    EXPECT_NEAR(metrics::away(e_s, e_t, e_t), 1.0, 1e-12);
    EXPECT_NEAR(metrics::away_from_sims(0.7, 0.4), 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(metrics::away_from_sims(0.0, 0.4), 1.0); // clamped
}

TEST(Toward, DegeneratePairRejected) {
    SeededRng rng(5);
    const auto e = random_unit(rng, 8);
    const auto o = random_unit(rng, 8);
    EXPECT_THROW(metrics::toward(e, e, o), DomainError);
    EXPECT_THROW(metrics::away(e, e, o), DomainError);
}

TEST(Toward, RotationInvariant) {
    SeededRng rng(6);
    const std::size_t n = 16;
    for (int t = 0; t < 50; ++t) {
        Eigen::MatrixXd g(n, n);
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            g.data()[i] = rng.normal();
        }
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
        auto rot = [&](const std::vector<double>& v) {
            const Eigen::VectorXd r = q * Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(n));
            return std::vector<double>(r.data(), r.data() + n);
        };
        const auto s = random_unit(rng, n), tg = random_unit(rng, n), o = random_unit(rng, n);
        EXPECT_NEAR(metrics::toward(rot(s), rot(tg), rot(o)), metrics::toward(s, tg, o), 1e-9);
        EXPECT_NEAR(metrics::away(rot(s), rot(tg), rot(o)), metrics::away(s, tg, o), 1e-9);
    }
}

TEST(Meaning, KnownValues) {
    EXPECT_NEAR(metrics::meaning_score("the dog sees the hill.", "the cat sees the hill."), 2.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(metrics::meaning_score("the dog sees the hill.", "the dog sees the hill."), 1.0);
    EXPECT_DOUBLE_EQ(metrics::meaning_score("the dog sees the hill.", "lo, the hound seeth the \xC2\xABhill\xC2\xBB!"),
                     1.0);
    EXPECT_EQ(metrics::meaning_score("the dog sees the hill.", "the, a."), 0.0);
    EXPECT_EQ(metrics::meaning_score("", "the dog."), 0.0);
}

TEST(Meaning, StylingPreservesContent) {
    SeededRng rng(7);
    const SeededRng master(8);
    for (int p = 0; p < 10; ++p) {
        auto prng = master.derive("p", static_cast<std::uint64_t>(p));
        const auto profile = corpus::draw_profile("x", prng);
        for (int i = 0; i < 50; ++i) {
            const auto x = corpus::gen_neutral_sentence(rng);
            EXPECT_NEAR(metrics::meaning_score(x, corpus::stylize(profile, x, rng)), 1.0, 1e-12);
        }
    }
}

TEST(Joint, KnownValues) {
    EXPECT_EQ(metrics::joint(0.0, 0.9), 0.0);
    EXPECT_EQ(metrics::joint(1.0, 1.0), 1.0);
    EXPECT_NEAR(metrics::joint(0.16, 0.83), 0.36442, 5e-6);
    EXPECT_DOUBLE_EQ(metrics::joint(0.16, 0.83), std::sqrt(0.16 * 0.83));
    EXPECT_THROW(metrics::joint(1.2, 0.5), DomainError);
    EXPECT_THROW(metrics::joint(0.5, -0.1), DomainError);
}

TEST(Scores, BoundsOnRandomInputs) {
    SeededRng rng(9);
    for (int i = 0; i < 10000; ++i) {
        const double t = rng.uniform(), m = rng.uniform();
        const double j = metrics::joint(t, m);
        EXPECT_GE(j, 0.0);
        EXPECT_LE(j, 1.0);
        EXPECT_NEAR(j * j, t * m, 1e-12);
        const std::size_t n = 2 + rng.uniform_index(10);
        const auto s = random_unit(rng, n), tg = random_unit(rng, n), o = random_unit(rng, n);
        const double tw = metrics::toward(s, tg, o);
        const double aw = metrics::away(s, tg, o);
        EXPECT_GE(tw, 0.0);
        EXPECT_LE(tw, 1.0);
        EXPECT_GE(aw, 0.0);
        EXPECT_LE(aw, 1.0);
    }
}

TEST(Scores, MeaningBoundedAndSymmetricOnRandomTexts) {
    SeededRng rng(10);
    for (int i = 0; i < 2000; ++i) {
        const auto a = random_styled(rng);
        const auto b = random_styled(rng);
        const double m = metrics::meaning_score(a, b);
        EXPECT_GE(m, 0.0);
        EXPECT_LE(m, 1.0);
        EXPECT_EQ(m, metrics::meaning_score(b, a));
        EXPECT_NEAR(metrics::meaning_score(a, a), 1.0, 1e-12);
    }
}

TEST(Scores, RewriteReportConsistent) {
    SeededRng rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto src = random_styled(rng);
        const auto tgt = random_styled(rng);
        const auto out = random_styled(rng);
        const auto e_t = metrics::style_embed(tgt);
        if (core::angular_similarity(metrics::style_embed(src), e_t) > 1.0 - 1e-9) {
            continue;
        }
        const auto r = metrics::score_rewrite(e_t, src, out, nullptr);
        EXPECT_NEAR(r.joint * r.joint, r.toward * r.meaning, 1e-12);
        EXPECT_EQ(r.meaning, metrics::meaning_score(src, out));
    }
    const auto src = std::string("the dog sees the hill.");
    const auto e_t = metrics::style_embed("lo, the hound sees the hill!");
    const auto empty = metrics::score_rewrite(e_t, src, "", nullptr);
    EXPECT_EQ(empty.toward, 0.0);
    EXPECT_EQ(empty.meaning, 0.0);
    EXPECT_EQ(empty.joint, 0.0);
}

TEST(Fluency, UniformModel) {
    const lm::Tokenizer tok(U"a", true);
    lm::ModelConfig cfg;
    cfg.vocab_size = tok.vocab_size();
    cfg.d_model = 8;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.d_ff = 8;
    cfg.context_len = 16;
    const lm::BaseModel m{cfg, lm::ModelParams::zeros(cfg)};
    ASSERT_EQ(cfg.vocab_size, 4);
    EXPECT_NEAR(metrics::fluency(m, "aaaa", tok), 0.25, 1e-12);
    EXPECT_THROW(metrics::fluency(m, "", tok), DomainError);
}

TEST(Fluency, TrainedBasePrefersRealText) {
    corpus::CorpusSpec spec;
    spec.n_high_resource = 2;
    spec.pairs_per_author = 64;
    spec.n_targets = 1;
    spec.n_sources = 1;
    const auto ds = corpus::build_dataset(spec);
    lm::ModelConfig cfg;
    cfg.d_model = 16;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.d_ff = 32;
    cfg.context_len = 112;
    SeededRng init(1);
    auto base = lm::BaseModel::init(cfg, init);
    lm::TrainConfig tc;
    tc.steps = 60;
    tc.batch = 8;
    tc.warmup = 5;
    tc.adam.lr = 1e-2;
    lm::train_base(base, lm::make_base_corpus(ds, 2), tc);

    SeededRng rng(12);
    std::vector<double> gaps;
    for (int i = 0; i < 100; ++i) {
        const auto x = corpus::gen_neutral_sentence(rng);
        const std::string rev(x.rbegin(), x.rend());
        const double fx = metrics::fluency(base, x);
        EXPECT_GT(fx, 0.0);
        EXPECT_LE(fx, 1.0);
        gaps.push_back(fx - metrics::fluency(base, rev));
    }
    std::nth_element(gaps.begin(), gaps.begin() + 50, gaps.end());
    EXPECT_GE(gaps[50], 0.0);
}
