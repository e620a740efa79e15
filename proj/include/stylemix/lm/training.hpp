#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "stylemix/core/parallel.hpp"
#include "stylemix/core/rng.hpp"
#include "stylemix/corpus/dataset.hpp"
#include "stylemix/error.hpp"
#include "stylemix/lm/inference.hpp"
#include "stylemix/lm/model.hpp"
#include "stylemix/lm/tokenizer.hpp"
#include "stylemix/lm/transformer.hpp"

namespace stylemix::lm {

/// A training sequence; the loss covers tokens[first_target..].
struct Sequence {
    std::vector<int> tokens;
    std::size_t first_target = 1;
};

inline Sequence paraphrase_sequence(const Tokenizer& tok, std::string_view input, std::string_view output) {
    Sequence s;
    s.tokens = tok.paraphrase_prompt(input);
    s.first_target = s.tokens.size();
    const auto comp = tok.completion(output);
    s.tokens.insert(s.tokens.end(), comp.begin(), comp.end());
    return s;
}

inline Sequence plain_sequence(const Tokenizer& tok, std::string_view text) {
    return {tok.plain(text), 1};
}

struct AdamConfig {
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    int steps = 2000;
    int batch = 32;
    AdamConfig adam;
    int warmup = 100;
    double min_lr_ratio = 0.1; // cosine decay floor, as a fraction of adam.lr
    double grad_clip = 1.0;    // global gradient-norm clip; <= 0 disables
    unsigned threads = 0;      // 0 = hardware concurrency
    std::uint64_t seed = 42;

    void validate() const {
        if (steps < 0 || batch < 1 || warmup < 0 || !(adam.lr > 0.0)) {
            throw ConfigError("TrainConfig: steps >= 0, batch >= 1, warmup >= 0 and lr > 0 required");
        }
    }

    double lr_at(int step) const {
        double lr = adam.lr;
        if (warmup > 0 && step < warmup) {
            lr *= static_cast<double>(step + 1) / static_cast<double>(warmup);
        }
        if (steps > warmup && step >= warmup) {
            const double progress = static_cast<double>(step - warmup) / static_cast<double>(steps - warmup);
            const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
            lr *= min_lr_ratio + (1.0 - min_lr_ratio) * cosine;
        }
        return lr;
    }

    unsigned thread_count() const { return threads == 0 ? core::default_thread_count() : threads; }
};

class Adam {
public:
    Adam(std::vector<DenseMatrix*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
        for (const auto* p : params_) {
            m_.emplace_back(p->rows(), p->cols());
            v_.emplace_back(p->rows(), p->cols());
        }
    }

    void step(std::span<const DenseMatrix* const> grads, double lr) {
        if (grads.size() != params_.size()) {
            throw DomainError("Adam: gradient count does not match the parameter count");
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto m = m_[i].eigen().array();
            auto v = v_[i].eigen().array();
            const auto g = grads[i]->eigen().array();
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.square();
            params_[i]->eigen().array() -= lr * (m / bc1) / ((v / bc2).sqrt() + cfg_.eps);
        }
    }

    int steps_taken() const noexcept { return t_; }

private:
    std::vector<DenseMatrix*> params_;
    AdamConfig cfg_;
    std::vector<DenseMatrix> m_;
    std::vector<DenseMatrix> v_;
    int t_ = 0;
};

namespace detail {

inline double global_norm(std::span<const DenseMatrix* const> grads) {
    double s = 0.0;
    for (const auto* g : grads) {
        s += g->eigen().squaredNorm();
    }
    return std::sqrt(s);
}

inline void clip_gradients(std::span<DenseMatrix* const> grads, double clip) {
    if (clip <= 0.0) {
        return;
    }
    std::vector<const DenseMatrix*> view(grads.begin(), grads.end());
    const double norm = global_norm(view);
    if (norm > clip) {
        for (auto* g : grads) {
            *g *= clip / norm;
        }
    }
}

inline bool fits(const ModelConfig& cfg, const Sequence& s) {
    return s.tokens.size() >= 2 && s.tokens.size() - 1 <= static_cast<std::size_t>(cfg.context_len) &&
           s.first_target >= 1 && s.first_target < s.tokens.size();
}

// Mean next-token NLL of one sequence; when dlogits is given it receives the
// gradient of weight * mean NLL.
inline double sequence_mean_nll(const ModelConfig& cfg, const ModelParams& p, const Sequence& s, double weight,
                                ForwardCache& cache, EigenMatrix* dlogits) {
    forward(cfg, p, std::span<const int>(s.tokens).first(s.tokens.size() - 1), cache);
    const double n = static_cast<double>(s.tokens.size() - s.first_target);
    return next_token_nll(cache.logits, s.tokens, s.first_target, weight / n, dlogits) / weight;
}

} // namespace detail

/// Mean over sequences of the per-sequence mean next-token NLL.
inline double mean_sequence_loss(const ModelConfig& cfg, const ModelParams& p, std::span<const Sequence> seqs,
                                 unsigned threads = 0) {
    if (seqs.empty()) {
        throw DomainError("mean_sequence_loss: no sequences");
    }
    std::vector<double> losses(seqs.size());
    core::parallel_for(seqs.size(), threads == 0 ? core::default_thread_count() : threads,
                       [&](std::size_t i, unsigned) {
                           ForwardCache cache;
                           losses[i] = detail::sequence_mean_nll(cfg, p, seqs[i], 1.0, cache, nullptr);
                       });
    double s = 0.0;
    for (double l : losses) {
        s += l;
    }
    return s / static_cast<double>(seqs.size());
}

struct TrainTrace {
    std::vector<double> loss; // mean batch loss per step
};

using SequenceSampler = std::function<Sequence(core::SeededRng&)>;

/// Full-parameter training on sampled batches. Batches are drawn
/// sequentially; per-sequence gradients are reduced in batch order.
inline TrainTrace train_params(const ModelConfig& cfg, ModelParams& params, const SequenceSampler& sampler,
                               const TrainConfig& tc) {
    tc.validate();
    TrainTrace trace;
    if (tc.steps == 0) {
        return trace;
    }
    core::SeededRng rng = core::SeededRng(tc.seed).derive("train/batches");
    Adam adam(params.tensors(), tc.adam);
    const auto b = static_cast<std::size_t>(tc.batch);
    std::vector<ModelParams> per_seq(b, ModelParams::zeros_like(params));
    std::vector<double> losses(b);
    std::vector<Sequence> batch(b);
    for (int step = 0; step < tc.steps; ++step) {
        for (auto& s : batch) {
            do {
                s = sampler(rng);
            } while (!detail::fits(cfg, s));
        }
        core::parallel_for(b, tc.thread_count(), [&](std::size_t i, unsigned) {
            ModelParams& g = per_seq[i];
            ModelParams::visit(g, [](const std::string&, DenseMatrix& m) { m.set_zero(); });
            ForwardCache cache;
            EigenMatrix dlogits;
            losses[i] = detail::sequence_mean_nll(cfg, params, batch[i], 1.0 / static_cast<double>(b), cache, &dlogits);
            backward(cfg, params, cache, dlogits, g);
        });
        ModelParams& total = per_seq[0];
        for (std::size_t i = 1; i < b; ++i) {
            auto dst = total.tensors();
            const auto src = static_cast<const ModelParams&>(per_seq[i]).tensors();
            for (std::size_t t = 0; t < dst.size(); ++t) {
                *dst[t] += *src[t];
            }
        }
        double loss = 0.0;
        for (double l : losses) {
            loss += l;
        }
        loss /= static_cast<double>(b);
        if (!std::isfinite(loss)) {
            throw TrainingError("training diverged at step " + std::to_string(step) + " (loss is not finite)");
        }
        auto grads = total.tensors();
        detail::clip_gradients(grads, tc.grad_clip);
        std::vector<const DenseMatrix*> cgrads(grads.begin(), grads.end());
        adam.step(cgrads, tc.lr_at(step));
        trace.loss.push_back(loss);
    }
    if (!params.all_finite()) {
        throw TrainingError("training produced non-finite parameters");
    }
    return trace;
}

/// Texts for base pretraining: plain language-model text plus paraphrase
/// pairs between random surface styles of the same neutral content.
struct BaseCorpus {
    std::vector<std::string> plain_texts;
    std::vector<std::string> neutral_texts;
    std::vector<corpus::StyleProfile> style_pool; // identity first
    double plain_fraction = 0.25;

    Sequence sample(const Tokenizer& tok, core::SeededRng& rng) const {
        if (rng.bernoulli(plain_fraction)) {
            return plain_sequence(tok, rng.pick(plain_texts));
        }
        const std::string& x = rng.pick(neutral_texts);
        const auto& in_style = rng.pick(style_pool);
        const auto& out_style = rng.pick(style_pool);
        const std::string input = corpus::stylize(in_style, x, rng);
        const std::string output = corpus::stylize(out_style, x, rng);
        return paraphrase_sequence(tok, input, output);
    }
};

/// Builds the base corpus from the library authors' texts. The style pool is
/// the identity profile plus `n_aux_styles` fresh random profiles, so the base
/// learns the paraphrase format without seeing any evaluated author.
inline BaseCorpus make_base_corpus(const corpus::Dataset& ds, int n_aux_styles = 16) {
    BaseCorpus bc;
    for (const auto& a : ds.library) {
        for (const auto& p : a.pairs) {
            bc.plain_texts.push_back(p.neutral);
            bc.plain_texts.push_back(p.styled);
            bc.neutral_texts.push_back(p.neutral);
        }
    }
    if (bc.plain_texts.empty()) {
        throw DomainError("make_base_corpus: empty corpus");
    }
    bc.style_pool.push_back(corpus::StyleProfile::identity("neutral"));
    const core::SeededRng master(ds.spec.seed);
    for (int i = 0; i < n_aux_styles; ++i) {
        auto rng = master.derive("profile/auxiliary", static_cast<std::uint64_t>(i));
        bc.style_pool.push_back(corpus::draw_profile(corpus::author_id("aux", i), rng));
    }
    return bc;
}

/// Held-out plain texts for measuring base cross-entropy: fresh neutral
/// sentences and their stylizations under the library profiles.
inline std::vector<std::string> base_heldout_texts(const corpus::Dataset& ds, int count = 128) {
    auto rng = core::SeededRng(ds.spec.seed).derive("text/base_heldout");
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) {
        const std::string x = corpus::gen_neutral_sentence(rng);
        if (i % 2 == 0 || ds.library.empty()) {
            out.push_back(x);
        } else {
            const auto& prof = ds.library[static_cast<std::size_t>(i / 2) % ds.library.size()].profile;
            out.push_back(corpus::stylize(prof, x, rng));
        }
    }
    return out;
}

/// Mean per-character cross-entropy (nats) of plain texts under `p`.
inline double plain_cross_entropy(const ModelConfig& cfg, const ModelParams& p, std::span<const std::string> texts,
                                  const Tokenizer& tok = Tokenizer::standard(), unsigned threads = 0) {
    std::vector<Sequence> seqs;
    for (const auto& t : texts) {
        seqs.push_back(plain_sequence(tok, t));
    }
    return mean_sequence_loss(cfg, p, seqs, threads);
}

inline TrainTrace train_base(BaseModel& model, const BaseCorpus& corpus, const TrainConfig& tc,
                             const Tokenizer& tok = Tokenizer::standard()) {
    if (corpus.plain_texts.empty() || corpus.neutral_texts.empty() || corpus.style_pool.empty()) {
        throw DomainError("train_base: empty corpus");
    }
    if (tok.vocab_size() != model.config.vocab_size) {
        throw ConfigError("train_base: tokenizer and model vocabularies differ");
    }
    return train_params(model.config, model.params,
                        [&](core::SeededRng& rng) { return corpus.sample(tok, rng); }, tc);
}

struct SftConfig {
    TrainConfig train{.steps = 300, .batch = 32, .adam = {}, .warmup = 20, .min_lr_ratio = 0.1, .grad_clip = 1.0,
                      .threads = 0, .seed = 42};
    int rank = 8;
    double alpha = 16.0;
};

inline std::vector<Sequence> sft_sequences(std::span<const corpus::TrainPair> pairs, const ModelConfig& cfg,
                                           const Tokenizer& tok = Tokenizer::standard()) {
    std::vector<Sequence> out;
    for (const auto& p : pairs) {
        Sequence s = paraphrase_sequence(tok, p.neutral, p.styled);
        if (detail::fits(cfg, s)) {
            out.push_back(std::move(s));
        }
    }
    return out;
}

/// Mean reconstruction loss of styled originals given their neutral inputs.
inline double sft_loss(const BaseModel& model, const AuthorAdapter* adapter, std::span<const corpus::TrainPair> pairs,
                       unsigned threads = 0) {
    const auto seqs = sft_sequences(pairs, model.config);
    if (adapter == nullptr) {
        return mean_sequence_loss(model.config, model.params, seqs, threads);
    }
    const ScaledAdapter sa{adapter, std::vector<double>(static_cast<std::size_t>(model.config.n_layers), 1.0)};
    const ModelParams p = effective_params(model, std::span<const ScaledAdapter>(&sa, 1));
    return mean_sequence_loss(model.config, p, seqs, threads);
}

/// Trains one low-rank adapter on W_q and W_v to reconstruct `pairs`
/// from their neutral versions. The base model is never modified.
inline AuthorAdapter sft_train_adapter(const BaseModel& model, std::span<const corpus::TrainPair> pairs,
                                       const SftConfig& sc, std::string author_id, TrainTrace* trace_out = nullptr) {
    sc.train.validate();
    const auto seqs = sft_sequences(pairs, model.config);
    if (seqs.empty()) {
        throw DomainError("sft_train_adapter: no usable training pairs");
    }
    const core::SeededRng master(sc.train.seed);
    auto init_rng = master.derive("adapter/init");
    AuthorAdapter ad = AuthorAdapter::init(model, std::move(author_id), init_rng, sc.rank, sc.alpha);

    std::vector<DenseMatrix*> tensors;
    for (auto& l : ad.layers) {
        tensors.push_back(&l.q.a);
        tensors.push_back(&l.q.b);
        tensors.push_back(&l.v.a);
        tensors.push_back(&l.v.b);
    }
    Adam adam(tensors, sc.train.adam);
    auto rng = master.derive("adapter/batches");
    const auto b = static_cast<std::size_t>(sc.train.batch);
    const std::vector<double> ones(static_cast<std::size_t>(model.config.n_layers), 1.0);
    std::vector<QvGrads> per_seq(b, QvGrads::zeros(model.config));
    std::vector<double> losses(b);
    std::vector<std::size_t> picks(b);
    TrainTrace trace;

    for (int step = 0; step < sc.train.steps; ++step) {
        for (auto& i : picks) {
            i = rng.uniform_index(seqs.size());
        }
        const ScaledAdapter sa{&ad, ones};
        const ModelParams p = effective_params(model, std::span<const ScaledAdapter>(&sa, 1));
        core::parallel_for(b, sc.train.thread_count(), [&](std::size_t i, unsigned) {
            QvGrads& g = per_seq[i];
            for (std::size_t l = 0; l < g.wq.size(); ++l) {
                g.wq[l].set_zero();
                g.wv[l].set_zero();
            }
            ForwardCache cache;
            EigenMatrix dlogits;
            losses[i] = detail::sequence_mean_nll(model.config, p, seqs[picks[i]], 1.0 / static_cast<double>(b), cache,
                                                  &dlogits);
            backward_qv(model.config, p, cache, dlogits, g);
        });
        QvGrads& total = per_seq[0];
        for (std::size_t i = 1; i < b; ++i) {
            total += per_seq[i];
        }
        double loss = 0.0;
        for (double l : losses) {
            loss += l;
        }
        loss /= static_cast<double>(b);
        if (!std::isfinite(loss)) {
            throw TrainingError("adapter training diverged at step " + std::to_string(step));
        }
        std::vector<DenseMatrix> grads;
        grads.reserve(tensors.size());
        for (std::size_t l = 0; l < ad.layers.size(); ++l) {
            for (int which = 0; which < 2; ++which) {
                const LowRankDelta& d = which == 0 ? ad.layers[l].q : ad.layers[l].v;
                const DenseMatrix& G = which == 0 ? total.wq[l] : total.wv[l];
                DenseMatrix ga = core::matmul(core::transpose(d.b), G); // B^T G
                ga *= d.scaling();
                DenseMatrix gb = core::matmul_nt(G, d.a); // G A^T
                gb *= d.scaling();
                grads.push_back(std::move(ga));
                grads.push_back(std::move(gb));
            }
        }
        std::vector<DenseMatrix*> gp;
        for (auto& g : grads) {
            gp.push_back(&g);
        }
        detail::clip_gradients(gp, sc.train.grad_clip);
        std::vector<const DenseMatrix*> cg(gp.begin(), gp.end());
        adam.step(cg, sc.train.lr_at(step));
        trace.loss.push_back(loss);
    }
    if (trace_out != nullptr) {
        *trace_out = std::move(trace);
    }
    return ad;
}

} // namespace stylemix::lm
