#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rastergen/model.hpp"
#include "rastergen/quant.hpp"
#include "rastergen/seqbuild.hpp"

namespace rastergen {

struct SamplerConfig {
    float temperature = 1.0f; // 0 = argmax
    int top_k = 0;            // 0 = off
    uint64_t seed = 0;
    int max_new_tokens = 4096;
    float guidance_scale = 0.0f; // <= 1 = off; logits = uncond + s*(cond - uncond)
};

struct DecodeStats {
    std::string mode;
    int window = 0;
    int64_t forward_passes = 0;
    int64_t tokens_generated = 0;
    double accepted_per_pass_mean = 0.0;
    double wall_ms = 0.0;

    std::string to_json_line() const;
};

// Which tokens the block grammar admits at an absolute sequence position.
struct LegalSet {
    bool all_vocab = false;
    bool image_range = false; // any codebook entry
    TokenId forced = -1;      // single admissible token when >= 0

    int64_t support(const Vocabulary& v) const {
        if (all_vocab) {
            return v.total_size();
        }
        return image_range ? v.codebook_size : 1;
    }
};

// Position -> legality map derived from the prefix's block geometry.
// `constrained=false` disables the grammar (used by the toy-model tests).
struct SequenceGrammar {
    const Vocabulary* vocab = nullptr;
    ImageBlockSpec block;
    int64_t block_start = 0;
    bool constrained = true;

    LegalSet at(int64_t pos) const;

    static SequenceGrammar unconstrained(const Vocabulary& v) {
        return {&v, {}, 0, false};
    }
};

// Model weights for decoding: exactly one of full/quantized set.
struct ModelSource {
    const ModelConfig* cfg = nullptr;
    const Parameters* full = nullptr;
    const QuantizedParameters* quantized = nullptr;
};

// Temperature/top-k/grammar-filtered distribution over the whole vocabulary.
// temperature 0 degenerates to one-hot argmax (ties to the lowest index).
std::vector<float> filtered_distribution(std::span<const float> logits_row,
                                         const SamplerConfig& sc, const LegalSet& legal);

// Categorical draw from an explicit distribution with u in [0,1).
TokenId sample_from(std::span<const float> probs, double u);

// Returns the sampled id and its post-filter probability. At temperature 0
// the id is the argmax and the probability is its softmax mass under the
// filter.
std::pair<TokenId, float> sample_token(std::span<const float> logits_row,
                                       const SamplerConfig& sc, CounterRng& rng,
                                       const LegalSet& legal);

// The SJD probabilistic convergence criterion: accept iff
// u < min(1, target_prob / draft_prob).
bool sjd_accept(double draft_prob, double target_prob, double u);

struct DecodeResult {
    std::vector<TokenId> tokens; // generated tokens only (prefix excluded)
    DecodeStats stats;
};

DecodeResult ar_generate(const ModelSource& src, std::span<const TokenId> prefix,
                         const SamplerConfig& sc, StaticKVCache& cache,
                         const CausalMask& mask, const SequenceGrammar& grammar,
                         std::span<const TokenId> uncond_prefix = {});

// One Jacobi window: draft tokens plus the distributions they were sampled
// from (needed for the likelihood-ratio test and the residual resample).
struct JacobiWindow {
    int64_t committed_base = 0;
    std::vector<TokenId> draft_tokens;
    std::vector<float> draft_probs;
    std::vector<std::vector<float>> draft_dists;

    int size() const { return static_cast<int>(draft_tokens.size()); }
};

// Decoding state threaded through sjd_step.
struct SjdState {
    const ModelSource* src = nullptr;
    StaticKVCache* cache = nullptr;
    const CausalMask* mask = nullptr;
    const SequenceGrammar* grammar = nullptr;
    SamplerConfig sampler;
    CounterRng rng{0};

    std::vector<TokenId> seq; // prefix + committed tokens
    JacobiWindow window;
    bool done = false;
    int64_t generated = 0;
    int64_t budget = 0; // max_new_tokens remaining

    // guidance (populated only when sampler.guidance_scale > 1)
    std::optional<StaticKVCache> ucache;
    std::vector<TokenId> useq;
};

// One SJD iteration: a single forward over the window, sequential
// accept/reject by likelihood ratio, residual resample at the first
// rejection (or a free token when all drafts pass), cache commit plus
// rollback of the rejected tail, and window refill from the fresh
// distributions. Returns the tokens committed by this pass.
std::vector<TokenId> sjd_step(SjdState& st, DecodeStats& stats);

DecodeResult sjd_generate(const ModelSource& src, std::span<const TokenId> prefix,
                          const SamplerConfig& sc, int window, StaticKVCache& cache,
                          const CausalMask& mask, const SequenceGrammar& grammar,
                          std::span<const TokenId> uncond_prefix = {});

} // namespace rastergen
