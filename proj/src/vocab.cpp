#include "rastergen/vocab.hpp"

namespace rastergen {

namespace {
constexpr std::string_view kSpecialNames[] = {
    "image-start",   "image-end", "row-end", "height-marker", "width-marker",
    "panel-separator", "bos",     "eos",     "pad",
};
} // namespace

Vocabulary build_vocabulary(int codebook_size) {
    require(codebook_size >= 1, ErrorKind::invalid_argument,
            "codebook_size must be >= 1");
    Vocabulary v;
    v.codebook_size = codebook_size;
    return v;
}

Vocabulary Vocabulary::paper_preset() {
    // 256 text + codebook + 16 special slots = 171,385 total.
    return build_vocabulary(171385 - text_size - special_slots);
}

std::string_view special_name(SpecialToken t) {
    const int i = static_cast<int>(t);
    if (i >= 0 && i < static_cast<int>(SpecialToken::named_count)) {
        return kSpecialNames[i];
    }
    return "reserved";
}

TokenInfo classify_token(const Vocabulary& vocab, TokenId t) {
    require(t >= 0 && t < vocab.total_size(), ErrorKind::invalid_argument,
            "token id " + std::to_string(t) + " outside vocabulary of size " +
                std::to_string(vocab.total_size()));
    if (vocab.is_text(t)) {
        return {TokenClass::text, {}};
    }
    if (vocab.is_image(t)) {
        return {TokenClass::image, {}};
    }
    const int slot = t - vocab.special_base();
    if (slot < static_cast<int>(SpecialToken::named_count)) {
        return {TokenClass::special, kSpecialNames[slot]};
    }
    return {TokenClass::special, "reserved"};
}

std::vector<TokenId> encode_text(const Vocabulary& vocab, std::string_view s) {
    std::vector<TokenId> out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        out.push_back(static_cast<TokenId>(vocab.text_base() + c));
    }
    return out;
}

std::string decode_text(const Vocabulary& vocab, std::span<const TokenId> tokens) {
    std::string out;
    out.reserve(tokens.size());
    for (size_t i = 0; i < tokens.size(); ++i) {
        const TokenId t = tokens[i];
        if (!vocab.is_text(t)) {
            fail(ErrorKind::invalid_argument,
                 "token at position " + std::to_string(i) +
                     " is not a text token (id " + std::to_string(t) + ")",
                 i);
        }
        out.push_back(static_cast<char>(t - vocab.text_base()));
    }
    return out;
}

} // namespace rastergen
