#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rastergen/common.hpp"

namespace rastergen {

using TokenId = int32_t;

enum class TokenClass { text, image, special };

// The nine control tokens. Order fixes their ids inside the special range.
enum class SpecialToken : int {
    image_start = 0,
    image_end,
    row_end,
    height_marker,
    width_marker,
    panel_separator,
    bos,
    eos,
    pad,
    named_count, // 9; the remaining slots up to special_slots are reserved
};

struct TokenInfo {
    TokenClass cls;
    std::string_view special_name; // set only for cls == special
};

// Unified id space over text bytes, image codebook entries and control
// tokens. Layout is fixed: text first, then image, then specials.
struct Vocabulary {
    static constexpr int text_size = 256;
    static constexpr int special_slots = 16;

    int codebook_size = 0;

    int text_base() const { return 0; }
    int image_base() const { return text_size; }
    int special_base() const { return text_size + codebook_size; }
    int total_size() const { return text_size + codebook_size + special_slots; }

    TokenId special(SpecialToken t) const {
        return static_cast<TokenId>(special_base() + static_cast<int>(t));
    }

    bool is_text(TokenId t) const { return t >= 0 && t < image_base(); }
    bool is_image(TokenId t) const { return t >= image_base() && t < special_base(); }
    bool is_special(TokenId t) const { return t >= special_base() && t < total_size(); }

    // Preset matching the paper-scale vocabulary size (171,385 ids total).
    static Vocabulary paper_preset();
};

Vocabulary build_vocabulary(int codebook_size);

TokenInfo classify_token(const Vocabulary& vocab, TokenId t);
std::string_view special_name(SpecialToken t);

std::vector<TokenId> encode_text(const Vocabulary& vocab, std::string_view s);
std::string decode_text(const Vocabulary& vocab, std::span<const TokenId> tokens);

} // namespace rastergen
