#include "rastergen/seqbuild.hpp"

#include <algorithm>

namespace rastergen {

namespace {

// Table-layout system prompts. The multiplication sign and the double space
// in the controllable template are load-bearing: rendered prompts must
// byte-match the golden files.
constexpr std::string_view kTemplateT2I =
    "Generate an image of {width}\xc3\x97{height} according to the following "
    "text prompt: {User Text Prompt}";
constexpr std::string_view kTemplateSubject =
    "Generate a dual-panel image of {width}\xc3\x97{height} where the "
    "<upper half> displays: {Object Description}, while the <lower half> shows "
    "the image according to the object and following prompt: "
    "{Subject Driven Prompt}.";
constexpr std::string_view kTemplateEditing =
    "Generate a dual-panel image of {width}\xc3\x97{height} where the "
    "<upper half> displays an image: {Image Description}, while the "
    "<lower half> shows an image according to the upper part: "
    "{Editing Instruction}";
constexpr std::string_view kTemplateControllable =
    "Generate a dual-panel image of {width}\xc3\x97{height} where the "
    "<upper half> shows a <Control Task> image, while the <lower half> "
    "displays the  image according to the upper part and following prompt: "
    "{User Text Prompt}";
constexpr std::string_view kTemplateDense =
    "Generate a dual-panel image of {width}\xc3\x97{height} where the "
    "<upper half> displays the image according to the following description: "
    "{Image Description}, while the <lower half> shows a <Control Task> image "
    "according to the upper part.";

void replace_all(std::string& s, std::string_view what, std::string_view with) {
    size_t pos = 0;
    while ((pos = s.find(what, pos)) != std::string::npos) {
        s.replace(pos, what.size(), with);
        pos += with.size();
    }
}

// Dimension value tokens live in the text range; grids larger than the text
// range would be ambiguous.
constexpr int kMaxGridDim = Vocabulary::text_size - 1;

void check_grid_dims(int rows, int cols) {
    require(rows >= 1 && cols >= 1, ErrorKind::invalid_argument,
            "token grid must be at least 1x1");
    require(rows <= kMaxGridDim && cols <= kMaxGridDim, ErrorKind::invalid_argument,
            "token grid dimension exceeds maximum of " + std::to_string(kMaxGridDim));
}

void append_block_header(std::vector<TokenId>& tokens, std::vector<uint8_t>& mask,
                         const ImageBlockSpec& spec, const Vocabulary& vocab) {
    tokens.push_back(vocab.special(SpecialToken::image_start));
    tokens.push_back(vocab.special(SpecialToken::height_marker));
    tokens.push_back(static_cast<TokenId>(vocab.text_base() + spec.rows));
    tokens.push_back(vocab.special(SpecialToken::width_marker));
    tokens.push_back(static_cast<TokenId>(vocab.text_base() + spec.cols));
    mask.insert(mask.end(), 5, 0);
}

void append_panel_rows(std::vector<TokenId>& tokens, std::vector<uint8_t>& mask,
                       const TokenMap& tm, const Vocabulary& vocab, bool in_loss) {
    const uint8_t m = in_loss ? 1 : 0;
    for (int r = 0; r < tm.rows; ++r) {
        for (int c = 0; c < tm.cols; ++c) {
            const int id = tm.ids[static_cast<size_t>(r) * tm.cols + c];
            require(id >= 0 && id < vocab.codebook_size, ErrorKind::invalid_argument,
                    "image token id outside codebook");
            tokens.push_back(static_cast<TokenId>(vocab.image_base() + id));
            mask.push_back(m);
        }
        tokens.push_back(vocab.special(SpecialToken::row_end));
        mask.push_back(m);
    }
}

} // namespace

const std::vector<std::string>& registered_control_tasks() {
    static const std::vector<std::string> tasks = {"canny", "depth", "pose", "hed"};
    return tasks;
}

std::string_view system_prompt_template(TaskKind kind) {
    switch (kind) {
    case TaskKind::text_to_image: return kTemplateT2I;
    case TaskKind::subject_driven: return kTemplateSubject;
    case TaskKind::editing: return kTemplateEditing;
    case TaskKind::controllable: return kTemplateControllable;
    case TaskKind::dense_prediction: return kTemplateDense;
    }
    fail(ErrorKind::invalid_argument, "unknown task kind");
}

std::string render_system_prompt(const TaskSpec& task, int width, int height,
                                 const FieldMap& fields) {
    std::string out{system_prompt_template(task.kind)};
    replace_all(out, "{width}", std::to_string(width));
    replace_all(out, "{height}", std::to_string(height));
    if (task.kind == TaskKind::controllable || task.kind == TaskKind::dense_prediction) {
        const auto& reg = registered_control_tasks();
        require(std::find(reg.begin(), reg.end(), task.control_task) != reg.end(),
                ErrorKind::invalid_argument,
                "unregistered control task '" + task.control_task + "'");
        replace_all(out, "<Control Task>", task.control_task);
    }
    for (const auto& [name, value] : fields) {
        replace_all(out, "{" + name + "}", value);
    }
    const size_t open = out.find('{');
    if (open != std::string::npos) {
        const size_t close = out.find('}', open);
        const std::string field =
            close == std::string::npos ? out.substr(open + 1)
                                       : out.substr(open + 1, close - open - 1);
        fail(ErrorKind::template_field, "missing template field '" + field + "'");
    }
    return out;
}

ImageBlockSpec::Slot ImageBlockSpec::slot_at(int64_t offset) const {
    switch (offset) {
    case 0: return Slot::image_start;
    case 1: return Slot::height_marker;
    case 2: return Slot::height_value;
    case 3: return Slot::width_marker;
    case 4: return Slot::width_value;
    default: break;
    }
    int64_t body = offset - header_len;
    const int64_t period = cols + 1;
    const int64_t upper_len = static_cast<int64_t>(split_row) * period;
    if (split_row > 0) {
        if (body == upper_len) {
            return Slot::panel_separator;
        }
        if (body > upper_len) {
            body -= 1; // skip the separator slot
        }
    }
    const int64_t total_rows_len = static_cast<int64_t>(rows) * period;
    if (body < total_rows_len) {
        return (body % period == cols) ? Slot::row_end : Slot::image;
    }
    if (body == total_rows_len) {
        return Slot::image_end;
    }
    return Slot::eos;
}

SequenceSample build_t2i_sequence(const std::string& prompt, const TokenMap& tm,
                                  const Vocabulary& vocab, int patch_size) {
    check_grid_dims(tm.rows, tm.cols);
    SequenceSample s;
    s.task = TaskSpec::t2i();
    s.target_width = tm.cols * patch_size;
    s.target_height = tm.rows * patch_size;
    s.block = {tm.rows, tm.cols, 0};

    const std::string text = render_system_prompt(
        s.task, s.target_width, s.target_height, {{"User Text Prompt", prompt}});
    s.tokens.push_back(vocab.special(SpecialToken::bos));
    s.loss_mask.push_back(0);
    for (TokenId t : encode_text(vocab, text)) {
        s.tokens.push_back(t);
        s.loss_mask.push_back(0);
    }
    s.block_start = s.tokens.size();
    append_block_header(s.tokens, s.loss_mask, s.block, vocab);
    append_panel_rows(s.tokens, s.loss_mask, tm, vocab, /*in_loss=*/true);
    s.tokens.push_back(vocab.special(SpecialToken::image_end));
    s.loss_mask.push_back(1);
    s.tokens.push_back(vocab.special(SpecialToken::eos));
    s.loss_mask.push_back(0);
    return s;
}

ImageGrid stack_panels(const ImageGrid& upper, const ImageGrid& lower) {
    require(upper.width == lower.width, ErrorKind::invalid_argument,
            "stack_panels: width mismatch (" + std::to_string(upper.width) + " vs " +
                std::to_string(lower.width) + ")");
    ImageGrid out(upper.width, upper.height + lower.height);
    std::copy(upper.pixels.begin(), upper.pixels.end(), out.pixels.begin());
    std::copy(lower.pixels.begin(), lower.pixels.end(),
              out.pixels.begin() + static_cast<ptrdiff_t>(upper.pixels.size()));
    return out;
}

namespace {
bool default_mask_upper(TaskKind kind) {
    // Upper panels that arrive as inference references carry no loss; dense
    // prediction generates both panels (pair generation), so both train.
    return kind == TaskKind::dense_prediction;
}
} // namespace

bool task_requires_reference(TaskKind kind) {
    switch (kind) {
    case TaskKind::text_to_image:
    case TaskKind::dense_prediction:
        return false;
    case TaskKind::subject_driven:
    case TaskKind::editing:
    case TaskKind::controllable:
        return true;
    }
    return false;
}

SequenceSample build_dual_panel_sequence(const TaskSpec& task, const FieldMap& fields,
                                         const TokenMap& upper_tm, const TokenMap& lower_tm,
                                         const Vocabulary& vocab, int patch_size,
                                         std::optional<bool> mask_upper) {
    require(task.kind != TaskKind::text_to_image, ErrorKind::invalid_argument,
            "text-to-image is not a dual-panel task");
    require(upper_tm.cols == lower_tm.cols, ErrorKind::invalid_argument,
            "dual-panel column mismatch (" + std::to_string(upper_tm.cols) + " vs " +
                std::to_string(lower_tm.cols) + ")");
    const int rows = upper_tm.rows + lower_tm.rows;
    check_grid_dims(rows, upper_tm.cols);

    SequenceSample s;
    s.task = task;
    s.target_width = upper_tm.cols * patch_size;
    s.target_height = rows * patch_size;
    s.block = {rows, upper_tm.cols, upper_tm.rows};

    const std::string text =
        render_system_prompt(task, s.target_width, s.target_height, fields);
    s.tokens.push_back(vocab.special(SpecialToken::bos));
    s.loss_mask.push_back(0);
    for (TokenId t : encode_text(vocab, text)) {
        s.tokens.push_back(t);
        s.loss_mask.push_back(0);
    }
    s.block_start = s.tokens.size();
    append_block_header(s.tokens, s.loss_mask, s.block, vocab);
    const bool upper_in_loss = mask_upper.value_or(default_mask_upper(task.kind));
    append_panel_rows(s.tokens, s.loss_mask, upper_tm, vocab, upper_in_loss);
    s.tokens.push_back(vocab.special(SpecialToken::panel_separator));
    s.loss_mask.push_back(0);
    append_panel_rows(s.tokens, s.loss_mask, lower_tm, vocab, /*in_loss=*/true);
    s.tokens.push_back(vocab.special(SpecialToken::image_end));
    s.loss_mask.push_back(1);
    s.tokens.push_back(vocab.special(SpecialToken::eos));
    s.loss_mask.push_back(0);
    return s;
}

InferencePrefix build_inference_prefix(const TaskSpec& task, const FieldMap& fields,
                                       int panel_rows, int panel_cols,
                                       const std::optional<TokenMap>& reference,
                                       const Vocabulary& vocab, int patch_size) {
    const bool needs_ref = task_requires_reference(task.kind);
    if (needs_ref && !reference.has_value()) {
        fail(ErrorKind::invalid_argument, "task requires a reference image");
    }
    if (!needs_ref && reference.has_value()) {
        fail(ErrorKind::invalid_argument, "task does not take a reference image");
    }
    const bool dual = task.kind != TaskKind::text_to_image;
    if (reference) {
        require(reference->rows == panel_rows && reference->cols == panel_cols,
                ErrorKind::invalid_argument, "reference dims do not match panel dims");
    }

    InferencePrefix p;
    p.block.rows = dual ? panel_rows * 2 : panel_rows;
    p.block.cols = panel_cols;
    p.block.split_row = dual ? panel_rows : 0;
    check_grid_dims(p.block.rows, p.block.cols);

    const int width = panel_cols * patch_size;
    const int height = p.block.rows * patch_size;
    const std::string text = render_system_prompt(task, width, height, fields);
    p.tokens.push_back(vocab.special(SpecialToken::bos));
    for (TokenId t : encode_text(vocab, text)) {
        p.tokens.push_back(t);
    }
    p.block_start = p.tokens.size();
    std::vector<uint8_t> scratch_mask;
    append_block_header(p.tokens, scratch_mask, p.block, vocab);
    if (reference) {
        append_panel_rows(p.tokens, scratch_mask, *reference, vocab, false);
        p.tokens.push_back(vocab.special(SpecialToken::panel_separator));
    }
    return p;
}

TokenMap ParsedImage::upper() const {
    require(split_row > 0, ErrorKind::invalid_argument, "not a dual-panel image");
    TokenMap tm;
    tm.rows = split_row;
    tm.cols = grid.cols;
    tm.ids.assign(grid.ids.begin(),
                  grid.ids.begin() + static_cast<ptrdiff_t>(split_row) * grid.cols);
    return tm;
}

TokenMap ParsedImage::lower() const {
    require(split_row > 0, ErrorKind::invalid_argument, "not a dual-panel image");
    TokenMap tm;
    tm.rows = grid.rows - split_row;
    tm.cols = grid.cols;
    tm.ids.assign(grid.ids.begin() + static_cast<ptrdiff_t>(split_row) * grid.cols,
                  grid.ids.end());
    return tm;
}

ParsedImage parse_generated(std::span<const TokenId> tokens, const Vocabulary& vocab) {
    const TokenId t_start = vocab.special(SpecialToken::image_start);
    const TokenId t_end = vocab.special(SpecialToken::image_end);
    const TokenId t_row = vocab.special(SpecialToken::row_end);
    const TokenId t_hm = vocab.special(SpecialToken::height_marker);
    const TokenId t_wm = vocab.special(SpecialToken::width_marker);
    const TokenId t_sep = vocab.special(SpecialToken::panel_separator);

    size_t i = 0;
    while (i < tokens.size() && tokens[i] != t_start) {
        ++i;
    }
    require(i < tokens.size(), ErrorKind::parse, "no image-start token", tokens.size());

    auto need = [&](size_t pos, const char* what) {
        if (pos >= tokens.size()) {
            fail(ErrorKind::parse, std::string("truncated image block, expected ") + what,
                 pos);
        }
        return tokens[pos];
    };

    size_t pos = i + 1;
    require(need(pos, "height-marker") == t_hm, ErrorKind::parse,
            "expected height-marker", pos);
    ++pos;
    const TokenId hv = need(pos, "height value");
    require(vocab.is_text(hv), ErrorKind::parse, "height value not in text range", pos);
    const int rows = hv - vocab.text_base();
    ++pos;
    require(need(pos, "width-marker") == t_wm, ErrorKind::parse,
            "expected width-marker", pos);
    ++pos;
    const TokenId wv = need(pos, "width value");
    require(vocab.is_text(wv), ErrorKind::parse, "width value not in text range", pos);
    const int cols = wv - vocab.text_base();
    ++pos;
    require(rows >= 1 && cols >= 1, ErrorKind::parse, "degenerate grid dimensions", pos);

    ParsedImage out;
    out.grid.rows = rows;
    out.grid.cols = cols;
    out.grid.ids.reserve(static_cast<size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const TokenId t = need(pos, "image token");
            if (!vocab.is_image(t)) {
                fail(ErrorKind::parse,
                     "row " + std::to_string(r) + " expected image token at column " +
                         std::to_string(c),
                     pos);
            }
            out.grid.ids.push_back(t - vocab.image_base());
            ++pos;
        }
        if (need(pos, "row-end") != t_row) {
            fail(ErrorKind::parse, "row " + std::to_string(r) + " missing row-end", pos);
        }
        ++pos;
        if (pos < tokens.size() && tokens[pos] == t_sep && r + 1 < rows) {
            require(out.split_row == 0, ErrorKind::parse,
                    "multiple panel separators", pos);
            out.split_row = r + 1;
            ++pos;
        }
    }
    require(need(pos, "image-end") == t_end, ErrorKind::parse, "expected image-end", pos);
    return out;
}

} // namespace rastergen
