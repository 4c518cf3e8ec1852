#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rastergen/image.hpp"
#include "rastergen/imgcodec.hpp"
#include "rastergen/vocab.hpp"

namespace rastergen {

enum class TaskKind {
    text_to_image,
    subject_driven,
    editing,
    controllable,
    dense_prediction,
};

struct TaskSpec {
    TaskKind kind = TaskKind::text_to_image;
    std::string control_task; // required for controllable / dense_prediction

    static TaskSpec t2i() { return {TaskKind::text_to_image, {}}; }
};

// Registered control tasks for controllable generation / dense prediction.
const std::vector<std::string>& registered_control_tasks();

// Placeholder-name -> value map for system prompt rendering, keyed by the
// template field names ("User Text Prompt", "Object Description", ...).
using FieldMap = std::map<std::string, std::string>;

// Renders the task's system prompt with {width}/{height}, <Control Task> and
// user fields substituted. Byte-exact against the shipped golden templates.
std::string render_system_prompt(const TaskSpec& task, int width, int height,
                                 const FieldMap& fields);

// Raw template text (placeholders unfilled) for each task; the golden files
// under data/templates hold the same bytes.
std::string_view system_prompt_template(TaskKind kind);

// Shape of one image block: image-start, height-marker, height value,
// width-marker, width value, then rows of image tokens each closed by
// row-end (a panel-separator after the upper panel's last row-end when
// split_row > 0), then image-end. Height/width value tokens carry the
// token-grid dimensions offset into the text range.
struct ImageBlockSpec {
    int rows = 0;
    int cols = 0;
    int split_row = 0; // grid rows in the upper panel; 0 = single panel

    static constexpr int header_len = 5; // image-start, h-marker, h, w-marker, w

    int64_t block_len() const {
        return header_len + static_cast<int64_t>(rows) * (cols + 1) +
               (split_row > 0 ? 1 : 0) + 1;
    }

    // What the grammar admits at a given offset from the image-start token.
    enum class Slot { image_start, height_marker, height_value, width_marker,
                      width_value, image, row_end, panel_separator, image_end, eos };
    Slot slot_at(int64_t offset) const;
};

// Token sequence with per-position loss mask. loss_mask is 1 exactly at
// image tokens plus the row-end/image-end structure the model must emit.
struct SequenceSample {
    std::vector<TokenId> tokens;
    std::vector<uint8_t> loss_mask;
    TaskSpec task;
    int target_width = 0;  // pixels
    int target_height = 0; // pixels
    ImageBlockSpec block;
    size_t block_start = 0; // index of the image-start token
};

// Prefix from which generation continues, plus the block geometry the
// decoder needs for grammar-constrained sampling.
struct InferencePrefix {
    std::vector<TokenId> tokens;
    ImageBlockSpec block;
    size_t block_start = 0;
};

SequenceSample build_t2i_sequence(const std::string& prompt, const TokenMap& tm,
                                  const Vocabulary& vocab, int patch_size);

// Vertical concatenation; upper occupies rows [0, upper.height).
ImageGrid stack_panels(const ImageGrid& upper, const ImageGrid& lower);

// One image block covering both panels in raster order (upper rows first).
// mask_upper overrides the task default of whether upper-panel content
// carries loss (default: true for dense prediction pair generation, false
// for tasks whose upper panel is an inference-supplied reference).
SequenceSample build_dual_panel_sequence(const TaskSpec& task, const FieldMap& fields,
                                         const TokenMap& upper_tm, const TokenMap& lower_tm,
                                         const Vocabulary& vocab, int patch_size,
                                         std::optional<bool> mask_upper = std::nullopt);

// Whether build_inference_prefix requires a reference token map for the task.
bool task_requires_reference(TaskKind kind);

// panel_rows/panel_cols give one panel's token grid (the full grid for
// text-to-image). When a reference is required its dims must match.
InferencePrefix build_inference_prefix(const TaskSpec& task, const FieldMap& fields,
                                       int panel_rows, int panel_cols,
                                       const std::optional<TokenMap>& reference,
                                       const Vocabulary& vocab, int patch_size);

struct ParsedImage {
    TokenMap grid;     // full grid (both panels when split_row > 0)
    int split_row = 0; // 0 = single panel

    TokenMap upper() const;
    TokenMap lower() const;
};

// Inverse of the block layout; parse errors carry the offending position.
ParsedImage parse_generated(std::span<const TokenId> tokens, const Vocabulary& vocab);

} // namespace rastergen
