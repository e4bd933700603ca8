#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellgep/genepool.hpp"
#include "cellgep/karva.hpp"
#include "cellgep/search_space.hpp"

namespace cellgep {

enum class CellKind : std::uint8_t { Normal, Reduction };

std::string_view to_string(CellKind kind);
CellKind cell_kind_from_string(std::string_view name);

inline constexpr OpSpec kStemConv{OpKind::Conv, {3, 3}};

struct CompileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One operation inside a compiled cell. Node ids are positions in
/// CellGraph::nodes, which is kept in topological order.
struct CellNode {
    int id = 0;
    OpSpec op{};
    bool projection = false; ///< pointwise conv inserted for channel matching
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    std::vector<int> inputs;
    std::optional<GeneId> gene; ///< gene this node was inlined from
    std::string weight_key;     ///< per gene-instance key ("ng12.0.16x16"), or class key for projections
    std::string block_key;      ///< per (op, kernel, in, out, stride) class key; empty for add/concat/input

    bool is_input() const { return op.kind == OpKind::InputRef; }
    bool is_conv() const { return op.is_conv(); }

    friend bool operator==(const CellNode&, const CellNode&) = default;
};

struct CellGraph {
    CellKind kind = CellKind::Normal;
    int base_width = 0;
    std::vector<CellNode> nodes;
    int output = 0;

    const CellNode& at(int id) const { return nodes.at(static_cast<std::size_t>(id)); }
    int output_channels() const { return at(output).out_channels; }
    int required_output_channels() const { return kind == CellKind::Normal ? base_width : 2 * base_width; }
    bool uses_input(InputSlot slot) const;

    friend bool operator==(const CellGraph&, const CellGraph&) = default;
};

/// A cell genotype with all its expressed genes resolved, independent of the
/// pool's later evolution.
struct CellTemplate {
    Context context = Context::NormalCell;
    ExpressionTree tree;
    std::map<GeneId, ExpressionTree> genes;
};

/// Throws CompileError for a dangling gene reference or a gene tree that is
/// not legal in the pool's context.
CellTemplate make_cell_template(const Genotype& cell, const GenePool& pool);

CellGraph compile_cell(const CellTemplate& cell, int base_width);
CellGraph compile_cell(const Genotype& cell, const GenePool& pool, int base_width);

/// Matches channels at add nodes and at the cell output with pointwise
/// projections, re-inferring widths downstream. Idempotent.
CellGraph insert_projections(CellGraph graph);

// ---------------------------------------------------------------------------
// Parameter counting

/// Trainable parameters of one ReLU-conv-BN block (bias-free convs, affine
/// batch norm; running statistics not counted).
std::int64_t block_params(const OpSpec& op, int in_channels, int out_channels);

std::int64_t count_params(const CellGraph& graph);

// ---------------------------------------------------------------------------
// Network assembly

struct ConvBlockSpec {
    OpSpec op{};
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    bool has_relu = true;
    std::int64_t param_count = 0;
    std::string weight_key;

    friend bool operator==(const ConvBlockSpec&, const ConvBlockSpec&) = default;
};

ConvBlockSpec make_block(const OpSpec& op, int in_channels, int out_channels, int stride, bool has_relu,
                         std::string weight_key);

struct Stage {
    CellGraph normal_cell;
    int repeats = 1;
    std::optional<CellGraph> reduction_cell;

    friend bool operator==(const Stage&, const Stage&) = default;
};

/// Source of a cell input: the stem (-1) or an earlier cell instance.
inline constexpr int kStemSource = -1;

/// One placed copy of a cell in the network body, with its input bindings.
struct CellInstance {
    int id = 0;
    int stage = 0;
    CellKind kind = CellKind::Normal;
    int prev = kStemSource;
    int prev_prev = kStemSource;
    std::optional<ConvBlockSpec> prev_prev_projection;
    int in_channels = 0;  ///< channels of the PrevCell input
    int out_channels = 0;
    int input_scale = 0;  ///< number of spatial halvings before this cell
    int output_scale = 0;

    friend bool operator==(const CellInstance&, const CellInstance&) = default;
};

struct NetworkHead {
    bool final_bn_relu = true;
    std::string global_pool = "avg";
    int in_features = 0;
    int classes = 0;
    std::int64_t param_count = 0;

    friend bool operator==(const NetworkHead&, const NetworkHead&) = default;
};

struct ModelDescriptor {
    DatasetProfile dataset_profile = DatasetProfile::Cifar;
    int width = 16;
    int input_channels = 3;
    std::vector<ConvBlockSpec> stem;
    std::vector<Stage> stages;
    std::vector<CellInstance> cells;
    NetworkHead head;
    std::int64_t total_params = 0;

    int stem_channels() const { return stem.empty() ? input_channels : stem.back().out_channels; }
    int stem_scale() const;

    friend bool operator==(const ModelDescriptor&, const ModelDescriptor&) = default;
};

inline constexpr int kStageCount = 3;

/// Stem, three stages of `repeats` normal cells with a reduction cell after
/// the first two, then BN-ReLU, global pooling and the classifier. Inputs are
/// wired and total_params is filled in.
ModelDescriptor assemble_network(const CellTemplate& normal, const CellTemplate& reduction, DatasetProfile profile,
                                 int width, int repeats, int classes);

/// Recomputes CellDescriptor::cells from the stages: PrevCell and
/// PrevPrevCell bindings plus stride-2 projections where the older input is
/// spatially larger.
ModelDescriptor wire_cell_inputs(ModelDescriptor descriptor);

std::int64_t count_params(const ModelDescriptor& descriptor);

/// Every key a trainer may store weights under, sorted and unique.
std::vector<std::string> weight_keys(const ModelDescriptor& descriptor);

/// Invariant violations of a compiled cell, each naming the node.
std::vector<std::string> check_cell_graph(const CellGraph& graph);

/// Cell-graph checks for every stage plus stage-width and wiring checks.
std::vector<std::string> check_descriptor(const ModelDescriptor& descriptor);

} // namespace cellgep
