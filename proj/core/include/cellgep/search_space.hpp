#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cellgep/operator_rates.hpp"

namespace cellgep {

enum class OpKind : std::uint8_t {
    Add,
    Concat,
    PointwiseConv,
    DepthwiseConv,
    SeparableConv,        ///< pointwise followed by depthwise
    InverseSeparableConv, ///< depthwise followed by pointwise
    InputRef,
    Conv, ///< dense kxk convolution, stem only
};

enum class InputSlot : std::uint8_t { PrevCell, PrevPrevCell };

struct Kernel {
    int kh = 1;
    int kw = 1;
    friend bool operator==(const Kernel&, const Kernel&) = default;
};

/// The kernel shapes allowed for depthwise and separable convolutions.
inline constexpr Kernel kSpatialKernels[] = {{3, 3}, {5, 5}, {3, 5}, {5, 3}, {1, 7}, {7, 1}};

struct OpSpec {
    OpKind kind = OpKind::Add;
    Kernel kernel{};
    InputSlot slot = InputSlot::PrevCell; ///< meaningful for InputRef only

    bool is_conv() const
    {
        return kind == OpKind::PointwiseConv || kind == OpKind::DepthwiseConv
            || kind == OpKind::SeparableConv || kind == OpKind::InverseSeparableConv || kind == OpKind::Conv;
    }

    friend bool operator==(const OpSpec&, const OpSpec&) = default;
};

std::string_view to_string(OpKind kind);
OpKind op_kind_from_string(std::string_view name);

/// Short name of an operation, e.g. "pw1x1", "dw3x5", "sep7x1", "isep5x5", "add".
std::string op_mnemonic(const OpSpec& op);

/// Every convolution variant in the search space: 1 pointwise, 6 depthwise and
/// 12 separable (6 kernels in each order).
const std::vector<OpSpec>& conv_catalog();

// ---------------------------------------------------------------------------
// Symbols

using GeneId = std::uint32_t;

/// Entry of the fixed operation-symbol table. A convolution appears twice:
/// once as a unary function and once as a leaf that reads the cell's
/// primary input.
struct SymbolInfo {
    OpSpec op;
    int arity = 0;
    bool leaf = false;
    std::string mnemonic;
};

const std::vector<SymbolInfo>& symbol_table();

/// One genotype position: either an entry of the symbol table or a reference
/// to a gene of the matching pool.
struct Symbol {
    enum class Kind : std::uint8_t { Op, Gene };
    Kind kind = Kind::Op;
    std::uint32_t id = 0;

    static Symbol op(std::uint32_t index) { return {Kind::Op, index}; }
    static Symbol gene(GeneId gene) { return {Kind::Gene, gene}; }

    bool is_gene() const { return kind == Kind::Gene; }

    friend bool operator==(const Symbol&, const Symbol&) = default;
    friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

/// Symbol id of a table entry. Throws std::out_of_range when absent.
Symbol op_symbol(OpKind kind, Kernel kernel = {1, 1}, bool leaf = false);
Symbol input_symbol(InputSlot slot);

int arity_of(Symbol s);
const SymbolInfo& info_of(Symbol s);
std::string mnemonic(Symbol s);

/// Inverse of mnemonic(); nullopt for unknown text.
std::optional<Symbol> parse_symbol(std::string_view text);

// ---------------------------------------------------------------------------
// Alphabets

enum class Context : std::uint8_t { NormalCell, ReductionCell, NormalGene, ReductionGene };

std::string_view to_string(Context context);
Context context_from_string(std::string_view name);

inline bool is_cell_context(Context c) { return c == Context::NormalCell || c == Context::ReductionCell; }
inline bool is_reduction_context(Context c) { return c == Context::ReductionCell || c == Context::ReductionGene; }

/// Gene context that supplies the terminals of a cell context.
Context gene_context_for(Context cell);

struct Alphabet {
    Context context = Context::NormalCell;
    std::vector<Symbol> functions;
    /// Concrete terminals. For cell contexts this holds the bound gene
    /// references and may be empty, in which case any gene reference counts.
    std::vector<Symbol> terminals;
    bool gene_terminals = false;
    int max_arity = 2;
    int head_len = 1;

    int tail_len() const { return head_len * (max_arity - 1) + 1; }
    int length() const { return head_len + tail_len(); }

    bool is_function(Symbol s) const;
    bool is_terminal(Symbol s) const;

    /// Copy of a cell alphabet whose terminals are exactly `genes`.
    Alphabet with_genes(std::span<const GeneId> genes) const;
};

/// Alphabet of a context with the given head length.
Alphabet alphabet_for(Context context, int head_len);

// ---------------------------------------------------------------------------
// Configuration

enum class DatasetProfile : std::uint8_t { Cifar, ImageNetMobile };

std::string_view to_string(DatasetProfile profile);
DatasetProfile profile_from_string(std::string_view name);

struct Budget {
    enum class Kind : std::uint8_t { Generations, Seconds };
    Kind kind = Kind::Generations;
    std::int64_t generations = 50;
    double seconds = 86400.0;

    friend bool operator==(const Budget&, const Budget&) = default;
};

struct SearchConfig {
    int population_size = 10;     ///< individuals kept per generation
    int reduction_pool_init = 10; ///< initial reduction cells
    int gene_pool_init = 50;
    int gene_pool_max = 100;
    int gene_children_min = 2;
    int gene_children_max = 10;
    int epochs_max = 10;
    double reward_fraction = 0.75;
    int cell_head_len = 4;
    int gene_head_len = 1;
    std::int64_t param_limit = 300000;
    int search_width = 16;
    int full_width = 64;
    int normal_repeats = 3;
    int classes = 10;
    DatasetProfile dataset_profile = DatasetProfile::Cifar;
    Budget budget{};
    std::uint64_t rng_seed = 0;
    int tournament_size = 3;
    int max_spawn_retries = 100;
    int eval_workers = 1;
    OperatorRates rates{};

    int cell_tail_len() const { return cell_head_len + 1; }
    int gene_tail_len() const { return gene_head_len + 1; }
    int head_len_for(Context c) const { return is_cell_context(c) ? cell_head_len : gene_head_len; }

    friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

SearchConfig default_config();

/// Throws ConfigError naming every field that is out of range.
void validate_config(const SearchConfig& config);

} // namespace cellgep
