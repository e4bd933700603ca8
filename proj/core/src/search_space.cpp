#include "cellgep/search_space.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <unordered_map>

namespace cellgep {

std::string_view to_string(OpKind kind)
{
    switch (kind) {
    case OpKind::Add: return "add";
    case OpKind::Concat: return "concat";
    case OpKind::PointwiseConv: return "pointwise";
    case OpKind::DepthwiseConv: return "depthwise";
    case OpKind::SeparableConv: return "separable";
    case OpKind::InverseSeparableConv: return "inverse_separable";
    case OpKind::InputRef: return "input";
    case OpKind::Conv: return "conv";
    }
    return "?";
}

OpKind op_kind_from_string(std::string_view name)
{
    for (auto k : {OpKind::Add, OpKind::Concat, OpKind::PointwiseConv, OpKind::DepthwiseConv,
                   OpKind::SeparableConv, OpKind::InverseSeparableConv, OpKind::InputRef, OpKind::Conv}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw std::invalid_argument("unknown op kind '" + std::string(name) + "'");
}

std::string op_mnemonic(const OpSpec& op)
{
    const auto shape = [&op] { return std::to_string(op.kernel.kh) + "x" + std::to_string(op.kernel.kw); };
    switch (op.kind) {
    case OpKind::Add: return "add";
    case OpKind::Concat: return "cat";
    case OpKind::PointwiseConv: return "pw1x1";
    case OpKind::DepthwiseConv: return "dw" + shape();
    case OpKind::SeparableConv: return "sep" + shape();
    case OpKind::InverseSeparableConv: return "isep" + shape();
    case OpKind::InputRef: return op.slot == InputSlot::PrevCell ? "h1" : "h2";
    case OpKind::Conv: return "conv" + shape();
    }
    return "?";
}

const std::vector<OpSpec>& conv_catalog()
{
    static const std::vector<OpSpec> catalog = [] {
        std::vector<OpSpec> ops;
        ops.push_back({OpKind::PointwiseConv, {1, 1}});
        for (auto kind : {OpKind::DepthwiseConv, OpKind::SeparableConv, OpKind::InverseSeparableConv}) {
            for (auto k : kSpatialKernels) {
                ops.push_back({kind, k});
            }
        }
        return ops;
    }();
    return catalog;
}

// ---------------------------------------------------------------------------

const std::vector<SymbolInfo>& symbol_table()
{
    static const std::vector<SymbolInfo> table = [] {
        std::vector<SymbolInfo> t;
        t.push_back({{OpKind::Add}, 2, false, "add"});
        t.push_back({{OpKind::Concat}, 2, false, "cat"});
        for (const auto& op : conv_catalog()) {
            t.push_back({op, 1, false, op_mnemonic(op)});
        }
        for (const auto& op : conv_catalog()) {
            t.push_back({op, 0, true, op_mnemonic(op) + "(h)"});
        }
        for (auto slot : {InputSlot::PrevCell, InputSlot::PrevPrevCell}) {
            OpSpec in{OpKind::InputRef, {1, 1}, slot};
            t.push_back({in, 0, true, op_mnemonic(in)});
        }
        return t;
    }();
    return table;
}

namespace {

const std::unordered_map<std::string, std::uint32_t>& mnemonic_index()
{
    static const auto index = [] {
        std::unordered_map<std::string, std::uint32_t> m;
        const auto& t = symbol_table();
        for (std::uint32_t i = 0; i < t.size(); ++i) {
            m.emplace(t[i].mnemonic, i);
        }
        return m;
    }();
    return index;
}

} // namespace

Symbol op_symbol(OpKind kind, Kernel kernel, bool leaf)
{
    const auto& t = symbol_table();
    for (std::uint32_t i = 0; i < t.size(); ++i) {
        const auto& e = t[i];
        if (e.op.kind != kind || e.op.kind == OpKind::InputRef) {
            continue;
        }
        if (e.op.is_conv() && (e.op.kernel != kernel || e.leaf != leaf)) {
            continue;
        }
        return Symbol::op(i);
    }
    throw std::out_of_range("no symbol for " + std::string(to_string(kind)) + " "
                            + std::to_string(kernel.kh) + "x" + std::to_string(kernel.kw));
}

Symbol input_symbol(InputSlot slot)
{
    const auto& t = symbol_table();
    for (std::uint32_t i = 0; i < t.size(); ++i) {
        if (t[i].op.kind == OpKind::InputRef && t[i].op.slot == slot) {
            return Symbol::op(i);
        }
    }
    throw std::out_of_range("no input symbol");
}

const SymbolInfo& info_of(Symbol s)
{
    if (s.is_gene()) {
        throw std::invalid_argument("info_of: gene reference has no table entry");
    }
    return symbol_table().at(s.id);
}

int arity_of(Symbol s)
{
    return s.is_gene() ? 0 : info_of(s).arity;
}

std::string mnemonic(Symbol s)
{
    if (s.is_gene()) {
        return "g" + std::to_string(s.id);
    }
    if (s.id >= symbol_table().size()) {
        return "?" + std::to_string(s.id);
    }
    return symbol_table()[s.id].mnemonic;
}

std::optional<Symbol> parse_symbol(std::string_view text)
{
    if (text.size() > 1 && text.front() == 'g') {
        GeneId id = 0;
        const auto* first = text.data() + 1;
        const auto* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, id);
        if (ec == std::errc{} && ptr == last) {
            return Symbol::gene(id);
        }
        return std::nullopt;
    }
    const auto& index = mnemonic_index();
    if (auto it = index.find(std::string(text)); it != index.end()) {
        return Symbol::op(it->second);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Context context)
{
    switch (context) {
    case Context::NormalCell: return "normal_cell";
    case Context::ReductionCell: return "reduction_cell";
    case Context::NormalGene: return "normal_gene";
    case Context::ReductionGene: return "reduction_gene";
    }
    return "?";
}

Context context_from_string(std::string_view name)
{
    for (auto c : {Context::NormalCell, Context::ReductionCell, Context::NormalGene, Context::ReductionGene}) {
        if (to_string(c) == name) {
            return c;
        }
    }
    throw std::invalid_argument("unknown context '" + std::string(name) + "'");
}

Context gene_context_for(Context cell)
{
    switch (cell) {
    case Context::NormalCell: return Context::NormalGene;
    case Context::ReductionCell: return Context::ReductionGene;
    default: throw std::invalid_argument("gene_context_for: not a cell context");
    }
}

bool Alphabet::is_function(Symbol s) const
{
    return std::find(functions.begin(), functions.end(), s) != functions.end();
}

bool Alphabet::is_terminal(Symbol s) const
{
    if (s.is_gene()) {
        if (!gene_terminals) {
            return false;
        }
        return terminals.empty() || std::find(terminals.begin(), terminals.end(), s) != terminals.end();
    }
    return std::find(terminals.begin(), terminals.end(), s) != terminals.end();
}

Alphabet Alphabet::with_genes(std::span<const GeneId> genes) const
{
    if (!gene_terminals) {
        throw std::logic_error("with_genes: alphabet does not take gene terminals");
    }
    Alphabet bound = *this;
    bound.terminals.clear();
    bound.terminals.reserve(genes.size());
    for (auto g : genes) {
        bound.terminals.push_back(Symbol::gene(g));
    }
    return bound;
}

Alphabet alphabet_for(Context context, int head_len)
{
    Alphabet a;
    a.context = context;
    a.head_len = head_len;
    a.max_arity = 2;
    const auto& table = symbol_table();
    if (is_cell_context(context)) {
        a.functions = {op_symbol(OpKind::Add), op_symbol(OpKind::Concat)};
        a.gene_terminals = true;
        return a;
    }
    a.functions.push_back(op_symbol(OpKind::Add));
    for (std::uint32_t i = 0; i < table.size(); ++i) {
        const auto& e = table[i];
        if (!e.op.is_conv()) {
            continue;
        }
        (e.leaf ? a.terminals : a.functions).push_back(Symbol::op(i));
    }
    if (context == Context::NormalGene) {
        a.terminals.push_back(input_symbol(InputSlot::PrevCell));
        a.terminals.push_back(input_symbol(InputSlot::PrevPrevCell));
    }
    return a;
}

// ---------------------------------------------------------------------------

std::string_view to_string(DatasetProfile profile)
{
    return profile == DatasetProfile::Cifar ? "cifar" : "imagenet_mobile";
}

DatasetProfile profile_from_string(std::string_view name)
{
    if (name == "cifar") {
        return DatasetProfile::Cifar;
    }
    if (name == "imagenet_mobile" || name == "imagenet") {
        return DatasetProfile::ImageNetMobile;
    }
    throw std::invalid_argument("unknown dataset profile '" + std::string(name) + "'");
}

SearchConfig default_config()
{
    return SearchConfig{};
}

void validate_config(const SearchConfig& c)
{
    std::ostringstream err;
    const auto positive = [&err](const char* name, auto value) {
        if (value <= 0) {
            err << "  " << name << " must be positive (got " << value << ")\n";
        }
    };
    positive("population_size", c.population_size);
    positive("reduction_pool_init", c.reduction_pool_init);
    positive("gene_pool_init", c.gene_pool_init);
    positive("gene_pool_max", c.gene_pool_max);
    positive("gene_children_min", c.gene_children_min);
    positive("gene_children_max", c.gene_children_max);
    if (c.epochs_max < 3) {
        // A child gets up to two epochs in its first generation; it must not
        // die there or survivor selection can fall short of population_size.
        err << "  epochs_max must be at least 3 (got " << c.epochs_max << ")\n";
    }
    positive("cell_head_len", c.cell_head_len);
    positive("gene_head_len", c.gene_head_len);
    positive("param_limit", c.param_limit);
    positive("search_width", c.search_width);
    positive("full_width", c.full_width);
    positive("normal_repeats", c.normal_repeats);
    positive("classes", c.classes);
    positive("tournament_size", c.tournament_size);
    positive("max_spawn_retries", c.max_spawn_retries);
    positive("eval_workers", c.eval_workers);
    if (!(c.reward_fraction > 0.0 && c.reward_fraction < 1.0)) {
        err << "  reward_fraction must lie in (0,1) (got " << c.reward_fraction << ")\n";
    }
    if (c.gene_children_min > c.gene_children_max) {
        err << "  gene_children_min exceeds gene_children_max\n";
    }
    if (c.gene_pool_init > c.gene_pool_max) {
        err << "  gene_pool_init exceeds gene_pool_max\n";
    }
    if (c.budget.kind == Budget::Kind::Generations && c.budget.generations < 0) {
        err << "  budget.generations must be non-negative\n";
    }
    if (c.budget.kind == Budget::Kind::Seconds && !(c.budget.seconds >= 0.0)) {
        err << "  budget.seconds must be non-negative\n";
    }
    if (c.dataset_profile == DatasetProfile::ImageNetMobile && (c.search_width % 2 != 0 || c.full_width % 2 != 0)) {
        err << "  imagenet_mobile profile needs even widths\n";
    }
    for (double r : {c.rates.mutation_rate, c.rates.is_rate, c.rates.ris_rate, c.rates.one_point_rate,
                     c.rates.two_point_rate}) {
        if (!(r >= 0.0 && r <= 1.0)) {
            err << "  operator rates must lie in [0,1] (got " << r << ")\n";
        }
    }
    if (c.rates.is_element_lengths.empty()) {
        err << "  rates.is_element_lengths must not be empty\n";
    }
    for (int len : c.rates.is_element_lengths) {
        if (len < 1) {
            err << "  transposon lengths must be >= 1 (got " << len << ")\n";
        }
    }
    if (auto msg = err.str(); !msg.empty()) {
        throw ConfigError("invalid search configuration:\n" + msg);
    }
}

} // namespace cellgep
