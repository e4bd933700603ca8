#include "cellgep/compiler.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace cellgep {

std::string_view to_string(CellKind kind)
{
    return kind == CellKind::Normal ? "normal" : "reduction";
}

CellKind cell_kind_from_string(std::string_view name)
{
    if (name == "normal") {
        return CellKind::Normal;
    }
    if (name == "reduction") {
        return CellKind::Reduction;
    }
    throw std::invalid_argument("unknown cell kind '" + std::string(name) + "'");
}

bool CellGraph::uses_input(InputSlot slot) const
{
    return std::any_of(nodes.begin(), nodes.end(),
                       [slot](const CellNode& n) { return n.is_input() && n.op.slot == slot; });
}

namespace {

std::string shape_key(const OpSpec& op, int in, int out, int stride)
{
    return op_mnemonic(op) + "." + std::to_string(in) + "x" + std::to_string(out) + ".s" + std::to_string(stride);
}

std::string gene_node_key(const std::string& gene_key, int local, int in, int out)
{
    return gene_key + "." + std::to_string(local) + "." + std::to_string(in) + "x" + std::to_string(out);
}

// "ng12.3.16x16" -> "ng12.3"
std::string strip_channels(const std::string& key)
{
    const auto dot = key.rfind('.');
    return dot == std::string::npos ? key : key.substr(0, dot);
}

CellKind kind_of(Context context)
{
    return context == Context::ReductionCell ? CellKind::Reduction : CellKind::Normal;
}

class CellBuilder {
public:
    CellBuilder(const CellTemplate& cell, int base_width)
        : cell_(cell), kind_(kind_of(cell.context)), width_(base_width),
          gene_context_(gene_context_for(cell.context))
    {
    }

    CellGraph build()
    {
        CellGraph g;
        g.kind = kind_;
        g.base_width = width_;
        g.output = cell_node(cell_.tree.root);
        g.nodes = std::move(nodes_);
        return g;
    }

private:
    int push(CellNode node, int scale)
    {
        node.id = static_cast<int>(nodes_.size());
        nodes_.push_back(std::move(node));
        scales_.push_back(scale);
        return nodes_.back().id;
    }

    int input(InputSlot slot)
    {
        auto& cached = inputs_[static_cast<int>(slot)];
        if (cached < 0) {
            CellNode n;
            n.op = OpSpec{OpKind::InputRef, {1, 1}, slot};
            n.in_channels = n.out_channels = width_;
            cached = push(std::move(n), 0);
        }
        return cached;
    }

    int conv(const OpSpec& op, int in, GeneId gene, int local)
    {
        const auto& src = nodes_[static_cast<std::size_t>(in)];
        CellNode n;
        n.op = op;
        n.in_channels = src.out_channels;
        n.out_channels = op.kind == OpKind::DepthwiseConv ? src.out_channels : width_;
        n.stride = (kind_ == CellKind::Reduction && scales_[static_cast<std::size_t>(in)] == 0) ? 2 : 1;
        n.inputs = {in};
        n.gene = gene;
        n.weight_key = gene_node_key(gene_weight_key(gene_context_, gene), local, n.in_channels, n.out_channels);
        n.block_key = shape_key(op, n.in_channels, n.out_channels, n.stride);
        const int scale = scales_[static_cast<std::size_t>(in)] + (n.stride == 2 ? 1 : 0);
        return push(std::move(n), scale);
    }

    int combine(OpKind kind, int a, int b, std::optional<GeneId> gene)
    {
        const auto& na = nodes_[static_cast<std::size_t>(a)];
        const auto& nb = nodes_[static_cast<std::size_t>(b)];
        CellNode n;
        n.op = OpSpec{kind};
        n.out_channels = kind == OpKind::Concat ? na.out_channels + nb.out_channels
                                                : std::max(na.out_channels, nb.out_channels);
        n.in_channels = n.out_channels;
        n.inputs = {a, b};
        n.gene = gene;
        const int scale = std::max(scales_[static_cast<std::size_t>(a)], scales_[static_cast<std::size_t>(b)]);
        return push(std::move(n), scale);
    }

    int gene_node(const ExpressionTree& tree, int idx, GeneId gene)
    {
        const auto& tn = tree.at(idx);
        if (tn.symbol.is_gene()) {
            throw CompileError("gene " + gene_weight_key(gene_context_, gene) + " references another gene");
        }
        const auto& info = info_of(tn.symbol);
        switch (info.op.kind) {
        case OpKind::InputRef:
            if (kind_ == CellKind::Reduction) {
                throw CompileError("reduction gene " + gene_weight_key(gene_context_, gene)
                                   + " reads a cell input directly (alphabet violation)");
            }
            return input(info.op.slot);
        case OpKind::Add:
        case OpKind::Concat: {
            const int a = gene_node(tree, tn.children.at(0), gene);
            const int b = gene_node(tree, tn.children.at(1), gene);
            return combine(info.op.kind, a, b, gene);
        }
        default:
            break;
        }
        if (!info.op.is_conv()) {
            throw CompileError("unsupported symbol '" + info.mnemonic + "' in gene");
        }
        const int src = info.leaf ? input(InputSlot::PrevCell) : gene_node(tree, tn.children.at(0), gene);
        return conv(info.op, src, gene, idx);
    }

    int gene(GeneId id)
    {
        if (auto it = gene_out_.find(id); it != gene_out_.end()) {
            return it->second;
        }
        auto it = cell_.genes.find(id);
        if (it == cell_.genes.end()) {
            throw CompileError("dangling gene reference " + gene_weight_key(gene_context_, id));
        }
        const int out = gene_node(it->second, it->second.root, id);
        gene_out_.emplace(id, out);
        return out;
    }

    int cell_node(int idx)
    {
        const auto& tn = cell_.tree.at(idx);
        if (tn.symbol.is_gene()) {
            return gene(tn.symbol.id);
        }
        const auto kind = info_of(tn.symbol).op.kind;
        if (kind != OpKind::Add && kind != OpKind::Concat) {
            throw CompileError("cell tree holds non-combinator '" + mnemonic(tn.symbol) + "'");
        }
        const int a = cell_node(tn.children.at(0));
        const int b = cell_node(tn.children.at(1));
        return combine(kind, a, b, std::nullopt);
    }

    const CellTemplate& cell_;
    CellKind kind_;
    int width_;
    Context gene_context_;
    std::vector<CellNode> nodes_;
    std::vector<int> scales_;
    int inputs_[2] = {-1, -1};
    std::map<GeneId, int> gene_out_;
};

CellNode projection_node(int input, int in_channels, int out_channels, int stride)
{
    CellNode p;
    p.op = OpSpec{OpKind::PointwiseConv, {1, 1}};
    p.projection = true;
    p.in_channels = in_channels;
    p.out_channels = out_channels;
    p.stride = stride;
    p.inputs = {input};
    p.block_key = shape_key(p.op, in_channels, out_channels, stride);
    p.weight_key = p.block_key;
    return p;
}

} // namespace

CellTemplate make_cell_template(const Genotype& cell, const GenePool& pool)
{
    if (!is_cell_context(cell.context)) {
        throw CompileError("make_cell_template: not a cell genotype");
    }
    if (gene_context_for(cell.context) != pool.context()) {
        throw CompileError("make_cell_template: " + std::string(to_string(cell.context)) + " cannot use a "
                           + std::string(to_string(pool.context())) + " pool");
    }
    CellTemplate t;
    t.context = cell.context;
    t.tree = decode(cell);
    for (const auto& node : t.tree.nodes) {
        if (!node.symbol.is_gene()) {
            continue;
        }
        const GeneId id = node.symbol.id;
        if (t.genes.count(id) != 0) {
            continue;
        }
        if (!pool.contains(id)) {
            throw CompileError("dangling gene reference " + gene_weight_key(pool.context(), id));
        }
        const auto& g = pool.at(id).genotype;
        if (!is_valid(g, pool.alphabet())) {
            throw CompileError("gene " + gene_weight_key(pool.context(), id) + " is not valid for "
                               + std::string(to_string(pool.context())));
        }
        t.genes.emplace(id, decode(g));
    }
    return t;
}

CellGraph compile_cell(const CellTemplate& cell, int base_width)
{
    if (base_width < 1) {
        throw CompileError("compile_cell: base width must be positive");
    }
    return insert_projections(CellBuilder(cell, base_width).build());
}

CellGraph compile_cell(const Genotype& cell, const GenePool& pool, int base_width)
{
    return compile_cell(make_cell_template(cell, pool), base_width);
}

CellGraph insert_projections(CellGraph graph)
{
    std::vector<CellNode> out;
    out.reserve(graph.nodes.size() + 4);
    std::vector<int> remap(graph.nodes.size(), -1);
    const auto channels = [&out](int id) { return out[static_cast<std::size_t>(id)].out_channels; };
    const auto emit = [&out](CellNode n) {
        n.id = static_cast<int>(out.size());
        out.push_back(std::move(n));
        return out.back().id;
    };

    for (const auto& old : graph.nodes) {
        CellNode n = old;
        for (auto& in : n.inputs) {
            in = remap.at(static_cast<std::size_t>(in));
        }
        switch (n.op.kind) {
        case OpKind::InputRef:
            break;
        case OpKind::Add: {
            int& a = n.inputs.at(0);
            int& b = n.inputs.at(1);
            if (channels(a) != channels(b)) {
                int& smaller = channels(a) < channels(b) ? a : b;
                const int larger = std::max(channels(a), channels(b));
                smaller = emit(projection_node(smaller, channels(smaller), larger, 1));
            }
            n.in_channels = n.out_channels = channels(a);
            break;
        }
        case OpKind::Concat:
            n.in_channels = n.out_channels = channels(n.inputs.at(0)) + channels(n.inputs.at(1));
            break;
        default:
            n.in_channels = channels(n.inputs.at(0));
            if (!n.projection) {
                n.out_channels = n.op.kind == OpKind::DepthwiseConv ? n.in_channels : graph.base_width;
                if (n.gene) {
                    n.weight_key = strip_channels(n.weight_key) + "." + std::to_string(n.in_channels) + "x"
                                 + std::to_string(n.out_channels);
                }
                n.block_key = shape_key(n.op, n.in_channels, n.out_channels, n.stride);
            }
            break;
        }
        remap[static_cast<std::size_t>(old.id)] = emit(std::move(n));
    }

    int root = remap.at(static_cast<std::size_t>(graph.output));
    if (channels(root) != graph.required_output_channels()) {
        root = emit(projection_node(root, channels(root), graph.required_output_channels(), 1));
    }
    graph.nodes = std::move(out);
    graph.output = root;
    return graph;
}

// ---------------------------------------------------------------------------

std::int64_t block_params(const OpSpec& op, int in_channels, int out_channels)
{
    const std::int64_t cin = in_channels;
    const std::int64_t cout = out_channels;
    const std::int64_t k = static_cast<std::int64_t>(op.kernel.kh) * op.kernel.kw;
    switch (op.kind) {
    case OpKind::PointwiseConv: return cin * cout + 2 * cout;
    case OpKind::DepthwiseConv: return k * cin + 2 * cin;
    case OpKind::SeparableConv: return (cin * cout + 2 * cout) + (k * cout + 2 * cout);
    case OpKind::InverseSeparableConv: return (k * cin + 2 * cin) + (cin * cout + 2 * cout);
    case OpKind::Conv: return k * cin * cout + 2 * cout;
    default: return 0;
    }
}

std::int64_t count_params(const CellGraph& graph)
{
    std::int64_t total = 0;
    for (const auto& n : graph.nodes) {
        total += block_params(n.op, n.in_channels, n.out_channels);
    }
    return total;
}

ConvBlockSpec make_block(const OpSpec& op, int in_channels, int out_channels, int stride, bool has_relu,
                         std::string weight_key)
{
    ConvBlockSpec b;
    b.op = op;
    b.in_channels = in_channels;
    b.out_channels = out_channels;
    b.stride = stride;
    b.has_relu = has_relu;
    b.param_count = block_params(op, in_channels, out_channels);
    b.weight_key = std::move(weight_key);
    return b;
}

int ModelDescriptor::stem_scale() const
{
    int scale = 0;
    for (const auto& b : stem) {
        scale += b.stride == 2 ? 1 : 0;
    }
    return scale;
}

ModelDescriptor assemble_network(const CellTemplate& normal, const CellTemplate& reduction, DatasetProfile profile,
                                 int width, int repeats, int classes)
{
    if (normal.context != Context::NormalCell || reduction.context != Context::ReductionCell) {
        throw CompileError("assemble_network: expected a normal and a reduction cell");
    }
    if (width < 2 || repeats < 1 || classes < 1) {
        throw CompileError("assemble_network: width, repeats and classes must be positive");
    }
    ModelDescriptor d;
    d.dataset_profile = profile;
    d.width = width;
    if (profile == DatasetProfile::Cifar) {
        d.stem.push_back(make_block(kStemConv, d.input_channels, width, 1, false, "stem.0"));
    } else {
        if (width % 2 != 0) {
            throw CompileError("assemble_network: imagenet_mobile profile needs an even width");
        }
        const int half = width / 2;
        d.stem.push_back(make_block(kStemConv, d.input_channels, half, 2, false, "stem.0"));
        d.stem.push_back(make_block(kStemConv, half, width, 2, true, "stem.1"));
        d.stem.push_back(make_block(kStemConv, width, width, 2, true, "stem.2"));
    }
    for (int s = 0; s < kStageCount; ++s) {
        const int c = width << s;
        Stage stage;
        stage.normal_cell = compile_cell(normal, c);
        stage.repeats = repeats;
        if (s + 1 < kStageCount) {
            stage.reduction_cell = compile_cell(reduction, c);
        }
        d.stages.push_back(std::move(stage));
    }
    const int final_width = width << (kStageCount - 1);
    d.head.in_features = final_width;
    d.head.classes = classes;
    d.head.param_count = 2LL * final_width + static_cast<std::int64_t>(final_width) * classes + classes;
    d = wire_cell_inputs(std::move(d));
    d.total_params = count_params(d);
    return d;
}

ModelDescriptor wire_cell_inputs(ModelDescriptor d)
{
    d.cells.clear();
    struct Source {
        int channels;
        int scale;
    };
    const Source stem{d.stem_channels(), 0};
    const auto source = [&](int id) {
        if (id == kStemSource) {
            return stem;
        }
        const auto& c = d.cells.at(static_cast<std::size_t>(id));
        return Source{c.out_channels, c.output_scale};
    };

    int prev = kStemSource;
    int prev_prev = kStemSource;
    const auto place = [&](int stage, const CellGraph& graph) {
        CellInstance inst;
        inst.id = static_cast<int>(d.cells.size());
        inst.stage = stage;
        inst.kind = graph.kind;
        inst.prev = prev;
        inst.prev_prev = prev_prev;
        const Source p = source(prev);
        const Source pp = source(prev_prev);
        inst.in_channels = p.channels;
        inst.input_scale = p.scale;
        if (graph.uses_input(InputSlot::PrevPrevCell)) {
            if (pp.scale < p.scale) {
                inst.prev_prev_projection
                    = make_block(OpSpec{OpKind::PointwiseConv}, pp.channels, graph.base_width, 2, true,
                                 shape_key(OpSpec{OpKind::PointwiseConv}, pp.channels, graph.base_width, 2));
            } else if (pp.channels != graph.base_width) {
                inst.prev_prev_projection
                    = make_block(OpSpec{OpKind::PointwiseConv}, pp.channels, graph.base_width, 1, true,
                                 shape_key(OpSpec{OpKind::PointwiseConv}, pp.channels, graph.base_width, 1));
            }
        }
        inst.out_channels = graph.output_channels();
        inst.output_scale = p.scale + (graph.kind == CellKind::Reduction ? 1 : 0);
        d.cells.push_back(std::move(inst));
        prev_prev = prev;
        prev = d.cells.back().id;
    };

    for (int s = 0; s < static_cast<int>(d.stages.size()); ++s) {
        const auto& stage = d.stages[static_cast<std::size_t>(s)];
        for (int r = 0; r < stage.repeats; ++r) {
            place(s, stage.normal_cell);
        }
        if (stage.reduction_cell) {
            place(s, *stage.reduction_cell);
        }
    }
    return d;
}

namespace {

const CellGraph& graph_of(const ModelDescriptor& d, const CellInstance& inst)
{
    const auto& stage = d.stages.at(static_cast<std::size_t>(inst.stage));
    if (inst.kind == CellKind::Normal) {
        return stage.normal_cell;
    }
    if (!stage.reduction_cell) {
        throw CompileError("cell instance " + std::to_string(inst.id) + " refers to a missing reduction cell");
    }
    return *stage.reduction_cell;
}

} // namespace

std::int64_t count_params(const ModelDescriptor& d)
{
    std::int64_t total = 0;
    for (const auto& b : d.stem) {
        total += block_params(b.op, b.in_channels, b.out_channels);
    }
    for (const auto& inst : d.cells) {
        total += count_params(graph_of(d, inst));
        if (inst.prev_prev_projection) {
            const auto& p = *inst.prev_prev_projection;
            total += block_params(p.op, p.in_channels, p.out_channels);
        }
    }
    const std::int64_t f = d.head.in_features;
    total += (d.head.final_bn_relu ? 2 * f : 0) + f * d.head.classes + d.head.classes;
    return total;
}

std::vector<std::string> weight_keys(const ModelDescriptor& d)
{
    std::set<std::string> keys;
    for (const auto& b : d.stem) {
        keys.insert(b.weight_key);
    }
    const auto add_graph = [&keys](const CellGraph& g) {
        for (const auto& n : g.nodes) {
            if (!n.weight_key.empty()) {
                keys.insert(n.weight_key);
            }
            if (!n.block_key.empty()) {
                keys.insert(n.block_key);
            }
        }
    };
    for (const auto& stage : d.stages) {
        add_graph(stage.normal_cell);
        if (stage.reduction_cell) {
            add_graph(*stage.reduction_cell);
        }
    }
    for (const auto& inst : d.cells) {
        if (inst.prev_prev_projection) {
            keys.insert(inst.prev_prev_projection->weight_key);
        }
    }
    if (d.head.final_bn_relu) {
        keys.insert("head.bn." + std::to_string(d.head.in_features));
    }
    keys.insert("head.fc." + std::to_string(d.head.in_features) + "x" + std::to_string(d.head.classes));
    return {keys.begin(), keys.end()};
}

// ---------------------------------------------------------------------------

std::vector<std::string> check_cell_graph(const CellGraph& g)
{
    std::vector<std::string> errs;
    const int n = static_cast<int>(g.nodes.size());
    const auto fail = [&errs](const CellNode& node, const std::string& what) {
        errs.push_back("node " + std::to_string(node.id) + " (" + op_mnemonic(node.op) + "): " + what);
    };
    if (n == 0) {
        errs.emplace_back("cell graph has no nodes");
        return errs;
    }
    if (g.output < 0 || g.output >= n) {
        errs.push_back("output node " + std::to_string(g.output) + " out of range");
        return errs;
    }
    std::vector<int> scale(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        const auto& node = g.nodes[static_cast<std::size_t>(i)];
        if (node.id != i) {
            fail(node, "id does not match its position " + std::to_string(i));
            return errs;
        }
        for (int in : node.inputs) {
            if (in < 0 || in >= i) {
                fail(node, "input " + std::to_string(in) + " is not an earlier node (cycle or dangling edge)");
                return errs;
            }
        }
        const auto input = [&](std::size_t k) -> const CellNode& { return g.nodes[static_cast<std::size_t>(node.inputs[k])]; };
        const auto input_scale = [&](std::size_t k) { return scale[static_cast<std::size_t>(node.inputs[k])]; };
        if (node.stride != 1 && node.stride != 2) {
            fail(node, "stride must be 1 or 2");
        }
        if (node.stride == 2 && g.kind == CellKind::Normal) {
            fail(node, "normal cells must not downsample");
        }
        switch (node.op.kind) {
        case OpKind::InputRef:
            if (!node.inputs.empty()) {
                fail(node, "input reference with inputs");
            }
            if (node.out_channels != g.base_width) {
                fail(node, "cell input must carry " + std::to_string(g.base_width) + " channels");
            }
            if (g.kind == CellKind::Reduction && node.op.slot == InputSlot::PrevPrevCell) {
                fail(node, "reduction cells read only the previous cell");
            }
            break;
        case OpKind::Add:
        case OpKind::Concat: {
            if (node.inputs.size() != 2) {
                fail(node, "needs exactly two inputs");
                break;
            }
            const int ca = input(0).out_channels;
            const int cb = input(1).out_channels;
            if (node.op.kind == OpKind::Add && ca != cb) {
                fail(node, "input channels " + std::to_string(ca) + " and " + std::to_string(cb) + " differ");
            }
            const int expect = node.op.kind == OpKind::Add ? ca : ca + cb;
            if (node.out_channels != expect) {
                fail(node, "output channels " + std::to_string(node.out_channels) + ", expected "
                               + std::to_string(expect));
            }
            if (input_scale(0) != input_scale(1)) {
                fail(node, "inputs have different spatial scales");
            }
            scale[static_cast<std::size_t>(i)] = std::max(input_scale(0), input_scale(1));
            break;
        }
        default: {
            if (!node.op.is_conv() || node.op.kind == OpKind::Conv) {
                fail(node, "operation not allowed inside a cell");
                break;
            }
            if (node.inputs.size() != 1) {
                fail(node, "convolution needs exactly one input");
                break;
            }
            if (node.in_channels != input(0).out_channels) {
                fail(node, "in_channels " + std::to_string(node.in_channels) + " but input carries "
                               + std::to_string(input(0).out_channels));
            }
            if (node.op.kind == OpKind::DepthwiseConv && node.out_channels != node.in_channels) {
                fail(node, "depthwise convolution cannot change channels");
            }
            if (!node.projection && node.op.kind != OpKind::DepthwiseConv && node.out_channels != g.base_width) {
                fail(node, "projecting convolution must output the base width");
            }
            if (node.op.kind == OpKind::PointwiseConv && node.op.kernel != Kernel{1, 1}) {
                fail(node, "pointwise kernel must be 1x1");
            }
            scale[static_cast<std::size_t>(i)] = input_scale(0) + (node.stride == 2 ? 1 : 0);
            break;
        }
        }
    }

    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<int> stack{g.output};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (seen[static_cast<std::size_t>(id)]) {
            continue;
        }
        seen[static_cast<std::size_t>(id)] = true;
        for (int in : g.nodes[static_cast<std::size_t>(id)].inputs) {
            stack.push_back(in);
        }
    }
    for (int i = 0; i < n; ++i) {
        if (!seen[static_cast<std::size_t>(i)]) {
            fail(g.nodes[static_cast<std::size_t>(i)], "not reachable from the output");
        }
    }

    const auto& out = g.at(g.output);
    if (out.out_channels != g.required_output_channels()) {
        fail(out, "cell output carries " + std::to_string(out.out_channels) + " channels, expected "
                      + std::to_string(g.required_output_channels()));
    }
    const int want_scale = g.kind == CellKind::Reduction ? 1 : 0;
    if (scale[static_cast<std::size_t>(g.output)] != want_scale) {
        fail(out, g.kind == CellKind::Reduction ? "reduction output is not downsampled exactly once"
                                                : "normal cell output changes spatial size");
    }
    return errs;
}

std::vector<std::string> check_descriptor(const ModelDescriptor& d)
{
    std::vector<std::string> errs;
    const auto append = [&errs](const std::string& where, const std::vector<std::string>& inner) {
        for (const auto& e : inner) {
            errs.push_back(where + ": " + e);
        }
    };
    if (d.stages.size() != static_cast<std::size_t>(kStageCount)) {
        errs.push_back("expected " + std::to_string(kStageCount) + " stages");
    }
    for (std::size_t s = 0; s < d.stages.size(); ++s) {
        const auto& stage = d.stages[s];
        const int c = d.width << s;
        const std::string where = "stage " + std::to_string(s);
        if (stage.normal_cell.kind != CellKind::Normal) {
            errs.push_back(where + ": normal_cell has reduction kind");
        }
        if (stage.normal_cell.base_width != c) {
            errs.push_back(where + ": normal cell width " + std::to_string(stage.normal_cell.base_width)
                           + ", expected " + std::to_string(c));
        }
        append(where + " normal cell", check_cell_graph(stage.normal_cell));
        if (stage.reduction_cell) {
            if (stage.reduction_cell->kind != CellKind::Reduction) {
                errs.push_back(where + ": reduction_cell has normal kind");
            }
            if (stage.reduction_cell->base_width != c) {
                errs.push_back(where + ": reduction cell width mismatch");
            }
            append(where + " reduction cell", check_cell_graph(*stage.reduction_cell));
        }
        if (stage.repeats < 1) {
            errs.push_back(where + ": repeats must be positive");
        }
    }
    if (!errs.empty()) {
        return errs;
    }
    if (d.stem_channels() != d.width) {
        errs.push_back("stem outputs " + std::to_string(d.stem_channels()) + " channels, expected "
                       + std::to_string(d.width));
    }
    const ModelDescriptor rewired = wire_cell_inputs(d);
    if (rewired.cells != d.cells) {
        errs.emplace_back("cell wiring does not match the stage layout");
    }
    for (const auto& inst : d.cells) {
        const auto& g = graph_of(d, inst);
        if (inst.in_channels != g.base_width) {
            errs.push_back("cell " + std::to_string(inst.id) + ": receives " + std::to_string(inst.in_channels)
                           + " channels but is built for " + std::to_string(g.base_width));
        }
    }
    if (!d.cells.empty() && d.head.in_features != d.cells.back().out_channels) {
        errs.emplace_back("classifier input does not match the last cell");
    }
    if (d.total_params != count_params(d)) {
        errs.push_back("total_params " + std::to_string(d.total_params) + " disagrees with the blocks ("
                       + std::to_string(count_params(d)) + ")");
    }
    return errs;
}

} // namespace cellgep
