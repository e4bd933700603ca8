#include "cellgep/fitness.hpp"

#include <cmath>
#include <set>

namespace cellgep {

namespace {

void append_graph(std::string& out, const CellGraph& g)
{
    out += to_string(g.kind);
    out += '{';
    for (const auto& n : g.nodes) {
        out += op_mnemonic(n.op);
        if (n.projection) {
            out += '!';
        }
        out += ':' + std::to_string(n.in_channels) + '>' + std::to_string(n.out_channels) + ":s"
             + std::to_string(n.stride) + '[';
        for (int in : n.inputs) {
            out += std::to_string(in) + ',';
        }
        out += "];";
    }
    out += "out=" + std::to_string(g.output) + '}';
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::string canonical_structure(const ModelDescriptor& d)
{
    std::string out = std::string(to_string(d.dataset_profile)) + "/w" + std::to_string(d.width) + "/c"
                    + std::to_string(d.head.classes) + "|";
    for (const auto& s : d.stages) {
        out += "x" + std::to_string(s.repeats);
        append_graph(out, s.normal_cell);
        if (s.reduction_cell) {
            append_graph(out, *s.reduction_cell);
        }
        out += '|';
    }
    return out;
}

std::uint64_t stable_hash(std::string_view text, std::uint64_t seed)
{
    // FNV-1a, then mixed with the seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h ^ splitmix64(seed));
}

double surrogate_base(const ModelDescriptor& d, std::uint64_t seed)
{
    const double u = static_cast<double>(stable_hash(canonical_structure(d), seed) >> 11) * 0x1.0p-53;
    std::set<std::string> kinds;
    if (!d.stages.empty()) {
        const auto collect = [&kinds](const CellGraph& g) {
            for (const auto& n : g.nodes) {
                if (n.is_conv() && !n.projection) {
                    kinds.insert(op_mnemonic(n.op));
                }
            }
        };
        collect(d.stages.front().normal_cell);
        if (d.stages.front().reduction_cell) {
            collect(*d.stages.front().reduction_cell);
        }
    }
    const double diversity = std::min(1.0, static_cast<double>(kinds.size()) / static_cast<double>(conv_catalog().size()));
    return 0.4 + 0.45 * u + 0.05 * diversity;
}

FitnessRecord surrogate_eval(const EvaluationRequest& request, std::uint64_t seed)
{
    FitnessRecord r;
    r.candidate_id = request.candidate_id;
    r.epochs = request.cumulative_epochs;
    const double progress = 1.0 - std::exp(-static_cast<double>(request.cumulative_epochs) / kSurrogateEpochScale);
    r.fitness = request.cumulative_epochs <= 0 ? 0.0 : surrogate_base(request.descriptor, seed) * progress;
    // Stand in for a trainer that saves every block it just trained.
    for (const auto& key : request.weight_keys) {
        r.updated_keys.push_back({key, r.fitness});
    }
    return r;
}

FitnessRecord SurrogateEvaluator::evaluate(const EvaluationRequest& request)
{
    return surrogate_eval(request, seed_);
}

// ---------------------------------------------------------------------------

void WeightStore::register_key(const std::string& key)
{
    if (entries_.count(key) == 0) {
        entries_.emplace(key, WeightStoreEntry{key, 0.0, default_blob_path(key), -1});
    }
}

const WeightStoreEntry& WeightStore::at(const std::string& key) const
{
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw std::out_of_range("weight store has no key '" + key + "'");
    }
    return it->second;
}

bool WeightStore::update(const std::string& key, double fitness, const std::string& blob_path, int generation)
{
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw std::out_of_range("weight store has no key '" + key + "'");
    }
    auto& e = it->second;
    if (!(fitness > e.best_fitness)) {
        return false;
    }
    e.best_fitness = fitness;
    e.blob_path = blob_path.empty() ? default_blob_path(key) : blob_path;
    e.updated_at = generation;
    return true;
}

void WeightStore::restore(std::vector<WeightStoreEntry> entries)
{
    entries_.clear();
    for (auto& e : entries) {
        const auto key = e.key;
        entries_.emplace(key, std::move(e));
    }
}

bool update_weight_store(WeightStore& store, const std::string& key, double fitness, const std::string& blob_path,
                         int generation)
{
    return store.update(key, fitness, blob_path, generation);
}

double relative_improvement(double acc_model, double acc_reference)
{
    if (!(acc_reference > 0.0)) {
        throw std::domain_error("relative_improvement: reference accuracy must be positive");
    }
    return 100.0 * (acc_model - acc_reference) / acc_reference;
}

} // namespace cellgep
