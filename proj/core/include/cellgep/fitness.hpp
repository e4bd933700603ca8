#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellgep/compiler.hpp"

namespace cellgep {

struct EvaluationRequest {
    ModelDescriptor descriptor;
    int epochs_to_train = 1;
    int cumulative_epochs = 1; ///< epochs the candidate will have seen after this request
    std::uint64_t candidate_id = 0;
    std::vector<std::string> weight_keys;
    std::uint64_t seed = 0;
};

struct KeyFitness {
    std::string key;
    double fitness = 0.0;

    friend bool operator==(const KeyFitness&, const KeyFitness&) = default;
};

struct FitnessRecord {
    std::uint64_t candidate_id = 0;
    double fitness = 0.0; ///< validation accuracy in [0, 1]
    int epochs = 0;
    double wall_time = 0.0; ///< seconds
    std::vector<KeyFitness> updated_keys;
};

/// The evaluator could not produce a fitness (crash, timeout, trainer-side
/// error). The search assigns fitness 0 and carries on.
struct EvaluationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The trainer answered with something that is not a valid message.
struct ProtocolError : std::runtime_error {
    ProtocolError(const std::string& what, std::string raw) : std::runtime_error(what), raw_payload(std::move(raw)) {}
    std::string raw_payload;
};

/// Produces a fitness for a candidate network. Implementations must be safe
/// to call concurrently for different candidates.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual FitnessRecord evaluate(const EvaluationRequest& request) = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Surrogate

/// Structural text of a descriptor: op kinds, channels, strides and edges,
/// without gene ids or weight keys.
std::string canonical_structure(const ModelDescriptor& d);

std::uint64_t stable_hash(std::string_view text, std::uint64_t seed);

/// Architecture quality in [0.4, 0.9]: a seeded hash of the structure plus a
/// small bonus for the number of distinct convolution kinds used.
double surrogate_base(const ModelDescriptor& d, std::uint64_t seed);

/// base * (1 - exp(-cumulative_epochs / 3)). Deterministic.
FitnessRecord surrogate_eval(const EvaluationRequest& request, std::uint64_t seed);

inline constexpr double kSurrogateEpochScale = 3.0;

class SurrogateEvaluator final : public Evaluator {
public:
    explicit SurrogateEvaluator(std::uint64_t seed) : seed_(seed) {}
    FitnessRecord evaluate(const EvaluationRequest& request) override;
    std::string name() const override { return "surrogate"; }

private:
    std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Weight store

struct WeightStoreEntry {
    std::string key;
    double best_fitness = 0.0;
    std::string blob_path;
    int updated_at = -1; ///< generation of the last improvement, -1 if never

    friend bool operator==(const WeightStoreEntry&, const WeightStoreEntry&) = default;
};

/// Index of saved weight blobs keyed by gene instance or block class. The
/// blobs themselves belong to the trainer; only paths and fitness live here.
/// Updates are applied by the single-threaded generation loop.
class WeightStore {
public:
    explicit WeightStore(std::string directory = "weights") : directory_(std::move(directory)) {}

    const std::string& directory() const { return directory_; }
    std::string default_blob_path(const std::string& key) const { return directory_ + "/" + key + ".bin"; }

    /// No-op if already registered.
    void register_key(const std::string& key);
    bool contains(const std::string& key) const { return entries_.count(key) != 0; }
    const WeightStoreEntry& at(const std::string& key) const;
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, WeightStoreEntry>& entries() const { return entries_; }

    /// Replaces the entry iff `fitness` beats its best. Throws
    /// std::out_of_range for an unregistered key.
    bool update(const std::string& key, double fitness, const std::string& blob_path, int generation);

    void restore(std::vector<WeightStoreEntry> entries);

    friend bool operator==(const WeightStore&, const WeightStore&) = default;

private:
    std::string directory_;
    std::map<std::string, WeightStoreEntry> entries_;
};

bool update_weight_store(WeightStore& store, const std::string& key, double fitness, const std::string& blob_path,
                         int generation);

// ---------------------------------------------------------------------------
// Statistics

/// 100 * (acc_model - acc_reference) / acc_reference. Throws
/// std::domain_error when acc_reference <= 0.
double relative_improvement(double acc_model, double acc_reference);

} // namespace cellgep
