#pragma once

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cellgep/fitness.hpp"
#include "cellgep/serialization.hpp"

namespace cellgep {

/// Settings shared by every trainer process the engine spawns.
struct TrainerOptions {
    std::string command;          ///< run through /bin/sh -c
    double timeout_seconds = 3600;
    std::string weight_dir = "weights";
    DatasetProfile dataset_profile = DatasetProfile::Cifar;
    std::uint64_t seed = 0;
    int max_processes = 1;
};

// Wire protocol: one JSON object per line on the trainer's stdin/stdout.
//
//   -> {"type":"eval_request","candidate_id":7,"descriptor":{...},"epochs":1,
//       "cumulative_epochs":3,"weight_dir":"...","weight_keys":[...],
//       "dataset_profile":"cifar","seed":42}
//   <- {"type":"eval_result","candidate_id":7,"accuracy":0.61,
//       "updated_keys":[{"key":"ng3.0.16x16","fitness":0.61}]}
//   <- {"type":"error","candidate_id":7,"message":"CUDA out of memory"}

json make_eval_request(const EvaluationRequest& request, const TrainerOptions& options);

/// Decodes one reply line. Throws EvaluationFailure for an "error" message
/// and ProtocolError (carrying the raw line) for anything malformed,
/// mismatched or out of range.
FitnessRecord parse_trainer_reply(const std::string& line, std::uint64_t candidate_id);

/// A child process spoken to over its standard streams. Not thread-safe;
/// ExternalEvaluator hands each one to a single caller at a time.
class TrainerProcess {
public:
    explicit TrainerProcess(const std::string& command);
    ~TrainerProcess();
    TrainerProcess(const TrainerProcess&) = delete;
    TrainerProcess& operator=(const TrainerProcess&) = delete;

    bool running() const { return pid_ > 0; }

    /// Throws EvaluationFailure if the pipe is closed.
    void send_line(const std::string& line);

    /// Next line without the newline; nullopt on EOF. Throws
    /// EvaluationFailure on timeout.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout);

    void terminate();

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

/// One request/reply exchange. Failures leave the weight store and search
/// state untouched; the caller decides what a failure means.
FitnessRecord external_eval(const EvaluationRequest& request, TrainerProcess& trainer, const TrainerOptions& options);

/// Evaluator backed by up to `max_processes` trainer processes, spawned on
/// demand and replaced after any failure.
class ExternalEvaluator final : public Evaluator {
public:
    explicit ExternalEvaluator(TrainerOptions options);
    ~ExternalEvaluator() override;

    FitnessRecord evaluate(const EvaluationRequest& request) override;
    std::string name() const override { return "external"; }

private:
    std::unique_ptr<TrainerProcess> acquire();
    void release(std::unique_ptr<TrainerProcess> trainer);

    TrainerOptions options_;
    std::mutex mutex_;
    std::condition_variable available_;
    std::vector<std::unique_ptr<TrainerProcess>> idle_;
    int live_ = 0;
};

} // namespace cellgep
