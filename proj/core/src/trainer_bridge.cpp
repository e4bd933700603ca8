#include "cellgep/trainer_bridge.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace cellgep {

json make_eval_request(const EvaluationRequest& request, const TrainerOptions& options)
{
    return {{"type", "eval_request"},
            {"candidate_id", request.candidate_id},
            {"descriptor", to_json(request.descriptor)},
            {"epochs", request.epochs_to_train},
            {"cumulative_epochs", request.cumulative_epochs},
            {"weight_dir", options.weight_dir},
            {"weight_keys", request.weight_keys},
            {"dataset_profile", to_string(options.dataset_profile)},
            {"seed", request.seed}};
}

FitnessRecord parse_trainer_reply(const std::string& line, std::uint64_t candidate_id)
{
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("trainer reply is not JSON: ") + e.what(), line);
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        throw ProtocolError("trainer reply has no message type", line);
    }
    const auto type = j["type"].get<std::string>();
    const auto id_matches = [&] {
        return j.contains("candidate_id") && j["candidate_id"].is_number_unsigned()
            && j["candidate_id"].get<std::uint64_t>() == candidate_id;
    };
    if (type == "error") {
        if (!id_matches()) {
            throw ProtocolError("trainer error message for a different candidate", line);
        }
        throw EvaluationFailure("trainer reported: " + j.value("message", std::string("(no message)")));
    }
    if (type != "eval_result") {
        throw ProtocolError("unexpected trainer message type '" + type + "'", line);
    }
    if (!id_matches()) {
        throw ProtocolError("trainer result for a different candidate", line);
    }
    if (!j.contains("accuracy") || !j["accuracy"].is_number()) {
        throw ProtocolError("trainer result has no numeric accuracy", line);
    }
    FitnessRecord r;
    r.candidate_id = candidate_id;
    r.fitness = j["accuracy"].get<double>();
    if (!(r.fitness >= 0.0 && r.fitness <= 1.0)) {
        throw ProtocolError("trainer accuracy " + std::to_string(r.fitness) + " outside [0,1]", line);
    }
    if (j.contains("updated_keys")) {
        const auto& keys = j["updated_keys"];
        if (!keys.is_array()) {
            throw ProtocolError("updated_keys must be an array", line);
        }
        for (const auto& k : keys) {
            if (!k.is_object() || !k.contains("key") || !k["key"].is_string() || !k.contains("fitness")
                || !k["fitness"].is_number()) {
                throw ProtocolError("malformed updated_keys entry", line);
            }
            r.updated_keys.push_back({k["key"].get<std::string>(), k["fitness"].get<double>()});
        }
    }
    return r;
}

// ---------------------------------------------------------------------------

TrainerProcess::TrainerProcess(const std::string& command)
{
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0) {
        throw EvaluationFailure(std::string("pipe: ") + std::strerror(errno));
    }
    if (::pipe(out_pipe) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw EvaluationFailure(std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) {
            ::close(fd);
        }
        throw EvaluationFailure(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        // Own process group, so terminate() also reaches whatever the shell
        // or the trainer spawned.
        ::setpgid(0, 0);
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) {
            ::close(fd);
        }
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid); // also here, so the group exists before any kill
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

TrainerProcess::~TrainerProcess()
{
    terminate();
}

void TrainerProcess::terminate()
{
    if (to_child_ >= 0) {
        ::close(to_child_);
        to_child_ = -1;
    }
    if (from_child_ >= 0) {
        ::close(from_child_);
        from_child_ = -1;
    }
    if (pid_ > 0) {
        int status = 0;
        if (::waitpid(pid_, &status, WNOHANG) == 0) {
            ::kill(-pid_, SIGTERM);
            ::waitpid(pid_, &status, 0);
        } else {
            ::kill(-pid_, SIGTERM);
        }
        pid_ = -1;
    }
}

void TrainerProcess::send_line(const std::string& line)
{
    if (to_child_ < 0) {
        throw EvaluationFailure("trainer process is not running");
    }
    std::string data = line;
    data += '\n';
    std::size_t written = 0;
    while (written < data.size()) {
        const ssize_t n = ::write(to_child_, data.data() + written, data.size() - written);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw EvaluationFailure(std::string("writing to trainer failed: ") + std::strerror(errno));
        }
        written += static_cast<std::size_t>(n);
    }
}

std::optional<std::string> TrainerProcess::read_line(std::chrono::milliseconds timeout)
{
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        if (from_child_ < 0) {
            return std::nullopt;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            throw EvaluationFailure("trainer timed out");
        }
        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
        if (ready < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw EvaluationFailure(std::string("poll: ") + std::strerror(errno));
        }
        if (ready == 0) {
            continue;
        }
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw EvaluationFailure(std::string("reading from trainer failed: ") + std::strerror(errno));
        }
        if (n == 0) {
            return std::nullopt;
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

FitnessRecord external_eval(const EvaluationRequest& request, TrainerProcess& trainer, const TrainerOptions& options)
{
    const auto started = std::chrono::steady_clock::now();
    trainer.send_line(make_eval_request(request, options).dump());
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(options.timeout_seconds * 1000.0));
    auto line = trainer.read_line(timeout);
    if (!line) {
        throw EvaluationFailure("trainer exited before replying");
    }
    FitnessRecord r = parse_trainer_reply(*line, request.candidate_id);
    r.epochs = request.cumulative_epochs;
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return r;
}

// ---------------------------------------------------------------------------

ExternalEvaluator::ExternalEvaluator(TrainerOptions options) : options_(std::move(options))
{
    if (options_.command.empty()) {
        throw std::invalid_argument("ExternalEvaluator: trainer command is empty");
    }
    if (options_.max_processes < 1) {
        options_.max_processes = 1;
    }
    // A dead trainer must surface as EPIPE, not kill the engine.
    std::signal(SIGPIPE, SIG_IGN);
}

ExternalEvaluator::~ExternalEvaluator() = default;

std::unique_ptr<TrainerProcess> ExternalEvaluator::acquire()
{
    std::unique_lock lock(mutex_);
    available_.wait(lock, [this] { return !idle_.empty() || live_ < options_.max_processes; });
    if (!idle_.empty()) {
        auto t = std::move(idle_.back());
        idle_.pop_back();
        return t;
    }
    ++live_;
    lock.unlock();
    try {
        return std::make_unique<TrainerProcess>(options_.command);
    } catch (...) {
        std::lock_guard relock(mutex_);
        --live_;
        available_.notify_one();
        throw;
    }
}

void ExternalEvaluator::release(std::unique_ptr<TrainerProcess> trainer)
{
    std::lock_guard lock(mutex_);
    if (trainer && trainer->running()) {
        idle_.push_back(std::move(trainer));
    } else {
        --live_;
    }
    available_.notify_one();
}

FitnessRecord ExternalEvaluator::evaluate(const EvaluationRequest& request)
{
    auto trainer = acquire();
    try {
        FitnessRecord r = external_eval(request, *trainer, options_);
        release(std::move(trainer));
        return r;
    } catch (...) {
        // A failed trainer is replaced, even one that only reported an error:
        // it may hold on to device memory.
        trainer->terminate();
        release(std::move(trainer));
        throw;
    }
}

} // namespace cellgep
