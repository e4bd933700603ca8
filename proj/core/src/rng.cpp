#include "cellgep/rng.hpp"

#include <sstream>
#include <stdexcept>

namespace cellgep {

std::uint64_t Rng::uniform_index(std::uint64_t n)
{
    if (n == 0) {
        throw std::invalid_argument("Rng::uniform_index: empty range");
    }
    // Rejection keeps every residue equally likely.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
    std::uint64_t draw = engine_();
    while (draw > limit) {
        draw = engine_();
    }
    return draw % n;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi)
{
    if (hi < lo) {
        throw std::invalid_argument("Rng::uniform_int: hi < lo");
    }
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(uniform_index(span));
}

double Rng::uniform01()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

bool Rng::bernoulli(double p)
{
    if (p <= 0.0) {
        return false;
    }
    if (p >= 1.0) {
        return true;
    }
    return uniform01() < p;
}

Rng Rng::fork()
{
    return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL);
}

std::string Rng::state() const
{
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void Rng::restore(const std::string& state)
{
    std::istringstream in(state);
    std::mt19937_64 engine;
    in >> engine;
    if (in.fail()) {
        throw std::runtime_error("Rng::restore: malformed generator state");
    }
    engine_ = engine;
}

} // namespace cellgep
