#pragma once

#include <optional>
#include <string>

#include "cellgep/serialization.hpp"

// Checked field access shared by the JSON readers. Every failure becomes a
// ParseError naming the field.

namespace cellgep::detail {

template <class T>
T field(const json& j, const char* key)
{
    if (!j.is_object()) {
        throw ParseError(std::string("expected an object holding '") + key + "'");
    }
    auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError(std::string("missing field '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
std::optional<T> optional_field(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return field<T>(j, key);
}

template <class Fn>
auto parse_enum(Fn&& fn, const std::string& text) -> decltype(fn(text))
{
    try {
        return fn(text);
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
}

} // namespace cellgep::detail
