#pragma once

#include <stdexcept>
#include <string>

namespace specfi {

// Error categories map 1:1 onto CLI exit codes.
enum class errc {
    input = 2,      // usage / malformed input
    provider = 3,   // network, LLM or embedding backend failure
    invariant = 4,  // internal contract violation
};

class error : public std::runtime_error {
public:
    error(errc kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    errc kind() const { return kind_; }

private:
    errc kind_;
};

inline error input_error(std::string msg) { return error(errc::input, std::move(msg)); }
inline error provider_error(std::string msg) { return error(errc::provider, std::move(msg)); }
inline error invariant_error(std::string msg) { return error(errc::invariant, std::move(msg)); }

}  // namespace specfi
