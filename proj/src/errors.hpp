// Error taxonomy shared by every module. The C boundary translates these
// exception kinds into status codes one-to-one.
#pragma once

#include <stdexcept>
#include <string>

namespace mislid {

enum class errc {
    parameter,     // malformed argument (sizes, ranges, enum values)
    precondition,  // contract violated by otherwise well-formed input
    numeric,       // solver failure, non-PSD matrix, overflow
    parse,         // malformed JSON / config text
    io,            // filesystem problems
};

class error : public std::runtime_error {
public:
    error(errc kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    errc kind() const noexcept { return kind_; }

private:
    errc kind_;
};

struct parameter_error : error {
    explicit parameter_error(const std::string& m) : error(errc::parameter, m) {}
};
struct precondition_error : error {
    explicit precondition_error(const std::string& m) : error(errc::precondition, m) {}
};
struct numeric_error : error {
    explicit numeric_error(const std::string& m) : error(errc::numeric, m) {}
};
struct parse_error : error {
    explicit parse_error(const std::string& m) : error(errc::parse, m) {}
};
struct io_error : error {
    explicit io_error(const std::string& m) : error(errc::io, m) {}
};

} // namespace mislid
