#pragma once

#include <capstan/errors.hpp>
#include <capstan/resource.hpp>

#include <cstddef>
#include <string>
#include <string_view>

namespace capstan {

class manifest_error : public error {
public:
    enum class code {
        missing_header,
        duplicate_header,
        unknown_header,
        syntax,
        duplicate_attribute,
        bad_typed_value,
        bad_filter,
        reserved_namespace,
        bad_content
    };

    manifest_error(code c, std::size_t line, const std::string& what)
        : error(what), code_(c), line_(line) {}

    code error_code() const noexcept { return code_; }

    // 1-based physical line the error was detected on; 0 when the error
    // concerns the document as a whole.
    std::size_t line() const noexcept { return line_; }

private:
    code code_;
    std::size_t line_;
};

// Parses manifest text (UTF-8, LF line endings) into a resource.
//
// Headers, one logical line each: Package-Name and Package-Version exactly
// once; Provide-Capability, Require-Capability, and Content repeatable.
// Continuation lines start with a single space. Lines starting with '#' are
// comments; blank lines are ignored; both end a logical line.
//
// Capability and requirement clauses: namespace, then ';'-separated parts.
// Attributes are `name[:Type]=value` with Type one of String, Long, Double,
// Version, or List<…> of those. Directives are `name:=value`. Values may be
// wrapped in single quotes (escapes \' and \\); unquoted values are trimmed.
// List elements are comma-separated with \, and \\ escapes. Requirement
// clauses take only the `filter` and `resolution` directives.
resource parse_manifest(std::string_view text);

// Deterministic inverse of parse_manifest: fixed header order, clauses in
// declaration order, attributes then directives sorted by name within a
// clause. The synthesized identity capability is not written.
std::string serialize_manifest(const resource& r);

// Parses one standalone requirement clause (the Require-Capability header
// value syntax). Errors carry line 0.
requirement parse_requirement(std::string_view clause);

// Clause text as it would appear after the corresponding header.
std::string serialize_capability(const capability& cap);
std::string serialize_requirement(const requirement& req);

} // namespace capstan
