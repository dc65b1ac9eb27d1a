#pragma once

#include <capstan/errors.hpp>
#include <capstan/properties.hpp>

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace capstan {

class filter_error : public error {
public:
    enum class code { syntax, depth_limit };

    filter_error(code c, std::size_t offset, const std::string& what)
        : error(what), code_(c), offset_(offset) {}

    code error_code() const noexcept { return code_; }

    // Byte offset into the filter text where the error was detected.
    std::size_t offset() const noexcept { return offset_; }

private:
    code code_;
    std::size_t offset_;
};

// A parsed filter expression. Immutable; copies share structure.
class filter {
public:
    enum class node_kind { conjunction, disjunction, negation, compare, present, substring };
    enum class compare_op { eq, ge, le };

    struct node;
    using node_ptr = std::shared_ptr<const node>;

    struct node {
        node_kind kind;
        std::vector<node_ptr> children;  // conjunction, disjunction, negation
        std::string attribute;           // compare, present, substring
        compare_op op = compare_op::eq;  // compare
        std::string literal;             // compare
        std::vector<std::string> chunks; // substring: wildcards between chunks
    };

    // Parses filter text. Throws filter_error on malformed input or when
    // nesting exceeds max_depth.
    static filter parse(std::string_view text, std::size_t max_depth = 64);

    static filter conjunction(std::vector<filter> children);
    static filter disjunction(std::vector<filter> children);
    static filter negation(filter child);
    static filter compare(std::string attribute, compare_op op, std::string literal);
    static filter present(std::string attribute);
    // chunks are the literal runs between wildcards: n wildcards yield n+1
    // chunks, so the list has at least two entries. ["", ""] alone (a bare
    // "*") is a presence test, not a substring, and is rejected here.
    static filter substring(std::string attribute, std::vector<std::string> chunks);

    // Canonical text: no whitespace, child order preserved, only the
    // characters ( ) * \ escaped in values.
    std::string to_string() const;

    // Total: absent attributes and failed coercions compare false.
    bool evaluate(const property_map& props) const;

    const node& root() const noexcept { return *root_; }

    // Structural equality.
    bool operator==(const filter& other) const;

private:
    explicit filter(node_ptr root) : root_(std::move(root)) {}

    node_ptr root_;
};

std::ostream& operator<<(std::ostream& os, const filter& f);

} // namespace capstan
