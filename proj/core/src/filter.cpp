#include <capstan/filter.hpp>

#include <algorithm>
#include <ostream>
#include <sstream>

namespace capstan {

namespace {

using node = filter::node;
using node_ptr = filter::node_ptr;
using node_kind = filter::node_kind;
using compare_op = filter::compare_op;

[[noreturn]] void syntax(std::size_t offset, const std::string& what) {
    std::ostringstream msg;
    msg << "filter syntax error at offset " << offset << ": " << what;
    throw filter_error(filter_error::code::syntax, offset, msg.str());
}

bool attribute_char(char c) noexcept {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
}

bool whitespace_char(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
}

// One fragment of a value: the character and whether it was escaped.
// Escaped '*' is a literal asterisk; unescaped '*' is a wildcard.
struct value_char {
    char ch;
    bool escaped;
};

class parser {
public:
    parser(std::string_view text, std::size_t max_depth)
        : text_(text), max_depth_(max_depth) {}

    node_ptr run() {
        skip_ws();
        node_ptr root = parse_filter(1);
        skip_ws();
        if (pos_ != text_.size())
            syntax(pos_, "trailing characters after filter");
        return root;
    }

private:
    bool at_end() const noexcept { return pos_ >= text_.size(); }
    char peek() const noexcept { return text_[pos_]; }

    void skip_ws() {
        while (!at_end() && whitespace_char(peek()))
            ++pos_;
    }

    void expect(char c, const char* what) {
        if (at_end() || peek() != c)
            syntax(pos_, what);
        ++pos_;
    }

    node_ptr parse_filter(std::size_t depth) {
        if (depth > max_depth_) {
            std::ostringstream msg;
            msg << "filter nesting exceeds depth limit " << max_depth_
                << " at offset " << pos_;
            throw filter_error(filter_error::code::depth_limit, pos_, msg.str());
        }
        expect('(', "expected '('");
        skip_ws();
        if (at_end())
            syntax(pos_, "unterminated filter");

        node_ptr result;
        switch (peek()) {
        case '&':
            ++pos_;
            result = parse_composite(node_kind::conjunction, depth);
            break;
        case '|':
            ++pos_;
            result = parse_composite(node_kind::disjunction, depth);
            break;
        case '!': {
            ++pos_;
            skip_ws();
            auto n = std::make_shared<node>();
            n->kind = node_kind::negation;
            n->children.push_back(parse_filter(depth + 1));
            result = std::move(n);
            break;
        }
        default:
            result = parse_item();
            break;
        }

        skip_ws();
        expect(')', "expected ')'");
        return result;
    }

    node_ptr parse_composite(node_kind kind, std::size_t depth) {
        auto n = std::make_shared<node>();
        n->kind = kind;
        skip_ws();
        while (!at_end() && peek() == '(') {
            n->children.push_back(parse_filter(depth + 1));
            skip_ws();
        }
        if (n->children.empty())
            syntax(pos_, "composite filter requires at least one operand");
        return n;
    }

    node_ptr parse_item() {
        std::size_t attr_start = pos_;
        while (!at_end() && attribute_char(peek()))
            ++pos_;
        if (pos_ == attr_start)
            syntax(pos_, "expected attribute name");
        std::string attribute(text_.substr(attr_start, pos_ - attr_start));

        skip_ws();
        compare_op op;
        if (at_end())
            syntax(pos_, "expected comparison operator");
        if (peek() == '=') {
            op = compare_op::eq;
            ++pos_;
        } else if (peek() == '>' || peek() == '<') {
            op = peek() == '>' ? compare_op::ge : compare_op::le;
            ++pos_;
            expect('=', "expected '=' after comparison operator");
        } else {
            syntax(pos_, "expected comparison operator");
        }

        // Value runs to the closing ')'; whitespace inside it is significant.
        std::vector<value_char> value;
        while (!at_end() && peek() != ')') {
            char c = peek();
            if (c == '\\') {
                ++pos_;
                if (at_end())
                    syntax(pos_, "dangling escape in value");
                char e = peek();
                if (e != '(' && e != ')' && e != '*' && e != '\\')
                    syntax(pos_, "invalid escape sequence in value");
                value.push_back({e, true});
                ++pos_;
            } else if (c == '(') {
                syntax(pos_, "unescaped '(' in value");
            } else {
                value.push_back({c, false});
                ++pos_;
            }
        }
        if (at_end())
            syntax(pos_, "unterminated value");

        return make_item(std::move(attribute), op, value);
    }

    node_ptr make_item(std::string attribute, compare_op op,
                       const std::vector<value_char>& value) {
        std::size_t wildcards = 0;
        for (const value_char& vc : value)
            if (vc.ch == '*' && !vc.escaped)
                ++wildcards;

        auto n = std::make_shared<node>();
        n->attribute = std::move(attribute);

        if (op == compare_op::eq && wildcards > 0) {
            if (wildcards == 1 && value.size() == 1) {
                n->kind = node_kind::present;
                return n;
            }
            n->kind = node_kind::substring;
            n->chunks.emplace_back();
            for (const value_char& vc : value) {
                if (vc.ch == '*' && !vc.escaped)
                    n->chunks.emplace_back();
                else
                    n->chunks.back().push_back(vc.ch);
            }
            return n;
        }

        if (wildcards > 0)
            syntax(pos_, "wildcard not allowed in ordered comparison");

        n->kind = node_kind::compare;
        n->op = op;
        for (const value_char& vc : value)
            n->literal.push_back(vc.ch);
        return n;
    }

    std::string_view text_;
    std::size_t max_depth_;
    std::size_t pos_ = 0;
};

void escape_value(const std::string& raw, std::string& out) {
    for (char c : raw) {
        if (c == '(' || c == ')' || c == '*' || c == '\\')
            out.push_back('\\');
        out.push_back(c);
    }
}

void serialize_node(const node& n, std::string& out) {
    out.push_back('(');
    switch (n.kind) {
    case node_kind::conjunction:
    case node_kind::disjunction:
        out.push_back(n.kind == node_kind::conjunction ? '&' : '|');
        for (const node_ptr& child : n.children)
            serialize_node(*child, out);
        break;
    case node_kind::negation:
        out.push_back('!');
        serialize_node(*n.children.front(), out);
        break;
    case node_kind::compare:
        out += n.attribute;
        switch (n.op) {
        case compare_op::eq: out.push_back('='); break;
        case compare_op::ge: out += ">="; break;
        case compare_op::le: out += "<="; break;
        }
        escape_value(n.literal, out);
        break;
    case node_kind::present:
        out += n.attribute;
        out += "=*";
        break;
    case node_kind::substring: {
        out += n.attribute;
        out.push_back('=');
        bool first = true;
        for (const std::string& chunk : n.chunks) {
            if (!first)
                out.push_back('*');
            first = false;
            escape_value(chunk, out);
        }
        break;
    }
    }
    out.push_back(')');
}

// Coerced three-way comparison of one stored scalar against the literal.
// Returns nullopt when the literal cannot be coerced to the scalar's kind.
std::optional<std::partial_ordering> compare_scalar(const scalar& stored,
                                                    const std::string& literal) {
    auto coerced = parse_scalar(literal, kind_of(stored));
    if (!coerced)
        return std::nullopt;
    switch (kind_of(stored)) {
    case value_kind::string: {
        int c = std::get<std::string>(stored).compare(std::get<std::string>(*coerced));
        return c < 0   ? std::partial_ordering::less
               : c > 0 ? std::partial_ordering::greater
                       : std::partial_ordering::equivalent;
    }
    case value_kind::int64:
        return std::get<std::int64_t>(stored) <=> std::get<std::int64_t>(*coerced);
    case value_kind::float64:
        return std::get<double>(stored) <=> std::get<double>(*coerced);
    case value_kind::version:
        return std::get<version>(stored) <=> std::get<version>(*coerced);
    }
    return std::nullopt;
}

bool ordering_satisfies(std::partial_ordering o, compare_op op) noexcept {
    switch (op) {
    case compare_op::eq: return o == std::partial_ordering::equivalent;
    case compare_op::ge: return o == std::partial_ordering::greater ||
                                o == std::partial_ordering::equivalent;
    case compare_op::le: return o == std::partial_ordering::less ||
                                o == std::partial_ordering::equivalent;
    }
    return false;
}

bool match_chunks(const std::string& s, const std::vector<std::string>& chunks) {
    const std::string& first = chunks.front();
    const std::string& last = chunks.back();
    if (s.size() < first.size() || s.compare(0, first.size(), first) != 0)
        return false;
    std::size_t pos = first.size();
    for (std::size_t i = 1; i + 1 < chunks.size(); ++i) {
        std::size_t found = s.find(chunks[i], pos);
        if (found == std::string::npos)
            return false;
        pos = found + chunks[i].size();
    }
    if (s.size() < pos + last.size())
        return false;
    return s.compare(s.size() - last.size(), last.size(), last) == 0;
}

bool evaluate_node(const node& n, const property_map& props) {
    switch (n.kind) {
    case node_kind::conjunction:
        return std::all_of(n.children.begin(), n.children.end(),
                           [&](const node_ptr& c) { return evaluate_node(*c, props); });
    case node_kind::disjunction:
        return std::any_of(n.children.begin(), n.children.end(),
                           [&](const node_ptr& c) { return evaluate_node(*c, props); });
    case node_kind::negation:
        return !evaluate_node(*n.children.front(), props);
    case node_kind::present:
        return props.contains(n.attribute);
    case node_kind::compare: {
        const property_value* stored = props.find(n.attribute);
        if (!stored)
            return false;
        for (const scalar& element : stored->elements()) {
            auto ordering = compare_scalar(element, n.literal);
            if (ordering && ordering_satisfies(*ordering, n.op))
                return true;
        }
        return false;
    }
    case node_kind::substring: {
        const property_value* stored = props.find(n.attribute);
        if (!stored || stored->kind() != value_kind::string)
            return false;
        for (const scalar& element : stored->elements())
            if (match_chunks(std::get<std::string>(element), n.chunks))
                return true;
        return false;
    }
    }
    return false;
}

bool nodes_equal(const node& a, const node& b) {
    if (a.kind != b.kind)
        return false;
    switch (a.kind) {
    case node_kind::conjunction:
    case node_kind::disjunction:
    case node_kind::negation:
        if (a.children.size() != b.children.size())
            return false;
        for (std::size_t i = 0; i < a.children.size(); ++i)
            if (!nodes_equal(*a.children[i], *b.children[i]))
                return false;
        return true;
    case node_kind::compare:
        return a.attribute == b.attribute && a.op == b.op && a.literal == b.literal;
    case node_kind::present:
        return a.attribute == b.attribute;
    case node_kind::substring:
        return a.attribute == b.attribute && a.chunks == b.chunks;
    }
    return false;
}

void check_attribute(const std::string& name) {
    if (!valid_attribute_name(name))
        throw error("invalid attribute name: '" + name + "'");
}

} // namespace

filter filter::parse(std::string_view text, std::size_t max_depth) {
    return filter(parser(text, max_depth).run());
}

filter filter::conjunction(std::vector<filter> children) {
    if (children.empty())
        throw error("conjunction requires at least one operand");
    auto n = std::make_shared<node>();
    n->kind = node_kind::conjunction;
    for (filter& child : children)
        n->children.push_back(std::move(child.root_));
    return filter(std::move(n));
}

filter filter::disjunction(std::vector<filter> children) {
    if (children.empty())
        throw error("disjunction requires at least one operand");
    auto n = std::make_shared<node>();
    n->kind = node_kind::disjunction;
    for (filter& child : children)
        n->children.push_back(std::move(child.root_));
    return filter(std::move(n));
}

filter filter::negation(filter child) {
    auto n = std::make_shared<node>();
    n->kind = node_kind::negation;
    n->children.push_back(std::move(child.root_));
    return filter(std::move(n));
}

filter filter::compare(std::string attribute, compare_op op, std::string literal) {
    check_attribute(attribute);
    auto n = std::make_shared<node>();
    n->kind = node_kind::compare;
    n->attribute = std::move(attribute);
    n->op = op;
    n->literal = std::move(literal);
    return filter(std::move(n));
}

filter filter::present(std::string attribute) {
    check_attribute(attribute);
    auto n = std::make_shared<node>();
    n->kind = node_kind::present;
    n->attribute = std::move(attribute);
    return filter(std::move(n));
}

filter filter::substring(std::string attribute, std::vector<std::string> chunks) {
    check_attribute(attribute);
    if (chunks.size() < 2)
        throw error("substring requires at least one wildcard");
    if (chunks.size() == 2 && chunks[0].empty() && chunks[1].empty())
        throw error("substring with a single bare wildcard is a presence test");
    auto n = std::make_shared<node>();
    n->kind = node_kind::substring;
    n->attribute = std::move(attribute);
    n->chunks = std::move(chunks);
    return filter(std::move(n));
}

std::string filter::to_string() const {
    std::string out;
    serialize_node(*root_, out);
    return out;
}

bool filter::evaluate(const property_map& props) const {
    return evaluate_node(*root_, props);
}

bool filter::operator==(const filter& other) const {
    return nodes_equal(*root_, *other.root_);
}

std::ostream& operator<<(std::ostream& os, const filter& f) {
    return os << f.to_string();
}

} // namespace capstan
