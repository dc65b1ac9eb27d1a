#include <capstan/manifest.hpp>

#include <capstan/filter.hpp>

#include <charconv>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

namespace capstan {

namespace {

using code = manifest_error::code;

[[noreturn]] void fail(code c, std::size_t line, const std::string& what) {
    std::ostringstream msg;
    if (line > 0)
        msg << "line " << line << ": ";
    msg << what;
    throw manifest_error(c, line, msg.str());
}

bool space_char(char c) noexcept { return c == ' ' || c == '\t'; }

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && space_char(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && space_char(s.back()))
        s.remove_suffix(1);
    return s;
}

struct logical_line {
    std::string text;
    std::size_t line_no; // first physical line, 1-based
};

// Joins continuation lines, drops comments and blank lines.
std::vector<logical_line> assemble_lines(std::string_view text) {
    std::vector<logical_line> out;
    bool open = false; // a logical line is accepting continuations
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = nl == std::string_view::npos
                                    ? text.substr(pos)
                                    : text.substr(pos, nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;

        if (line.find('\r') != std::string_view::npos)
            fail(code::syntax, line_no, "carriage return not allowed (LF line endings only)");
        if (line.empty() || line.front() == '#') {
            open = false;
            continue;
        }
        if (line.front() == ' ') {
            if (!open)
                fail(code::syntax, line_no, "continuation line without a header");
            out.back().text += line.substr(1);
            continue;
        }
        out.push_back({std::string(line), line_no});
        open = true;
    }
    return out;
}

// Splits a clause on ';' outside quoted values. A quote starts a value only
// directly after '='.
std::vector<std::string> split_clause(const std::string& clause, std::size_t line) {
    std::vector<std::string> parts{std::string()};
    bool in_quote = false;
    bool after_eq = false;
    for (std::size_t i = 0; i < clause.size(); ++i) {
        char c = clause[i];
        if (in_quote) {
            parts.back().push_back(c);
            if (c == '\\') {
                if (i + 1 < clause.size())
                    parts.back().push_back(clause[++i]);
            } else if (c == '\'') {
                in_quote = false;
            }
            continue;
        }
        if (c == ';') {
            parts.emplace_back();
            after_eq = false;
            continue;
        }
        parts.back().push_back(c);
        if (c == '\'' && after_eq)
            in_quote = true;
        if (!space_char(c))
            after_eq = c == '=';
    }
    if (in_quote)
        fail(code::syntax, line, "unterminated quoted value in clause");
    return parts;
}

// Unquotes a value if it is quoted, otherwise trims it. Quoted values use
// the escapes \' and \\ only.
std::string parse_value(std::string_view raw, std::size_t line) {
    raw = trim(raw);
    if (raw.empty() || raw.front() != '\'')
        return std::string(raw);

    std::string out;
    bool closed = false;
    std::size_t i = 1;
    for (; i < raw.size(); ++i) {
        char c = raw[i];
        if (c == '\\') {
            if (++i >= raw.size())
                fail(code::syntax, line, "dangling escape in quoted value");
            char e = raw[i];
            if (e != '\'' && e != '\\')
                fail(code::syntax, line, "invalid escape sequence in quoted value");
            out.push_back(e);
        } else if (c == '\'') {
            closed = true;
            ++i;
            break;
        } else {
            out.push_back(c);
        }
    }
    if (!closed)
        fail(code::syntax, line, "unterminated quoted value");
    if (i != raw.size())
        fail(code::syntax, line, "unexpected text after closing quote");
    return out;
}

// Splits list text on unescaped ','. Escapes: \, and \\ only. Empty text is
// an empty list.
std::vector<std::string> split_list(const std::string& text, std::size_t line) {
    std::vector<std::string> out;
    if (text.empty())
        return out;
    out.emplace_back();
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\\') {
            if (++i >= text.size())
                fail(code::syntax, line, "dangling escape in list value");
            char e = text[i];
            if (e != ',' && e != '\\')
                fail(code::syntax, line, "invalid escape sequence in list value");
            out.back().push_back(e);
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back().push_back(c);
        }
    }
    return out;
}

struct type_tag {
    value_kind kind = value_kind::string;
    bool list = false;
};

type_tag parse_type_tag(std::string_view tag, std::size_t line) {
    std::string_view scalar_tag = tag;
    bool list = false;
    if (tag.starts_with("List<") && tag.ends_with(">")) {
        scalar_tag = tag.substr(5, tag.size() - 6);
        list = true;
    }
    auto kind = kind_from_tag(scalar_tag);
    if (!kind)
        fail(code::bad_typed_value, line,
             "unknown type tag '" + std::string(tag) + "'");
    return {*kind, list};
}

struct clause_part {
    std::string name;
    bool directive = false;
    type_tag type;   // attributes only
    std::string value;
};

clause_part parse_part(std::string_view part, std::size_t line) {
    part = trim(part);
    std::size_t i = 0;
    while (i < part.size() && valid_attribute_name(part.substr(i, 1)))
        ++i;
    if (i == 0)
        fail(code::syntax, line, "expected attribute or directive name in clause");

    clause_part result;
    result.name = std::string(part.substr(0, i));
    while (i < part.size() && space_char(part[i]))
        ++i;
    if (i >= part.size())
        fail(code::syntax, line,
             "expected '=' after '" + result.name + "' in clause");

    if (part[i] == ':') {
        ++i;
        while (i < part.size() && space_char(part[i]))
            ++i;
        if (i < part.size() && part[i] == '=') {
            result.directive = true;
            ++i;
        } else {
            std::size_t tag_start = i;
            while (i < part.size() && part[i] != '=' && !space_char(part[i]))
                ++i;
            result.type = parse_type_tag(part.substr(tag_start, i - tag_start), line);
            while (i < part.size() && space_char(part[i]))
                ++i;
            if (i >= part.size() || part[i] != '=')
                fail(code::syntax, line, "expected '=' after type tag in clause");
            ++i;
        }
    } else if (part[i] == '=') {
        ++i;
    } else {
        fail(code::syntax, line,
             "expected '=' after '" + result.name + "' in clause");
    }

    result.value = parse_value(part.substr(i), line);
    return result;
}

property_value parse_attribute_value(const clause_part& part, std::size_t line) {
    if (!part.type.list) {
        auto value = parse_scalar(part.value, part.type.kind);
        if (!value)
            fail(code::bad_typed_value, line,
                 "value '" + part.value + "' is not a valid " +
                     std::string(to_tag(part.type.kind)));
        return property_value(std::move(*value));
    }

    std::vector<scalar> elements;
    for (const std::string& element : split_list(part.value, line)) {
        if (element.empty())
            fail(code::bad_typed_value, line,
                 "empty element in list attribute '" + part.name + "'");
        auto value = parse_scalar(element, part.type.kind);
        if (!value)
            fail(code::bad_typed_value, line,
                 "list element '" + element + "' is not a valid " +
                     std::string(to_tag(part.type.kind)));
        elements.push_back(std::move(*value));
    }
    return property_value::make_list(part.type.kind, std::move(elements));
}

std::string parse_clause_namespace(const std::string& part, std::size_t line) {
    std::string_view ns = trim(part);
    if (!valid_attribute_name(ns))
        fail(code::syntax, line,
             "clause must start with a namespace, got '" + std::string(ns) + "'");
    return std::string(ns);
}

capability parse_capability_clause(const std::string& clause, std::size_t line) {
    std::vector<std::string> parts = split_clause(clause, line);
    std::string ns = parse_clause_namespace(parts.front(), line);
    if (ns == identity_namespace)
        fail(code::reserved_namespace, line,
             "capability namespace 'id' is reserved for the identity capability");

    property_map properties;
    capability::directive_map directives;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        clause_part part = parse_part(parts[i], line);
        if (part.directive) {
            if (!directives.emplace(part.name, part.value).second)
                fail(code::duplicate_attribute, line,
                     "duplicate directive '" + part.name + "' in clause");
        } else {
            if (!properties.insert(part.name, parse_attribute_value(part, line)))
                fail(code::duplicate_attribute, line,
                     "duplicate attribute '" + part.name + "' in clause");
        }
    }
    return capability(std::move(ns), std::move(properties), std::move(directives));
}

requirement parse_requirement_clause(const std::string& clause, std::size_t line) {
    std::vector<std::string> parts = split_clause(clause, line);
    std::string ns = parse_clause_namespace(parts.front(), line);

    std::optional<filter> predicate;
    requirement::resolution_mode mode = requirement::resolution_mode::mandatory;
    bool saw_filter = false;
    bool saw_resolution = false;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        clause_part part = parse_part(parts[i], line);
        if (!part.directive)
            fail(code::syntax, line,
                 "requirement clauses take directives only, got attribute '" +
                     part.name + "'");
        if (part.name == "filter") {
            if (saw_filter)
                fail(code::duplicate_attribute, line, "duplicate 'filter' directive");
            saw_filter = true;
            try {
                predicate = filter::parse(part.value);
            } catch (const filter_error& e) {
                fail(code::bad_filter, line, e.what());
            }
        } else if (part.name == "resolution") {
            if (saw_resolution)
                fail(code::duplicate_attribute, line, "duplicate 'resolution' directive");
            saw_resolution = true;
            if (part.value == "optional")
                mode = requirement::resolution_mode::optional;
            else if (part.value != "mandatory")
                fail(code::syntax, line,
                     "resolution must be 'mandatory' or 'optional', got '" +
                         part.value + "'");
        } else {
            fail(code::syntax, line,
                 "unknown requirement directive '" + part.name + "'");
        }
    }
    return requirement(std::move(ns), std::move(predicate), mode);
}

content_ref parse_content_header(const std::string& value, std::size_t line) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t semi = value.find(';', start);
        parts.emplace_back(trim(semi == std::string::npos
                                    ? std::string_view(value).substr(start)
                                    : std::string_view(value).substr(start, semi - start)));
        if (semi == std::string::npos)
            break;
        start = semi + 1;
    }
    if (parts.size() != 3)
        fail(code::bad_content, line,
             "Content takes exactly 'uri; sha256=<hex>; size=<bytes>'");

    content_ref content;
    content.uri = parts[0];
    if (content.uri.empty())
        fail(code::bad_content, line, "Content uri is empty");

    if (!parts[1].starts_with("sha256="))
        fail(code::bad_content, line, "second Content field must be 'sha256=<hex>'");
    content.sha256 = parts[1].substr(7);
    if (!valid_sha256_hex(content.sha256))
        fail(code::bad_content, line,
             "Content digest is not 64 lowercase hex chars");

    if (!parts[2].starts_with("size="))
        fail(code::bad_content, line, "third Content field must be 'size=<bytes>'");
    std::string_view size_text = std::string_view(parts[2]).substr(5);
    auto [ptr, ec] = std::from_chars(size_text.data(),
                                     size_text.data() + size_text.size(),
                                     content.size);
    if (ec != std::errc() || ptr != size_text.data() + size_text.size())
        fail(code::bad_content, line, "Content size is not a byte count");
    return content;
}

bool needs_quoting(const std::string& text) noexcept {
    if (text.empty())
        return false;
    if (space_char(text.front()) || space_char(text.back()))
        return true;
    return text.find(';') != std::string::npos ||
           text.find('\'') != std::string::npos;
}

std::string quoted(const std::string& text) {
    std::string out;
    out.push_back('\'');
    for (char c : text) {
        if (c == '\'' || c == '\\')
            out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

std::string render_value_text(const property_value& value) {
    if (!value.is_list())
        return render_scalar(value.as_scalar());
    std::string out;
    bool first = true;
    for (const scalar& element : value.elements()) {
        if (!first)
            out.push_back(',');
        first = false;
        for (char c : render_scalar(element)) {
            if (c == ',' || c == '\\')
                out.push_back('\\');
            out.push_back(c);
        }
    }
    return out;
}

void render_attribute(const std::string& name, const property_value& value,
                      std::string& out) {
    out += name;
    if (value.is_list()) {
        out += ":List<";
        out += to_tag(value.kind());
        out += ">";
    } else if (value.kind() != value_kind::string) {
        out.push_back(':');
        out += to_tag(value.kind());
    }
    out.push_back('=');
    std::string text = render_value_text(value);
    out += needs_quoting(text) ? quoted(text) : text;
}

} // namespace

resource parse_manifest(std::string_view text) {
    std::optional<std::pair<std::string, std::size_t>> name_header;
    std::optional<std::pair<std::string, std::size_t>> version_header;
    std::vector<std::pair<std::string, std::size_t>> provide_headers;
    std::vector<std::pair<std::string, std::size_t>> require_headers;
    std::vector<std::pair<std::string, std::size_t>> content_headers;

    for (logical_line& line : assemble_lines(text)) {
        std::size_t colon = line.text.find(':');
        if (colon == std::string::npos)
            fail(code::syntax, line.line_no, "expected 'Header: value'");
        std::string header = line.text.substr(0, colon);
        std::string_view value_view(line.text);
        value_view.remove_prefix(colon + 1);
        while (!value_view.empty() && space_char(value_view.front()))
            value_view.remove_prefix(1);
        std::string value(value_view);

        if (header == "Package-Name") {
            if (name_header)
                fail(code::duplicate_header, line.line_no, "duplicate Package-Name header");
            name_header = {std::move(value), line.line_no};
        } else if (header == "Package-Version") {
            if (version_header)
                fail(code::duplicate_header, line.line_no, "duplicate Package-Version header");
            version_header = {std::move(value), line.line_no};
        } else if (header == "Provide-Capability") {
            provide_headers.emplace_back(std::move(value), line.line_no);
        } else if (header == "Require-Capability") {
            require_headers.emplace_back(std::move(value), line.line_no);
        } else if (header == "Content") {
            content_headers.emplace_back(std::move(value), line.line_no);
        } else {
            fail(code::unknown_header, line.line_no, "unknown header '" + header + "'");
        }
    }

    if (!name_header)
        fail(code::missing_header, 0, "missing Package-Name header");
    if (!version_header)
        fail(code::missing_header, 0, "missing Package-Version header");

    if (!valid_attribute_name(name_header->first))
        fail(code::syntax, name_header->second,
             "package name '" + name_header->first + "' is not a valid name");
    auto ver = version::try_parse(version_header->first);
    if (!ver)
        fail(code::bad_typed_value, version_header->second,
             "package version '" + version_header->first + "' is not MAJOR.MINOR.PATCH");

    std::vector<capability> capabilities;
    for (const auto& [value, line] : provide_headers)
        capabilities.push_back(parse_capability_clause(value, line));

    std::vector<requirement> requirements;
    for (const auto& [value, line] : require_headers)
        requirements.push_back(parse_requirement_clause(value, line));

    std::vector<content_ref> contents;
    for (const auto& [value, line] : content_headers)
        contents.push_back(parse_content_header(value, line));

    return resource(name_header->first, *ver, std::move(capabilities),
                    std::move(requirements), std::move(contents));
}

std::string serialize_manifest(const resource& r) {
    std::string out;
    out += "Package-Name: ";
    out += r.identity();
    out.push_back('\n');
    out += "Package-Version: ";
    out += r.version().to_string();
    out.push_back('\n');

    for (std::size_t i = 1; i < r.capabilities().size(); ++i) {
        const capability& cap = r.capabilities()[i];
        out += "Provide-Capability: ";
        out += cap.ns();
        for (const auto& [name, value] : cap.properties()) {
            out += "; ";
            render_attribute(name, value, out);
        }
        for (const auto& [name, value] : cap.directives()) {
            out += "; ";
            out += name;
            out += ":=";
            out += needs_quoting(value) ? quoted(value) : value;
        }
        out.push_back('\n');
    }

    for (const requirement& req : r.requirements()) {
        out += "Require-Capability: ";
        out += req.ns();
        if (req.predicate()) {
            out += "; filter:=";
            out += quoted(req.predicate()->to_string());
        }
        if (!req.is_mandatory())
            out += "; resolution:=optional";
        out.push_back('\n');
    }

    for (const content_ref& content : r.contents()) {
        out += "Content: ";
        out += content.uri;
        out += "; sha256=";
        out += content.sha256;
        out += "; size=";
        out += std::to_string(content.size);
        out.push_back('\n');
    }
    return out;
}

requirement parse_requirement(std::string_view clause) {
    return parse_requirement_clause(std::string(clause), 0);
}

std::string serialize_capability(const capability& cap) {
    std::string out = cap.ns();
    for (const auto& [name, value] : cap.properties()) {
        out += "; ";
        render_attribute(name, value, out);
    }
    for (const auto& [name, value] : cap.directives()) {
        out += "; ";
        out += name;
        out += ":=";
        out += needs_quoting(value) ? quoted(value) : value;
    }
    return out;
}

std::string serialize_requirement(const requirement& req) {
    std::string out = req.ns();
    if (req.predicate()) {
        out += "; filter:=";
        out += quoted(req.predicate()->to_string());
    }
    if (!req.is_mandatory())
        out += "; resolution:=optional";
    return out;
}

} // namespace capstan
