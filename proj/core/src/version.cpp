#include <capstan/version.hpp>

#include <charconv>
#include <sstream>

namespace capstan {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty())
        return false;
    for (char c : s)
        if (c < '0' || c > '9')
            return false;
    return true;
}

std::optional<std::uint64_t> parse_component(std::string_view s) {
    if (!all_digits(s))
        return std::nullopt;
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        return std::nullopt;
    return value;
}

[[noreturn]] void malformed_version(std::string_view text) {
    throw version_error(version_error::code::malformed_version,
                        "malformed version: '" + std::string(text) + "'");
}

[[noreturn]] void malformed_range(std::string_view text) {
    throw version_error(version_error::code::malformed_range,
                        "malformed version range: '" + std::string(text) + "'");
}

} // namespace

version version::parse(std::string_view text) {
    auto v = try_parse(text);
    if (!v)
        malformed_version(text);
    return *v;
}

std::optional<version> version::try_parse(std::string_view text) noexcept {
    std::size_t first = text.find('.');
    if (first == std::string_view::npos)
        return std::nullopt;
    std::size_t second = text.find('.', first + 1);
    if (second == std::string_view::npos)
        return std::nullopt;
    if (text.find('.', second + 1) != std::string_view::npos)
        return std::nullopt;

    auto major = parse_component(text.substr(0, first));
    auto minor = parse_component(text.substr(first + 1, second - first - 1));
    auto patch = parse_component(text.substr(second + 1));
    if (!major || !minor || !patch)
        return std::nullopt;
    return version{*major, *minor, *patch};
}

std::string version::to_string() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." +
           std::to_string(patch);
}

version bumped(const version& v, version_part part) noexcept {
    switch (part) {
    case version_part::major: return {v.major + 1, 0, 0};
    case version_part::minor: return {v.major, v.minor + 1, 0};
    case version_part::patch: return {v.major, v.minor, v.patch + 1};
    }
    return v;
}

version_range::version_range(version low, bool low_inclusive,
                             std::optional<version> high, bool high_inclusive)
    : low_(low),
      high_(high),
      low_inclusive_(low_inclusive),
      high_inclusive_(high.has_value() && high_inclusive) {
    if (!high_)
        return;
    if (low_ > *high_ || (low_ == *high_ && !(low_inclusive_ && high_inclusive_)))
        throw version_error(version_error::code::empty_range,
                            "empty version range: no version satisfies both bounds");
}

version_range version_range::at_least(version v) {
    return version_range(v, true, std::nullopt, false);
}

version_range version_range::parse(std::string_view text) {
    if (text.empty())
        malformed_range(text);

    char open = text.front();
    if (open != '[' && open != '(')
        return at_least(version::parse(text)); // bare form

    char close = text.back();
    if (close != ']' && close != ')')
        malformed_range(text);

    std::string_view inner = text.substr(1, text.size() - 2);
    std::size_t comma = inner.find(',');
    if (comma == std::string_view::npos)
        malformed_range(text);

    std::string_view low_text = inner.substr(0, comma);
    std::string_view high_text = inner.substr(comma + 1);
    // Whitespace is permitted after the comma only.
    while (!high_text.empty() && (high_text.front() == ' ' || high_text.front() == '\t'))
        high_text.remove_prefix(1);

    auto low = version::try_parse(low_text);
    auto high = version::try_parse(high_text);
    if (!low || !high)
        malformed_range(text);

    return version_range(*low, open == '[', *high, close == ']');
}

bool version_range::contains(const version& v) const noexcept {
    if (low_inclusive_ ? v < low_ : v <= low_)
        return false;
    if (!high_)
        return true;
    return high_inclusive_ ? v <= *high_ : v < *high_;
}

std::string version_range::to_string() const {
    if (!high_)
        return low_.to_string();
    std::string out;
    out += low_inclusive_ ? '[' : '(';
    out += low_.to_string();
    out += ',';
    out += high_->to_string();
    out += high_inclusive_ ? ']' : ')';
    return out;
}

std::string to_string(const version& v) { return v.to_string(); }

std::ostream& operator<<(std::ostream& os, const version& v) {
    return os << v.to_string();
}

std::ostream& operator<<(std::ostream& os, const version_range& r) {
    return os << r.to_string();
}

} // namespace capstan
