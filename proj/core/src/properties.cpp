#include <capstan/properties.hpp>

#include <array>
#include <charconv>
#include <cmath>

namespace capstan {

value_kind kind_of(const scalar& s) noexcept {
    return static_cast<value_kind>(s.index());
}

std::string_view to_tag(value_kind k) noexcept {
    switch (k) {
    case value_kind::string: return "String";
    case value_kind::int64: return "Long";
    case value_kind::float64: return "Double";
    case value_kind::version: return "Version";
    }
    return "String";
}

std::optional<value_kind> kind_from_tag(std::string_view tag) noexcept {
    if (tag == "String")
        return value_kind::string;
    if (tag == "Long")
        return value_kind::int64;
    if (tag == "Double")
        return value_kind::float64;
    if (tag == "Version")
        return value_kind::version;
    return std::nullopt;
}

std::optional<scalar> parse_scalar(std::string_view text, value_kind kind) noexcept {
    switch (kind) {
    case value_kind::string:
        return scalar(std::string(text));
    case value_kind::int64: {
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size())
            return std::nullopt;
        return scalar(value);
    }
    case value_kind::float64: {
        double value = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size())
            return std::nullopt;
        if (!std::isfinite(value))
            return std::nullopt;
        return scalar(value);
    }
    case value_kind::version: {
        auto v = version::try_parse(text);
        if (!v)
            return std::nullopt;
        return scalar(*v);
    }
    }
    return std::nullopt;
}

std::string render_scalar(const scalar& s) {
    switch (kind_of(s)) {
    case value_kind::string:
        return std::get<std::string>(s);
    case value_kind::int64:
        return std::to_string(std::get<std::int64_t>(s));
    case value_kind::float64: {
        std::array<char, 64> buf{};
        auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(),
                                       std::get<double>(s));
        return std::string(buf.data(), ptr);
    }
    case value_kind::version:
        return std::get<version>(s).to_string();
    }
    return {};
}

property_value::property_value(std::string v)
    : property_value(value_kind::string, false, {scalar(std::move(v))}) {}

property_value::property_value(const char* v)
    : property_value(std::string(v)) {}

property_value::property_value(std::int64_t v)
    : property_value(value_kind::int64, false, {scalar(v)}) {}

property_value::property_value(double v)
    : property_value(value_kind::float64, false, {scalar(v)}) {
    if (!std::isfinite(v))
        throw error("Double property values must be finite");
}

property_value::property_value(version v)
    : property_value(value_kind::version, false, {scalar(v)}) {}

property_value::property_value(scalar v)
    : property_value(kind_of(v), false, {std::move(v)}) {
    if (kind_ == value_kind::float64 && !std::isfinite(std::get<double>(values_[0])))
        throw error("Double property values must be finite");
}

property_value property_value::make_list(value_kind element_kind,
                                         std::vector<scalar> elements) {
    for (const scalar& e : elements) {
        if (kind_of(e) != element_kind)
            throw error("list element kind does not match the list's element kind");
        if (element_kind == value_kind::float64 && !std::isfinite(std::get<double>(e)))
            throw error("Double property values must be finite");
    }
    return property_value(element_kind, true, std::move(elements));
}

property_value property_value::string_list(std::vector<std::string> elements) {
    std::vector<scalar> values;
    values.reserve(elements.size());
    for (std::string& e : elements)
        values.emplace_back(std::move(e));
    return property_value(value_kind::string, true, std::move(values));
}

const scalar& property_value::as_scalar() const {
    if (list_)
        throw error("as_scalar called on a list property value");
    return values_.front();
}

bool property_map::insert(std::string name, property_value value) {
    return entries_.emplace(std::move(name), std::move(value)).second;
}

void property_map::set(std::string name, property_value value) {
    entries_.insert_or_assign(std::move(name), std::move(value));
}

const property_value* property_map::find(std::string_view name) const noexcept {
    auto it = entries_.find(name);
    return it == entries_.end() ? nullptr : &it->second;
}

bool valid_attribute_name(std::string_view name) noexcept {
    if (name.empty())
        return false;
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        if (!ok)
            return false;
    }
    return true;
}

} // namespace capstan
