#pragma once

#include <capstan/errors.hpp>
#include <capstan/version.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace capstan {

// Kind of a typed property value. The order matches the alternatives of
// scalar, so scalar.index() converts directly.
enum class value_kind { string, int64, float64, version };

// One typed scalar. Strings are uninterpreted byte sequences.
using scalar = std::variant<std::string, std::int64_t, double, version>;

value_kind kind_of(const scalar& s) noexcept;

// Manifest type tag ("String", "Long", "Double", "Version").
std::string_view to_tag(value_kind k) noexcept;
std::optional<value_kind> kind_from_tag(std::string_view tag) noexcept;

// Strict coercion of text to a scalar of the given kind. The whole input
// must be consumed; Double values must be finite. Returns nullopt when the
// text does not denote a value of that kind.
std::optional<scalar> parse_scalar(std::string_view text, value_kind kind) noexcept;

// Canonical text for a scalar. Doubles render in shortest round-trip form.
std::string render_scalar(const scalar& s);

// A property value: a single scalar or a homogeneous list. Lists carry an
// explicit element kind so an empty list stays typed.
class property_value {
public:
    property_value(std::string v);
    property_value(const char* v);
    property_value(std::int64_t v);
    property_value(double v);
    property_value(version v);
    explicit property_value(scalar v);

    static property_value make_list(value_kind element_kind, std::vector<scalar> elements);
    static property_value string_list(std::vector<std::string> elements);

    value_kind kind() const noexcept { return kind_; }
    bool is_list() const noexcept { return list_; }

    // Elements of a list, or the single scalar of a non-list value.
    const std::vector<scalar>& elements() const noexcept { return values_; }

    // The single scalar; must not be called on a list.
    const scalar& as_scalar() const;

    bool operator==(const property_value&) const = default;

private:
    property_value(value_kind kind, bool list, std::vector<scalar> values)
        : kind_(kind), list_(list), values_(std::move(values)) {}

    value_kind kind_;
    bool list_;
    std::vector<scalar> values_;
};

// Named typed properties with unique names.
class property_map {
public:
    using map_type = std::map<std::string, property_value, std::less<>>;
    using const_iterator = map_type::const_iterator;

    property_map() = default;

    // Adds a property; returns false (and leaves the map unchanged) when the
    // name is already present.
    bool insert(std::string name, property_value value);

    // Adds or replaces a property.
    void set(std::string name, property_value value);

    const property_value* find(std::string_view name) const noexcept;
    bool contains(std::string_view name) const noexcept { return find(name) != nullptr; }

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    const_iterator begin() const noexcept { return entries_.begin(); }
    const_iterator end() const noexcept { return entries_.end(); }

    bool operator==(const property_map&) const = default;

private:
    map_type entries_;
};

// True when name is a valid attribute or directive name: one or more of
// [A-Za-z0-9._-].
bool valid_attribute_name(std::string_view name) noexcept;

} // namespace capstan
