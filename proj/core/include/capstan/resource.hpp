#pragma once

#include <capstan/errors.hpp>
#include <capstan/filter.hpp>
#include <capstan/properties.hpp>
#include <capstan/version.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace capstan {

// Namespace of the synthesized identity capability. Reserved: resources may
// not declare capabilities in it themselves.
inline constexpr std::string_view identity_namespace = "id";

// A typed offer: a namespace plus a set of typed properties. Directives are
// reserved metadata and do not participate in matching.
class capability {
public:
    using directive_map = std::map<std::string, std::string, std::less<>>;

    explicit capability(std::string ns, property_map properties = {},
                        directive_map directives = {});

    const std::string& ns() const noexcept { return ns_; }
    const property_map& properties() const noexcept { return properties_; }
    const directive_map& directives() const noexcept { return directives_; }

    bool operator==(const capability&) const = default;

private:
    std::string ns_;
    property_map properties_;
    directive_map directives_;
};

// A typed need: a namespace plus an optional filter asserted against
// capability properties. Without a filter it matches every capability in
// its namespace.
class requirement {
public:
    enum class resolution_mode { mandatory, optional };

    explicit requirement(std::string ns, std::optional<filter> f = std::nullopt,
                         resolution_mode mode = resolution_mode::mandatory);

    const std::string& ns() const noexcept { return ns_; }
    const std::optional<filter>& predicate() const noexcept { return filter_; }
    resolution_mode mode() const noexcept { return mode_; }
    bool is_mandatory() const noexcept { return mode_ == resolution_mode::mandatory; }

    // True iff cap is in this requirement's namespace and the filter, when
    // present, accepts its properties.
    bool matches(const capability& cap) const;

    bool operator==(const requirement&) const = default;

private:
    std::string ns_;
    std::optional<filter> filter_;
    resolution_mode mode_;
};

// Reference to a payload carried by a resource.
struct content_ref {
    std::string uri;
    std::string sha256; // 64 lowercase hex chars
    std::uint64_t size = 0;

    bool operator==(const content_ref&) const = default;
};

bool valid_sha256_hex(std::string_view digest) noexcept;

// The unit of deployment: identity plus version, what it offers, what it
// needs, and the payloads it carries. Immutable. capabilities().front() is
// always the synthesized identity capability (namespace "id", properties
// {name, version}); declared capabilities follow in declaration order.
class resource {
public:
    resource(std::string identity, version ver,
             std::vector<capability> capabilities = {},
             std::vector<requirement> requirements = {},
             std::vector<content_ref> contents = {});

    const std::string& identity() const noexcept { return identity_; }
    const capstan::version& version() const noexcept { return version_; }
    const std::vector<capability>& capabilities() const noexcept { return capabilities_; }
    const std::vector<requirement>& requirements() const noexcept { return requirements_; }
    const std::vector<content_ref>& contents() const noexcept { return contents_; }

    bool operator==(const resource&) const = default;

private:
    std::string identity_;
    capstan::version version_;
    std::vector<capability> capabilities_;
    std::vector<requirement> requirements_;
    std::vector<content_ref> contents_;
};

} // namespace capstan
