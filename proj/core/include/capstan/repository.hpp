#pragma once

#include <capstan/errors.hpp>
#include <capstan/resource.hpp>

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace capstan {

class repository_error : public error {
public:
    enum class code { duplicate_resource, unsupported_format_version, corrupt_index };

    repository_error(code c, const std::string& what) : error(what), code_(c) {}

    code error_code() const noexcept { return code_; }

private:
    code code_;
};

// Position of one capability within an index.
struct provider_ref {
    std::size_t resource_ordinal;
    std::size_t capability_ordinal;

    bool operator==(const provider_ref&) const = default;
};

// One capability offered to a requirement, with its position in the index.
struct provider {
    const resource* res;
    const capability* cap;
    provider_ref ref;
};

// An immutable, canonically ordered set of resources with an inverted
// capability-namespace index. Resources are sorted by identity then version;
// no two share (identity, version).
class repository_index {
public:
    repository_index() = default;
    explicit repository_index(std::vector<resource> resources, std::string name = "");

    const std::string& name() const noexcept { return name_; }
    const std::vector<resource>& resources() const noexcept { return resources_; }

    // All capabilities matching the requirement, ordered by provider version
    // descending, then resource ordinal, then capability ordinal.
    std::vector<provider> find_providers(const requirement& req) const;

    // Rebuilds the inverted index from the resources and compares it with
    // the stored one.
    bool verify() const;

    // Deterministic text form: `capstan-index 1`, a sha256 line over the
    // remaining bytes, then one manifest block per resource separated by
    // `---` lines.
    std::string save() const;
    static repository_index load(std::string_view bytes, std::string name = "");

    // Compares resources; the display name does not participate.
    bool operator==(const repository_index& other) const {
        return resources_ == other.resources_;
    }

private:
    std::string name_;
    std::vector<resource> resources_;
    std::map<std::string, std::vector<provider_ref>, std::less<>> namespace_index_;
};

} // namespace capstan
