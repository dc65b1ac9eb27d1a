#pragma once

#include <capstan/errors.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

// glibc's <sys/types.h> may define these as macros.
#ifdef major
#  undef major
#endif
#ifdef minor
#  undef minor
#endif

namespace capstan {

class version_error : public error {
public:
    enum class code { malformed_version, malformed_range, empty_range };

    version_error(code c, std::string message)
        : error(std::move(message)), code_(c) {}

    code error_code() const noexcept { return code_; }

private:
    code code_;
};

// A three-component semantic version. Ordering is lexicographic on
// (major, minor, patch).
struct version {
    std::uint64_t major = 0;
    std::uint64_t minor = 0;
    std::uint64_t patch = 0;

    // Accepts exactly INT "." INT "." INT. No signs, no extra segments,
    // no pre-release or build qualifiers. Leading zeros are normalized
    // to the numeric value.
    static version parse(std::string_view text);
    static std::optional<version> try_parse(std::string_view text) noexcept;

    std::string to_string() const;

    auto operator<=>(const version&) const = default;
};

enum class version_part { major, minor, patch };

// Returns the next version for the given part; lower parts reset to zero.
version bumped(const version& v, version_part part) noexcept;

// A contiguous version interval. The lower bound is always finite; the
// upper bound may be absent, meaning unbounded above.
class version_range {
public:
    version_range(version low, bool low_inclusive,
                  std::optional<version> high, bool high_inclusive);

    // Accepts the bracket forms "[v,w)", "[v,w]", "(v,w)", "(v,w]" and the
    // bare form "v", which means [v, unbounded). Whitespace is permitted
    // after the comma and nowhere else. Rejects ranges that contain no
    // version at all (low > high, or low = high with an exclusive bound).
    static version_range parse(std::string_view text);

    // [v, unbounded)
    static version_range at_least(version v);

    bool contains(const version& v) const noexcept;

    // Canonical form: bracket form with no interior whitespace; an
    // unbounded range renders as the bare lower version.
    std::string to_string() const;

    const version& low() const noexcept { return low_; }
    bool low_inclusive() const noexcept { return low_inclusive_; }
    const std::optional<version>& high() const noexcept { return high_; }
    bool high_inclusive() const noexcept { return high_inclusive_; }

    bool operator==(const version_range&) const = default;

private:
    version low_;
    std::optional<version> high_;
    bool low_inclusive_ = true;
    bool high_inclusive_ = false;
};

std::string to_string(const version& v);
std::ostream& operator<<(std::ostream& os, const version& v);
std::ostream& operator<<(std::ostream& os, const version_range& r);

} // namespace capstan
