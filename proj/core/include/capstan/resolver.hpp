#pragma once

#include <capstan/repository.hpp>
#include <capstan/resource.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace capstan {

struct resolve_limits {
    std::size_t max_backtracks = 100000;
};

// Input to resolve(). Repositories are consulted in list order (earlier
// repositories win candidate ties). Root resources are pre-selected closure
// members. The context must outlive the returned resolution.
struct resolve_context {
    std::vector<const repository_index*> repositories;
    std::vector<requirement> initial_requirements;
    std::vector<resource> root_resources;
    resolve_limits limits;
};

struct resolution_stats {
    std::size_t candidates_considered = 0;
    std::size_t backtracks = 0;

    bool operator==(const resolution_stats&) const = default;
};

// One satisfied requirement: source (a closure member, or the initial
// requirement list), the requirement's ordinal there, and the provider
// capability. Indexes refer to resolution::closure.
struct wire {
    std::optional<std::size_t> source; // closure index; nullopt = initial
    std::size_t requirement_ordinal;
    std::size_t provider;              // closure index
    std::size_t capability_ordinal;    // into provider's capabilities()

    bool operator==(const wire&) const = default;
};

// A successful resolve: closure sorted by identity, wires sorted by source
// (initial requirements first) then requirement ordinal.
struct resolution {
    std::vector<resource> closure;
    std::vector<wire> wires;
    resolution_stats stats;
};

struct rejected_candidate {
    enum class reason { identity_conflict, own_requirements_unsatisfiable };

    std::string identity;
    capstan::version version;
    reason why = reason::own_requirements_unsatisfiable;
    // The selected member it collided with (identity_conflict only).
    std::string conflict_identity;
    capstan::version conflict_version;
};

struct chain_link {
    // Declaring resource; nullopt for an initial requirement.
    std::optional<std::pair<std::string, capstan::version>> source;
    requirement req;
};

// Why resolve() failed: the requirement with no workable provider, the
// dependency chain that led to it, and the candidates that were turned down.
struct resolution_error {
    requirement failed;
    std::vector<chain_link> chain;
    std::vector<rejected_candidate> rejected;
    std::size_t candidates_matched = 0;
    bool backtrack_limit_exceeded = false;
    resolution_stats stats;
};

// Computes a closure with no unsatisfied mandatory requirements.
//
// Search contract: requirements are processed in FIFO discovery order;
// candidates come from already-selected members first, then from
// find_providers over the repositories in list order; selecting a resource
// enqueues its mandatory requirements; identity conflicts and exhausted
// candidate lists backtrack chronologically. Optional requirements are
// attempted after the mandatory solution is complete and never disturb it.
// Deterministic for equal inputs.
std::variant<resolution, resolution_error> resolve(const resolve_context& ctx);

// Independent check that members form a closure: identities are unique and
// every mandatory requirement (of the members, and in initial) is matched by
// a capability of some member. Does not share logic with resolve().
bool verify_closure(std::span<const resource> members,
                    std::span<const requirement> initial);

// Deterministic text report: closure members sorted by identity, wires
// sorted by origin. verbose appends a stats line.
std::string report(const resolution& r, bool verbose = false);

// Deterministic multi-line failure report: the failed requirement's filter,
// candidate counts, rejections, and the dependency chain.
std::string explain(const resolution_error& e);

} // namespace capstan
