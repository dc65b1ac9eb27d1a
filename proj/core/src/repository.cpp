#include <capstan/repository.hpp>

#include <capstan/digest.hpp>
#include <capstan/manifest.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>

namespace capstan {

namespace {

constexpr std::string_view index_magic = "capstan-index 1";

[[noreturn]] void fail(repository_error::code c, const std::string& what) {
    throw repository_error(c, what);
}

std::map<std::string, std::vector<provider_ref>, std::less<>>
build_namespace_index(const std::vector<resource>& resources) {
    std::map<std::string, std::vector<provider_ref>, std::less<>> index;
    for (std::size_t r = 0; r < resources.size(); ++r) {
        const auto& capabilities = resources[r].capabilities();
        for (std::size_t c = 0; c < capabilities.size(); ++c)
            index[capabilities[c].ns()].push_back({r, c});
    }
    return index;
}

} // namespace

repository_index::repository_index(std::vector<resource> resources, std::string name)
    : name_(std::move(name)) {
    // Canonical order: identity, then version. Sorting a permutation keeps
    // the original ordinals available for duplicate reporting.
    std::vector<std::size_t> order(resources.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (resources[a].identity() != resources[b].identity())
            return resources[a].identity() < resources[b].identity();
        return resources[a].version() < resources[b].version();
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        const resource& prev = resources[order[i - 1]];
        const resource& cur = resources[order[i]];
        if (prev.identity() == cur.identity() && prev.version() == cur.version()) {
            std::ostringstream msg;
            msg << "duplicate resource " << cur.identity() << " "
                << cur.version() << " (inputs " << std::min(order[i - 1], order[i])
                << " and " << std::max(order[i - 1], order[i]) << ")";
            fail(repository_error::code::duplicate_resource, msg.str());
        }
    }

    resources_.reserve(resources.size());
    for (std::size_t i : order)
        resources_.push_back(std::move(resources[i]));
    namespace_index_ = build_namespace_index(resources_);
}

std::vector<provider> repository_index::find_providers(const requirement& req) const {
    std::vector<provider> out;
    auto it = namespace_index_.find(req.ns());
    if (it == namespace_index_.end())
        return out;

    for (const provider_ref& ref : it->second) {
        const resource& res = resources_[ref.resource_ordinal];
        const capability& cap = res.capabilities()[ref.capability_ordinal];
        if (req.matches(cap))
            out.push_back({&res, &cap, ref});
    }
    std::stable_sort(out.begin(), out.end(), [](const provider& a, const provider& b) {
        if (a.res->version() != b.res->version())
            return b.res->version() < a.res->version();
        if (a.ref.resource_ordinal != b.ref.resource_ordinal)
            return a.ref.resource_ordinal < b.ref.resource_ordinal;
        return a.ref.capability_ordinal < b.ref.capability_ordinal;
    });
    return out;
}

bool repository_index::verify() const {
    return build_namespace_index(resources_) == namespace_index_;
}

std::string repository_index::save() const {
    std::string body;
    for (std::size_t i = 0; i < resources_.size(); ++i) {
        if (i > 0)
            body += "---\n";
        body += serialize_manifest(resources_[i]);
    }
    std::string out(index_magic);
    out += "\nsha256 ";
    out += sha256_hex(body);
    out += "\n";
    out += body;
    return out;
}

repository_index repository_index::load(std::string_view bytes, std::string name) {
    std::size_t first_nl = bytes.find('\n');
    if (first_nl == std::string_view::npos)
        fail(repository_error::code::corrupt_index, "not an index file");
    std::string_view magic = bytes.substr(0, first_nl);
    if (magic != index_magic) {
        if (magic.starts_with("capstan-index"))
            fail(repository_error::code::unsupported_format_version,
                 "unsupported index format version: '" + std::string(magic) + "'");
        fail(repository_error::code::corrupt_index, "not an index file");
    }

    std::size_t second_nl = bytes.find('\n', first_nl + 1);
    if (second_nl == std::string_view::npos)
        fail(repository_error::code::corrupt_index, "missing checksum line");
    std::string_view checksum_line = bytes.substr(first_nl + 1, second_nl - first_nl - 1);
    if (!checksum_line.starts_with("sha256 "))
        fail(repository_error::code::corrupt_index, "missing checksum line");
    std::string_view expected = checksum_line.substr(7);

    std::string_view body = bytes.substr(second_nl + 1);
    if (sha256_hex(body) != expected)
        fail(repository_error::code::corrupt_index, "index checksum mismatch");

    // Split the body into manifest blocks on `---` lines.
    std::vector<resource> resources;
    std::string block;
    std::size_t pos = 0;
    std::size_t block_no = 0;
    auto flush = [&] {
        try {
            resources.push_back(parse_manifest(block));
        } catch (const manifest_error& e) {
            std::ostringstream msg;
            msg << "resource block " << block_no << ": " << e.what();
            fail(repository_error::code::corrupt_index, msg.str());
        }
        ++block_no;
        block.clear();
    };
    if (!body.empty()) {
        while (pos < body.size()) {
            std::size_t nl = body.find('\n', pos);
            std::string_view line = nl == std::string_view::npos
                                        ? body.substr(pos)
                                        : body.substr(pos, nl - pos);
            pos = nl == std::string_view::npos ? body.size() : nl + 1;
            if (line == "---")
                flush();
            else {
                block += line;
                block += "\n";
            }
        }
        flush();
    }

    return repository_index(std::move(resources), std::move(name));
}

} // namespace capstan
