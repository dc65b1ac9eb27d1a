#include <capstan/resolver.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <tuple>

namespace capstan {

namespace {

struct member_entry {
    const resource* res;
};

struct pending_item {
    std::optional<std::size_t> source_member; // declaring member; nullopt = initial
    std::size_t req_ordinal;
    std::optional<std::size_t> parent; // pending item that introduced source_member
    const requirement* req;
};

struct optional_item {
    std::optional<std::size_t> source_member;
    std::size_t req_ordinal;
};

struct candidate {
    std::optional<std::size_t> member_index; // reuse of a selected member
    const resource* res = nullptr;           // new resource otherwise
    std::size_t cap_ordinal = 0;
};

// One decision point. The snapshot is the search state before any candidate
// of this choice was applied; retrying truncates back to it.
struct choice {
    std::size_t pending_index = 0;
    std::vector<candidate> candidates;
    std::vector<rejected_candidate> rejections; // identity conflicts, precomputed
    std::size_t next = 0;
    std::size_t members_size = 0;
    std::size_t pending_size = 0;
    std::size_t wires_size = 0;
    std::size_t optionals_size = 0;
};

struct raw_wire {
    std::optional<std::size_t> source_member;
    std::size_t req_ordinal;
    std::size_t provider_member;
    std::size_t cap_ordinal;
};

class search {
public:
    explicit search(const resolve_context& ctx) : ctx_(&ctx) {}

    std::variant<resolution, resolution_error> run_all() {
        seed();
        if (!run(0))
            return make_error();
        run_optionals();
        return make_resolution();
    }

private:
    void seed() {
        for (const resource& root : ctx_->root_resources) {
            for (const member_entry& me : members_)
                if (me.res->identity() == root.identity())
                    throw error("duplicate root resource identity: " + root.identity());
            std::size_t idx = members_.size();
            members_.push_back({&root});
            enqueue_requirements(*members_.back().res, idx, std::nullopt);
        }
        for (std::size_t i = 0; i < ctx_->initial_requirements.size(); ++i) {
            const requirement& req = ctx_->initial_requirements[i];
            if (req.is_mandatory())
                pending_.push_back({std::nullopt, i, std::nullopt, &req});
            else
                optionals_.push_back({std::nullopt, i});
        }
        if (members_.empty() && pending_.empty() && optionals_.empty())
            throw error("resolve context needs at least one initial requirement "
                        "or root resource");
    }

    void enqueue_requirements(const resource& res, std::size_t member_idx,
                              std::optional<std::size_t> parent) {
        const auto& reqs = res.requirements();
        for (std::size_t i = 0; i < reqs.size(); ++i) {
            if (reqs[i].is_mandatory())
                pending_.push_back({member_idx, i, parent, &reqs[i]});
            else
                optionals_.push_back({member_idx, i});
        }
    }

    // Runs the DFS until every pending requirement is wired. Returns false
    // when the choice stack drops to floor or the backtrack budget runs out.
    bool run(std::size_t floor) {
        while (cursor_ < pending_.size()) {
            stack_.push_back(build_choice(cursor_));
            if (!advance(floor))
                return false;
        }
        return true;
    }

    bool advance(std::size_t floor) {
        while (true) {
            choice& c = stack_.back();
            restore(c);
            if (c.next < c.candidates.size()) {
                apply(c, c.candidates[c.next]);
                ++c.next;
                ++cursor_;
                return true;
            }
            record_error(c);
            stack_.pop_back();
            if (stack_.size() == floor)
                return false;
            ++stats_.backtracks;
            if (stats_.backtracks > ctx_->limits.max_backtracks) {
                limit_exceeded_ = true;
                return false;
            }
        }
    }

    void restore(const choice& c) {
        members_.resize(c.members_size);
        pending_.resize(c.pending_size);
        wires_.resize(c.wires_size);
        optionals_.resize(c.optionals_size);
        cursor_ = c.pending_index;
    }

    choice build_choice(std::size_t pending_index) {
        choice c;
        c.pending_index = pending_index;
        c.members_size = members_.size();
        c.pending_size = pending_.size();
        c.wires_size = wires_.size();
        c.optionals_size = optionals_.size();

        const requirement& req = *pending_[pending_index].req;

        // Already-selected members first, in selection order.
        for (std::size_t m = 0; m < members_.size(); ++m) {
            const auto& caps = members_[m].res->capabilities();
            for (std::size_t k = 0; k < caps.size(); ++k)
                if (req.matches(caps[k]))
                    c.candidates.push_back({m, members_[m].res, k});
        }

        // New resources: version descending across all repositories; the
        // stable sort keeps repository list order, then resource ordinal,
        // as the tiebreak.
        std::vector<provider> found;
        for (const repository_index* repo : ctx_->repositories) {
            auto batch = repo->find_providers(req);
            found.insert(found.end(), batch.begin(), batch.end());
        }
        std::stable_sort(found.begin(), found.end(),
                         [](const provider& a, const provider& b) {
                             return b.res->version() < a.res->version();
                         });
        for (const provider& p : found) {
            const member_entry* clash = nullptr;
            for (const member_entry& me : members_) {
                if (me.res->identity() == p.res->identity()) {
                    clash = &me;
                    break;
                }
            }
            if (clash) {
                // The same resource was already offered through the
                // member scan; anything else is an identity conflict.
                if (!(clash->res->version() == p.res->version() &&
                      *clash->res == *p.res))
                    add_identity_conflict(c, *p.res, *clash->res);
                continue;
            }
            if (!duplicate_candidate(c, p))
                c.candidates.push_back(
                    {std::nullopt, p.res, p.ref.capability_ordinal});
        }
        return c;
    }

    static bool duplicate_candidate(const choice& c, const provider& p) {
        for (const candidate& prev : c.candidates) {
            if (prev.member_index || prev.cap_ordinal != p.ref.capability_ordinal)
                continue;
            if (prev.res->identity() == p.res->identity() &&
                prev.res->version() == p.res->version() && *prev.res == *p.res)
                return true;
        }
        return false;
    }

    static void add_identity_conflict(choice& c, const resource& rejected,
                                      const resource& selected) {
        for (const rejected_candidate& rc : c.rejections)
            if (rc.identity == rejected.identity() && rc.version == rejected.version())
                return;
        c.rejections.push_back({rejected.identity(), rejected.version(),
                                rejected_candidate::reason::identity_conflict,
                                selected.identity(), selected.version()});
    }

    void apply(const choice& c, const candidate& cand) {
        ++stats_.candidates_considered;
        const pending_item item = pending_[c.pending_index];
        std::size_t provider_idx;
        if (cand.member_index) {
            provider_idx = *cand.member_index;
        } else {
            provider_idx = members_.size();
            members_.push_back({cand.res});
            enqueue_requirements(*cand.res, provider_idx, c.pending_index);
        }
        wires_.push_back({item.source_member, item.req_ordinal, provider_idx,
                          cand.cap_ordinal});
    }

    std::vector<chain_link> make_chain(std::size_t pending_index) const {
        std::vector<chain_link> chain;
        std::optional<std::size_t> idx = pending_index;
        while (idx) {
            const pending_item& item = pending_[*idx];
            std::optional<std::pair<std::string, capstan::version>> source;
            if (item.source_member) {
                const resource& res = *members_[*item.source_member].res;
                source = {res.identity(), res.version()};
            }
            chain.push_back(chain_link{std::move(source), *item.req});
            idx = item.parent;
        }
        std::reverse(chain.begin(), chain.end());
        return chain;
    }

    // Keeps the failure with the deepest dependency chain; earliest wins ties.
    void record_error(const choice& c) {
        std::vector<chain_link> chain = make_chain(c.pending_index);
        if (best_error_ && best_error_->chain.size() >= chain.size())
            return;

        std::vector<rejected_candidate> rejected = c.rejections;
        auto already_listed = [&](const std::string& id, const capstan::version& v) {
            for (const rejected_candidate& rc : rejected)
                if (rc.identity == id && rc.version == v)
                    return true;
            return false;
        };
        for (const candidate& cand : c.candidates) {
            const resource* res =
                cand.member_index ? members_[*cand.member_index].res : cand.res;
            if (!already_listed(res->identity(), res->version()))
                rejected.push_back(
                    {res->identity(), res->version(),
                     rejected_candidate::reason::own_requirements_unsatisfiable,
                     "", {}});
        }

        best_error_.emplace(resolution_error{*pending_[c.pending_index].req,
                                             std::move(chain), std::move(rejected),
                                             c.candidates.size(), false, {}});
    }

    // Best-effort pass over optional requirements: each gets a fenced
    // sub-search; failure rolls the attempt back and moves on.
    void run_optionals() {
        for (std::size_t i = 0; i < optionals_.size(); ++i) {
            const optional_item item = optionals_[i];
            const requirement* req =
                item.source_member
                    ? &members_[*item.source_member].res->requirements()[item.req_ordinal]
                    : &ctx_->initial_requirements[item.req_ordinal];

            std::size_t floor = stack_.size();
            std::size_t members_size = members_.size();
            std::size_t pending_size = pending_.size();
            std::size_t wires_size = wires_.size();
            std::size_t optionals_size = optionals_.size();

            pending_.push_back({item.source_member, item.req_ordinal,
                                std::nullopt, req});
            if (!run(floor)) {
                stack_.resize(floor);
                members_.resize(members_size);
                pending_.resize(pending_size);
                wires_.resize(wires_size);
                optionals_.resize(optionals_size);
                cursor_ = pending_size;
            }
        }
    }

    resolution make_resolution() const {
        std::vector<std::size_t> order(members_.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return members_[a].res->identity() < members_[b].res->identity();
        });
        std::vector<std::size_t> to_sorted(members_.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            to_sorted[order[i]] = i;

        resolution result;
        result.closure.reserve(members_.size());
        for (std::size_t i : order)
            result.closure.push_back(*members_[i].res);

        result.wires.reserve(wires_.size());
        for (const raw_wire& raw : wires_) {
            wire w;
            if (raw.source_member)
                w.source = to_sorted[*raw.source_member];
            w.requirement_ordinal = raw.req_ordinal;
            w.provider = to_sorted[raw.provider_member];
            w.capability_ordinal = raw.cap_ordinal;
            result.wires.push_back(w);
        }
        std::sort(result.wires.begin(), result.wires.end(),
                  [](const wire& a, const wire& b) {
                      return std::tuple(a.source.has_value(), a.source.value_or(0),
                                        a.requirement_ordinal) <
                             std::tuple(b.source.has_value(), b.source.value_or(0),
                                        b.requirement_ordinal);
                  });
        result.stats = stats_;
        return result;
    }

    resolution_error make_error() {
        resolution_error err = std::move(*best_error_);
        err.backtrack_limit_exceeded = limit_exceeded_;
        err.stats = stats_;
        return err;
    }

    const resolve_context* ctx_;
    std::vector<member_entry> members_;
    std::vector<pending_item> pending_;
    std::vector<raw_wire> wires_;
    std::vector<optional_item> optionals_;
    std::vector<choice> stack_;
    std::size_t cursor_ = 0;
    resolution_stats stats_;
    std::optional<resolution_error> best_error_;
    bool limit_exceeded_ = false;
};

} // namespace

std::variant<resolution, resolution_error> resolve(const resolve_context& ctx) {
    return search(ctx).run_all();
}

bool verify_closure(std::span<const resource> members,
                    std::span<const requirement> initial) {
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
            if (members[i].identity() == members[j].identity())
                return false;

    auto satisfied = [&](const requirement& req) {
        if (!req.is_mandatory())
            return true;
        for (const resource& m : members)
            for (const capability& cap : m.capabilities())
                if (req.matches(cap))
                    return true;
        return false;
    };

    for (const requirement& req : initial)
        if (!satisfied(req))
            return false;
    for (const resource& m : members)
        for (const requirement& req : m.requirements())
            if (!satisfied(req))
                return false;
    return true;
}

std::string report(const resolution& r, bool verbose) {
    std::ostringstream out;
    out << "closure (" << r.closure.size()
        << (r.closure.size() == 1 ? " resource" : " resources") << "):\n";
    for (const resource& m : r.closure)
        out << "  " << m.identity() << " " << m.version() << "\n";

    out << "wires:\n";
    for (const wire& w : r.wires) {
        out << "  ";
        if (w.source)
            out << r.closure[*w.source].identity() << " "
                << r.closure[*w.source].version();
        else
            out << "<initial>";
        const resource& provider = r.closure[w.provider];
        out << " [" << w.requirement_ordinal << "] "
            << provider.capabilities()[w.capability_ordinal].ns() << " -> "
            << provider.identity() << " " << provider.version() << "\n";
    }
    if (verbose)
        out << "stats: candidates=" << r.stats.candidates_considered
            << " backtracks=" << r.stats.backtracks << "\n";
    return out.str();
}

std::string explain(const resolution_error& e) {
    std::ostringstream out;
    if (e.backtrack_limit_exceeded)
        out << "resolution failed: backtrack limit exceeded while resolving "
               "namespace '"
            << e.failed.ns() << "'\n";
    else
        out << "resolution failed: no provider for requirement in namespace '"
            << e.failed.ns() << "'\n";
    out << "  filter: "
        << (e.failed.predicate() ? e.failed.predicate()->to_string() : "<any>")
        << "\n";
    out << "  " << e.candidates_matched
        << (e.candidates_matched == 1 ? " candidate" : " candidates")
        << " matched, " << e.rejected.size() << " rejected\n";
    for (const rejected_candidate& rc : e.rejected) {
        out << "  rejected: " << rc.identity << " " << rc.version << " ";
        if (rc.why == rejected_candidate::reason::identity_conflict)
            out << "(identity conflict with selected " << rc.conflict_identity
                << " " << rc.conflict_version << ")";
        else
            out << "(own requirements unsatisfiable)";
        out << "\n";
    }
    out << "  chain:\n";
    for (const chain_link& link : e.chain) {
        out << "    ";
        if (link.source)
            out << link.source->first << " " << link.source->second;
        else
            out << "<initial>";
        out << " requires " << link.req.ns() << ": "
            << (link.req.predicate() ? link.req.predicate()->to_string() : "<any>")
            << "\n";
    }
    return out.str();
}

} // namespace capstan
