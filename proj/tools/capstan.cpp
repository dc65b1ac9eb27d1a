#include <CLI11.hpp>

#include <capstan/digest.hpp>
#include <capstan/manifest.hpp>
#include <capstan/mlpkg.hpp>
#include <capstan/repository.hpp>
#include <capstan/resolver.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_unresolvable = 1;
constexpr int exit_invalid = 2;
constexpr int exit_usage = 3;

std::optional<std::vector<std::uint8_t>> read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad())
        return std::nullopt;
    return bytes;
}

std::optional<std::string> read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    if (in.bad())
        return std::nullopt;
    return text;
}

bool write_file(const std::string& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        return false;
    out.write(static_cast<const char*>(data), std::streamsize(size));
    out.flush();
    return bool(out);
}

std::string_view kind_name(capstan::package_error::code c) noexcept {
    using code = capstan::package_error::code;
    switch (c) {
    case code::empty_payload: return "empty-payload";
    case code::layout: return "layout";
    case code::manifest: return "manifest";
    case code::schema: return "schema";
    case code::digest_mismatch: return "digest-mismatch";
    case code::missing_content: return "missing-content";
    case code::descriptor_syntax: return "descriptor-syntax";
    case code::invalid_descriptor: return "invalid-descriptor";
    }
    return "error";
}

int fail_usage(const std::string& msg) {
    std::cerr << "capstan: " << msg << "\n";
    return exit_usage;
}

int fail_invalid(const std::string& msg) {
    std::cerr << "capstan: " << msg << "\n";
    return exit_invalid;
}

int fail_package(const capstan::package_error& e) {
    std::cerr << "capstan: " << kind_name(e.error_code()) << ": " << e.what() << "\n";
    return e.error_code() == capstan::package_error::code::descriptor_syntax
               ? exit_usage
               : exit_invalid;
}

struct create_options {
    std::string descriptor;
    std::string graph;
    std::string params;
    std::string out;
};

int cmd_create(const create_options& opt) {
    auto text = read_text(opt.descriptor);
    if (!text)
        return fail_usage("cannot read '" + opt.descriptor + "'");
    auto graph = read_binary(opt.graph);
    if (!graph)
        return fail_usage("cannot read '" + opt.graph + "'");
    auto params = read_binary(opt.params);
    if (!params)
        return fail_usage("cannot read '" + opt.params + "'");

    try {
        capstan::model_descriptor d = capstan::parse_model_descriptor(*text);
        std::vector<std::uint8_t> archive = capstan::create_package(d, *graph, *params);
        if (!write_file(opt.out, archive.data(), archive.size()))
            return fail_usage("cannot write '" + opt.out + "'");
        std::cout << capstan::serialize_capability(capstan::capability_of(d)) << "\n";
        return exit_ok;
    } catch (const capstan::package_error& e) {
        return fail_package(e);
    }
}

int cmd_inspect(const std::string& path) {
    auto bytes = read_binary(path);
    if (!bytes)
        return fail_usage("cannot read '" + path + "'");

    try {
        capstan::model_package pkg = capstan::validate_package(*bytes);
        std::cout << "package: " << pkg.res.identity() << " "
                  << pkg.res.version().to_string() << "\n";
        std::cout << "capabilities:\n";
        for (const capstan::capability& cap : pkg.res.capabilities())
            std::cout << "  " << capstan::serialize_capability(cap) << "\n";
        std::cout << "requirements:\n";
        for (const capstan::requirement& req : pkg.res.requirements())
            std::cout << "  " << capstan::serialize_requirement(req) << "\n";
        std::cout << "contents:\n";
        for (const capstan::content_ref& content : pkg.res.contents())
            std::cout << "  " << content.uri << " sha256=" << content.sha256
                      << " size=" << content.size << "\n";
        return exit_ok;
    } catch (const capstan::package_error& e) {
        std::cerr << "capstan: " << kind_name(e.error_code()) << ": " << e.what()
                  << "\n";
        return exit_invalid;
    }
}

struct index_options {
    std::string out;
    std::vector<std::string> inputs;
};

bool zip_magic(const std::vector<std::uint8_t>& bytes) noexcept {
    return bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K' &&
           bytes[2] == 3 && bytes[3] == 4;
}

int cmd_index(const index_options& opt) {
    std::vector<capstan::resource> resources;
    for (const std::string& path : opt.inputs) {
        auto bytes = read_binary(path);
        if (!bytes)
            return fail_usage("cannot read '" + path + "'");
        try {
            if (zip_magic(*bytes)) {
                // Archives are indexed by reference: the record points at the
                // package file itself, not at the payloads inside it.
                capstan::model_package pkg = capstan::validate_package(*bytes);
                std::vector<capstan::capability> declared(
                    pkg.res.capabilities().begin() + 1, pkg.res.capabilities().end());
                std::vector<capstan::content_ref> contents;
                contents.push_back({path, capstan::sha256_hex(*bytes), bytes->size()});
                resources.emplace_back(pkg.res.identity(), pkg.res.version(),
                                       std::move(declared), pkg.res.requirements(),
                                       std::move(contents));
            } else {
                resources.push_back(capstan::parse_manifest(
                    std::string_view(reinterpret_cast<const char*>(bytes->data()),
                                     bytes->size())));
            }
        } catch (const capstan::package_error& e) {
            std::cerr << "capstan: " << path << ": " << kind_name(e.error_code())
                      << ": " << e.what() << "\n";
            return exit_invalid;
        } catch (const capstan::manifest_error& e) {
            return fail_invalid(path + ": " + e.what());
        }
    }

    try {
        capstan::repository_index index(std::move(resources));
        std::string bytes = index.save();
        if (!write_file(opt.out, bytes.data(), bytes.size()))
            return fail_usage("cannot write '" + opt.out + "'");
        return exit_ok;
    } catch (const capstan::repository_error& e) {
        return fail_invalid(e.what());
    }
}

struct resolve_options {
    std::vector<std::string> index_paths;
    std::vector<std::string> inline_requirements;
    std::string requirements_file;
    std::string deploy_path;
    bool verbose = false;
};

int run_resolve(const resolve_options& opt) {
    std::vector<std::string> clauses = opt.inline_requirements;
    if (clauses.empty() && !opt.requirements_file.empty()) {
        auto text = read_text(opt.requirements_file);
        if (!text)
            return fail_usage("cannot read '" + opt.requirements_file + "'");
        std::size_t pos = 0;
        while (pos < text->size()) {
            std::size_t nl = text->find('\n', pos);
            std::string line = nl == std::string::npos
                                   ? text->substr(pos)
                                   : text->substr(pos, nl - pos);
            pos = nl == std::string::npos ? text->size() : nl + 1;
            if (line.empty() || line.front() == '#')
                continue;
            clauses.push_back(std::move(line));
        }
    }
    if (clauses.empty())
        return fail_usage("no requirements given (use -r or -R)");

    std::vector<capstan::requirement> requirements;
    for (const std::string& clause : clauses) {
        try {
            requirements.push_back(capstan::parse_requirement(clause));
        } catch (const capstan::manifest_error& e) {
            return fail_usage("requirement '" + clause + "': " + e.what());
        }
    }

    std::vector<capstan::repository_index> indexes;
    indexes.reserve(opt.index_paths.size());
    for (const std::string& path : opt.index_paths) {
        auto bytes = read_binary(path);
        if (!bytes)
            return fail_usage("cannot read '" + path + "'");
        try {
            indexes.push_back(capstan::repository_index::load(
                std::string_view(reinterpret_cast<const char*>(bytes->data()),
                                 bytes->size()),
                path));
        } catch (const capstan::repository_error& e) {
            return fail_invalid(path + ": " + e.what());
        }
    }

    capstan::resolve_context ctx;
    ctx.repositories.reserve(indexes.size());
    for (const capstan::repository_index& index : indexes)
        ctx.repositories.push_back(&index);
    ctx.initial_requirements = std::move(requirements);

    auto outcome = capstan::resolve(ctx);
    if (const auto* err = std::get_if<capstan::resolution_error>(&outcome)) {
        std::cerr << capstan::explain(*err);
        if (opt.verbose)
            std::cerr << "stats: candidates=" << err->stats.candidates_considered
                      << " backtracks=" << err->stats.backtracks << "\n";
        return exit_unresolvable;
    }

    const capstan::resolution& r = std::get<capstan::resolution>(outcome);
    std::cout << capstan::report(r, opt.verbose);
    if (!opt.deploy_path.empty()) {
        try {
            std::string descriptor = capstan::assemble(r);
            if (!write_file(opt.deploy_path, descriptor.data(), descriptor.size()))
                return fail_usage("cannot write '" + opt.deploy_path + "'");
        } catch (const capstan::package_error& e) {
            return fail_package(e);
        }
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"model package, repository index, and capability resolver tool"};
    app.require_subcommand(1);

    int rc = exit_ok;

    create_options create_opt;
    CLI::App* create = app.add_subcommand(
        "create", "Build a model package archive from a descriptor and payloads");
    create->add_option("descriptor", create_opt.descriptor, "model descriptor file")
        ->required()
        ->check(CLI::ExistingFile);
    create->add_option("graph", create_opt.graph, "computation graph payload")
        ->required()
        ->check(CLI::ExistingFile);
    create->add_option("params", create_opt.params, "trained parameters payload")
        ->required()
        ->check(CLI::ExistingFile);
    create->add_option("out", create_opt.out, "archive to write")->required();
    create->callback([&] { rc = cmd_create(create_opt); });

    std::string inspect_path;
    CLI::App* inspect =
        app.add_subcommand("inspect", "Validate a package and print its manifest");
    inspect->add_option("package", inspect_path, "package archive")
        ->required()
        ->check(CLI::ExistingFile);
    inspect->callback([&] { rc = cmd_inspect(inspect_path); });

    index_options index_opt;
    CLI::App* index = app.add_subcommand(
        "index", "Build a repository index from packages and manifests");
    index->add_option("-o,--output", index_opt.out, "index file to write")->required();
    index->add_option("inputs", index_opt.inputs,
                      "package archives or manifest files")
        ->check(CLI::ExistingFile);
    index->callback([&] { rc = cmd_index(index_opt); });

    auto add_resolve_options = [](CLI::App* cmd, resolve_options& opt) {
        cmd->add_option("-r,--requirement", opt.inline_requirements,
                        "requirement clause, e.g. \"ns; filter:='(a=b)'\"")
            ->allow_extra_args(false);
        cmd->add_option("-R,--requirements", opt.requirements_file,
                        "file with one requirement clause per line")
            ->check(CLI::ExistingFile);
        cmd->add_option("indexes", opt.index_paths, "repository index files")
            ->check(CLI::ExistingFile);
        cmd->add_flag("--verbose", opt.verbose, "append resolver statistics");
    };

    resolve_options resolve_opt;
    CLI::App* resolve = app.add_subcommand(
        "resolve", "Resolve requirements against repository indexes");
    add_resolve_options(resolve, resolve_opt);
    resolve->add_option("--deploy", resolve_opt.deploy_path,
                        "also write a deployment descriptor");
    resolve->callback([&] { rc = run_resolve(resolve_opt); });

    resolve_options assemble_opt;
    CLI::App* assemble = app.add_subcommand(
        "assemble", "Resolve and write a deployment descriptor");
    add_resolve_options(assemble, assemble_opt);
    assemble->add_option("-o,--output", assemble_opt.deploy_path,
                         "deployment descriptor to write")
        ->required();
    assemble->callback([&] { rc = run_resolve(assemble_opt); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }
    return rc;
}
