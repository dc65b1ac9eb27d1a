// Acceptance gate: seven criteria, one pass/fail line each. Exit 0 only
// when every criterion passes. Tolerances and budgets are pinned here.

#include <capstan/digest.hpp>
#include <capstan/filter.hpp>
#include <capstan/mlpkg.hpp>
#include <capstan/properties.hpp>
#include <capstan/repository.hpp>
#include <capstan/resolver.hpp>
#include <capstan/version.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace capstan;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(int n, const std::string& name, bool pass,
             const std::string& detail = "") {
    std::cout << "criterion " << n << " (" << name << "): "
              << (pass ? "PASS" : "FAIL");
    if (!pass && !detail.empty())
        std::cout << " - " << detail;
    std::cout << std::endl;
    if (!pass)
        ++failures;
}

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

// ---- criterion 1: paper golden match ----------------------------------

const char* const consumer_filter_text =
    "(&(input=image)(input.width>=28)(input.height>=28)(output.type=digit)"
    "(|(dataset=MNIST)(dataset=SVHN)))";

property_map mnist_capability_map() {
    property_map props;
    props.set("input", property_value(std::string("image")));
    props.set("input.height", property_value(std::int64_t(28)));
    props.set("input.width", property_value(std::int64_t(28)));
    props.set("output.type", property_value(std::string("digit")));
    props.set("output.size", property_value(std::int64_t(10)));
    props.set("dataset", property_value(std::string("MNIST")));
    props.set("version", property_value(std::string("1.0.0")));
    return props;
}

void criterion_1() {
    auto start = clock_type::now();
    std::ostringstream detail;
    bool pass = true;
    try {
        filter consumer = filter::parse(consumer_filter_text);

        if (!consumer.evaluate(mnist_capability_map())) {
            pass = false;
            detail << "MNIST map did not match; ";
        }

        property_map letters = mnist_capability_map();
        letters.set("output.type", property_value(std::string("letter")));
        if (consumer.evaluate(letters)) {
            pass = false;
            detail << "output.type=letter matched; ";
        }

        property_map narrow = mnist_capability_map();
        narrow.set("input.width", property_value(std::int64_t(27)));
        if (consumer.evaluate(narrow)) {
            pass = false;
            detail << "input.width=27 matched; ";
        }
    } catch (const std::exception& e) {
        pass = false;
        detail << "exception: " << e.what();
    }
    if (seconds_since(start) >= 1.0) {
        pass = false;
        detail << "over the 1 s budget";
    }
    verdict(1, "paper golden match", pass, detail.str());
}

// ---- criterion 2: semver fidelity --------------------------------------

void criterion_2() {
    auto start = clock_type::now();
    std::ostringstream detail;
    bool pass = true;
    try {
        version_range range = version_range::parse("[1.2.3,2.0.0)");
        const std::pair<const char*, bool> table[] = {
            {"1.2.3", true},  {"1.5.0", true},  {"1.999.999", true},
            {"2.0.0", false}, {"2.1.8", false}, {"1.2.2", false},
        };
        for (const auto& [text, expected] : table) {
            if (range.contains(version::parse(text)) != expected) {
                pass = false;
                detail << "contains(" << text << ") != "
                       << (expected ? "true" : "false") << "; ";
            }
        }
    } catch (const std::exception& e) {
        pass = false;
        detail << "exception: " << e.what();
    }
    if (seconds_since(start) >= 1.0) {
        pass = false;
        detail << "over the 1 s budget";
    }
    verdict(2, "semver fidelity", pass, detail.str());
}

// ---- criterion 3: resolver oracle equivalence ---------------------------
//
// The generator is intentionally independent of the unit-test generators:
// two namespaces, three attributes, at most eight resources with at most
// three requirements each, per the stated bounds.

using rng = std::mt19937_64;

std::size_t pick(rng& g, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(g);
}

struct world {
    std::vector<resource> resources;
    std::vector<requirement> initial;
};

filter world_filter(rng& g) {
    static const char* const attrs[] = {"p", "q", "r"};
    static const char* const values[] = {"1", "2", "x"};
    std::string attr = attrs[pick(g, 3)];
    switch (pick(g, 4)) {
    case 0:
        return filter::compare(attr, filter::compare_op::eq, values[pick(g, 3)]);
    case 1:
        return filter::compare(attr, filter::compare_op::ge, values[pick(g, 2)]);
    case 2:
        return filter::present(attr);
    default:
        return filter::negation(
            filter::compare(attr, filter::compare_op::eq, values[pick(g, 3)]));
    }
}

requirement world_requirement(rng& g) {
    static const char* const namespaces[] = {"alpha", "beta"};
    std::optional<filter> f;
    if (pick(g, 10) < 7)
        f = world_filter(g);
    return requirement(namespaces[pick(g, 2)], std::move(f),
                       pick(g, 10) < 2
                           ? requirement::resolution_mode::optional
                           : requirement::resolution_mode::mandatory);
}

world random_world(rng& g) {
    static const char* const namespaces[] = {"alpha", "beta"};
    static const char* const attrs[] = {"p", "q", "r"};
    static const char* const values[] = {"1", "2", "x"};

    world w;
    std::size_t n = 1 + pick(g, 8);
    std::set<std::pair<std::string, version>> used;
    for (std::size_t i = 0; i < n; ++i) {
        std::string identity = "res" + std::to_string(pick(g, 6));
        version ver{pick(g, 3), pick(g, 3), 0};
        while (used.contains({identity, ver}))
            ver.patch += 1;
        used.insert({identity, ver});

        std::vector<capability> caps;
        std::size_t n_caps = 1 + pick(g, 2);
        for (std::size_t k = 0; k < n_caps; ++k) {
            property_map props;
            std::size_t n_attrs = pick(g, 4);
            for (std::size_t a = 0; a < n_attrs; ++a) {
                std::string attr = attrs[pick(g, 3)];
                if (pick(g, 2) == 0)
                    props.set(attr, property_value(std::string(values[pick(g, 3)])));
                else
                    props.set(attr, property_value(std::int64_t(1 + pick(g, 4))));
            }
            caps.emplace_back(namespaces[pick(g, 2)], std::move(props));
        }

        std::vector<requirement> reqs;
        std::size_t n_reqs = pick(g, 4);
        for (std::size_t k = 0; k < n_reqs; ++k)
            reqs.push_back(world_requirement(g));

        w.resources.emplace_back(std::move(identity), ver, std::move(caps),
                                 std::move(reqs));
    }

    std::size_t n_initial = 1 + pick(g, 3);
    for (std::size_t i = 0; i < n_initial; ++i)
        w.initial.push_back(world_requirement(g));
    return w;
}

bool oracle_satisfiable(const world& w) {
    std::size_t n = w.resources.size();
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
        std::vector<resource> subset;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::uint64_t(1) << i))
                subset.push_back(w.resources[i]);
        if (verify_closure(subset, w.initial))
            return true;
    }
    return false;
}

// Runs the 1000-context sweep; returns the sha256 of all textual outputs so
// criterion 6 can compare two sweeps byte for byte.
std::string criterion_3_sweep(bool& pass, std::ostringstream& detail) {
    rng g(20260819);
    std::string transcript;
    for (int iter = 0; iter < 1000 && pass; ++iter) {
        world w = random_world(g);
        repository_index repo(w.resources);
        resolve_context ctx;
        ctx.repositories = {&repo};
        ctx.initial_requirements = w.initial;

        auto outcome = resolve(ctx);
        bool expected = oracle_satisfiable(w);
        if (const auto* r = std::get_if<resolution>(&outcome)) {
            if (!verify_closure(r->closure, ctx.initial_requirements)) {
                pass = false;
                detail << "iteration " << iter
                       << ": returned closure fails verify_closure";
            }
            if (!expected) {
                pass = false;
                detail << "iteration " << iter
                       << ": resolve succeeded, oracle says unsatisfiable";
            }
            transcript += report(*r, true);
        } else {
            const auto& err = std::get<resolution_error>(outcome);
            if (err.backtrack_limit_exceeded) {
                pass = false;
                detail << "iteration " << iter << ": backtrack limit hit";
            } else if (expected) {
                pass = false;
                detail << "iteration " << iter
                       << ": resolve failed, oracle says satisfiable";
            }
            transcript += explain(err);
        }
    }
    return sha256_hex(transcript);
}

std::string criterion_3_digest;

void criterion_3() {
    auto start = clock_type::now();
    std::ostringstream detail;
    bool pass = true;
    try {
        criterion_3_digest = criterion_3_sweep(pass, detail);
    } catch (const std::exception& e) {
        pass = false;
        detail << "exception: " << e.what();
    }
    if (seconds_since(start) >= 60.0) {
        pass = false;
        detail << "; over the 60 s budget";
    }
    verdict(3, "resolver oracle equivalence", pass, detail.str());
}

// ---- criterion 4: filter round trip -------------------------------------

filter random_ast(rng& g, std::size_t depth);

filter random_ast_leaf(rng& g) {
    static const char* const attrs[] = {"a", "name", "input.width", "x-y_z"};
    static const char* const texts[] = {"",       "image", "a*b",
                                        "(paren", "b\\s",  "01"};
    std::string attr = attrs[pick(g, 4)];
    switch (pick(g, 3)) {
    case 0: {
        static const filter::compare_op ops[] = {filter::compare_op::eq,
                                                 filter::compare_op::ge,
                                                 filter::compare_op::le};
        return filter::compare(attr, ops[pick(g, 3)], texts[pick(g, 6)]);
    }
    case 1:
        return filter::present(attr);
    default: {
        std::vector<std::string> chunks;
        std::size_t n = 2 + pick(g, 3);
        bool all_empty = true;
        for (std::size_t i = 0; i < n; ++i) {
            chunks.push_back(pick(g, 5) < 2 ? std::string() : texts[pick(g, 6)]);
            all_empty = all_empty && chunks.back().empty();
        }
        if (all_empty)
            chunks.front() = "im";
        return filter::substring(attr, std::move(chunks));
    }
    }
}

filter random_ast(rng& g, std::size_t depth) {
    if (depth == 0 || pick(g, 100) < 35)
        return random_ast_leaf(g);
    switch (pick(g, 3)) {
    case 0:
    case 1: {
        std::vector<filter> children;
        std::size_t n = 1 + pick(g, 3);
        for (std::size_t i = 0; i < n; ++i)
            children.push_back(random_ast(g, depth - 1));
        return pick(g, 2) == 0 ? filter::conjunction(std::move(children))
                               : filter::disjunction(std::move(children));
    }
    default:
        return filter::negation(random_ast(g, depth - 1));
    }
}

property_map random_eval_map(rng& g) {
    static const char* const attrs[] = {"a", "name", "input.width", "x-y_z"};
    property_map props;
    std::size_t n = pick(g, 5);
    for (std::size_t i = 0; i < n; ++i) {
        std::string attr = attrs[pick(g, 4)];
        switch (pick(g, 4)) {
        case 0:
            props.set(attr, property_value(std::string("image")));
            break;
        case 1:
            props.set(attr, property_value(std::int64_t(pick(g, 100))));
            break;
        case 2:
            props.set(attr, property_value(double(pick(g, 100)) / 4.0));
            break;
        default:
            props.set(attr, property_value(version{pick(g, 3), pick(g, 3), 0}));
            break;
        }
    }
    return props;
}

void criterion_4() {
    auto start = clock_type::now();
    std::ostringstream detail;
    bool pass = true;
    try {
        rng g(40404);
        for (int iter = 0; iter < 1000 && pass; ++iter) {
            filter f = random_ast(g, 5);
            std::string text = f.to_string();
            filter back = filter::parse(text);
            if (!(back == f)) {
                pass = false;
                detail << "round trip broke at iteration " << iter << ": "
                       << text;
            }
            if (back.to_string() != text) {
                pass = false;
                detail << "serialization unstable at iteration " << iter;
            }
        }
        for (int iter = 0; iter < 1000 && pass; ++iter) {
            filter f = random_ast(g, 4);
            property_map props = random_eval_map(g);
            f.evaluate(props); // must be total: no throw for any pair
        }
    } catch (const std::exception& e) {
        pass = false;
        detail << "exception: " << e.what();
    }
    if (seconds_since(start) >= 10.0) {
        pass = false;
        detail << "; over the 10 s budget";
    }
    verdict(4, "filter round trip", pass, detail.str());
}

// ---- criterion 5: end-to-end fixture ------------------------------------

struct run_result {
    int status = -1;
    std::string out;
    std::string err;
};

std::string cli_path() {
    const char* env = std::getenv("CAPSTAN_CLI");
    return env ? std::string(env) : std::string();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

run_result run_cli(const fs::path& dir, const std::string& args) {
    fs::path out_file = dir / ".stdout";
    fs::path err_file = dir / ".stderr";
    std::string cmd = "cd '" + dir.string() + "' && '" + cli_path() + "' " +
                      args + " >'" + out_file.string() + "' 2>'" +
                      err_file.string() + "'";
    int raw = std::system(cmd.c_str());
    run_result r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

std::string fixture_payload(std::size_t n, std::uint8_t salt) {
    std::string data(n, '\0');
    for (std::size_t i = 0; i < n; ++i)
        data[i] = char((i * 131 + salt) & 0xff);
    return data;
}

struct fixture_outputs {
    std::string mnist_archive;
    std::string index_text;
    std::string resolve_stdout;
    std::string deploy_text;
    std::string failing_stderr;
    int resolve_status = -1;
    int failing_status = -1;
};

// Builds the whole end-to-end world in dir and runs resolve + assemble,
// then repeats the resolve against an index without the runtime.
bool run_fixture(const fs::path& dir, fixture_outputs& fx, std::string& err) {
    fs::create_directories(dir);

    spit(dir / "mnist.desc",
         "name=mnist-classifier\nversion=1.2.0\ninput=image\n"
         "input.width=28\ninput.height=28\noutput.type=digit\n"
         "output.size=10\ndataset=MNIST\nops=conv2d,relu,softmax\n");
    spit(dir / "svhn.desc",
         "name=svhn-classifier\nversion=1.1.0\ninput=image\n"
         "input.width=32\ninput.height=32\noutput.type=digit\n"
         "output.size=10\ndataset=SVHN\nops=conv2d,relu,softmax\n");
    spit(dir / "graph.bin", fixture_payload(800, 1));
    spit(dir / "params.bin", fixture_payload(3200, 2));

    if (run_cli(dir, "create mnist.desc graph.bin params.bin mnist.czip")
            .status != 0) {
        err = "create mnist.czip failed";
        return false;
    }
    if (run_cli(dir, "create svhn.desc graph.bin params.bin svhn.czip")
            .status != 0) {
        err = "create svhn.czip failed";
        return false;
    }

    std::string consumer_bin = fixture_payload(100, 3);
    spit(dir / "consumer-1.0.0.bin", consumer_bin);
    spit(dir / "consumer.manifest",
         "Package-Name: consumer\nPackage-Version: 1.0.0\n"
         "Require-Capability: ml.model; filter:='" +
             std::string(consumer_filter_text) +
             "'\n"
             "Content: consumer-1.0.0.bin; sha256=" +
             sha256_hex(consumer_bin) +
             "; size=" + std::to_string(consumer_bin.size()) + "\n");

    std::string runtime_bin = fixture_payload(100, 4);
    spit(dir / "runtime-1.0.0.bin", runtime_bin);
    spit(dir / "runtime.manifest",
         "Package-Name: op-runtime\nPackage-Version: 1.0.0\n"
         "Provide-Capability: runtime.ops; "
         "ops:List<String>=conv2d,relu,softmax,matmul\n"
         "Content: runtime-1.0.0.bin; sha256=" +
             sha256_hex(runtime_bin) +
             "; size=" + std::to_string(runtime_bin.size()) + "\n");

    if (run_cli(dir, "index -o repo.idx mnist.czip svhn.czip "
                     "consumer.manifest runtime.manifest")
            .status != 0) {
        err = "index failed";
        return false;
    }

    run_result resolved =
        run_cli(dir, "resolve -r \"id; filter:='(name=consumer)'\" "
                     "--deploy deploy.txt repo.idx");
    fx.resolve_status = resolved.status;
    fx.resolve_stdout = resolved.out;
    fx.mnist_archive = slurp(dir / "mnist.czip");
    fx.index_text = slurp(dir / "repo.idx");
    fx.deploy_text = slurp(dir / "deploy.txt");

    if (run_cli(dir, "index -o norun.idx mnist.czip svhn.czip "
                     "consumer.manifest")
            .status != 0) {
        err = "reindex without runtime failed";
        return false;
    }
    run_result failing =
        run_cli(dir, "resolve -r \"id; filter:='(name=consumer)'\" norun.idx");
    fx.failing_status = failing.status;
    fx.failing_stderr = failing.err;
    return true;
}

fixture_outputs criterion_5_outputs;
fs::path scratch_base;

void criterion_5() {
    auto start = clock_type::now();
    std::ostringstream detail;
    bool pass = true;

    if (cli_path().empty()) {
        verdict(5, "end-to-end fixture", false, "CAPSTAN_CLI is not set");
        return;
    }

    fixture_outputs& fx = criterion_5_outputs;
    std::string err;
    if (!run_fixture(scratch_base / "c5", fx, err)) {
        verdict(5, "end-to-end fixture", false, err);
        return;
    }

    if (fx.resolve_status != 0) {
        pass = false;
        detail << "resolve exited " << fx.resolve_status << "; ";
    }

    fs::path dir = scratch_base / "c5";
    std::string consumer_sha = sha256_hex(slurp(dir / "consumer-1.0.0.bin"));
    std::string runtime_sha = sha256_hex(slurp(dir / "runtime-1.0.0.bin"));
    std::string mnist_sha = sha256_hex(fx.mnist_archive);
    std::string expected_deploy =
        "consumer 1.0.0 consumer consumer-1.0.0.bin " + consumer_sha + "\n" +
        "mnist-classifier 1.2.0 model mnist.czip " + mnist_sha + "\n" +
        "op-runtime 1.0.0 runtime runtime-1.0.0.bin " + runtime_sha + "\n";
    if (fx.deploy_text != expected_deploy) {
        pass = false;
        detail << "deployment descriptor differs from the golden bytes; ";
    }

    std::string expected_stdout =
        "closure (3 resources):\n"
        "  consumer 1.0.0\n"
        "  mnist-classifier 1.2.0\n"
        "  op-runtime 1.0.0\n"
        "wires:\n"
        "  <initial> [0] id -> consumer 1.0.0\n"
        "  consumer 1.0.0 [0] ml.model -> mnist-classifier 1.2.0\n"
        "  mnist-classifier 1.2.0 [0] runtime.ops -> op-runtime 1.0.0\n";
    if (fx.resolve_stdout != expected_stdout) {
        pass = false;
        detail << "resolve report differs from the golden bytes; ";
    }

    if (fx.failing_status != 1) {
        pass = false;
        detail << "runtime-less resolve exited " << fx.failing_status
               << ", wanted 1; ";
    }
    if (fx.failing_stderr.find("runtime.ops") == std::string::npos) {
        pass = false;
        detail << "failure report does not name runtime.ops; ";
    }
    if (fx.failing_stderr.find("0 candidates matched") == std::string::npos) {
        pass = false;
        detail << "failure report lacks the candidate count; ";
    }

    if (seconds_since(start) >= 5.0) {
        pass = false;
        detail << "over the 5 s budget";
    }
    verdict(5, "end-to-end fixture", pass, detail.str());
}

// ---- criterion 6: determinism -------------------------------------------

void criterion_6() {
    std::ostringstream detail;
    bool pass = true;
    try {
        bool sweep_ok = true;
        std::ostringstream sweep_detail;
        std::string second_digest = criterion_3_sweep(sweep_ok, sweep_detail);
        if (!sweep_ok) {
            pass = false;
            detail << "second resolver sweep failed: " << sweep_detail.str()
                   << "; ";
        } else if (second_digest != criterion_3_digest) {
            pass = false;
            detail << "resolver sweep outputs differ between runs; ";
        }

        fixture_outputs second;
        std::string err;
        if (!run_fixture(scratch_base / "c6", second, err)) {
            pass = false;
            detail << err;
        } else {
            const fixture_outputs& first = criterion_5_outputs;
            if (second.mnist_archive != first.mnist_archive) {
                pass = false;
                detail << "package archives differ between runs; ";
            }
            if (second.index_text != first.index_text) {
                pass = false;
                detail << "index files differ between runs; ";
            }
            if (second.resolve_stdout != first.resolve_stdout) {
                pass = false;
                detail << "resolve reports differ between runs; ";
            }
            if (second.deploy_text != first.deploy_text) {
                pass = false;
                detail << "deployment descriptors differ between runs; ";
            }
        }
    } catch (const std::exception& e) {
        pass = false;
        detail << "exception: " << e.what();
    }
    verdict(6, "determinism", pass, detail.str());
}

// ---- criterion 7: corruption detection ----------------------------------

void criterion_7() {
    auto start = clock_type::now();
    std::ostringstream detail;
    bool pass = true;
    try {
        model_descriptor d;
        d.name = "probe";
        d.version = {1, 0, 0};
        d.input_kind = "image";
        d.input_width = 28;
        d.input_height = 28;
        d.output_type = "digit";
        d.output_size = 10;
        d.dataset = "MNIST";

        std::vector<std::uint8_t> graph(512);
        std::vector<std::uint8_t> params(2048);
        for (std::size_t i = 0; i < graph.size(); ++i)
            graph[i] = std::uint8_t((i * 7 + 3) & 0xff);
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i] = std::uint8_t((i * 13 + 5) & 0xff);
        std::vector<std::uint8_t> archive = create_package(d, graph, params);

        auto region_of = [&](const std::vector<std::uint8_t>& payload) {
            auto it = std::search(archive.begin(), archive.end(),
                                  payload.begin(), payload.end());
            return std::pair<std::size_t, std::size_t>(
                std::size_t(it - archive.begin()), payload.size());
        };
        auto [graph_at, graph_len] = region_of(graph);
        auto [params_at, params_len] = region_of(params);
        if (graph_at + graph_len > archive.size() ||
            params_at + params_len > archive.size()) {
            verdict(7, "corruption detection", false,
                    "could not locate payload regions");
            return;
        }

        rng g(70707);
        int detected = 0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<std::uint8_t> copy = archive;
            bool in_graph = pick(g, 2) == 0;
            std::size_t at = in_graph ? graph_at + pick(g, graph_len)
                                      : params_at + pick(g, params_len);
            copy[at] ^= std::uint8_t(1 + pick(g, 255));
            try {
                validate_package(copy);
            } catch (const package_error& e) {
                if (e.error_code() == package_error::code::digest_mismatch)
                    ++detected;
            }
        }
        if (detected != 100) {
            pass = false;
            detail << "detected " << detected << "/100 corruptions";
        }
    } catch (const std::exception& e) {
        pass = false;
        detail << "exception: " << e.what();
    }
    if (seconds_since(start) >= 10.0) {
        pass = false;
        detail << "; over the 10 s budget";
    }
    verdict(7, "corruption detection", pass, detail.str());
}

} // namespace

int main() {
    scratch_base = fs::temp_directory_path() /
                   ("capstan-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(scratch_base);

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();

    std::error_code ec;
    fs::remove_all(scratch_base, ec);
    return failures == 0 ? 0 : 1;
}
