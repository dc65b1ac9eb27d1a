#include <benchmark/benchmark.h>

#include <capstan/filter.hpp>
#include <capstan/repository.hpp>
#include <capstan/resolver.hpp>
#include <capstan/resource.hpp>

#include <string>
#include <vector>

namespace {

const std::string model_filter =
    "(&(input=image)(input.width=28)(input.height=28)"
    "(output.type=digit)(output.size>=10)(dataset=MNIST))";

capstan::property_map model_properties() {
    capstan::property_map props;
    props.set("input", capstan::property_value(std::string("image")));
    props.set("input.width", capstan::property_value(std::int64_t(28)));
    props.set("input.height", capstan::property_value(std::int64_t(28)));
    props.set("output.type", capstan::property_value(std::string("digit")));
    props.set("output.size", capstan::property_value(std::int64_t(10)));
    props.set("dataset", capstan::property_value(std::string("MNIST")));
    return props;
}

void BM_FilterParse(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(capstan::filter::parse(model_filter));
}
BENCHMARK(BM_FilterParse);

void BM_FilterEval(benchmark::State& state) {
    capstan::filter f = capstan::filter::parse(model_filter);
    capstan::property_map props = model_properties();
    for (auto _ : state)
        benchmark::DoNotOptimize(f.evaluate(props));
}
BENCHMARK(BM_FilterEval);

// A linear dependency chain: lib0 requires lib1 requires ... requires libN.
capstan::repository_index chain_index(std::size_t length) {
    std::vector<capstan::resource> resources;
    for (std::size_t i = 0; i < length; ++i) {
        std::string name = "lib" + std::to_string(i);
        capstan::property_map props;
        props.set("name", capstan::property_value(name));
        std::vector<capstan::capability> caps;
        caps.emplace_back("pkg", std::move(props));
        std::vector<capstan::requirement> reqs;
        if (i + 1 < length)
            reqs.emplace_back("pkg",
                              capstan::filter::parse("(name=lib" +
                                                     std::to_string(i + 1) + ")"));
        resources.emplace_back(name, capstan::version{1, 0, 0}, std::move(caps),
                               std::move(reqs));
    }
    return capstan::repository_index(std::move(resources));
}

void BM_ResolveChain(benchmark::State& state) {
    capstan::repository_index index = chain_index(std::size_t(state.range(0)));
    capstan::resolve_context ctx;
    ctx.repositories.push_back(&index);
    ctx.initial_requirements.emplace_back("pkg",
                                          capstan::filter::parse("(name=lib0)"));
    for (auto _ : state)
        benchmark::DoNotOptimize(capstan::resolve(ctx));
}
BENCHMARK(BM_ResolveChain)->Arg(8)->Arg(64);

void BM_IndexFind(benchmark::State& state) {
    capstan::repository_index index = chain_index(std::size_t(state.range(0)));
    capstan::requirement req("pkg", capstan::filter::parse("(name=lib0)"));
    for (auto _ : state)
        benchmark::DoNotOptimize(index.find_providers(req));
}
BENCHMARK(BM_IndexFind)->Arg(64);

} // namespace

BENCHMARK_MAIN();
