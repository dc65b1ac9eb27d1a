#pragma once

#include <capstan/errors.hpp>
#include <capstan/resolver.hpp>
#include <capstan/resource.hpp>
#include <capstan/version.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace capstan {

class package_error : public error {
public:
    enum class code {
        empty_payload,
        layout,
        manifest,
        schema,
        digest_mismatch,
        missing_content,
        descriptor_syntax,  // descriptor file cannot be parsed
        invalid_descriptor  // descriptor violates a model invariant
    };

    package_error(code c, const std::string& what) : error(what), code_(c) {}

    code error_code() const noexcept { return code_; }

private:
    code code_;
};

struct hardware_needs {
    bool gpu = false;
    std::uint64_t min_memory_mb = 1;

    bool operator==(const hardware_needs&) const = default;
};

// What a model is, expects, and needs. The metadata source for a package's
// ml.model capability and its runtime/hardware requirements.
struct model_descriptor {
    std::string name;
    capstan::version version;
    std::string input_kind;  // e.g. "image"
    std::uint64_t input_width = 0;
    std::uint64_t input_height = 0;
    std::string output_type; // e.g. "digit"
    std::uint64_t output_size = 0;
    std::string dataset;
    std::optional<capstan::version> dataset_version;
    std::vector<std::string> required_ops;
    std::optional<hardware_needs> hardware;

    bool operator==(const model_descriptor&) const = default;
};

// Throws package_error (invalid_descriptor) when an invariant fails:
// dimensions and output size must be at least 1, name a valid identity,
// dataset and kind strings non-empty.
void validate(const model_descriptor& d);

// The ml.model capability for a descriptor: the seven schema attributes
// (input, input.width, input.height, output.type, output.size, dataset,
// version as String) plus model.version typed Version, and dataset.version
// when the descriptor has one.
capability capability_of(const model_descriptor& d);

// Mandatory requirements: runtime.ops with a conjunction over required_ops
// (omitted when the list is empty), and hw over gpu/memory.mb when hardware
// needs are declared.
std::vector<requirement> requirements_of(const model_descriptor& d);

// A package read back from an archive.
struct model_package {
    resource res;
    std::vector<std::uint8_t> graph;
    std::vector<std::uint8_t> params;

    // Reconstructs the descriptor from the manifest. Throws package_error
    // (schema) when the manifest was not produced from a descriptor.
    model_descriptor descriptor() const;
};

// Builds the archive: a store-only ZIP with entries META/MANIFEST,
// model/graph.bin, and model/params.bin, whose manifest carries Content
// digests for both payloads. Deterministic. Payloads must be non-empty.
std::vector<std::uint8_t> create_package(const model_descriptor& d,
                                         std::span<const std::uint8_t> graph,
                                         std::span<const std::uint8_t> params);

// Extracts layout and manifest without schema or digest checks.
model_package read_package(std::span<const std::uint8_t> archive);

// read_package plus the ml.model schema check (exactly one ml.model
// capability, all seven attributes present and correctly typed) and payload
// digest verification.
model_package validate_package(std::span<const std::uint8_t> archive);

// Renders a resolved closure as a deployment descriptor: one line
// `identity version role uri sha256` per member, sorted by identity. Roles:
// ml.model capability → model, runtime.ops capability → runtime, ml.model
// requirement → consumer, anything else → other. Every member must carry
// content.
std::string assemble(const resolution& r);

// Parses the CLI descriptor file: one `name[:Type]=value` attribute per
// line (manifest attribute syntax), '#' comments. Keys: name, version,
// input, input.width, input.height, output.type, output.size, dataset,
// dataset.version, ops (List<String>), hw.gpu (true/false), hw.memory.mb.
model_descriptor parse_model_descriptor(std::string_view text);

} // namespace capstan
