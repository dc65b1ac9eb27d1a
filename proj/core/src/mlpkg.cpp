#include <capstan/mlpkg.hpp>

#include <capstan/digest.hpp>
#include <capstan/manifest.hpp>
#include <capstan/zip.hpp>

#include <charconv>
#include <map>
#include <sstream>

namespace capstan {

namespace {

using code = package_error::code;

constexpr std::string_view model_namespace = "ml.model";
constexpr std::string_view runtime_namespace = "runtime.ops";
constexpr std::string_view hardware_namespace = "hw";
constexpr std::string_view manifest_entry = "META/MANIFEST";
constexpr std::string_view graph_entry = "model/graph.bin";
constexpr std::string_view params_entry = "model/params.bin";

constexpr std::uint64_t max_long = 9223372036854775807ull;

[[noreturn]] void fail(code c, const std::string& what) {
    throw package_error(c, what);
}

bool text_safe(const std::string& s) noexcept {
    return s.find('\n') == std::string::npos && s.find('\r') == std::string::npos;
}

const capability& find_model_capability(const resource& res) {
    const capability* found = nullptr;
    for (const capability& cap : res.capabilities()) {
        if (cap.ns() != model_namespace)
            continue;
        if (found)
            fail(code::schema, "more than one ml.model capability");
        found = &cap;
    }
    if (!found)
        fail(code::schema, "no ml.model capability");
    return *found;
}

const property_value& require_attr(const capability& cap, std::string_view name,
                                   value_kind kind) {
    const property_value* value = cap.properties().find(name);
    if (!value)
        fail(code::schema, "missing attribute '" + std::string(name) + "'");
    if (value->is_list() || value->kind() != kind)
        fail(code::schema, "attribute '" + std::string(name) + "' must be typed " +
                               std::string(to_tag(kind)));
    return *value;
}

std::uint64_t require_positive_long(const capability& cap, std::string_view name) {
    std::int64_t value =
        std::get<std::int64_t>(require_attr(cap, name, value_kind::int64).as_scalar());
    if (value < 1)
        fail(code::schema, "attribute '" + std::string(name) + "' must be positive");
    return std::uint64_t(value);
}

void check_schema(const resource& res) {
    const capability& cap = find_model_capability(res);
    require_attr(cap, "input", value_kind::string);
    require_attr(cap, "input.height", value_kind::int64);
    require_attr(cap, "input.width", value_kind::int64);
    require_attr(cap, "output.type", value_kind::string);
    require_attr(cap, "output.size", value_kind::int64);
    require_attr(cap, "dataset", value_kind::string);
    const property_value& ver = require_attr(cap, "version", value_kind::string);
    if (!version::try_parse(std::get<std::string>(ver.as_scalar())))
        fail(code::schema, "attribute 'version' is not MAJOR.MINOR.PATCH");
}

void check_digest(const resource& res, std::string_view entry,
                  std::span<const std::uint8_t> payload) {
    const content_ref* ref = nullptr;
    for (const content_ref& content : res.contents())
        if (content.uri == entry) {
            ref = &content;
            break;
        }
    if (!ref)
        fail(code::layout, "manifest carries no Content for '" + std::string(entry) + "'");
    if (ref->size != payload.size() || ref->sha256 != sha256_hex(payload))
        fail(code::digest_mismatch, "digest mismatch for '" + std::string(entry) + "'");
}

std::vector<std::string> harvest_ops(const requirement& req) {
    if (!req.predicate())
        fail(code::schema, "runtime.ops requirement has no filter");
    const filter::node& root = req.predicate()->root();
    if (root.kind != filter::node_kind::conjunction)
        fail(code::schema, "runtime.ops filter is not a conjunction of ops tests");
    std::vector<std::string> ops;
    for (const filter::node_ptr& child : root.children) {
        if (child->kind != filter::node_kind::compare ||
            child->op != filter::compare_op::eq || child->attribute != "ops")
            fail(code::schema, "runtime.ops filter is not a conjunction of ops tests");
        ops.push_back(child->literal);
    }
    return ops;
}

hardware_needs harvest_hardware(const requirement& req) {
    if (!req.predicate())
        fail(code::schema, "hw requirement has no filter");
    const filter::node& root = req.predicate()->root();
    if (root.kind != filter::node_kind::conjunction || root.children.size() != 2)
        fail(code::schema, "hw filter is not (&(gpu=...)(memory.mb>=...))");
    const filter::node& gpu = *root.children[0];
    const filter::node& memory = *root.children[1];
    if (gpu.kind != filter::node_kind::compare || gpu.op != filter::compare_op::eq ||
        gpu.attribute != "gpu" || (gpu.literal != "true" && gpu.literal != "false"))
        fail(code::schema, "hw filter is not (&(gpu=...)(memory.mb>=...))");
    if (memory.kind != filter::node_kind::compare ||
        memory.op != filter::compare_op::ge || memory.attribute != "memory.mb")
        fail(code::schema, "hw filter is not (&(gpu=...)(memory.mb>=...))");

    hardware_needs hw;
    hw.gpu = gpu.literal == "true";
    auto [ptr, ec] = std::from_chars(memory.literal.data(),
                                     memory.literal.data() + memory.literal.size(),
                                     hw.min_memory_mb);
    if (ec != std::errc() || ptr != memory.literal.data() + memory.literal.size() ||
        hw.min_memory_mb < 1 || hw.min_memory_mb > max_long)
        fail(code::schema, "hw memory bound is not a positive integer");
    return hw;
}

} // namespace

void validate(const model_descriptor& d) {
    auto check = [](bool ok, const std::string& what) {
        if (!ok)
            fail(code::invalid_descriptor, what);
    };
    check(valid_attribute_name(d.name),
          "name '" + d.name + "' is not a valid identity");
    check(!d.input_kind.empty() && text_safe(d.input_kind), "input kind is empty");
    check(d.input_width >= 1 && d.input_width <= max_long,
          "input.width must be at least 1");
    check(d.input_height >= 1 && d.input_height <= max_long,
          "input.height must be at least 1");
    check(!d.output_type.empty() && text_safe(d.output_type), "output.type is empty");
    check(d.output_size >= 1 && d.output_size <= max_long,
          "output.size must be at least 1");
    check(!d.dataset.empty() && text_safe(d.dataset), "dataset is empty");
    for (const std::string& op : d.required_ops)
        check(!op.empty() && text_safe(op), "required op name is empty");
    if (d.hardware)
        check(d.hardware->min_memory_mb >= 1 && d.hardware->min_memory_mb <= max_long,
              "hw.memory.mb must be at least 1");
}

capability capability_of(const model_descriptor& d) {
    validate(d);
    property_map props;
    props.insert("input", property_value(d.input_kind));
    props.insert("input.height", property_value(std::int64_t(d.input_height)));
    props.insert("input.width", property_value(std::int64_t(d.input_width)));
    props.insert("output.type", property_value(d.output_type));
    props.insert("output.size", property_value(std::int64_t(d.output_size)));
    props.insert("dataset", property_value(d.dataset));
    props.insert("version", property_value(d.version.to_string()));
    props.insert("model.version", property_value(d.version));
    if (d.dataset_version)
        props.insert("dataset.version", property_value(*d.dataset_version));
    return capability(std::string(model_namespace), std::move(props));
}

std::vector<requirement> requirements_of(const model_descriptor& d) {
    validate(d);
    std::vector<requirement> reqs;
    if (!d.required_ops.empty()) {
        std::vector<filter> terms;
        terms.reserve(d.required_ops.size());
        for (const std::string& op : d.required_ops)
            terms.push_back(filter::compare("ops", filter::compare_op::eq, op));
        reqs.emplace_back(std::string(runtime_namespace),
                          filter::conjunction(std::move(terms)));
    }
    if (d.hardware) {
        std::vector<filter> terms;
        terms.push_back(filter::compare("gpu", filter::compare_op::eq,
                                        d.hardware->gpu ? "true" : "false"));
        terms.push_back(filter::compare("memory.mb", filter::compare_op::ge,
                                        std::to_string(d.hardware->min_memory_mb)));
        reqs.emplace_back(std::string(hardware_namespace),
                          filter::conjunction(std::move(terms)));
    }
    return reqs;
}

std::vector<std::uint8_t> create_package(const model_descriptor& d,
                                         std::span<const std::uint8_t> graph,
                                         std::span<const std::uint8_t> params) {
    validate(d);
    if (graph.empty())
        fail(code::empty_payload, "graph payload is empty");
    if (params.empty())
        fail(code::empty_payload, "params payload is empty");

    std::vector<content_ref> contents;
    contents.push_back({std::string(graph_entry), sha256_hex(graph), graph.size()});
    contents.push_back({std::string(params_entry), sha256_hex(params), params.size()});

    resource res(d.name, d.version, {capability_of(d)}, requirements_of(d),
                 std::move(contents));
    std::string manifest = serialize_manifest(res);

    std::vector<zip_entry> entries;
    entries.push_back({std::string(manifest_entry),
                       std::vector<std::uint8_t>(manifest.begin(), manifest.end())});
    entries.push_back({std::string(graph_entry),
                       std::vector<std::uint8_t>(graph.begin(), graph.end())});
    entries.push_back({std::string(params_entry),
                       std::vector<std::uint8_t>(params.begin(), params.end())});
    return write_zip(entries);
}

model_package read_package(std::span<const std::uint8_t> archive) {
    std::vector<zip_entry> entries;
    try {
        entries = read_zip(archive);
    } catch (const zip_error& e) {
        fail(code::layout, e.what());
    }

    const zip_entry* manifest = nullptr;
    const zip_entry* graph = nullptr;
    const zip_entry* params = nullptr;
    for (const zip_entry& entry : entries) {
        const zip_entry** slot = nullptr;
        if (entry.name == manifest_entry)
            slot = &manifest;
        else if (entry.name == graph_entry)
            slot = &graph;
        else if (entry.name == params_entry)
            slot = &params;
        if (!slot)
            fail(code::layout, "unexpected entry '" + entry.name + "'");
        if (*slot)
            fail(code::layout, "duplicate entry '" + entry.name + "'");
        *slot = &entry;
    }
    if (!manifest)
        fail(code::layout, "missing entry 'META/MANIFEST'");
    if (!graph)
        fail(code::layout, "missing entry 'model/graph.bin'");
    if (!params)
        fail(code::layout, "missing entry 'model/params.bin'");

    try {
        resource res = parse_manifest(std::string_view(
            reinterpret_cast<const char*>(manifest->data.data()),
            manifest->data.size()));
        return {std::move(res), graph->data, params->data};
    } catch (const manifest_error& e) {
        fail(code::manifest, e.what());
    }
}

model_package validate_package(std::span<const std::uint8_t> archive) {
    model_package pkg = read_package(archive);
    check_digest(pkg.res, graph_entry, pkg.graph);
    check_digest(pkg.res, params_entry, pkg.params);
    check_schema(pkg.res);
    return pkg;
}

model_descriptor model_package::descriptor() const {
    const capability& cap = find_model_capability(res);

    model_descriptor d;
    d.name = res.identity();
    d.version = res.version();
    d.input_kind = std::get<std::string>(
        require_attr(cap, "input", value_kind::string).as_scalar());
    d.input_width = require_positive_long(cap, "input.width");
    d.input_height = require_positive_long(cap, "input.height");
    d.output_type = std::get<std::string>(
        require_attr(cap, "output.type", value_kind::string).as_scalar());
    d.output_size = require_positive_long(cap, "output.size");
    d.dataset = std::get<std::string>(
        require_attr(cap, "dataset", value_kind::string).as_scalar());
    if (const property_value* dsv = cap.properties().find("dataset.version")) {
        if (dsv->is_list() || dsv->kind() != value_kind::version)
            fail(code::schema, "attribute 'dataset.version' must be typed Version");
        d.dataset_version = std::get<capstan::version>(dsv->as_scalar());
    }

    for (const requirement& req : res.requirements()) {
        if (req.ns() == runtime_namespace) {
            if (!d.required_ops.empty())
                fail(code::schema, "more than one runtime.ops requirement");
            d.required_ops = harvest_ops(req);
        } else if (req.ns() == hardware_namespace) {
            if (d.hardware)
                fail(code::schema, "more than one hw requirement");
            d.hardware = harvest_hardware(req);
        } else {
            fail(code::schema,
                 "unexpected requirement namespace '" + req.ns() + "'");
        }
    }
    return d;
}

std::string assemble(const resolution& r) {
    std::ostringstream out;
    for (const resource& member : r.closure) {
        if (member.contents().empty())
            fail(code::missing_content,
                 "closure member '" + member.identity() + "' has no content");

        std::string_view role = "other";
        bool model = false;
        bool runtime = false;
        for (const capability& cap : member.capabilities()) {
            model = model || cap.ns() == model_namespace;
            runtime = runtime || cap.ns() == runtime_namespace;
        }
        if (model) {
            role = "model";
        } else if (runtime) {
            role = "runtime";
        } else {
            for (const requirement& req : member.requirements())
                if (req.ns() == model_namespace) {
                    role = "consumer";
                    break;
                }
        }

        const content_ref& content = member.contents().front();
        out << member.identity() << " " << member.version() << " " << role << " "
            << content.uri << " " << content.sha256 << "\n";
    }
    return out.str();
}

namespace {

[[noreturn]] void dfail(std::size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << "descriptor line " << line << ": " << what;
    throw package_error(code::descriptor_syntax, msg.str());
}

bool descriptor_space(char c) noexcept { return c == ' ' || c == '\t'; }

std::string_view descriptor_trim(std::string_view s) noexcept {
    while (!s.empty() && descriptor_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && descriptor_space(s.back()))
        s.remove_suffix(1);
    return s;
}

// Same value syntax as manifest clauses: optional single quotes with \' and
// \\ escapes, otherwise trimmed raw text.
std::string descriptor_value(std::string_view raw, std::size_t line) {
    raw = descriptor_trim(raw);
    if (raw.empty() || raw.front() != '\'')
        return std::string(raw);
    std::string out;
    bool closed = false;
    std::size_t i = 1;
    for (; i < raw.size(); ++i) {
        char c = raw[i];
        if (c == '\\') {
            if (++i >= raw.size())
                dfail(line, "dangling escape in quoted value");
            char e = raw[i];
            if (e != '\'' && e != '\\')
                dfail(line, "invalid escape sequence in quoted value");
            out.push_back(e);
        } else if (c == '\'') {
            closed = true;
            ++i;
            break;
        } else {
            out.push_back(c);
        }
    }
    if (!closed)
        dfail(line, "unterminated quoted value");
    if (i != raw.size())
        dfail(line, "unexpected text after closing quote");
    return out;
}

std::vector<std::string> descriptor_list(const std::string& text, std::size_t line) {
    std::vector<std::string> out;
    if (text.empty())
        return out;
    out.emplace_back();
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\\') {
            if (++i >= text.size())
                dfail(line, "dangling escape in list value");
            char e = text[i];
            if (e != ',' && e != '\\')
                dfail(line, "invalid escape sequence in list value");
            out.back().push_back(e);
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back().push_back(c);
        }
    }
    return out;
}

std::int64_t descriptor_long(const std::string& text, const std::string& key,
                             std::size_t line) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        dfail(line, "value of '" + key + "' is not an integer");
    return value;
}

// Dimensions flow into uint64 fields; negatives become 0 so that
// validate() reports them as invariant violations, not syntax errors.
std::uint64_t descriptor_dimension(const std::string& text, const std::string& key,
                                   std::size_t line) {
    std::int64_t value = descriptor_long(text, key, line);
    return value < 0 ? 0 : std::uint64_t(value);
}

} // namespace

model_descriptor parse_model_descriptor(std::string_view text) {
    // key → (value, type tag or "", line)
    struct entry {
        std::string value;
        std::string tag;
        std::size_t line;
    };
    static const std::map<std::string, std::string, std::less<>> expected_tags = {
        {"name", "String"},          {"version", "Version"},
        {"input", "String"},         {"input.width", "Long"},
        {"input.height", "Long"},    {"output.type", "String"},
        {"output.size", "Long"},     {"dataset", "String"},
        {"dataset.version", "Version"}, {"ops", "List<String>"},
        {"hw.gpu", "String"},        {"hw.memory.mb", "Long"}};

    std::map<std::string, entry, std::less<>> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = nl == std::string_view::npos
                                    ? text.substr(pos)
                                    : text.substr(pos, nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;

        if (line.find('\r') != std::string_view::npos)
            dfail(line_no, "carriage return not allowed (LF line endings only)");
        std::string_view content = descriptor_trim(line);
        if (content.empty() || content.front() == '#')
            continue;

        std::size_t i = 0;
        while (i < content.size() && valid_attribute_name(content.substr(i, 1)))
            ++i;
        if (i == 0)
            dfail(line_no, "expected 'key[:Type]=value'");
        std::string key(content.substr(0, i));

        std::string tag;
        while (i < content.size() && descriptor_space(content[i]))
            ++i;
        if (i < content.size() && content[i] == ':') {
            ++i;
            std::size_t tag_start = i;
            while (i < content.size() && content[i] != '=' &&
                   !descriptor_space(content[i]))
                ++i;
            tag = std::string(content.substr(tag_start, i - tag_start));
            if (tag.empty())
                dfail(line_no, "expected a type tag after ':'");
            while (i < content.size() && descriptor_space(content[i]))
                ++i;
        }
        if (i >= content.size() || content[i] != '=')
            dfail(line_no, "expected '=' after '" + key + "'");
        ++i;

        auto expected = expected_tags.find(key);
        if (expected == expected_tags.end())
            dfail(line_no, "unknown key '" + key + "'");
        if (!tag.empty() && tag != expected->second)
            dfail(line_no, "key '" + key + "' must be typed " + expected->second);
        if (entries.contains(key))
            dfail(line_no, "duplicate key '" + key + "'");
        entries.emplace(std::move(key),
                        entry{descriptor_value(content.substr(i), line_no), tag,
                              line_no});
    }

    for (const char* required : {"name", "version", "input", "input.width",
                                 "input.height", "output.type", "output.size",
                                 "dataset"})
        if (!entries.contains(required))
            dfail(line_no == 0 ? 1 : line_no,
                  "missing key '" + std::string(required) + "'");

    model_descriptor d;
    d.name = entries.at("name").value;
    {
        const entry& e = entries.at("version");
        auto v = version::try_parse(e.value);
        if (!v)
            dfail(e.line, "version '" + e.value + "' is not MAJOR.MINOR.PATCH");
        d.version = *v;
    }
    d.input_kind = entries.at("input").value;
    {
        const entry& e = entries.at("input.width");
        d.input_width = descriptor_dimension(e.value, "input.width", e.line);
    }
    {
        const entry& e = entries.at("input.height");
        d.input_height = descriptor_dimension(e.value, "input.height", e.line);
    }
    d.output_type = entries.at("output.type").value;
    {
        const entry& e = entries.at("output.size");
        d.output_size = descriptor_dimension(e.value, "output.size", e.line);
    }
    d.dataset = entries.at("dataset").value;
    if (auto it = entries.find("dataset.version"); it != entries.end()) {
        auto v = version::try_parse(it->second.value);
        if (!v)
            dfail(it->second.line, "dataset.version '" + it->second.value +
                                       "' is not MAJOR.MINOR.PATCH");
        d.dataset_version = *v;
    }
    if (auto it = entries.find("ops"); it != entries.end())
        d.required_ops = descriptor_list(it->second.value, it->second.line);

    auto gpu_it = entries.find("hw.gpu");
    auto mem_it = entries.find("hw.memory.mb");
    if (gpu_it != entries.end() || mem_it != entries.end()) {
        if (gpu_it == entries.end() || mem_it == entries.end())
            dfail(gpu_it != entries.end() ? gpu_it->second.line : mem_it->second.line,
                  "hw.gpu and hw.memory.mb must be given together");
        hardware_needs hw;
        const std::string& gpu = gpu_it->second.value;
        if (gpu != "true" && gpu != "false")
            dfail(gpu_it->second.line, "hw.gpu must be 'true' or 'false'");
        hw.gpu = gpu == "true";
        std::int64_t memory =
            descriptor_long(mem_it->second.value, "hw.memory.mb", mem_it->second.line);
        hw.min_memory_mb = memory < 0 ? 0 : std::uint64_t(memory);
        d.hardware = hw;
    }
    return d;
}

} // namespace capstan
