#include <capstan/resource.hpp>

#include <algorithm>

namespace capstan {

namespace {

bool line_safe(std::string_view text) noexcept {
    return text.find('\n') == std::string_view::npos &&
           text.find('\r') == std::string_view::npos;
}

void check_namespace(const std::string& ns, const char* entity) {
    if (!valid_attribute_name(ns))
        throw error(std::string(entity) + " namespace '" + ns +
                    "' is not a valid name");
}

void check_properties(const property_map& props) {
    for (const auto& [name, value] : props) {
        if (!valid_attribute_name(name))
            throw error("invalid property name: '" + name + "'");
        for (const scalar& element : value.elements()) {
            if (kind_of(element) != value_kind::string)
                continue;
            const std::string& text = std::get<std::string>(element);
            if (!line_safe(text))
                throw error("property '" + name + "' contains a line break");
            if (value.is_list() && text.empty())
                throw error("property '" + name + "' has an empty list element");
        }
    }
}

} // namespace

capability::capability(std::string ns, property_map properties,
                       directive_map directives)
    : ns_(std::move(ns)),
      properties_(std::move(properties)),
      directives_(std::move(directives)) {
    check_namespace(ns_, "capability");
    check_properties(properties_);
    for (const auto& [name, value] : directives_) {
        if (!valid_attribute_name(name))
            throw error("invalid directive name: '" + name + "'");
        if (!line_safe(value))
            throw error("directive '" + name + "' contains a line break");
    }
}

requirement::requirement(std::string ns, std::optional<filter> f,
                         resolution_mode mode)
    : ns_(std::move(ns)), filter_(std::move(f)), mode_(mode) {
    check_namespace(ns_, "requirement");
    if (filter_ && !line_safe(filter_->to_string()))
        throw error("requirement filter contains a line break");
}

bool requirement::matches(const capability& cap) const {
    if (ns_ != cap.ns())
        return false;
    return !filter_ || filter_->evaluate(cap.properties());
}

bool valid_sha256_hex(std::string_view digest) noexcept {
    if (digest.size() != 64)
        return false;
    return std::all_of(digest.begin(), digest.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}

resource::resource(std::string identity, capstan::version ver,
                   std::vector<capability> capabilities,
                   std::vector<requirement> requirements,
                   std::vector<content_ref> contents)
    : identity_(std::move(identity)),
      version_(ver),
      requirements_(std::move(requirements)),
      contents_(std::move(contents)) {
    if (!valid_attribute_name(identity_))
        throw error("resource identity '" + identity_ + "' is not a valid name");

    for (const capability& cap : capabilities)
        if (cap.ns() == identity_namespace)
            throw error("capability namespace '" +
                        std::string(identity_namespace) + "' is reserved");

    for (const content_ref& content : contents_) {
        if (content.uri.empty())
            throw error("content uri is empty");
        for (char c : content.uri)
            if (c == ' ' || c == '\t' || c == ';' || c == '\n' || c == '\r')
                throw error("content uri '" + content.uri +
                            "' contains whitespace or ';'");
        if (!valid_sha256_hex(content.sha256))
            throw error("content digest for '" + content.uri +
                        "' is not 64 lowercase hex chars");
    }

    property_map id_props;
    id_props.insert("name", property_value(identity_));
    id_props.insert("version", property_value(version_));
    capabilities_.reserve(capabilities.size() + 1);
    capabilities_.emplace_back(std::string(identity_namespace), std::move(id_props));
    for (capability& cap : capabilities)
        capabilities_.push_back(std::move(cap));
}

} // namespace capstan
