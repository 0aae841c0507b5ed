#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hfa::taxonomy {

/// Dotted concept path such as "3.4.2". Orders numerically per component so
/// "3.10" sorts after "3.9".
class ConceptCode {
public:
    ConceptCode() = default;
    /// Throws TaxonomyParse unless the text matches \d+(\.\d+)*.
    explicit ConceptCode(std::string code);

    static bool is_valid(std::string_view code);

    const std::string& str() const { return code_; }
    std::vector<int> components() const;
    std::size_t depth() const;
    std::optional<ConceptCode> parent() const;
    bool is_ancestor_of(const ConceptCode& other) const;

    std::strong_ordering operator<=>(const ConceptCode& other) const;
    bool operator==(const ConceptCode& other) const { return code_ == other.code_; }

private:
    std::string code_;
};

struct ConceptNode {
    ConceptCode code;
    std::string name;
    /// Hyphen-join of ancestor names, e.g. "Organisation-Communication factor".
    std::string canonical_label;
    bool annotatable = false;
    std::vector<std::string> aliases;
    std::vector<ConceptCode> children;
};

class Taxonomy {
public:
    /// Parses `code,name,annotatable,aliases` (aliases `|`-separated). An
    /// optional leading `# version: X` line sets version(). Validates codes,
    /// parents, duplicate codes and labels, and leaf annotatability.
    static Taxonomy parse_csv(std::string_view content);

    const std::string& version() const { return version_; }
    const std::vector<ConceptCode>& roots() const { return roots_; }
    /// All nodes in code order.
    std::vector<const ConceptNode*> nodes() const;
    std::size_t size() const { return nodes_.size(); }

    const ConceptNode* find(const ConceptCode& code) const;
    const ConceptNode& at(const ConceptCode& code) const;

    /// Exact code, then exact canonical label, then exact alias, then
    /// case-insensitive label or alias. NotFound / AmbiguousLabel otherwise.
    const ConceptNode& resolve(std::string_view query) const;

    /// The code itself plus all transitive children.
    std::set<ConceptCode> descendants(const ConceptCode& code) const;

    std::vector<ConceptCode> annotatable_codes() const;

    std::string to_csv() const;

private:
    std::string version_ = "unversioned";
    std::map<ConceptCode, ConceptNode> nodes_;
    std::vector<ConceptCode> roots_;
    std::map<std::string, ConceptCode, std::less<>> by_label_;
    std::map<std::string, ConceptCode, std::less<>> by_alias_;
    std::multimap<std::string, ConceptCode, std::less<>> by_lower_;
};

Taxonomy load_taxonomy(const std::filesystem::path& path);

/// The bundled human-factors taxonomy shipped in the data directory.
Taxonomy load_default_taxonomy();

}  // namespace hfa::taxonomy
