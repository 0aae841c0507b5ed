#include "hfa/taxonomy.hpp"

#include "hfa/csv.hpp"
#include "hfa/data_paths.hpp"
#include "hfa/error.hpp"
#include "hfa/text.hpp"

#include <algorithm>
#include <cctype>

namespace hfa::taxonomy {

ConceptCode::ConceptCode(std::string code) : code_(std::move(code)) {
    if (!is_valid(code_)) throw Error(ErrorCode::TaxonomyParse, "malformed concept code '" + code_ + "'");
}

bool ConceptCode::is_valid(std::string_view code) {
    if (code.empty()) return false;
    bool need_digit = true;
    for (char c : code) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            need_digit = false;
        } else if (c == '.' && !need_digit) {
            need_digit = true;
        } else {
            return false;
        }
    }
    return !need_digit;
}

std::vector<int> ConceptCode::components() const {
    std::vector<int> out;
    for (const auto& part : text::split(code_, '.')) out.push_back(std::stoi(part));
    return out;
}

std::size_t ConceptCode::depth() const {
    return static_cast<std::size_t>(std::count(code_.begin(), code_.end(), '.')) + 1;
}

std::optional<ConceptCode> ConceptCode::parent() const {
    const auto dot = code_.rfind('.');
    if (dot == std::string::npos) return std::nullopt;
    return ConceptCode(code_.substr(0, dot));
}

bool ConceptCode::is_ancestor_of(const ConceptCode& other) const {
    return other.code_.size() > code_.size() && other.code_.compare(0, code_.size(), code_) == 0 &&
           other.code_[code_.size()] == '.';
}

std::strong_ordering ConceptCode::operator<=>(const ConceptCode& other) const {
    const auto a = components();
    const auto b = other.components();
    return std::lexicographical_compare_three_way(a.begin(), a.end(), b.begin(), b.end());
}

// ---------------------------------------------------------------------------

namespace {

bool parse_bool(std::string_view s, std::size_t row) {
    const auto t = text::to_lower_ascii(text::trim(s));
    if (t == "true" || t == "1" || t == "yes" || t == "y") return true;
    if (t == "false" || t == "0" || t == "no" || t == "n" || t.empty()) return false;
    throw PositionedError(ErrorCode::TaxonomyParse, row, "annotatable must be true/false, got '" + std::string(s) + "'");
}

}  // namespace

Taxonomy Taxonomy::parse_csv(std::string_view content) {
    Taxonomy t;

    // Leading comment lines carry the version; the rest is plain CSV.
    std::size_t offset = 0;
    while (offset < content.size()) {
        const auto eol = content.find('\n', offset);
        const auto line = text::trim(content.substr(offset, eol == std::string_view::npos ? std::string_view::npos : eol - offset));
        if (!line.empty() && line.front() != '#') break;
        constexpr std::string_view kVersion = "# version:";
        if (line.rfind(kVersion, 0) == 0) t.version_ = std::string(text::trim(line.substr(kVersion.size())));
        if (eol == std::string_view::npos) {
            offset = content.size();
            break;
        }
        offset = eol + 1;
    }

    const auto table = csv::Table::parse(content.substr(offset));
    if (table.header() != csv::Row{"code", "name", "annotatable", "aliases"}) {
        throw PositionedError(ErrorCode::TaxonomyParse, 0, "taxonomy header must be code,name,annotatable,aliases");
    }
    if (table.size() == 0) throw Error(ErrorCode::TaxonomyParse, "taxonomy has no concepts");

    for (std::size_t r = 0; r < table.size(); ++r) {
        const std::size_t row = r + 1;
        const std::string raw_code(text::trim(table.get(r, "code")));
        if (!ConceptCode::is_valid(raw_code)) {
            throw PositionedError(ErrorCode::TaxonomyParse, row, "malformed concept code '" + raw_code + "'");
        }
        ConceptNode node;
        node.code = ConceptCode(raw_code);
        node.name = std::string(text::trim(table.get(r, "name")));
        if (node.name.empty()) throw PositionedError(ErrorCode::TaxonomyParse, row, "empty concept name");
        node.annotatable = parse_bool(table.get(r, "annotatable"), row);
        const auto aliases = table.get(r, "aliases");
        if (!text::trim(aliases).empty()) {
            for (const auto& a : text::split(aliases, '|')) {
                const auto alias = text::trim(a);
                if (!alias.empty()) node.aliases.emplace_back(alias);
            }
        }
        if (t.nodes_.contains(node.code)) {
            throw PositionedError(ErrorCode::DuplicateCode, row, "duplicate concept code " + raw_code);
        }
        t.nodes_.emplace(node.code, std::move(node));
    }

    // Parents must exist; labels are hyphen-joined ancestor names. The map is
    // code-ordered, so every parent is visited before its children.
    for (auto& [code, node] : t.nodes_) {
        const auto parent = code.parent();
        if (!parent) {
            node.canonical_label = node.name;
            t.roots_.push_back(code);
            continue;
        }
        auto it = t.nodes_.find(*parent);
        if (it == t.nodes_.end()) {
            throw Error(ErrorCode::OrphanCode, "concept " + code.str() + " has no parent " + parent->str());
        }
        it->second.children.push_back(code);
        node.canonical_label = it->second.canonical_label + "-" + node.name;
    }

    for (auto& [code, node] : t.nodes_) {
        if (node.children.empty() && !node.annotatable) {
            throw Error(ErrorCode::TaxonomyParse, "leaf concept " + code.str() + " must be annotatable");
        }
        if (!t.by_label_.emplace(node.canonical_label, code).second) {
            throw Error(ErrorCode::TaxonomyParse, "duplicate canonical label '" + node.canonical_label + "'");
        }
    }
    for (auto& [code, node] : t.nodes_) {
        for (const auto& alias : node.aliases) {
            auto lbl = t.by_label_.find(alias);
            if ((lbl != t.by_label_.end() && lbl->second != code) ||
                !t.by_alias_.emplace(alias, code).second) {
                throw Error(ErrorCode::TaxonomyParse, "alias '" + alias + "' is not unique");
            }
        }
    }
    for (const auto& [code, node] : t.nodes_) {
        t.by_lower_.emplace(text::to_lower_ascii(node.canonical_label), code);
        for (const auto& alias : node.aliases) {
            const auto lower = text::to_lower_ascii(alias);
            const auto [b, e] = t.by_lower_.equal_range(lower);
            if (std::none_of(b, e, [&](const auto& kv) { return kv.second == code; })) t.by_lower_.emplace(lower, code);
        }
    }
    return t;
}

std::vector<const ConceptNode*> Taxonomy::nodes() const {
    std::vector<const ConceptNode*> out;
    out.reserve(nodes_.size());
    for (const auto& [_, n] : nodes_) out.push_back(&n);
    return out;
}

const ConceptNode* Taxonomy::find(const ConceptCode& code) const {
    auto it = nodes_.find(code);
    return it == nodes_.end() ? nullptr : &it->second;
}

const ConceptNode& Taxonomy::at(const ConceptCode& code) const {
    const auto* n = find(code);
    if (!n) throw Error(ErrorCode::NotFound, "unknown concept code " + code.str());
    return *n;
}

const ConceptNode& Taxonomy::resolve(std::string_view query) const {
    const auto q = text::trim(query);
    if (ConceptCode::is_valid(q)) {
        if (const auto* n = find(ConceptCode(std::string(q)))) return *n;
    }
    if (auto it = by_label_.find(q); it != by_label_.end()) return nodes_.at(it->second);
    if (auto it = by_alias_.find(q); it != by_alias_.end()) return nodes_.at(it->second);
    const auto [b, e] = by_lower_.equal_range(text::to_lower_ascii(q));
    if (b == e) throw Error(ErrorCode::NotFound, "no concept matches '" + std::string(q) + "'");
    if (std::next(b) != e) throw Error(ErrorCode::AmbiguousLabel, "label '" + std::string(q) + "' matches several concepts");
    return nodes_.at(b->second);
}

std::set<ConceptCode> Taxonomy::descendants(const ConceptCode& code) const {
    std::set<ConceptCode> out;
    std::vector<ConceptCode> stack{at(code).code};
    while (!stack.empty()) {
        auto c = stack.back();
        stack.pop_back();
        const auto& n = nodes_.at(c);
        out.insert(c);
        stack.insert(stack.end(), n.children.begin(), n.children.end());
    }
    return out;
}

std::vector<ConceptCode> Taxonomy::annotatable_codes() const {
    std::vector<ConceptCode> out;
    for (const auto& [code, n] : nodes_) {
        if (n.annotatable) out.push_back(code);
    }
    return out;
}

std::string Taxonomy::to_csv() const {
    std::string out = "# version: " + version_ + "\n";
    out += csv::format_row({"code", "name", "annotatable", "aliases"});
    for (const auto& [code, n] : nodes_) {
        out += csv::format_row({code.str(), n.name, n.annotatable ? "true" : "false", text::join(n.aliases, "|")});
    }
    return out;
}

Taxonomy load_taxonomy(const std::filesystem::path& path) { return Taxonomy::parse_csv(text::read_file(path)); }

Taxonomy load_default_taxonomy() { return load_taxonomy(data_file("sirch_taxonomy.csv")); }

}  // namespace hfa::taxonomy
