#include "mhc/labels.hpp"

#include <algorithm>
#include <cctype>

namespace mhc {

namespace {
constexpr std::array<std::string_view, kNumClasses> kNames = {
    "Stress", "Anxiety", "Depression", "PTSD", "Suicidal", "None"};

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}
}  // namespace

std::string_view to_string(ClassLabel label) { return kNames[static_cast<std::size_t>(label)]; }

std::optional<ClassLabel> parse_label(std::string_view name) {
    for (std::size_t i = 0; i < kNumClasses; ++i)
        if (kNames[i] == name) return kAllLabels[i];
    return std::nullopt;
}

std::optional<ClassLabel> parse_label_ci(std::string_view name) {
    for (std::size_t i = 0; i < kNumClasses; ++i)
        if (iequals(kNames[i], name)) return kAllLabels[i];
    return std::nullopt;
}

ClassLabel label_from_string(std::string_view name) {
    if (auto l = parse_label(name)) return *l;
    throw ValidationError("unknown class label '" + std::string(name) + "'");
}

LabelSet::LabelSet(std::vector<ClassLabel> labels) : labels_(std::move(labels)) {
    // keep canonical order regardless of how the caller listed them
    std::sort(labels_.begin(), labels_.end(),
              [](ClassLabel a, ClassLabel b) { return canonical_index(a) < canonical_index(b); });
    if (std::adjacent_find(labels_.begin(), labels_.end()) != labels_.end())
        throw ValidationError("duplicate label in label set");
}

LabelSet LabelSet::all() { return LabelSet({kAllLabels.begin(), kAllLabels.end()}); }

bool LabelSet::contains(ClassLabel label) const { return find(label).has_value(); }

std::optional<std::size_t> LabelSet::find(ClassLabel label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t LabelSet::index_of(ClassLabel label) const {
    if (auto i = find(label)) return *i;
    throw ValidationError("label '" + std::string(to_string(label)) + "' not in label set");
}

std::vector<std::string> LabelSet::names() const {
    std::vector<std::string> out;
    out.reserve(labels_.size());
    for (auto l : labels_) out.emplace_back(to_string(l));
    return out;
}

LabelSet LabelSet::from_names(const std::vector<std::string>& names) {
    std::vector<ClassLabel> labels;
    labels.reserve(names.size());
    for (const auto& n : names) labels.push_back(label_from_string(n));
    return LabelSet(std::move(labels));
}

}  // namespace mhc
