#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mhc {

/// Base of all errors raised by the pipeline.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid input or configuration. `field` names the offending config path when known.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what, std::string field = {})
        : Error(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Canonical order; enum values double as matrix indices for the full schema.
enum class ClassLabel : int { Stress = 0, Anxiety, Depression, PTSD, Suicidal, None };

inline constexpr std::size_t kNumClasses = 6;

inline constexpr std::array<ClassLabel, kNumClasses> kAllLabels = {
    ClassLabel::Stress, ClassLabel::Anxiety,  ClassLabel::Depression,
    ClassLabel::PTSD,   ClassLabel::Suicidal, ClassLabel::None};

std::string_view to_string(ClassLabel label);

/// Exact-match parse of the serialized name.
std::optional<ClassLabel> parse_label(std::string_view name);

/// Case-insensitive parse, used when reading model output.
std::optional<ClassLabel> parse_label_ci(std::string_view name);

/// Throws ValidationError on an unknown name.
ClassLabel label_from_string(std::string_view name);

inline int canonical_index(ClassLabel label) { return static_cast<int>(label); }

/// An ordered subset of the canonical labels, e.g. the 5-class setup without Stress.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<ClassLabel> labels);

    static LabelSet all();

    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }
    const std::vector<ClassLabel>& labels() const { return labels_; }
    ClassLabel operator[](std::size_t i) const { return labels_[i]; }

    bool contains(ClassLabel label) const;
    /// Position of `label` in this set; throws ValidationError if absent.
    std::size_t index_of(ClassLabel label) const;
    std::optional<std::size_t> find(ClassLabel label) const;

    std::vector<std::string> names() const;
    static LabelSet from_names(const std::vector<std::string>& names);

    bool operator==(const LabelSet&) const = default;

private:
    std::vector<ClassLabel> labels_;
};

}  // namespace mhc
