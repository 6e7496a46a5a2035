#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "cfair/error.hpp"

namespace cfair {

enum class Category { nationality, skincolor, gender, sexuality, religion, age, ideology };
enum class Pos { noun, adjective, both };
enum class Label { appropriate, inappropriate, offensive, violent };
enum class Toxicity { nontoxic, toxic };
enum class Method { mgs, sll, llmdef, llmlist };

inline constexpr std::array<Category, 7> all_categories{Category::nationality, Category::skincolor, Category::gender,
                                                        Category::sexuality,   Category::religion,  Category::age,
                                                        Category::ideology};
inline constexpr std::array<Label, 4> all_labels{Label::appropriate, Label::inappropriate, Label::offensive,
                                                 Label::violent};

namespace detail {
template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::array<std::string_view, N> &names) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    return std::nullopt;
}
inline constexpr std::array<std::string_view, 7> category_names{"nationality", "skincolor", "gender", "sexuality",
                                                                "religion",    "age",       "ideology"};
inline constexpr std::array<std::string_view, 3> pos_names{"noun", "adjective", "both"};
inline constexpr std::array<std::string_view, 4> label_names{"appropriate", "inappropriate", "offensive", "violent"};
inline constexpr std::array<std::string_view, 2> toxicity_names{"nontoxic", "toxic"};
inline constexpr std::array<std::string_view, 4> method_names{"mgs", "sll", "llmdef", "llmlist"};
}  // namespace detail

inline std::string_view to_string(Category c) { return detail::category_names[static_cast<std::size_t>(c)]; }
inline std::string_view to_string(Pos p) { return detail::pos_names[static_cast<std::size_t>(p)]; }
inline std::string_view to_string(Label l) { return detail::label_names[static_cast<std::size_t>(l)]; }
inline std::string_view to_string(Toxicity t) { return detail::toxicity_names[static_cast<std::size_t>(t)]; }
inline std::string_view to_string(Method m) { return detail::method_names[static_cast<std::size_t>(m)]; }

inline std::optional<Category> parse_category(std::string_view s) {
    return detail::lookup<Category>(s, detail::category_names);
}
inline std::optional<Pos> parse_pos(std::string_view s) { return detail::lookup<Pos>(s, detail::pos_names); }
inline std::optional<Label> parse_label(std::string_view s) { return detail::lookup<Label>(s, detail::label_names); }
inline std::optional<Toxicity> parse_toxicity(std::string_view s) {
    return detail::lookup<Toxicity>(s, detail::toxicity_names);
}
inline std::optional<Method> parse_method(std::string_view s) {
    return detail::lookup<Method>(s, detail::method_names);
}

// Throwing variants for file readers.
inline Label require_label(std::string_view s) {
    if (auto l = parse_label(s)) return *l;
    throw ValidationError("unknown label '" + std::string(s) + "'");
}
inline Toxicity require_toxicity(std::string_view s) {
    if (auto t = parse_toxicity(s)) return *t;
    throw ValidationError("unknown toxicity '" + std::string(s) + "'");
}

}  // namespace cfair
