#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace smj::text {

// Collapses whitespace runs to one space and trims both ends.
std::string canonical(std::string_view s);

std::string_view trim(std::string_view s);

// Splits on ASCII whitespace; punctuation stays attached to its word.
std::vector<std::string> split_words(std::string_view s);

std::string join_words(const std::vector<std::string>& words, std::size_t skip = SIZE_MAX);

// Lowercased maximal runs of ASCII alphanumerics. Non-ASCII bytes are kept
// as token characters so UTF-8 words are not shredded.
std::vector<std::string> tokens(std::string_view s);

std::string to_lower(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);

}  // namespace smj::text
