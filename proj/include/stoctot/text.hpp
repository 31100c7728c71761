#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stoctot::text {

// NFC-normalize then lowercase (root locale) a UTF-8 string.
std::string lower_nfc(std::string_view s);

// Unicode-aware lowercase without normalization (the evaluator's pipeline
// lowercases but does not NFC-normalize, matching the reference metrics).
std::string lower(std::string_view s);

bool is_ascii_space(char c);

std::string_view trim(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// True if s is non-empty and every byte is one of [0-9.,-] with at least one digit.
bool is_numeral(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

} // namespace stoctot::text
