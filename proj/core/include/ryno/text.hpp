#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ryno::text {

// Whitespace-delimited token count.
std::size_t word_count(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

std::vector<std::string> split(std::string_view s, char delimiter);
std::string join(const std::vector<std::string>& parts, std::string_view separator);

// Lowercase hex SHA-256 of the input.
std::string sha256_hex(std::string_view data);

// Milliseconds since the Unix epoch rendered as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string iso8601_utc(std::int64_t epoch_ms);
// "YYYY-MM-DD" for the UTC day containing epoch_ms.
std::string utc_date(std::int64_t epoch_ms);

// Quote a CSV field when it contains a separator, quote, or newline.
std::string csv_escape(std::string_view field);
// Split one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> csv_split(std::string_view line);

}  // namespace ryno::text
