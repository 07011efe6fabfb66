#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chainrec {

/// ASCII case folding; bytes >= 0x80 pass through untouched.
std::string case_fold(std::string_view text);

std::string_view trim(std::string_view text);

/// Splits on every ASCII character that is not alphanumeric and case-folds
/// the pieces. Non-ASCII bytes are kept as token characters so UTF-8 words
/// survive intact. This is the tokenizer behind BM25, the mock embedding and
/// the extractive summarizer.
std::vector<std::string> tokenize(std::string_view text);

/// Word-level tokenizer used to match entity aliases inside sentences.
/// Each whitespace-separated word is case-folded, '-', '_' and '/' become
/// word breaks, and leading/trailing punctuation is dropped.
std::vector<std::string> mention_tokens(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

/// Longest prefix of `text` that fits in `max_bytes` without splitting a
/// UTF-8 sequence.
std::string truncate_utf8(std::string_view text, std::size_t max_bytes);

std::string to_hex(std::uint64_t value);

}  // namespace chainrec
