#pragma once

// Unicode plumbing: NFC/NFKC normalization, whitespace handling and the
// default word tokenizer. Backed by ICU; everything here is pure and
// locale-independent (root locale only).

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/brkiter.h>
#include <unicode/normalizer2.h>
#include <unicode/rbbi.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "mtdiff/errors.hpp"

namespace mtdiff {

enum class TokenizerMode {
  words,       // UAX #29 word segmentation, word-like tokens only
  whitespace,  // split on Unicode whitespace, punctuation kept attached
};

struct TokenizerConfig {
  TokenizerMode mode = TokenizerMode::words;
};

namespace detail {

inline const icu::Normalizer2& nfc_normalizer() {
  UErrorCode ec = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(ec);
  if (U_FAILURE(ec) || n == nullptr)
    throw std::runtime_error("ICU NFC normalizer unavailable");
  return *n;
}

inline const icu::Normalizer2& nfkc_casefold_normalizer() {
  UErrorCode ec = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFKCCasefoldInstance(ec);
  if (U_FAILURE(ec) || n == nullptr)
    throw std::runtime_error("ICU NFKC_Casefold normalizer unavailable");
  return *n;
}

inline std::string normalize_with(const icu::Normalizer2& norm, std::string_view text) {
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode ec = U_ZERO_ERROR;
  icu::UnicodeString out = norm.normalize(in, ec);
  if (U_FAILURE(ec)) throw std::runtime_error("ICU normalization failed");
  std::string result;
  out.toUTF8String(result);
  return result;
}

// One break iterator per thread; ICU iterators are stateful.
inline icu::BreakIterator& word_break_iterator() {
  thread_local std::unique_ptr<icu::BreakIterator> iter = [] {
    UErrorCode ec = U_ZERO_ERROR;
    std::unique_ptr<icu::BreakIterator> bi(
        icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), ec));
    if (U_FAILURE(ec) || !bi)
      throw std::runtime_error("ICU word break iterator unavailable");
    return bi;
  }();
  return *iter;
}

}  // namespace detail

// Canonical composition; applied to every text field at load time.
inline std::string nfc(std::string_view text) {
  return detail::normalize_with(detail::nfc_normalizer(), text);
}

// Compatibility composition + case folding; the token key used for
// frequency-lexicon lookups.
inline std::string nfkc_casefold(std::string_view text) {
  return detail::normalize_with(detail::nfkc_casefold_normalizer(), text);
}

inline std::vector<char32_t> to_code_points(std::string_view text) {
  std::vector<char32_t> cps;
  cps.reserve(text.size());
  int32_t i = 0;
  const auto len = static_cast<int32_t>(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  while (i < len) {
    UChar32 c;
    U8_NEXT(s, i, len, c);
    cps.push_back(c < 0 ? 0xFFFD : static_cast<char32_t>(c));
  }
  return cps;
}

inline bool is_unicode_whitespace(char32_t cp) {
  return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0;
}

inline std::string_view trim_whitespace(std::string_view text) {
  // ASCII fast path covers the usual \t \n \r and space.
  auto is_ascii_ws = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (!text.empty() && is_ascii_ws(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_ascii_ws(text.back())) text.remove_suffix(1);
  // Multi-byte whitespace (NBSP, ideographic space, ...) at the edges.
  while (!text.empty()) {
    int32_t i = 0;
    UChar32 c;
    const auto* s = reinterpret_cast<const uint8_t*>(text.data());
    U8_NEXT(s, i, static_cast<int32_t>(text.size()), c);
    if (c > 0x7f && u_isUWhiteSpace(c)) {
      text.remove_prefix(static_cast<std::size_t>(i));
    } else {
      break;
    }
  }
  while (!text.empty()) {
    int32_t len = static_cast<int32_t>(text.size());
    int32_t i = len;
    UChar32 c;
    const auto* s = reinterpret_cast<const uint8_t*>(text.data());
    U8_PREV(s, 0, i, c);
    if (c > 0x7f && u_isUWhiteSpace(c)) {
      text.remove_suffix(static_cast<std::size_t>(len - i));
    } else {
      break;
    }
  }
  return text;
}

inline std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg = {}) {
  std::vector<std::string> tokens;
  if (cfg.mode == TokenizerMode::whitespace) {
    std::string current;
    int32_t i = 0;
    const auto len = static_cast<int32_t>(text.size());
    const auto* s = reinterpret_cast<const uint8_t*>(text.data());
    while (i < len) {
      int32_t start = i;
      UChar32 c;
      U8_NEXT(s, i, len, c);
      if (c >= 0 && u_isUWhiteSpace(c)) {
        if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
      } else {
        current.append(text.substr(static_cast<std::size_t>(start),
                                   static_cast<std::size_t>(i - start)));
      }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
  }

  icu::UnicodeString us = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  auto& bi = detail::word_break_iterator();
  bi.setText(us);
  auto& rbbi = static_cast<icu::RuleBasedBreakIterator&>(bi);
  int32_t start = bi.first();
  for (int32_t end = bi.next(); end != icu::BreakIterator::DONE; start = end, end = bi.next()) {
    // Rule status below UBRK_WORD_NUMBER marks spaces/punctuation.
    if (rbbi.getRuleStatus() >= UBRK_WORD_NUMBER) {
      icu::UnicodeString piece;
      us.extractBetween(start, end, piece);
      std::string token;
      piece.toUTF8String(token);
      tokens.push_back(std::move(token));
    }
  }
  return tokens;
}

inline std::size_t count_tokens(std::string_view text, const TokenizerConfig& cfg = {}) {
  return tokenize(text, cfg).size();
}

}  // namespace mtdiff
