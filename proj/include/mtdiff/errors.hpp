#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtdiff {

// Structural problems in an input file (bad JSON, wrong column count, ...).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that violates a data invariant (duplicate key, score
// out of protocol range, ...), or a precondition violated at call time.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string at_line(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

// Collects per-row problems so a bad file reports all offending lines at
// once instead of failing on the first.
class ErrorCollector {
 public:
  explicit ErrorCollector(std::string path, std::size_t cap = 20)
      : path_(std::move(path)), cap_(cap) {}

  void add(std::size_t line, const std::string& message) {
    ++count_;
    if (messages_.size() < cap_) messages_.push_back(at_line(path_, line) + message);
  }

  bool empty() const { return count_ == 0; }

  template <typename Error>
  [[noreturn]] void raise() const {
    std::ostringstream os;
    os << path_ << ": " << count_ << " rejected row(s)";
    if (count_ > messages_.size()) os << " (showing first " << messages_.size() << ")";
    for (const auto& m : messages_) os << "\n  " << m;
    throw Error(os.str());
  }

  void raise_validation_if_any() const {
    if (!empty()) raise<ValidationError>();
  }

 private:
  std::string path_;
  std::size_t cap_;
  std::size_t count_ = 0;
  std::vector<std::string> messages_;
};

}  // namespace detail
}  // namespace mtdiff
