#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlwave {

/// Invalid parameters or violated preconditions.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A summation or evaluation produced a non-finite value.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// A series or iteration did not reach its tolerance within its budget.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario/configuration problems. Carries every violation found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> items)
      : std::runtime_error(join(items)), items_(std::move(items)) {}
  explicit ConfigError(const std::string& item) : ConfigError(std::vector<std::string>{item}) {}

  const std::vector<std::string>& items() const noexcept { return items_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& it : items) {
      if (!out.empty()) out += "; ";
      out += it;
    }
    return out;
  }
  std::vector<std::string> items_;
};

/// NaN/Inf appeared in a solver output. `time_index` locates the first bad row.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, std::size_t time_index)
      : std::runtime_error(what + " (time index " + std::to_string(time_index) + ")"),
        time_index_(time_index) {}
  std::size_t time_index() const noexcept { return time_index_; }

 private:
  std::size_t time_index_;
};

}  // namespace mlwave
