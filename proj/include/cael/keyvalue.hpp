#pragma once

// The key=value config dialect shared by model, training, generation and
// evaluation settings:
//
//   # comment
//   model.K = 4
//   train.lr = 1e-4
//
// Keys are unique; whitespace around '=' is ignored; '#' starts a comment
// anywhere on a line.

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cael {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KeyValues {
 public:
  static KeyValues parse(std::string_view text, std::string_view origin = "<text>");
  static KeyValues load(const std::filesystem::path& path);

  // "key=value" as given on a command line.
  void set_assignment(std::string_view assignment);
  void set(std::string key, std::string value);

  bool contains(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& at(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
};

double parse_double(std::string_view key, std::string_view value);
long long parse_int(std::string_view key, std::string_view value);
bool parse_bool(std::string_view key, std::string_view value);
std::string format_double(double v);

}  // namespace cael
