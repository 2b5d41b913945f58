#pragma once

// Sectioned key=value config files:
//
//   # comment
//   [model]
//   kappa = 22.84
//
// Strict: unknown sections, duplicate sections or keys, and lines that are
// neither comments, headers nor assignments are errors carrying line/column.

#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cli {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0, int column = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg
                                      : msg),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_, column_;
};

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
    int key_column = 0;
    int value_column = 0;
};

struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;

    const Entry* find(const std::string& key) const;
    // Sets or adds a key (used by --sweep); synthetic entries have line 0.
    void set(const std::string& key, const std::string& value);
};

struct ConfigFile {
    std::vector<Section> sections;

    const Section* find(const std::string& name) const;
    Section& get_or_add(const std::string& name);
};

// Section names accepted at parse time.
const std::vector<std::string>& known_sections();

ConfigFile parse_config(std::istream& in);
ConfigFile load_config(const std::string& path);

// Number parsing with the entry's position in any error.
double to_double(const Entry& e);
long long to_integer(const Entry& e);
std::vector<double> to_list(const Entry& e);

// "start:end:count" (inclusive, evenly spaced) or "a,b,c".
std::vector<double> parse_range(const std::string& text);

// Shortest decimal that reads back to the same double.
std::string format_number(double x);

}  // namespace cli
