#ifndef FENCEGUIDE_CONFIG_HPP
#define FENCEGUIDE_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>

#include "fenceguide/error.hpp"

namespace fenceguide {

// Flat key=value configuration file. One `key = value` pair per line,
// `#` starts a comment, blank lines ignored. Keys are unique.
class KeyValueFile {
public:
    static KeyValueFile parse_file(const std::string& path);
    static KeyValueFile parse_text(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;

    /// Every key must be consumed by one of the getters above; call this
    /// last to reject misspelled or unknown keys.
    void reject_unknown_keys() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, bool> consumed_;
    std::string origin_;
};

} // namespace fenceguide

#endif
