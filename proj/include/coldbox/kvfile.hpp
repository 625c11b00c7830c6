#pragma once

#include <map>
#include <string>

namespace coldbox {

/// Flat key-value text files: one `key = value` per line, `#` comments,
/// blank lines ignored. Used for parameter fixtures and experiment configs.
/// Keys are kept in insertion-independent (sorted) order by std::map so
/// writes are reproducible.
using KvMap = std::map<std::string, std::string>;

KvMap read_kv_file(const std::string& path);
void write_kv_file(const KvMap& kv, const std::string& path);

/// Typed accessors; throw ValidationError naming the key when absent/bad.
double kv_get_double(const KvMap& kv, const std::string& key);
double kv_get_double_or(const KvMap& kv, const std::string& key, double fallback);
std::string kv_get_string(const KvMap& kv, const std::string& key);
bool kv_has(const KvMap& kv, const std::string& key);

} // namespace coldbox
