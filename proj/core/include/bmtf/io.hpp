#pragma once

#include "bmtf/collection.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace bmtf {

using Metadata = std::map<std::string, std::string>;

/**
 * On-disk collection: `manifest.json` listing views (name, N, D, L, group or
 * null, data file) plus one long-format CSV per view with columns
 * sample_index,feature_index,slab_index,value. Indices are 0-based and rows
 * are written only for observed entries; absent rows read back as masked.
 * Values are written with 17 significant digits so the round trip is exact.
 */
void write_collection(const std::filesystem::path& dir, const Collection& c,
                      const Metadata& metadata = {});
Collection read_collection(const std::filesystem::path& dir, Metadata* metadata = nullptr);

/// 17 significant digits; parse_double(format_double(x)) == x.
std::string format_double(double x);
double parse_double(std::string_view s);

/// Minimal reader for the comma-separated files this library writes.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    Index column(std::string_view name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace bmtf
