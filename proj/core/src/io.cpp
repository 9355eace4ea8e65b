#include "bmtf/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bmtf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return {buf, end};
}

double parse_double(std::string_view s) {
    double x = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && (*first == ' ' || *first == '+')) ++first;
    auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc{} || ptr != last)
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    return x;
}

namespace {

Index parse_index(std::string_view s) {
    Index v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("not an index: '" + std::string(s) + "'");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Index CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<Index>(i);
    throw std::invalid_argument("missing column '" + std::string(name) + "'");
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        table.rows.push_back(split(line));
    }
    return table;
}

void write_collection(const fs::path& dir, const Collection& c, const Metadata& metadata) {
    require_valid_structure(c);
    fs::create_directories(dir);
    const auto groups = c.third_mode_groups;
    std::vector<Index> group_of(c.views.size(), -1);
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (Index t : groups[g]) group_of[t] = static_cast<Index>(g);

    json manifest;
    manifest["format"] = "bmtf-collection";
    manifest["version"] = 1;
    manifest["views"] = json::array();
    for (Index t = 0; t < c.view_count(); ++t) {
        const auto& v = c.views[t];
        const std::string file = "view_" + std::to_string(t) + ".csv";
        json entry = {{"name", v.name},
                      {"file", file},
                      {"N", v.data.samples()},
                      {"D", v.data.features()},
                      {"L", v.data.slabs()}};
        entry["group"] = group_of[t] < 0 ? json(nullptr) : json(group_of[t]);
        manifest["views"].push_back(entry);

        std::ofstream out(dir / file);
        if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
        out << "sample_index,feature_index,slab_index,value\n";
        const auto& x = v.data;
        for (Index l = 0; l < x.slabs(); ++l)
            for (Index d = 0; d < x.features(); ++d)
                for (Index n = 0; n < x.samples(); ++n)
                    if (x.observed(n, d, l))
                        out << n << ',' << d << ',' << l << ',' << format_double(x.values()(n, d, l))
                            << '\n';
        if (!out) throw std::runtime_error("write failed for " + (dir / file).string());
    }
    manifest["metadata"] = json::object();
    for (const auto& [k, val] : metadata) manifest["metadata"][k] = val;

    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

Collection read_collection(const fs::path& dir, Metadata* metadata) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
    json manifest = json::parse(in);
    if (manifest.value("format", "") != "bmtf-collection")
        throw std::runtime_error("not a bmtf collection manifest: " + dir.string());

    Collection c;
    std::map<Index, std::vector<Index>> groups;
    for (const auto& entry : manifest.at("views")) {
        const Index n = entry.at("N").get<Index>();
        const Index d = entry.at("D").get<Index>();
        const Index l = entry.at("L").get<Index>();
        Tensor3 values(n, d, l);
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(n * d * l), 0);
        const auto table = read_csv(dir / entry.at("file").get<std::string>());
        const Index ci = table.column("sample_index"), cd = table.column("feature_index"),
                    cl = table.column("slab_index"), cv = table.column("value");
        for (const auto& row : table.rows) {
            const Index i = parse_index(row.at(ci)), j = parse_index(row.at(cd)),
                        k = parse_index(row.at(cl));
            if (i < 0 || i >= n || j < 0 || j >= d || k < 0 || k >= l)
                throw std::runtime_error("index out of range in " + entry.at("file").get<std::string>());
            values(i, j, k) = parse_double(row.at(cv));
            mask[static_cast<std::size_t>(i + n * (j + d * k))] = 1;
        }
        const Index t = c.view_count();
        c.views.push_back({entry.value("name", "view" + std::to_string(t)),
                           MaskedTensor3(std::move(values), std::move(mask))});
        if (entry.contains("group") && !entry["group"].is_null())
            groups[entry["group"].get<Index>()].push_back(t);
    }
    for (auto& [id, members] : groups) c.third_mode_groups.push_back(std::move(members));

    if (metadata) {
        metadata->clear();
        if (manifest.contains("metadata"))
            for (const auto& [k, v] : manifest["metadata"].items())
                (*metadata)[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return c;
}

}  // namespace bmtf
