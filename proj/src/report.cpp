#include "cascadelab/report.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cascadelab/errors.hpp"

namespace cascadelab {

std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string report_rows::to_csv() const {
    std::ostringstream out;
    for (size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i)
            out << (i ? "," : "") << r[i];
        out << "\n";
    }
    return out.str();
}

json report_rows::to_json() const {
    json arr = json::array();
    for (const auto& r : rows) {
        json obj;
        for (size_t i = 0; i < header.size() && i < r.size(); ++i)
            obj[header[i]] = r[i];
        arr.push_back(obj);
    }
    return arr;
}

json run_manifest::to_json() const {
    json j;
    j["tool"] = "cascadelab";
    j["version"] = "1.0.0";
    j["subcommand"] = subcommand;
    j["inputs"] = inputs;
    j["params"] = params;
    j["seed"] = seed;
    j["outputs"] = outputs;
    return j;
}

void write_text_file(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << content;
    if (!f) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_manifest(const run_manifest& m, const std::string& output_path) {
    if (output_path == "-") return;  // stdout outputs carry no manifest file
    write_text_file(output_path + ".manifest.json", m.to_json().dump(2) + "\n");
}

}  // namespace cascadelab
