#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace cascadelab {

using json = nlohmann::ordered_json;

// All floats that reach an output stream go through this: 12 significant digits.
std::string format_real(double x);

// Rows-with-header report, emitted as CSV or a JSON array of objects mirroring
// the columns. Column order is the header order (stable).
struct report_rows {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
    json to_json() const;
};

// Written next to every CLI output; excludes the thread knob on purpose
// (thread count never affects results, so it is not part of the run identity).
struct run_manifest {
    std::string subcommand;
    std::vector<std::string> inputs;
    json params;  // flat map of parameter name -> value
    uint64_t seed = 0;
    std::vector<std::string> outputs;

    json to_json() const;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);  // path "-" reads stdin
void write_manifest(const run_manifest& m, const std::string& output_path);

}  // namespace cascadelab
